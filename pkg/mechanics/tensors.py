"""Component algebra on 2x2 surface tensors.

Second-order quantities are (2, 2) arrays, fourth-order ones (2, 2, 2, 2).
Derivatives with respect to a symmetric argument use the symmetric convention,
i.e. ``dX/dX = IDENTITY4``.
"""

import numpy as np

from mechanics.errors import DegenerateGeometryError

EYE2 = np.eye(2)
IDENTITY4 = 0.5 * (np.einsum("ac,bd->abcd", EYE2, EYE2) + np.einsum("ad,bc->abcd", EYE2, EYE2))

# (alpha, beta) pairs of the three stored components of a symmetric 2x2 tensor
VOIGT_PAIRS = ((0, 0), (0, 1), (1, 1))


def det2(m):
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def inv2(m, tol=1e-300, what="matrix"):
    """Closed-form inverse of a 2x2 matrix."""
    d = det2(m)
    if abs(d) <= tol:
        raise DegenerateGeometryError(f"singular {what} (det = {d:.3e})")
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / d


def outer(x, y):
    """(x ⊗ y)^{abcd} = x^{ab} y^{cd}"""
    return np.einsum("ab,cd->abcd", x, y)


def sym_product(x, y):
    """½ (x^{ac} y^{bd} + x^{ad} y^{bc})"""
    return 0.5 * (np.einsum("ac,bd->abcd", x, y) + np.einsum("ad,bc->abcd", x, y))


def sym_square(x):
    return sym_product(x, x)


def ddot(t4, x):
    """t^{abcd} x_{cd}"""
    return np.einsum("abcd,cd->ab", t4, x)


def ddot4(t4, s4):
    """t^{abef} s_{efcd}"""
    return np.einsum("abef,efcd->abcd", t4, s4)


def sym(x):
    return 0.5 * (x + x.T)


def to_voigt(x):
    return np.array([x[0, 0], x[0, 1], x[1, 1]])


def from_voigt(v):
    return np.array([[v[0], v[1]], [v[1], v[2]]])


def voigt_columns(t4):
    """Collapse the last index pair of t4 onto the three symmetric unknowns.

    The (1, 2) column absorbs the (2, 1) column since both entries move together.
    """
    rows = np.array([t4[a, b] for a, b in VOIGT_PAIRS])  # (3, 2, 2)
    return np.stack([rows[:, 0, 0], rows[:, 0, 1] + rows[:, 1, 0], rows[:, 1, 1]], axis=1)


def voigt_rows(t4):
    """Rows (11, 12, 22) of the first index pair, all four last-pair columns kept."""
    return np.array([t4[a, b] for a, b in VOIGT_PAIRS])  # (3, 2, 2)


def expand_sensitivity(x3):
    """(3, 2, 2) sensitivity of the stored components -> full (2, 2, 2, 2)."""
    out = np.empty((2, 2, 2, 2))
    out[0, 0] = x3[0]
    out[0, 1] = x3[1]
    out[1, 0] = x3[1]
    out[1, 1] = x3[2]
    return out


def skew(v):
    """Cross-product matrix, skew(v) @ w == v x w."""
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
