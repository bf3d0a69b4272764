"""Bernstein, B-spline and NURBS bases evaluated element-wise through Bézier extraction.

A patch is the tensor product of two open knot vectors. Every nonempty knot span pair is one
element; on it the B-spline functions are ``C_xi @ B(t) ⊗ C_eta @ B(s)`` with ``B`` the
Bernstein polynomials on the unit interval and ``C`` the extraction operators.
"""

import logging
from dataclasses import dataclass, field
from math import comb

import numpy as np

from mechanics.errors import InvalidDegreeError, InvalidWeightError, UnsupportedKnotVectorError

logger = logging.getLogger(__name__)

PARAM_TOL = 1e-12


@dataclass(frozen=True)
class KnotVector:
    knots: np.ndarray
    degree: int

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        p = self.degree
        if int(p) != p or p < 1:
            raise InvalidDegreeError(f"degree must be an integer >= 1, got {p}")
        if knots.ndim != 1 or knots.size < 2 * (p + 1):
            raise UnsupportedKnotVectorError(f"knot vector too short for degree {p}")
        if np.any(np.diff(knots) < 0.0):
            raise UnsupportedKnotVectorError("knot vector must be nondecreasing")
        unique, mults = np.unique(knots, return_counts=True)
        if unique.size < 2:
            raise UnsupportedKnotVectorError("knot vector has no nonempty span")
        if mults[0] != p + 1 or mults[-1] != p + 1:
            raise UnsupportedKnotVectorError(
                f"only open knot vectors are supported (end multiplicity {p + 1} required)"
            )
        if np.any(mults[1:-1] > p + 1):
            raise UnsupportedKnotVectorError(f"interior knot multiplicity exceeds {p + 1}")

    @property
    def unique_knots(self):
        return np.unique(self.knots)

    @property
    def multiplicities(self):
        return np.unique(self.knots, return_counts=True)[1]

    @property
    def n_basis(self):
        return self.knots.size - self.degree - 1

    @property
    def n_elements(self):
        return self.unique_knots.size - 1

    def spans(self):
        u = self.unique_knots
        return [(u[i], u[i + 1]) for i in range(u.size - 1)]

    def first_basis(self):
        """Index of the first nonzero B-spline function on each element."""
        p = self.degree
        out = []
        for lo, _ in self.spans():
            # last knot index i with knots[i] == lo
            i = int(np.searchsorted(self.knots, lo, side="right")) - 1
            out.append(i - p)
        return out

    def greville(self):
        p = self.degree
        return np.array([self.knots[i + 1:i + p + 1].mean() for i in range(self.n_basis)])


@dataclass
class BasisEval:
    values: np.ndarray  # (n_e,)
    d1: np.ndarray      # (n_e, 2): d/dxi, d/deta
    d2: np.ndarray      # (n_e, 3): d2/dxi2, d2/dxideta, d2/deta2


def _bernstein_row(p, t):
    if p < 0:
        return np.zeros(0)
    i = np.arange(p + 1)
    return np.array([comb(p, k) for k in i], dtype=float) * t ** i * (1.0 - t) ** (p - i)


def bernstein(p, t):
    """Values, first and second derivatives of the p+1 Bernstein polynomials on [0, 1]."""
    if int(p) != p or p < 1:
        raise InvalidDegreeError(f"degree must be an integer >= 1, got {p}")
    if t < -PARAM_TOL or t > 1.0 + PARAM_TOL:
        raise ValueError(f"Bernstein parameter {t} outside [0, 1]")
    values = _bernstein_row(p, t)

    lower = np.zeros(p + 2)
    lower[1:p + 1] = _bernstein_row(p - 1, t)
    d1 = p * (lower[:-1] - lower[1:])

    d2 = np.zeros(p + 1)
    if p >= 2:
        low2 = np.zeros(p + 3)
        low2[2:p + 1] = _bernstein_row(p - 2, t)
        d2 = p * (p - 1) * (low2[:-2] - 2.0 * low2[1:-1] + low2[2:])
    return values, d1, d2


def build_extraction(kv):
    """Bézier extraction operators, shape (n_elements, p+1, p+1).

    Row i of ``C[e]`` expresses the i-th B-spline function that is nonzero on element e in
    the Bernstein basis of that element.
    """
    knots, p = kv.knots, kv.degree
    mults = kv.multiplicities
    n_elems = kv.n_elements

    out = np.zeros((n_elems, p + 1, p + 1))
    out[:] = np.eye(p + 1)
    alphas = np.zeros(p)

    knt_id = p
    mult = 0
    for elem_id in range(n_elems):
        knt_id += mult
        mult = mults[elem_id + 1]
        if mult >= p:
            continue

        lcl = knots[knt_id:knt_id + p + 1]
        alphas[:p - mult] = (lcl[1] - lcl[0]) / (lcl[mult + 1:] - lcl[0])

        C = out[elem_id]
        reg = p - mult
        for r in range(1, reg + 1):
            s = mult + r
            for k in range(p, s - 1, -1):
                alpha = alphas[k - s]
                C[:, k] = alpha * C[:, k] + (1.0 - alpha) * C[:, k - 1]
            if elem_id < n_elems - 1:
                out[elem_id + 1, reg - r:reg + 1, reg - r] = C[p - r:p + 1, p]
    return out


# --- Direct recursion (The NURBS Book, A2.1 / A2.2) ---

def find_span(kv, u):
    knots, p = kv.knots, kv.degree
    n = kv.n_basis - 1
    if u >= knots[n + 1]:
        return n
    if u <= knots[p]:
        return p
    low, high = p, n + 1
    mid = (low + high) // 2
    while u < knots[mid] or u >= knots[mid + 1]:
        if u < knots[mid]:
            high = mid
        else:
            low = mid
        mid = (low + high) // 2
    return mid


def cox_de_boor(kv, u):
    """Nonzero B-spline values at u by Cox-de Boor recursion; returns (first index, values)."""
    knots, p = kv.knots, kv.degree
    span = find_span(kv, u)
    N = np.zeros(p + 1)
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    N[0] = 1.0
    for j in range(1, p + 1):
        left[j] = u - knots[span + 1 - j]
        right[j] = knots[span + j] - u
        saved = 0.0
        for r in range(j):
            temp = N[r] / (right[r + 1] + left[j - r])
            N[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        N[j] = saved
    return span - p, N


# --- Refinement ---

def insert_knots(kv, new_knots):
    """Insert knots one at a time; returns the refined vector and D with P_new = D @ P_old.

    Control points must be given in homogeneous form (w*x, w) for rational geometry.
    """
    p = kv.degree
    knots = kv.knots.copy()
    D = np.eye(kv.n_basis)
    for u in sorted(new_knots):
        current = KnotVector(knots, p)
        k = find_span(current, u)
        n_old = current.n_basis
        step = np.zeros((n_old + 1, n_old))
        for i in range(n_old + 1):
            if i <= k - p:
                step[i, i] = 1.0
            elif i <= k:
                alpha = (u - knots[i]) / (knots[i + p] - knots[i])
                step[i, i] = alpha
                step[i, i - 1] = 1.0 - alpha
            else:
                step[i, i - 1] = 1.0
        D = step @ D
        knots = np.insert(knots, k + 1, u)
    return KnotVector(knots, p), D


def uniform_knots(p, n_elements, lo=0.0, hi=1.0):
    interior = np.linspace(lo, hi, n_elements + 1)[1:-1]
    return KnotVector(np.concatenate([[lo] * (p + 1), interior, [hi] * (p + 1)]), p)


def gauss_rule(n):
    """n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


# --- Patch ---

@dataclass
class PatchElement:
    index: int
    connectivity: np.ndarray  # (n_e,) global control-point ids, xi index fastest
    xi_span: tuple
    eta_span: tuple
    c_xi: np.ndarray
    c_eta: np.ndarray
    degrees: tuple

    def contains(self, xi, eta):
        (a, b), (c, d) = self.xi_span, self.eta_span
        tol = PARAM_TOL * max(1.0, abs(b - a), abs(d - c))
        return a - tol <= xi <= b + tol and c - tol <= eta <= d + tol

    def local_coords(self, xi, eta):
        (a, b), (c, d) = self.xi_span, self.eta_span
        return (xi - a) / (b - a), (eta - c) / (d - c)


@dataclass
class PatchMesh:
    """Single NURBS patch: knot vectors, weighted control net and elements."""

    kv_xi: KnotVector
    kv_eta: KnotVector
    control_points: np.ndarray  # (n_cp, 3)
    weights: np.ndarray         # (n_cp,)
    elements: list = field(init=False)

    def __post_init__(self):
        self.control_points = np.asarray(self.control_points, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        n_xi, n_eta = self.kv_xi.n_basis, self.kv_eta.n_basis
        if self.control_points.shape != (n_xi * n_eta, 3):
            raise ValueError(
                f"expected {(n_xi * n_eta, 3)} control points, got {self.control_points.shape}"
            )
        if self.weights.shape != (n_xi * n_eta,):
            raise ValueError("one weight per control point required")
        if np.any(self.weights <= 0.0):
            raise InvalidWeightError("NURBS weights must be positive")
        self.elements = self._build_elements()
        logger.debug("patch with %d control points and %d elements", self.n_cp, len(self.elements))

    @property
    def shape(self):
        return self.kv_xi.n_basis, self.kv_eta.n_basis

    @property
    def degrees(self):
        return self.kv_xi.degree, self.kv_eta.degree

    @property
    def n_cp(self):
        return self.control_points.shape[0]

    def cp_index(self, i, j):
        return j * self.kv_xi.n_basis + i

    def _build_elements(self):
        p, q = self.degrees
        c_xi, c_eta = build_extraction(self.kv_xi), build_extraction(self.kv_eta)
        f_xi, f_eta = self.kv_xi.first_basis(), self.kv_eta.first_basis()
        spans_xi, spans_eta = self.kv_xi.spans(), self.kv_eta.spans()
        elements = []
        for ej, (fj, s_eta) in enumerate(zip(f_eta, spans_eta)):
            for ei, (fi, s_xi) in enumerate(zip(f_xi, spans_xi)):
                conn = np.array(
                    [self.cp_index(fi + a, fj + b) for b in range(q + 1) for a in range(p + 1)]
                )
                elements.append(
                    PatchElement(
                        index=len(elements),
                        connectivity=conn,
                        xi_span=s_xi,
                        eta_span=s_eta,
                        c_xi=c_xi[ei],
                        c_eta=c_eta[ej],
                        degrees=(p, q),
                    )
                )
        return elements

    # --- Boundary ---

    EDGES = ("xi_min", "xi_max", "eta_min", "eta_max")

    def boundary_nodes(self, edge):
        n_xi, n_eta = self.shape
        if edge == "xi_min":
            return np.array([self.cp_index(0, j) for j in range(n_eta)])
        if edge == "xi_max":
            return np.array([self.cp_index(n_xi - 1, j) for j in range(n_eta)])
        if edge == "eta_min":
            return np.array([self.cp_index(i, 0) for i in range(n_xi)])
        if edge == "eta_max":
            return np.array([self.cp_index(i, n_eta - 1) for i in range(n_xi)])
        raise ValueError(f"unknown edge {edge!r}")

    def boundary_elements(self, edge):
        lo_xi, hi_xi = self.kv_xi.knots[0], self.kv_xi.knots[-1]
        lo_eta, hi_eta = self.kv_eta.knots[0], self.kv_eta.knots[-1]
        pick = {
            "xi_min": lambda e: e.xi_span[0] == lo_xi,
            "xi_max": lambda e: e.xi_span[1] == hi_xi,
            "eta_min": lambda e: e.eta_span[0] == lo_eta,
            "eta_max": lambda e: e.eta_span[1] == hi_eta,
        }
        if edge not in pick:
            raise ValueError(f"unknown edge {edge!r}")
        return [e for e in self.elements if pick[edge](e)]

    def find_element(self, xi, eta):
        for e in self.elements:
            if e.contains(xi, eta):
                return e
        raise ValueError(f"parametric point ({xi}, {eta}) outside the patch")

    def evaluate(self, xi, eta, controls=None):
        """Surface point at (xi, eta) for the given (default: reference) control net."""
        element = self.find_element(xi, eta)
        basis = nurbs_eval(element, self.weights[element.connectivity], xi, eta)
        ctrl = self.control_points if controls is None else controls
        return basis.values @ ctrl[element.connectivity]


def bspline_on_element(element, xi, eta):
    """Tensor-product B-spline values and derivatives on an element (no weights)."""
    if not element.contains(xi, eta):
        raise ValueError(f"({xi}, {eta}) outside element {element.index}")
    p, q = element.degrees
    t, s = element.local_coords(xi, eta)
    t, s = min(max(t, 0.0), 1.0), min(max(s, 0.0), 1.0)
    h_xi = element.xi_span[1] - element.xi_span[0]
    h_eta = element.eta_span[1] - element.eta_span[0]

    b, db, ddb = bernstein(p, t)
    n_xi, dn_xi, ddn_xi = (element.c_xi @ b, element.c_xi @ db / h_xi, element.c_xi @ ddb / h_xi**2)
    b, db, ddb = bernstein(q, s)
    n_eta, dn_eta, ddn_eta = (
        element.c_eta @ b, element.c_eta @ db / h_eta, element.c_eta @ ddb / h_eta**2
    )

    values = np.outer(n_eta, n_xi).ravel()
    d1 = np.stack([np.outer(n_eta, dn_xi).ravel(), np.outer(dn_eta, n_xi).ravel()], axis=1)
    d2 = np.stack(
        [
            np.outer(n_eta, ddn_xi).ravel(),
            np.outer(dn_eta, dn_xi).ravel(),
            np.outer(ddn_eta, n_xi).ravel(),
        ],
        axis=1,
    )
    return BasisEval(values, d1, d2)


def nurbs_eval(element, weights, xi, eta):
    """Rational basis on an element with the quotient rule up to second derivatives."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights <= 0.0):
        raise InvalidWeightError("NURBS weights must be positive")
    bs = bspline_on_element(element, xi, eta)

    W = weights @ bs.values
    dW = weights @ bs.d1          # (2,)
    ddW = weights @ bs.d2         # (3,)
    wN = weights * bs.values
    wdN = weights[:, None] * bs.d1
    wddN = weights[:, None] * bs.d2

    values = wN / W
    d1 = (wdN - values[:, None] * dW[None, :]) / W

    d2 = np.empty_like(bs.d2)
    for k, (a, b) in enumerate(((0, 0), (0, 1), (1, 1))):
        d2[:, k] = (
            wddN[:, k] - d1[:, a] * dW[b] - d1[:, b] * dW[a] - values * ddW[k]
        ) / W
    return BasisEval(values, d1, d2)
