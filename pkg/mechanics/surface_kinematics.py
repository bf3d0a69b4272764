"""Curvilinear surface quantities at a quadrature point.

Covariant components carry the suffix ``_co``, contravariant ones ``_con``. Christoffel
symbols are stored as ``christoffel[g, a, b] = Γ^g_ab``.
"""

from dataclasses import dataclass

import numpy as np

from mechanics.errors import DegenerateGeometryError
from mechanics.tensors import det2, inv2

EPS_GEO = 1e-12


@dataclass
class SurfaceFrame:
    x: np.ndarray        # (3,)
    a: np.ndarray        # (2, 3) tangent vectors a_alpha
    a_d: np.ndarray      # (2, 2, 3) a_{alpha,beta}
    n: np.ndarray        # (3,)
    jac: float           # |a_1 x a_2|


@dataclass
class SurfacePointState:
    x: np.ndarray
    a: np.ndarray
    a_d: np.ndarray
    n: np.ndarray
    jac: float
    a_co: np.ndarray
    a_con: np.ndarray
    a_dual: np.ndarray       # (2, 3) contravariant tangent vectors a^alpha
    b_co: np.ndarray
    christoffel: np.ndarray
    H: float
    gauss: float

    @property
    def b_mixed(self):
        """b^alpha_beta"""
        return self.a_con @ self.b_co

    @property
    def b_con(self):
        return self.a_con @ self.b_co @ self.a_con


@dataclass
class SplitState:
    ahat_con: np.ndarray
    ahat_co: np.ndarray
    J: float
    J_el: float
    J_in: float
    I1: float
    I1_el: float
    eps: np.ndarray
    eps_el: np.ndarray
    eps_in: np.ndarray
    bhat_co: np.ndarray = None
    kappa: np.ndarray = None
    kappa_el: np.ndarray = None
    kappa_in: np.ndarray = None


def surface_point(basis, controls, eps_geo=EPS_GEO):
    """Position, tangents, their derivatives and the unit normal from a basis evaluation."""
    controls = np.asarray(controls, dtype=float)
    x = basis.values @ controls
    a = basis.d1.T @ controls                      # (2, 3)
    dd = basis.d2.T @ controls                     # (3, 3): 11, 12, 22
    a_d = np.array([[dd[0], dd[1]], [dd[1], dd[2]]])
    cross = np.cross(a[0], a[1])
    jac = float(np.linalg.norm(cross))
    if jac <= eps_geo:
        raise DegenerateGeometryError(f"degenerate parametrization |a1 x a2| = {jac:.3e}")
    return SurfaceFrame(x=x, a=a, a_d=a_d, n=cross / jac, jac=jac)


def metric_and_curvature(frame):
    a_co = frame.a @ frame.a.T
    a_con = inv2(a_co, tol=EPS_GEO**2, what="surface metric")
    a_dual = a_con @ frame.a
    b_co = frame.a_d @ frame.n
    b_co = 0.5 * (b_co + b_co.T)
    christoffel = np.einsum("abk,gk->gab", frame.a_d, a_dual)
    b_mixed = a_con @ b_co
    return SurfacePointState(
        x=frame.x,
        a=frame.a,
        a_d=frame.a_d,
        n=frame.n,
        jac=frame.jac,
        a_co=a_co,
        a_con=a_con,
        a_dual=a_dual,
        b_co=b_co,
        christoffel=christoffel,
        H=0.5 * float(np.trace(b_mixed)),
        gauss=float(det2(b_mixed)),
    )


def evaluate_point(basis, controls):
    return metric_and_curvature(surface_point(basis, controls))


def invariants(A_con, a_co, A_co):
    I1 = float(np.sum(A_con * a_co))
    J = float(np.sqrt(det2(a_co) / det2(A_co)))
    return I1, J


def split_quantities(a_co, A_co, ahat_con, b_co=None, B_co=None, bhat_co=None):
    """Elastic/inelastic split of stretch, strain and (optionally) curvature."""
    ahat_co = inv2(ahat_con, tol=EPS_GEO**2, what="intermediate metric")
    det_ahat = det2(ahat_con)
    if det_ahat <= 0.0:
        raise DegenerateGeometryError("intermediate metric is not positive definite")
    A_con = inv2(A_co)
    I1, J = invariants(A_con, a_co, A_co)
    J_el = float(np.sqrt(det2(a_co) * det_ahat))
    J_in = float(1.0 / np.sqrt(det_ahat * det2(A_co)))
    state = SplitState(
        ahat_con=ahat_con,
        ahat_co=ahat_co,
        J=J,
        J_el=J_el,
        J_in=J_in,
        I1=I1,
        I1_el=float(np.sum(ahat_con * a_co)),
        eps=0.5 * (a_co - A_co),
        eps_el=0.5 * (a_co - ahat_co),
        eps_in=0.5 * (ahat_co - A_co),
    )
    if b_co is not None:
        state.bhat_co = bhat_co
        state.kappa = b_co - B_co
        state.kappa_el = b_co - bhat_co
        state.kappa_in = bhat_co - B_co
    return state
