"""Element quadrature loops: internal/external forces and the element tangent.

Element vectors are node-major: entry ``3 * local_node + k`` for coordinate ``k``.
Stresses enter as Kirchhoff-type quantities (tau = J sigma, M0 = J M) integrated over
the reference area.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from mechanics.elastic_materials import MaterialPoint
from mechanics.errors import DegenerateGeometryError, InvertedElementError, ProjectionError
from mechanics.spline_basis import gauss_rule, nurbs_eval
from mechanics.surface_kinematics import evaluate_point
from mechanics.tensors import skew

logger = logging.getLogger(__name__)

# edge -> (index of the tangent direction, index normal to the edge, outward sign)
EDGE_GEOMETRY = {
    "eta_min": (0, 1, -1.0),
    "eta_max": (0, 1, 1.0),
    "xi_min": (1, 0, -1.0),
    "xi_max": (1, 0, 1.0),
}


@dataclass
class LoadValues:
    """Loads evaluated at one instant."""

    pressure: float = 0.0
    tangential: np.ndarray = field(default_factory=lambda: np.zeros(2))
    dead: np.ndarray = field(default_factory=lambda: np.zeros(3))
    edge_tractions: dict = field(default_factory=dict)
    edge_moments: dict = field(default_factory=dict)


@dataclass
class LoadSpec:
    """Time functions of the applied loads; any entry may be left unset."""

    pressure: object = None            # t -> p, follower load along the current normal
    tangential: object = None          # t -> (f^1, f^2) per current area
    dead: object = None                # t -> (3,) force per reference area
    edge_tractions: dict = field(default_factory=dict)   # edge -> (t -> (3,)) per reference length
    edge_moments: dict = field(default_factory=dict)     # edge -> (t -> m) per reference length

    def at(self, t):
        return LoadValues(
            pressure=float(self.pressure(t)) if self.pressure else 0.0,
            tangential=np.asarray(self.tangential(t), dtype=float) if self.tangential else np.zeros(2),
            dead=np.asarray(self.dead(t), dtype=float) if self.dead else np.zeros(3),
            edge_tractions={e: np.asarray(f(t), dtype=float) for e, f in self.edge_tractions.items()},
            edge_moments={e: float(f(t)) for e, f in self.edge_moments.items()},
        )


@dataclass
class QuadPoint:
    xi: float
    eta: float
    weight: float      # Gauss weight times the parametric element area
    basis: object
    ref: object        # SurfacePointState in the reference configuration

    @property
    def dA(self):
        return self.ref.jac * self.weight


@dataclass
class EdgePoint:
    edge: str
    basis: object
    weight: float      # Gauss weight times the parametric edge length
    ref_length: float  # |A_t| at the point


@dataclass
class ElementWorkspace:
    element: object
    points: list
    edge_points: list
    committed: list    # per quadrature point, list of MaxwellHistory
    trial: list = None

    @property
    def connectivity(self):
        return self.element.connectivity

    @property
    def n_dof(self):
        return 3 * len(self.element.connectivity)

    def commit(self):
        if self.trial is not None:
            self.committed = self.trial
            self.trial = None

    def dissipation(self, histories=None):
        """Accumulated dissipation of the element."""
        histories = self.committed if histories is None else histories
        return sum(
            qp.dA * sum(h.dissipation for h in hist) for qp, hist in zip(self.points, histories)
        )


def build_workspace(mesh, element, material):
    """Quadrature data of an element, (p+1) x (q+1) Gauss points."""
    p, q = element.degrees
    (x0, x1), (y0, y1) = element.xi_span, element.eta_span
    weights = mesh.weights[element.connectivity]
    ref_controls = mesh.control_points[element.connectivity]
    t_xi, w_xi = gauss_rule(p + 1)
    t_eta, w_eta = gauss_rule(q + 1)

    points = []
    for s, ws in zip(t_eta, w_eta):
        for t, wt in zip(t_xi, w_xi):
            xi, eta = x0 + t * (x1 - x0), y0 + s * (y1 - y0)
            basis = nurbs_eval(element, weights, xi, eta)
            try:
                ref = evaluate_point(basis, ref_controls)
            except DegenerateGeometryError as exc:
                raise InvertedElementError(f"reference geometry: {exc}", element.index) from exc
            points.append(QuadPoint(xi, eta, wt * ws * (x1 - x0) * (y1 - y0), basis, ref))

    edge_points = []
    for edge in mesh.EDGES:
        if element.index not in {e.index for e in mesh.boundary_elements(edge)}:
            continue
        along, _, _ = EDGE_GEOMETRY[edge]
        span = element.xi_span if along == 0 else element.eta_span
        fixed = {
            "eta_min": element.eta_span[0],
            "eta_max": element.eta_span[1],
            "xi_min": element.xi_span[0],
            "xi_max": element.xi_span[1],
        }[edge]
        t_e, w_e = gauss_rule((p if along == 0 else q) + 1)
        for t, wt in zip(t_e, w_e):
            u = span[0] + t * (span[1] - span[0])
            xi, eta = (u, fixed) if along == 0 else (fixed, u)
            basis = nurbs_eval(element, weights, xi, eta)
            tangent = basis.d1[:, along] @ ref_controls
            edge_points.append(
                EdgePoint(edge, basis, wt * (span[1] - span[0]), float(np.linalg.norm(tangent)))
            )

    committed = [material.initial_histories(qp.ref.a_con, qp.ref.b_co) for qp in points]
    return ElementWorkspace(element, points, edge_points, committed)


def covariant_second_derivatives(basis, state):
    """N_{;ab} = N_{,ab} - Γ^g_ab N_{,g} as a (2, 2, n) array."""
    d2 = basis.d2
    dd = np.array([[d2[:, 0], d2[:, 1]], [d2[:, 1], d2[:, 2]]])
    return dd - np.einsum("gab,ng->abn", state.christoffel, basis.d1)


def _current_state(ws, qp, x_e):
    try:
        cur = evaluate_point(qp.basis, x_e)
        return cur, MaterialPoint.from_states(qp.ref, cur)
    except (DegenerateGeometryError, InvertedElementError) as exc:
        raise InvertedElementError(str(exc), ws.element.index) from exc


@dataclass
class ElementResult:
    f_int: np.ndarray
    k_int: np.ndarray
    trial: list


def evaluate_element(ws, x_e, material, dt, need_stiffness=True):
    """Internal force, material+geometric stiffness and trial histories of one element."""
    n = len(ws.element.connectivity)
    f = np.zeros((n, 3))
    k = np.zeros((n, 3, n, 3)) if need_stiffness else None
    trial = []
    eye3 = np.eye(3)
    for qp, hist in zip(ws.points, ws.committed):
        cur, mp = _current_state(ws, qp, x_e)
        response, new = material.respond(mp, hist, dt)
        trial.append(new)
        dA = qp.dA
        d1 = qp.basis.d1
        ns = covariant_second_derivatives(qp.basis, cur)
        tau, m0 = response.tau, response.m0

        f += dA * (np.einsum("ab,na,bk->nk", tau, d1, cur.a) + np.outer(np.einsum("ab,abn->n", m0, ns), cur.n))
        if not need_stiffness:
            continue

        P = np.einsum("na,bk->nkab", d1, cur.a)
        Q = np.einsum("abn,k->nkab", ns, cur.n)
        blk = response.blocks
        km = (
            np.einsum("nkab,abcd,mlcd->nkml", P, blk.c, P)
            + np.einsum("nkab,abcd,mlcd->nkml", P, blk.d, Q)
            + np.einsum("nkab,abcd,mlcd->nkml", Q, blk.e, P)
            + np.einsum("nkab,abcd,mlcd->nkml", Q, blk.f, Q)
        )
        k_sigma = np.einsum("ab,na,mb->nm", tau, d1, d1)
        kg = np.einsum("nm,kl->nkml", k_sigma, eye3)
        if np.any(m0):
            bm = float(np.sum(cur.b_co * m0))
            k_m1 = -bm * np.einsum("gd,ng,md->nm", cur.a_con, d1, d1)
            kg += np.einsum("nm,k,l->nkml", k_m1, cur.n, cur.n)
            mns = np.einsum("ab,abm->m", m0, ns)
            k_m2 = -np.einsum("ng,k,gl,m->nkml", d1, cur.n, cur.a_dual, mns)
            kg += k_m2 + k_m2.transpose(2, 3, 0, 1)
        k += dA * (km + kg)

    return ElementResult(
        f_int=f.reshape(-1),
        k_int=None if k is None else k.reshape(3 * n, 3 * n),
        trial=trial,
    )


def f_int(ws, x_e, material, dt):
    return evaluate_element(ws, x_e, material, dt, need_stiffness=False).f_int


def f_ext(ws, x_e, loads, need_stiffness=True):
    """External force and its derivative d f_ext / d x (zero for dead loads)."""
    n = len(ws.element.connectivity)
    f = np.zeros((n, 3))
    k = np.zeros((n, 3, n, 3))

    for qp in ws.points:
        values, d1 = qp.basis.values, qp.basis.d1
        if np.any(loads.dead):
            f += qp.dA * np.outer(values, loads.dead)
        if loads.pressure == 0.0 and not np.any(loads.tangential):
            continue
        a = d1.T @ x_e
        cross = np.cross(a[0], a[1])
        if loads.pressure != 0.0:
            p = loads.pressure
            f += qp.weight * p * np.outer(values, cross)
            if need_stiffness:
                dcross = -np.einsum("kl,m->klm", skew(a[1]), d1[:, 0]) + np.einsum(
                    "kl,m->klm", skew(a[0]), d1[:, 1]
                )
                k += qp.weight * p * np.einsum("n,klm->nkml", values, dcross)
        if np.any(loads.tangential):
            da = float(np.linalg.norm(cross)) * qp.weight
            a_co = a @ a.T
            a_dual = np.linalg.solve(a_co, a)
            force = loads.tangential @ a
            f += da * np.outer(values, force)
            if need_stiffness:
                # d(a_alpha) and d(da) = da a^g . d a_g
                k += da * np.einsum("a,n,ma,kl->nkml", loads.tangential, values, d1, np.eye(3))
                k += da * np.einsum("n,k,gl,mg->nkml", values, force, a_dual, d1)

    for ep in ws.edge_points:
        along, normal, sign = EDGE_GEOMETRY[ep.edge]
        dS = ep.ref_length * ep.weight
        values, d1 = ep.basis.values, ep.basis.d1
        if ep.edge in loads.edge_tractions:
            f += dS * np.outer(values, loads.edge_tractions[ep.edge])
        m = loads.edge_moments.get(ep.edge, 0.0)
        if m == 0.0:
            continue
        f_m, k_m = _edge_moment(d1, x_e, normal, sign * m, need_stiffness)
        f += dS * f_m
        if need_stiffness:
            k += dS * k_m

    return f.reshape(-1), k.reshape(3 * n, 3 * n)


def _edge_moment(d1, x_e, normal, signed_m, need_stiffness):
    """Moment about the edge tangent: m s w_a N_a^T n with w_a = a^{ka} / sqrt(a^{kk})."""
    a = d1.T @ x_e
    cross = np.cross(a[0], a[1])
    jac = float(np.linalg.norm(cross))
    if jac <= 0.0:
        raise InvertedElementError("degenerate edge frame")
    n = cross / jac
    a_con = np.linalg.inv(a @ a.T)
    a_dual = a_con @ a
    akk = a_con[normal, normal]
    w = a_con[normal] / np.sqrt(akk)
    f = signed_m * np.outer(d1 @ w, n)
    if not need_stiffness:
        return f, None

    up = d1 @ a_con                                # N^b, (n, 2)
    # d a^{ab} / d x_{ml}
    d_acon = -(np.einsum("mb,al->abml", up, a_dual) + np.einsum("ma,bl->abml", up, a_dual))
    dw = d_acon[normal] / np.sqrt(akk) - 0.5 * np.einsum(
        "a,ml->aml", a_con[normal], d_acon[normal, normal]
    ) * akk**-1.5
    k = np.einsum("na,k,aml->nkml", d1, n, dw)
    k -= np.einsum("a,na,gk,l,mg->nkml", w, d1, a_dual, n, d1)
    return f, signed_m * k


def stiffness(ws, x_e, material, loads, dt):
    """Element tangent of f_int - f_ext."""
    k_int = evaluate_element(ws, x_e, material, dt).k_int
    _, k_ext = f_ext(ws, x_e, loads)
    return k_int - k_ext


def l2_project(mesh, workspaces, field_values):
    """Control-point coefficients of the L2 projection of quadrature-point data.

    ``field_values[e][g]`` is the value at Gauss point g of element e.
    """
    rows, cols, vals = [], [], []
    rhs = np.zeros(mesh.n_cp)
    for ws, values in zip(workspaces, field_values):
        conn = ws.connectivity
        for qp, v in zip(ws.points, values):
            N = qp.basis.values
            m_e = qp.dA * np.outer(N, N)
            rows.append(np.repeat(conn, len(conn)))
            cols.append(np.tile(conn, len(conn)))
            vals.append(m_e.ravel())
            np.add.at(rhs, conn, qp.dA * N * v)
    gram = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mesh.n_cp, mesh.n_cp),
    ).tocsc()
    coeffs = spla.spsolve(gram, rhs)
    if not np.all(np.isfinite(coeffs)):
        raise ProjectionError("singular Gram matrix in the L2 projection")
    return coeffs
