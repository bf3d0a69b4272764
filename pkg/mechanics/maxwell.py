"""Maxwell branches: implicit-Euler evolution of the intermediate metric and curvature.

A branch holds a spring law evaluated against the intermediate metric ``â^{ab}`` and an
optional Koiter bending spring acting on ``b - b̂``. History is stored per quadrature point;
global iterations always restart the local update from the committed state.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from mechanics.elastic_materials import ElasticBranch, KoiterBending, Response, TangentBlocks
from mechanics.errors import (
    DegenerateViscosityError,
    LocalNonConvergenceError,
    LocalSingularityError,
    TangentSingularityError,
)
from mechanics.tensors import (
    EYE2,
    ddot4,
    det2,
    expand_sensitivity,
    from_voigt,
    inv2,
    outer,
    sym,
    sym_product,
    sym_square,
    to_voigt,
    voigt_columns,
    voigt_rows,
)

logger = logging.getLogger(__name__)

LOCAL_TOL = 1e-10
MAX_LOCAL_ITERATIONS = 25


@dataclass
class MaxwellBranch:
    membrane: object = None          # MembraneLaw with the branch stiffnesses (mu1, K1, gamma)
    bending: KoiterBending = None    # bending spring with modulus c1
    eta_s: float = 0.0
    eta_b: float = 0.0
    force_newton: bool = False
    local_tol: float = LOCAL_TOL
    max_local_iterations: int = MAX_LOCAL_ITERATIONS

    def __post_init__(self):
        if self.eta_s < 0.0 or self.eta_b < 0.0:
            raise DegenerateViscosityError("viscosities must be nonnegative")

    @property
    def has_membrane(self):
        return self.membrane is not None

    @property
    def has_bending(self):
        return self.bending is not None


@dataclass
class MaxwellHistory:
    ahat_con: np.ndarray
    bhat_co: np.ndarray
    dissipation: float = 0.0

    @classmethod
    def initial(cls, A_con, B_co):
        return cls(ahat_con=sym(np.array(A_con, dtype=float)), bhat_co=sym(np.array(B_co, dtype=float)))

    def copy(self):
        return replace(self, ahat_con=self.ahat_con.copy(), bhat_co=self.bhat_co.copy())


@dataclass
class LocalReport:
    path: str
    iterations: int = 0
    residual_norms: list = field(default_factory=list)


def _require_eta_s(branch):
    if branch.eta_s == 0.0:
        raise DegenerateViscosityError(
            "eta_s = 0 on an active membrane branch; remove the branch instead"
        )


def _require_eta_b(branch):
    if branch.eta_b == 0.0:
        raise DegenerateViscosityError(
            "eta_b = 0 on an active bending branch; remove the branch instead"
        )


# --- Membrane evolution ---

def residual_surface(branch, ahat, ahat_n, a_co, a_con, dt):
    """Stored components (11, 12, 22) of (â - â_n)/dt + drive(â, a)/eta_s."""
    _require_eta_s(branch)
    drive = branch.membrane.drive(ahat, a_co, a_con)
    return to_voigt((ahat - ahat_n) / dt + drive / branch.eta_s)


def jacobian_surface(branch, ahat, a_co, a_con, dt):
    _require_eta_s(branch)
    d_g = branch.membrane.d_drive_reference(ahat, a_co, a_con)
    return np.eye(3) / dt + voigt_columns(d_g) / branch.eta_s


def update_intermediate_metric(branch, history, a_co, a_con, dt):
    """â_{n+1} from the committed â_n, by closed form where the law allows it, else Newton."""
    ahat_n = history.ahat_con
    if not branch.has_membrane:
        return ahat_n.copy(), LocalReport(path="inactive")
    _require_eta_s(branch)

    if not branch.force_newton:
        closed = branch.membrane.closed_form(ahat_n, a_con, branch.eta_s, dt)
        if closed is not None:
            return sym(closed), LocalReport(path="closed_form")

    x = to_voigt(ahat_n)
    report = LocalReport(path="newton")
    for it in range(1, branch.max_local_iterations + 1):
        ahat = from_voigt(x)
        g = residual_surface(branch, ahat, ahat_n, a_co, a_con, dt)
        report.residual_norms.append(float(np.linalg.norm(g)))
        try:
            dx = np.linalg.solve(jacobian_surface(branch, ahat, a_co, a_con, dt), -g)
        except np.linalg.LinAlgError as exc:
            raise LocalSingularityError(f"singular local Jacobian at iteration {it}") from exc
        x = x + dx
        report.iterations = it
        if np.linalg.norm(dx) <= branch.local_tol:
            ahat = from_voigt(x)
            if det2(ahat) <= 0.0 or ahat[0, 0] <= 0.0:
                raise LocalNonConvergenceError(
                    "intermediate metric lost positive definiteness", report.residual_norms[-1]
                )
            logger.debug("local Newton converged in %d iterations", it)
            return ahat, report
    raise LocalNonConvergenceError(
        f"local update did not converge in {branch.max_local_iterations} iterations",
        report.residual_norms[-1] if report.residual_norms else None,
    )


def metric_sensitivity(branch, ahat, a_co, a_con, dt):
    """X^{ab cd} = d â^{ab} / d a_cd at the converged update."""
    if not branch.has_membrane:
        return np.zeros((2, 2, 2, 2))
    law = branch.membrane
    lhs = jacobian_surface(branch, ahat, a_co, a_con, dt)
    rhs = -voigt_rows(law.d_drive_metric(ahat, a_co, a_con)).reshape(3, 4) / branch.eta_s
    try:
        x3 = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise TangentSingularityError("singular sensitivity system of the intermediate metric") from exc
    return expand_sensitivity(x3.reshape(3, 2, 2))


# --- Bending evolution ---

def residual_bending(branch, bhat, bhat_n, b_co, dt):
    _require_eta_b(branch)
    return to_voigt((bhat - bhat_n) / dt - branch.bending.c * (b_co - bhat) / branch.eta_b)


def update_intermediate_curvature(branch, history, b_co, dt):
    bhat_n = history.bhat_co
    if not branch.has_bending:
        return bhat_n.copy()
    _require_eta_b(branch)
    c1 = branch.bending.c
    return sym((branch.eta_b * bhat_n + c1 * dt * b_co) / (branch.eta_b + c1 * dt))


# --- Branch response ---

def _inelastic_jacobian(ahat, A_co):
    return float(1.0 / np.sqrt(det2(ahat) * det2(A_co)))


def kirchhoff_stress_and_moment(branch, history, mp):
    """tau_1 = J sigma_1 and M0_1 = J M_1 for a committed or trial history."""
    ahat = history.ahat_con
    j_in = _inelastic_jacobian(ahat, mp.A_co)
    tau = np.zeros((2, 2))
    m0 = np.zeros((2, 2))
    if branch.has_membrane:
        tau = j_in * branch.membrane.kirchhoff(ahat, mp.a_co, mp.a_con)
    if branch.has_bending:
        m0 = j_in * branch.bending.c * ahat @ (mp.b_co - history.bhat_co) @ ahat
    return tau, m0


def maxwell_stress_and_moment(branch, history, mp):
    """Cauchy-type sigma_1 and M_1 of the branch."""
    tau, m0 = kirchhoff_stress_and_moment(branch, history, mp)
    return tau / mp.J, m0 / mp.J


def maxwell_tangents(branch, history, mp, dt, sensitivity=True):
    """Branch contribution (c1, d1, e1, f1) including the dependence of â, b̂ on a, b.

    With ``sensitivity=False`` the implicit terms are dropped, which leaves an
    inconsistent tangent.
    """
    ahat = history.ahat_con
    ahat_co = inv2(ahat)
    j_in = _inelastic_jacobian(ahat, mp.A_co)
    if sensitivity:
        x = metric_sensitivity(branch, ahat, mp.a_co, mp.a_con, dt)
    else:
        x = np.zeros((2, 2, 2, 2))
    blocks = TangentBlocks()

    if branch.has_membrane:
        law = branch.membrane
        tau_hat = law.kirchhoff(ahat, mp.a_co, mp.a_con)
        d_a = law.d_metric(ahat, mp.a_co, mp.a_con)
        d_g = law.d_reference(ahat, mp.a_co, mp.a_con)
        via_ahat = j_in * d_g - 0.5 * j_in * outer(tau_hat, ahat_co)
        blocks.c = 2.0 * (j_in * d_a + ddot4(via_ahat, x))

    if branch.has_bending:
        c1 = branch.bending.c
        kappa_el = mp.b_co - history.bhat_co
        m_hat = c1 * ahat @ kappa_el @ ahat
        M = ahat @ kappa_el
        via_ahat = -0.5 * j_in * outer(m_hat, ahat_co) + j_in * c1 * (
            sym_product(EYE2, M) + sym_product(M, EYE2)
        )
        blocks.e = 2.0 * ddot4(via_ahat, x)
        if sensitivity:
            relaxed = branch.eta_b / (branch.eta_b + c1 * dt)
        else:
            relaxed = 1.0
        blocks.f = j_in * c1 * sym_square(ahat) * relaxed
    return blocks


def dissipation_increment(branch, history_n, history_np1, mp):
    """Dissipated energy per reference area over one step.

    Uses the backward-rectangle rule on the intermediate metric and curvature rates; the
    inelastic strain increment is -1/2 â_co Δâ^con â_co, linearized at n+1.
    """
    tau, m0 = kirchhoff_stress_and_moment(branch, history_np1, mp)
    increment = 0.0
    if branch.has_membrane:
        ahat_co = inv2(history_np1.ahat_con)
        d_eps_in = -0.5 * ahat_co @ (history_np1.ahat_con - history_n.ahat_con) @ ahat_co
        increment += float(np.sum(tau * d_eps_in))
    if branch.has_bending:
        increment += float(np.sum(m0 * (history_np1.bhat_co - history_n.bhat_co)))
    return increment


def update_history(branch, history, mp, dt):
    """Trial history at n+1 from the committed one, dissipation accumulated."""
    ahat, report = update_intermediate_metric(branch, history, mp.a_co, mp.a_con, dt)
    bhat = update_intermediate_curvature(branch, history, mp.b_co, dt)
    trial = MaxwellHistory(ahat_con=ahat, bhat_co=bhat, dissipation=history.dissipation)
    trial.dissipation += dissipation_increment(branch, history, trial, mp)
    return trial, report


@dataclass
class ViscoelasticMaterial:
    """Elastic branch in parallel with any number of Maxwell branches."""

    elastic: ElasticBranch = field(default_factory=ElasticBranch)
    branches: list = field(default_factory=list)
    consistent_tangent: bool = True

    def initial_histories(self, A_con, B_co):
        return [MaxwellHistory.initial(A_con, B_co) for _ in self.branches]

    def respond(self, mp, committed, dt):
        """Total (tau, M0, tangents) and the trial histories at n+1."""
        response = self.elastic.evaluate(mp)
        trial = []
        for branch, history in zip(self.branches, committed):
            new, _ = update_history(branch, history, mp, dt)
            tau, m0 = kirchhoff_stress_and_moment(branch, new, mp)
            blocks = maxwell_tangents(branch, new, mp, dt, sensitivity=self.consistent_tangent)
            response = response + Response(tau=tau, m0=m0, blocks=blocks)
            trial.append(new)
        return response, trial

    def stresses(self, mp, histories):
        """Total tau and M0 for given histories, without advancing them."""
        response = self.elastic.evaluate(mp)
        for branch, history in zip(self.branches, histories):
            tau, m0 = kirchhoff_stress_and_moment(branch, history, mp)
            response = response + Response(tau=tau, m0=m0)
        return response

    @property
    def has_bending(self):
        return self.elastic.has_bending or any(b.has_bending for b in self.branches)


def stress_and_moment(response, mp):
    return response.tau / mp.J, response.m0 / mp.J


def membrane_traction(response, mp):
    """N^{ab} = sigma^{ab} + b^a_g M^{gb} for the point driver."""
    sigma, moment = stress_and_moment(response, mp)
    b_mixed = mp.a_con @ mp.b_co
    return sigma + b_mixed @ moment
