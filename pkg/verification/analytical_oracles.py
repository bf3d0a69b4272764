"""Closed-form solutions for the inflated balloon, the bent strip and the inflated sphere.

All functions are pure; parameters are validated once when the dataclasses are built.
"""

import logging
from dataclasses import dataclass

import numpy as np

from mechanics.errors import OracleParameterError, UndefinedErrorSignal

logger = logging.getLogger(__name__)

POLE_RTOL = 1e-8


def _positive(obj, *names):
    for name in names:
        if getattr(obj, name) <= 0.0:
            raise OracleParameterError(f"{type(obj).__name__}.{name} must be positive")


def _nonnegative(obj, *names):
    for name in names:
        if getattr(obj, name) < 0.0:
            raise OracleParameterError(f"{type(obj).__name__}.{name} must be nonnegative")


def stretch_history(t, tau_lambda):
    return np.exp(np.asarray(t, dtype=float) / tau_lambda)


def intermediate_metric_evolution(t, mu1, eta_s, tau_lambda):
    """â_ev(t) solving dâ/dt = (mu1/eta_s)(exp(-2t/tau) - â), â(0) = 1."""
    t = np.asarray(t, dtype=float)
    if mu1 == 0.0:
        return np.ones_like(t)
    if eta_s == 0.0:
        return np.exp(-2.0 * t / tau_lambda)
    gap = mu1 * tau_lambda - 2.0 * eta_s
    if abs(gap) < POLE_RTOL * mu1 * tau_lambda:
        s = mu1 / eta_s
        return (1.0 + s * t) * np.exp(-s * t)
    return (mu1 * tau_lambda * np.exp(-2.0 * t / tau_lambda) - 2.0 * eta_s * np.exp(-mu1 * t / eta_s)) / gap


def intermediate_curvature_evolution(t, c1, eta_b, tau_lambda):
    """b̂_ev(t) solving db̂/dt = (c1/eta_b)(exp(t/tau) - b̂), b̂(0) = 1."""
    t = np.asarray(t, dtype=float)
    if c1 == 0.0:
        return np.ones_like(t)
    if eta_b == 0.0:
        return np.exp(t / tau_lambda)
    return (c1 * tau_lambda * np.exp(t / tau_lambda) + eta_b * np.exp(-c1 * t / eta_b)) / (
        eta_b + c1 * tau_lambda
    )


@dataclass(frozen=True)
class BalloonParams:
    mu: float
    mu1: float
    eta_s: float
    lambda_end: float = 2.0
    t_end: float = 1.0
    R: float = 1.0

    def __post_init__(self):
        _positive(self, "R", "t_end")
        _nonnegative(self, "mu", "mu1", "eta_s")
        if self.lambda_end <= 1.0:
            raise OracleParameterError("lambda_end must exceed 1")

    @property
    def tau_lambda(self):
        return self.t_end / np.log(self.lambda_end)


@dataclass
class BalloonState:
    t: float
    stretch: float
    ahat_ev: float
    p_el: float
    p_visc: float

    @property
    def p_total(self):
        return self.p_el + self.p_visc


def balloon_pressure(params, t):
    lam = float(stretch_history(t, params.tau_lambda))
    ahat = float(intermediate_metric_evolution(t, params.mu1, params.eta_s, params.tau_lambda))
    p_el = 2.0 * params.mu / params.R * (1.0 / lam - 1.0 / lam**7)
    p_visc = 2.0 * params.mu1 / params.R * (1.0 / lam - 1.0 / (lam**3 * ahat))
    return BalloonState(t, lam, ahat, p_el, p_visc)


@dataclass(frozen=True)
class PureBendParams:
    c: float = 1.0
    c1: float = 1.0
    eta_b: float = 0.5
    t_end: float = 1.0
    kappa_end: float = 0.5
    width: float = np.pi    # strip length along the bent direction

    def __post_init__(self):
        _positive(self, "c", "c1", "eta_b", "t_end", "width")

    @property
    def tau_b(self):
        return self.eta_b * (self.c + self.c1) / (self.c * self.c1)

    @property
    def moment_rate(self):
        """M_v such that the curvature reaches kappa_end at t_end."""
        tau = self.tau_b
        creep = tau * (np.exp(-self.t_end / tau) + self.t_end / tau - 1.0) / self.c
        return self.kappa_end * (self.c + self.c1) / (self.t_end + self.c1 * creep)


@dataclass
class PureBendState:
    t: float
    kappa: float
    kappa_in: float
    moment: float
    u_y: float
    pressure: float


def arc_shortening(width, kappa):
    """Displacement of the far edge when a strip of the given width is bent to kappa."""
    return -width * (1.0 - np.sinc(width * kappa / (2.0 * np.pi)))


def pure_bend_solution(params, t):
    tau = params.tau_b
    mv = params.moment_rate
    kappa_in = mv * tau / params.c * (np.exp(-t / tau) + t / tau - 1.0)
    moment = mv * t
    kappa = (moment + params.c1 * kappa_in) / (params.c + params.c1)
    return PureBendState(
        t=t,
        kappa=float(kappa),
        kappa_in=float(kappa_in),
        moment=float(moment),
        u_y=float(arc_shortening(params.width, kappa)),
        pressure=float(-kappa**2 * moment),
    )


@dataclass(frozen=True)
class SphereParams:
    mu: float = 5.0
    mu1: float = 5.0
    c1: float = 1.0
    k: float = 1.0
    H0: float = 0.0
    eta_s: float = 0.5
    eta_b: float = 0.5
    lambda_end: float = 4.0 ** (1.0 / 3.0)
    t_end: float = 1.0
    R: float = 1.0

    def __post_init__(self):
        _positive(self, "R", "t_end")
        _nonnegative(self, "mu", "mu1", "c1", "k", "eta_s", "eta_b")
        if self.lambda_end <= 1.0:
            raise OracleParameterError("lambda_end must exceed 1")
        if self.eta_b + self.c1 * self.tau_lambda == 0.0:
            raise OracleParameterError("eta_b + c1 tau_lambda vanishes")

    @property
    def tau_lambda(self):
        return self.t_end / np.log(self.lambda_end)


@dataclass
class SphereState:
    t: float
    stretch: float
    ahat_ev: float
    bhat_ev: float
    p_el: float
    p_visc: float

    @property
    def p_total(self):
        return self.p_el + self.p_visc


def sphere_pressure(params, t):
    tau = params.tau_lambda
    lam = float(stretch_history(t, tau))
    ahat = float(intermediate_metric_evolution(t, params.mu1, params.eta_s, tau))
    bhat = float(intermediate_curvature_evolution(t, params.c1, params.eta_b, tau))
    R, k, H0 = params.R, params.k, params.H0
    p_el = 2.0 * params.mu / R * (1.0 / lam - 1.0 / lam**7) + 2.0 * k / R**3 * (
        H0 * R / lam**2 + H0**2 * R**2 / lam
    )
    p_visc = 2.0 * params.mu1 / R * (1.0 / lam - 1.0 / (lam**3 * ahat)) + 2.0 * params.c1 * ahat / R**3 * (
        1.0 / lam - bhat / lam**2
    )
    return SphereState(t, lam, ahat, bhat, p_el, p_visc)


# --- Error measures ---

def relative_error(numerical, analytical):
    if analytical == 0.0:
        raise UndefinedErrorSignal("relative error undefined for a vanishing reference value")
    return abs(numerical - analytical) / abs(analytical)


def error_metrics(numerical, oracle):
    """Relative errors of the final values of every quantity present in both mappings."""
    return {
        key: relative_error(float(numerical[key]), float(oracle[key]))
        for key in numerical
        if key in oracle
    }


def fit_order(parameters, errors):
    """Least-squares slope of log(error) against log(parameter)."""
    parameters = np.asarray(parameters, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if parameters.size < 2 or parameters.size != errors.size:
        raise UndefinedErrorSignal("an order fit needs at least two matching samples")
    if np.any(errors <= 0.0) or np.any(parameters <= 0.0):
        raise UndefinedErrorSignal("an order fit needs positive parameters and errors")
    slope, _ = np.polyfit(np.log(parameters), np.log(errors), 1)
    return float(slope)


def local_orders(parameters, errors):
    """Pairwise orders between successive samples, for tabulation."""
    p = np.log(np.asarray(parameters, dtype=float))
    e = np.log(np.asarray(errors, dtype=float))
    return list(np.diff(e) / np.diff(p))
