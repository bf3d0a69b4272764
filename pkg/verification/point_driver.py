"""Homogeneous material-point driver.

Imposes metric and curvature programs on a single material point and integrates the
constitutive machinery without assembly. Used for the membrane relaxation/creep studies,
cyclic sweeps and the balloon and sphere pressure histories.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from scipy.optimize import brentq

from mechanics.elastic_materials import MaterialPoint
from mechanics.errors import ShellError, SolverError, StepFailure
from mechanics.fe_solver import TimeStepper
from mechanics.maxwell import maxwell_stress_and_moment, membrane_traction
from mechanics.surface_kinematics import split_quantities

logger = logging.getLogger(__name__)

FLAT = np.eye(2)
BRACKET_EXPANSIONS = 40


def _sphere_reference(R, theta):
    A_co = R**2 * np.diag([np.sin(theta) ** 2, 1.0])
    return A_co, -A_co / R


# --- Programs ---

@dataclass
class KinematicProgram:
    kind: ClassVar[str] = "base"

    def reference(self):
        return FLAT.copy(), np.zeros((2, 2))

    def kinematics(self, t):
        """(a_co, b_co, load) at time t."""
        raise NotImplementedError

    def radius(self, t):
        return None


@dataclass
class PureShear(KinematicProgram):
    """Imposed displacement u(t) on the top edge of a unit square, lambda_x = 1/lambda_y."""

    displacement: object = None
    kind: ClassVar[str] = "PureShear"

    def kinematics(self, t):
        u = float(self.displacement(t))
        lam_y = 1.0 + u
        if lam_y <= 0.0:
            raise SolverError(f"imposed displacement {u} inverts the point")
        return np.diag([1.0 / lam_y**2, lam_y**2]), np.zeros((2, 2)), u


@dataclass
class PureDilatation(KinematicProgram):
    displacement: object = None
    kind: ClassVar[str] = "PureDilatation"

    def kinematics(self, t):
        u = float(self.displacement(t))
        lam = 1.0 + u
        if lam <= 0.0:
            raise SolverError(f"imposed displacement {u} inverts the point")
        return lam**2 * FLAT, np.zeros((2, 2)), u


@dataclass
class Cyclic(PureShear):
    """u(t) = amplitude sin(omega t); one loading-unloading cycle lasts pi/omega."""

    amplitude: float = 0.25
    omega: float = 1.0
    cycles: int = 1
    kind: ClassVar[str] = "Cyclic"

    def __post_init__(self):
        if self.displacement is None:
            self.displacement = lambda t: self.amplitude * np.sin(self.omega * t)

    @property
    def t_end(self):
        return self.cycles * np.pi / self.omega


@dataclass
class CreepTraction(KinematicProgram):
    """Equibiaxial dilatation whose stretch follows from an imposed edge traction.

    The traction is a force per reference edge length, so lambda * sigma = T.
    """

    traction: object = None
    kind: ClassVar[str] = "CreepTraction"

    def kinematics_for(self, lam):
        return lam**2 * FLAT, np.zeros((2, 2)), lam - 1.0


@dataclass
class BalloonStretch(KinematicProgram):
    tau_lambda: float = 1.0
    R: float = 1.0
    theta: float = np.pi / 3
    kind: ClassVar[str] = "BalloonStretch"

    def stretch(self, t):
        return float(np.exp(t / self.tau_lambda))

    def reference(self):
        return _sphere_reference(self.R, self.theta)

    def kinematics(self, t):
        lam = self.stretch(t)
        A_co, B_co = self.reference()
        return lam**2 * A_co, lam * B_co, lam

    def radius(self, t):
        return self.stretch(t) * self.R


@dataclass
class SphereStretchBend(BalloonStretch):
    """Balloon kinematics with the curvature b = lambda B entering the bending laws."""

    kind: ClassVar[str] = "SphereStretchBend"


PROGRAM_KINDS = {
    cls.kind: cls
    for cls in (PureShear, PureDilatation, Cyclic, CreepTraction, BalloonStretch, SphereStretchBend)
}


# --- Records ---

@dataclass
class PointRecord:
    t: float
    load: float
    sigma: np.ndarray
    sigma_elastic: np.ndarray
    sigma_branches: list
    moment: np.ndarray
    J: float
    J_el: float
    J_in: float
    I1: float
    I1_el: float
    ahat: np.ndarray
    bhat: np.ndarray
    dissipation: float
    pressure: float = None
    extra: dict = field(default_factory=dict)

    @property
    def sigma_maxwell(self):
        return self.sigma - self.sigma_elastic

    def row(self):
        """Flat mapping shared with the FE sample-point output."""
        visc = self.sigma_maxwell
        return {
            "t": self.t,
            "load": self.load,
            "sigma11": self.sigma[0, 0],
            "sigma12": self.sigma[0, 1],
            "sigma22": self.sigma[1, 1],
            "sigma_el22": self.sigma_elastic[1, 1],
            "sigma_visc22": visc[1, 1],
            "M11": self.moment[0, 0],
            "M22": self.moment[1, 1],
            "J": self.J,
            "J_el": self.J_el,
            "J_in": self.J_in,
            "I1": self.I1,
            "I1_el": self.I1_el,
            "dissipation": self.dissipation,
            "pressure": np.nan if self.pressure is None else self.pressure,
            **self.extra,
        }


def point_record(t, load, material, mp, histories, response, radius=None):
    """Collect the outputs of one converged material-point state."""
    sigma = response.tau / mp.J
    moment = response.m0 / mp.J
    elastic = material.elastic.evaluate(mp)
    per_branch = [maxwell_stress_and_moment(b, h, mp)[0] for b, h in zip(material.branches, histories)]
    lead = next((h for b, h in zip(material.branches, histories) if b.has_membrane), None)
    ahat = mp.A_con if lead is None else lead.ahat_con
    bhat = mp.B_co if not histories else histories[0].bhat_co
    split = split_quantities(mp.a_co, mp.A_co, ahat, mp.b_co, mp.B_co, bhat)
    pressure = None
    if radius is not None:
        traction = membrane_traction(response, mp)
        tension = 0.5 * float(np.trace(traction @ mp.a_co))
        pressure = 2.0 * tension / radius
    return PointRecord(
        t=t,
        load=load,
        sigma=sigma,
        sigma_elastic=elastic.tau / mp.J,
        sigma_branches=per_branch,
        moment=moment,
        J=split.J,
        J_el=split.J_el,
        J_in=split.J_in,
        I1=split.I1,
        I1_el=split.I1_el,
        ahat=ahat.copy(),
        bhat=bhat.copy(),
        dissipation=sum(h.dissipation for h in histories),
        pressure=pressure,
    )


# --- Driver ---

def _respond(material, A_co, B_co, a_co, b_co, committed, dt):
    mp = MaterialPoint(A_co=A_co, a_co=a_co, B_co=B_co, b_co=b_co)
    response, trial = material.respond(mp, committed, dt)
    return mp, response, trial


def _solve_creep_stretch(program, material, A_co, B_co, committed, dt, traction, guess):
    def residual(lam):
        a_co, b_co, _ = program.kinematics_for(lam)
        mp, response, _ = _respond(material, A_co, B_co, a_co, b_co, committed, dt)
        return lam * float(response.tau[0, 0] * a_co[0, 0]) / mp.J - traction

    lo, hi = guess / 1.5, guess * 1.5
    f_lo, f_hi = residual(lo), residual(hi)
    for _ in range(BRACKET_EXPANSIONS):
        if f_lo * f_hi <= 0.0:
            break
        if abs(f_lo) < abs(f_hi):
            lo /= 1.5
            f_lo = residual(lo)
        else:
            hi *= 1.5
            f_hi = residual(hi)
    else:
        raise SolverError(f"no bracket for the creep stretch, last bracket [{lo:.4g}, {hi:.4g}]")
    return brentq(residual, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def drive(program, material, dt, t_end):
    """Integrate a program from t = 0 to t_end and return one record per instant."""
    stepper = TimeStepper(t_end, dt)
    A_co, B_co = program.reference()
    A_con = np.linalg.inv(A_co)
    committed = material.initial_histories(A_con, B_co)

    lam = 1.0
    mp, response, _ = _respond(material, A_co, B_co, A_co, B_co, committed, stepper.dt)
    records = [point_record(0.0, 0.0, material, mp, committed, response, program.radius(0.0))]

    for step, t, h in stepper.steps():
        try:
            if isinstance(program, CreepTraction):
                traction = float(program.traction(t))
                lam = _solve_creep_stretch(program, material, A_co, B_co, committed, h, traction, lam)
                a_co, b_co, load = program.kinematics_for(lam)
            else:
                a_co, b_co, load = program.kinematics(t)
            mp, response, trial = _respond(material, A_co, B_co, a_co, b_co, committed, h)
        except (ShellError, ValueError) as exc:
            raise StepFailure(step, exc) from exc
        committed = trial
        records.append(point_record(t, load, material, mp, committed, response, program.radius(t)))
    logger.debug("point drive %s: %d steps, dissipation %.6g", program.kind, stepper.n_steps,
                 records[-1].dissipation)
    return records


@dataclass
class SweepPoint:
    omega: float
    dissipation: float


def frequency_sweep(material, omegas, amplitude=0.25, cycles=10, steps_per_cycle=1000, threads=1):
    """Dissipated energy after a number of loading-unloading cycles, per excitation frequency."""

    def one(omega):
        program = Cyclic(amplitude=amplitude, omega=omega, cycles=cycles)
        dt = program.t_end / (cycles * steps_per_cycle)
        records = drive(program, material, dt, program.t_end)
        return SweepPoint(float(omega), records[-1].dissipation)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, omegas))
    return [one(w) for w in omegas]
