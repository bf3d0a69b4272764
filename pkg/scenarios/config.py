"""Scenario configuration schema.

Configs are JSON documents validated with pydantic; time-dependent quantities are
``Schedule`` objects that can be called with the time.
"""

import bisect
import json
import logging
from dataclasses import fields
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    field_validator,
    model_validator,
)

from mechanics.elastic_materials import MEMBRANE_KINDS, MODEL_KINDS, ElasticBranch, KoiterBending, make_model
from mechanics.errors import ConfigError
from mechanics.maxwell import MaxwellBranch, ViscoelasticMaterial
from verification.analytical_oracles import PureBendParams, pure_bend_solution

logger = logging.getLogger(__name__)

Edge = Literal["xi_min", "xi_max", "eta_min", "eta_max"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# --- Schedules ---

class ConstantSchedule(_Strict):
    type: Literal["constant"] = "constant"
    value: float = 0.0

    def __call__(self, t):
        return self.value


class RampSchedule(_Strict):
    """value * min(t / t_ramp, 1)"""

    type: Literal["ramp"] = "ramp"
    value: float
    t_ramp: PositiveFloat

    def __call__(self, t):
        return self.value * min(t / self.t_ramp, 1.0)


class PiecewiseSchedule(_Strict):
    """Piecewise-linear through (t, value) points; a repeated time is a jump."""

    type: Literal["piecewise"] = "piecewise"
    points: list[tuple[float, float]]

    @field_validator("points")
    @classmethod
    def _sorted(cls, points):
        if not points:
            raise ValueError("at least one point is required")
        times = [p[0] for p in points]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("times must be nondecreasing")
        return points

    def __call__(self, t):
        times = [p[0] for p in self.points]
        values = [p[1] for p in self.points]
        i = bisect.bisect_right(times, t) - 1
        if i < 0:
            return values[0]
        if i >= len(times) - 1:
            return values[-1]
        t0, t1 = times[i], times[i + 1]
        return values[i] + (values[i + 1] - values[i]) * (t - t0) / (t1 - t0)


class SineSchedule(_Strict):
    type: Literal["sine"] = "sine"
    amplitude: float
    omega: PositiveFloat

    def __call__(self, t):
        return self.amplitude * np.sin(self.omega * t)


class ExpStretchSchedule(_Strict):
    """exp(t / tau); tau defaults to t_end / ln(lambda_end)."""

    type: Literal["exp_stretch"] = "exp_stretch"
    lambda_end: float = Field(2.0, gt=1.0)
    t_end: PositiveFloat = 1.0

    @property
    def tau(self):
        return self.t_end / np.log(self.lambda_end)

    def __call__(self, t):
        return float(np.exp(t / self.tau))


class ReciprocalStretchSchedule(_Strict):
    """1 / (1 + u(t)), the lateral stretch of pure shear."""

    type: Literal["reciprocal_stretch"] = "reciprocal_stretch"
    displacement: "Schedule"

    def __call__(self, t):
        return 1.0 / (1.0 + self.displacement(t))


class OracleSchedule(_Strict):
    """Loads of the bent strip taken from its closed-form solution."""

    type: Literal["oracle"] = "oracle"
    case: Literal["pure_bend"] = "pure_bend"
    quantity: Literal["moment", "u_y", "pressure"]
    c: PositiveFloat = 1.0
    c1: PositiveFloat = 1.0
    eta_b: PositiveFloat = 0.5
    t_end: PositiveFloat = 1.0
    kappa_end: float = 0.5
    width: PositiveFloat = np.pi

    def params(self):
        return PureBendParams(self.c, self.c1, self.eta_b, self.t_end, self.kappa_end, self.width)

    def __call__(self, t):
        state = pure_bend_solution(self.params(), t)
        return {"moment": state.moment, "u_y": state.u_y, "pressure": state.pressure}[self.quantity]


Schedule = Annotated[
    Union[
        ConstantSchedule,
        RampSchedule,
        PiecewiseSchedule,
        SineSchedule,
        ExpStretchSchedule,
        ReciprocalStretchSchedule,
        OracleSchedule,
    ],
    Field(discriminator="type"),
]
ReciprocalStretchSchedule.model_rebuild()


# --- Geometry ---

class FlatPatchGeometry(_Strict):
    type: Literal["flat"] = "flat"
    width: PositiveFloat = 1.0
    height: PositiveFloat = 1.0
    degrees: tuple[PositiveInt, PositiveInt] = (2, 2)
    elements: tuple[PositiveInt, PositiveInt] = (1, 1)


class ScordelisLoGeometry(_Strict):
    type: Literal["scordelis_lo"] = "scordelis_lo"
    radius: PositiveFloat = 25.0
    length: PositiveFloat = 50.0
    half_angle_deg: float = Field(40.0, gt=0.0, lt=90.0)
    degrees: tuple[PositiveInt, PositiveInt] = (2, 2)
    elements: tuple[PositiveInt, PositiveInt] = (8, 8)


Geometry = Annotated[Union[FlatPatchGeometry, ScordelisLoGeometry], Field(discriminator="type")]


# --- Material ---

class ModelSpec(_Strict):
    kind: str
    K: NonNegativeFloat = 0.0
    mu: NonNegativeFloat = 0.0
    gamma: NonNegativeFloat = 0.0
    c: NonNegativeFloat = 0.0
    k: NonNegativeFloat = 0.0
    H0: float = 0.0
    k_star: float = 0.0

    @field_validator("kind")
    @classmethod
    def _known(cls, kind):
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown material kind {kind!r}; expected one of {sorted(MODEL_KINDS)}")
        return kind

    @field_validator("k_star")
    @classmethod
    def _no_gaussian_modulus(cls, value):
        if value != 0.0:
            raise ValueError("k_star must be 0")
        return value

    def build(self):
        names = [f.name for f in fields(MODEL_KINDS[self.kind])]
        return make_model(self.kind, **{n: getattr(self, n) for n in names})


class BranchSpec(_Strict):
    membrane: Optional[str] = None
    mu1: NonNegativeFloat = 0.0
    K1: NonNegativeFloat = 0.0
    gamma: NonNegativeFloat = 0.0
    bending: bool = False
    c1: NonNegativeFloat = 0.0
    eta_s: NonNegativeFloat = 0.0
    eta_b: NonNegativeFloat = 0.0
    force_newton: bool = False

    @field_validator("membrane")
    @classmethod
    def _membrane_kind(cls, kind):
        if kind is not None and kind not in MEMBRANE_KINDS:
            raise ValueError(f"unknown membrane kind {kind!r}; expected one of {sorted(MEMBRANE_KINDS)}")
        return kind

    @model_validator(mode="after")
    def _viscosities(self):
        if self.membrane is not None and self.eta_s == 0.0:
            raise ValueError("a membrane branch needs eta_s > 0; drop the branch for eta_s = 0")
        if self.bending and self.eta_b == 0.0:
            raise ValueError("a bending branch needs eta_b > 0; drop the branch for eta_b = 0")
        return self

    def build(self):
        membrane = None
        if self.membrane is not None:
            params = {"K": self.K1, "mu": self.mu1, "gamma": self.gamma}
            names = [f.name for f in fields(MEMBRANE_KINDS[self.membrane])]
            membrane = make_model(self.membrane, **{n: params[n] for n in names})
        return MaxwellBranch(
            membrane=membrane,
            bending=KoiterBending(c=self.c1) if self.bending else None,
            eta_s=self.eta_s,
            eta_b=self.eta_b,
            force_newton=self.force_newton,
        )


class MaterialSpec(_Strict):
    elastic: list[ModelSpec] = Field(default_factory=list)
    branches: list[BranchSpec] = Field(default_factory=list)
    consistent_tangent: bool = True

    def build(self):
        return ViscoelasticMaterial(
            elastic=ElasticBranch([m.build() for m in self.elastic]),
            branches=[b.build() for b in self.branches],
            consistent_tangent=self.consistent_tangent,
        )


# --- Loads and boundary conditions ---

class LoadsSpec(_Strict):
    pressure: Optional[Schedule] = None
    tangential: Optional[tuple[Schedule, Schedule]] = None
    dead: Optional[tuple[Schedule, Schedule, Schedule]] = None
    edge_tractions: dict[Edge, tuple[Schedule, Schedule, Schedule]] = Field(default_factory=dict)
    edge_moments: dict[Edge, Schedule] = Field(default_factory=dict)


class DirichletSpec(_Strict):
    """Prescribed coordinates on an edge, a corner, the boundary or every control point.

    ``mode="stretch"`` prescribes u = (s(t) - 1) X for the selected coordinate.
    """

    edge: Optional[Edge] = None
    corner: Optional[tuple[Literal["xi_min", "xi_max"], Literal["eta_min", "eta_max"]]] = None
    all_boundary: bool = False
    all_nodes: bool = False
    components: list[Literal[0, 1, 2]]
    mode: Literal["displacement", "stretch"] = "displacement"
    value: Schedule = Field(default_factory=ConstantSchedule)

    @model_validator(mode="after")
    def _one_selector(self):
        chosen = [self.edge is not None, self.corner is not None, self.all_boundary, self.all_nodes]
        if sum(chosen) != 1:
            raise ValueError("exactly one of edge, corner, all_boundary, all_nodes must be given")
        return self


# --- Point programs ---

class ProgramSpec(_Strict):
    kind: Literal["PureShear", "PureDilatation", "CreepTraction", "Cyclic", "BalloonStretch", "SphereStretchBend"]
    displacement: Optional[Schedule] = None
    traction: Optional[Schedule] = None
    amplitude: float = 0.25
    omega: PositiveFloat = 1.0
    cycles: PositiveInt = 1
    lambda_end: float = Field(2.0, gt=1.0)
    R: PositiveFloat = 1.0
    theta: float = Field(np.pi / 3, gt=0.0, lt=np.pi)

    @model_validator(mode="after")
    def _needs(self):
        if self.kind in ("PureShear", "PureDilatation") and self.displacement is None:
            raise ValueError(f"{self.kind} needs a displacement schedule")
        if self.kind == "CreepTraction" and self.traction is None:
            raise ValueError("CreepTraction needs a traction schedule")
        return self


# --- Time, outputs, studies ---

class TimeSpec(_Strict):
    dt: PositiveFloat
    t_end: PositiveFloat

    @model_validator(mode="after")
    def _span(self):
        if self.t_end < self.dt:
            raise ValueError("t_end must not be smaller than dt")
        return self


class OutputSpec(_Strict):
    sample: tuple[float, float] = (1.0, 1.0)     # parametric point for FE samples
    every: PositiveInt = 1
    pressure_radius: Optional[PositiveFloat] = None   # p = 2T/(R sqrt(J)) on flat balloon patches
    write_mesh: bool = True


class StudySpec(_Strict):
    oracle: Literal["balloon", "pure_bend", "sphere"]
    params: dict[str, float] = Field(default_factory=dict)
    dts: list[PositiveFloat] = Field(default_factory=list)
    meshes: list[tuple[PositiveInt, PositiveInt]] = Field(default_factory=list)
    mesh_dt: Optional[PositiveFloat] = None


class SweepSpec(_Strict):
    """Frequency sweep of cyclic loading and/or a scan over one material parameter.

    ``parameter`` is a dotted path into the material spec, e.g. ``branches.0.eta_s``.
    """

    omegas: list[PositiveFloat] = Field(default_factory=list)
    cycles: PositiveInt = 10
    steps_per_cycle: PositiveInt = 1000
    amplitude: float = 0.25
    parameter: Optional[str] = None
    values: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _something(self):
        if not self.omegas and not self.values:
            raise ValueError("a sweep needs omegas, values or both")
        if self.values and self.parameter is None:
            raise ValueError("values given without a parameter path")
        return self


class SolverSpec(_Strict):
    rtol: PositiveFloat = 1e-9
    dx_tol: PositiveFloat = 1e-10
    max_iterations: PositiveInt = 30
    threads: PositiveInt = 1


class ScenarioConfig(_Strict):
    name: str
    driver: Literal["fe", "point"] = "fe"
    geometry: Optional[Geometry] = None
    program: Optional[ProgramSpec] = None
    material: MaterialSpec
    loads: LoadsSpec = Field(default_factory=LoadsSpec)
    boundary: list[DirichletSpec] = Field(default_factory=list)
    time: TimeSpec
    outputs: OutputSpec = Field(default_factory=OutputSpec)
    study: Optional[StudySpec] = None
    sweep: Optional[SweepSpec] = None
    solver: SolverSpec = Field(default_factory=SolverSpec)

    @model_validator(mode="after")
    def _driver_inputs(self):
        if self.driver == "fe" and self.geometry is None:
            raise ValueError("an fe scenario needs a geometry")
        if self.driver == "point" and self.program is None:
            raise ValueError("a point scenario needs a program")
        return self


def _format_validation(exc):
    parts = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{path}: {err['msg']}")
    return "; ".join(parts)


def parse_config(text):
    try:
        return ScenarioConfig.model_validate_json(text)
    except ValidationError as exc:
        raise ConfigError(f"invalid scenario config: {_format_validation(exc)}") from exc


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    config = parse_config(text)
    logger.info("loaded scenario %s from %s", config.name, path)
    return config


def apply_overrides(config, dt=None, t_end=None, threads=None):
    """Copy of the config with command-line overrides, validated again."""
    data = json.loads(config.model_dump_json())
    if dt is not None:
        data["time"]["dt"] = dt
    if t_end is not None:
        data["time"]["t_end"] = t_end
    if threads is not None:
        data["solver"]["threads"] = threads
    return parse_config(json.dumps(data))


def with_parameter(config, path, value):
    """Copy of the config with material parameters replaced.

    ``path`` is a dotted path such as ``branches.0.eta_s``; several comma-separated paths
    receive the same value.
    """
    data = json.loads(config.model_dump_json())
    for single in path.split(","):
        node = data["material"]
        keys = single.strip().split(".")
        try:
            for key in keys[:-1]:
                node = node[int(key)] if isinstance(node, list) else node[key]
            if keys[-1] not in node:
                raise KeyError(keys[-1])
            node[keys[-1]] = value
        except (KeyError, IndexError, ValueError, TypeError) as exc:
            raise ConfigError(f"unknown material parameter path {single!r}") from exc
    return parse_config(json.dumps(data))
