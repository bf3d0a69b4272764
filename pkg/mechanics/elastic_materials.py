"""Hyperelastic membrane and bending laws and the elastic branch built from them.

A membrane law is written once as a function of a contravariant reference metric ``G`` and
the current metric ``a``: the elastic branch uses ``G = A^{ab}``, a Maxwell branch uses the
intermediate metric ``G = â^{ab}``. Each law returns the Kirchhoff-type stress
``tau(G, a)`` together with ``D_a = d tau / d a_{cd}`` and ``D_G = d tau / d G^{cd}``.

Tangent blocks follow the convention

    Δτ^{ab} = ½ c^{abcd} Δa_cd + d^{abcd} Δb_cd
    ΔM0^{ab} = ½ e^{abcd} Δa_cd + f^{abcd} Δb_cd
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from mechanics.errors import InvertedElementError
from mechanics.tensors import (
    EYE2,
    IDENTITY4,
    det2,
    inv2,
    outer,
    sym_product,
    sym_square,
)

logger = logging.getLogger(__name__)

ZERO2 = np.zeros((2, 2))


def _zero4():
    return np.zeros((2, 2, 2, 2))


@dataclass
class TangentBlocks:
    c: np.ndarray = field(default_factory=_zero4)
    d: np.ndarray = field(default_factory=_zero4)
    e: np.ndarray = field(default_factory=_zero4)
    f: np.ndarray = field(default_factory=_zero4)

    def __add__(self, other):
        return TangentBlocks(self.c + other.c, self.d + other.d, self.e + other.e, self.f + other.f)


@dataclass
class Response:
    """Kirchhoff stress tau = J sigma and moment M0 = J M with their tangents."""

    tau: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    m0: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    blocks: TangentBlocks = field(default_factory=TangentBlocks)

    def __add__(self, other):
        return Response(self.tau + other.tau, self.m0 + other.m0, self.blocks + other.blocks)


@dataclass
class MaterialPoint:
    """Reference and current metric/curvature components at one point."""

    A_co: np.ndarray
    a_co: np.ndarray
    B_co: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    b_co: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))

    def __post_init__(self):
        if det2(self.a_co) <= 0.0 or det2(self.A_co) <= 0.0:
            raise InvertedElementError("metric is not positive definite (J <= 0)")
        self.A_con = inv2(self.A_co)
        self.a_con = inv2(self.a_co)
        self.J = float(np.sqrt(det2(self.a_co) / det2(self.A_co)))

    @classmethod
    def from_states(cls, ref, cur):
        return cls(A_co=ref.a_co, a_co=cur.a_co, B_co=ref.b_co, b_co=cur.b_co)

    @property
    def H(self):
        return 0.5 * float(np.sum(self.a_con * self.b_co))

    @property
    def b_con(self):
        return self.a_con @ self.b_co @ self.a_con


def relative_stretch(G, a_co):
    """sqrt(det a_co * det G): J for G = A^{ab}, J_el for G = â^{ab}."""
    return float(np.sqrt(det2(a_co) * det2(G)))


# --- Membrane laws ---

class MembraneLaw:
    kind = "membrane"
    is_bending = False

    def kirchhoff(self, G, a_co, a_con):
        raise NotImplementedError

    def d_metric(self, G, a_co, a_con):
        raise NotImplementedError

    def d_reference(self, G, a_co, a_con):
        raise NotImplementedError

    def energy(self, G, a_co):
        raise NotImplementedError

    # The viscous drive of a Maxwell branch is the spring's Kirchhoff stress unless a law
    # prescribes its own evolution.
    def drive(self, G, a_co, a_con):
        return self.kirchhoff(G, a_co, a_con)

    def d_drive_metric(self, G, a_co, a_con):
        return self.d_metric(G, a_co, a_con)

    def d_drive_reference(self, G, a_co, a_con):
        return self.d_reference(G, a_co, a_con)

    def closed_form(self, G_n, a_con, eta, dt):
        """Exact implicit-Euler update when the evolution law is linear, else None."""
        return None

    def evaluate(self, mp):
        tau = self.kirchhoff(mp.A_con, mp.a_co, mp.a_con)
        c = 2.0 * self.d_metric(mp.A_con, mp.a_co, mp.a_con)
        return Response(tau=tau, blocks=TangentBlocks(c=c))


@dataclass
class KoiterMembrane(MembraneLaw):
    K: float = 0.0
    mu: float = 0.0
    kind = "KoiterMembrane"

    def kirchhoff(self, G, a_co, a_con):
        I1 = float(np.sum(G * a_co))
        return 0.5 * self.K * (I1 - 2.0) * G + self.mu * (G @ a_co @ G - G)

    def d_metric(self, G, a_co, a_con):
        return 0.5 * self.K * outer(G, G) + self.mu * sym_square(G)

    def d_reference(self, G, a_co, a_con):
        I1 = float(np.sum(G * a_co))
        M = G @ a_co
        return (
            0.5 * self.K * (outer(G, a_co) + (I1 - 2.0) * IDENTITY4)
            + self.mu * (sym_product(EYE2, M) + sym_product(M, EYE2) - IDENTITY4)
        )

    def energy(self, G, a_co):
        eps = 0.5 * (a_co - inv2(G))
        trace = float(np.sum(G * eps))
        return 0.5 * self.K * trace**2 + self.mu * float(np.trace(G @ eps @ G @ eps))


@dataclass
class NeoHookeanMembrane(MembraneLaw):
    K: float = 0.0
    mu: float = 0.0
    kind = "NeoHookeanMembrane"

    def kirchhoff(self, G, a_co, a_con):
        J = relative_stretch(G, a_co)
        return 0.5 * self.K * (J**2 - 1.0) * a_con + self.mu * (G - a_con)

    def d_metric(self, G, a_co, a_con):
        J = relative_stretch(G, a_co)
        S = sym_square(a_con)
        return 0.5 * self.K * (J**2 * outer(a_con, a_con) - (J**2 - 1.0) * S) + self.mu * S

    def d_reference(self, G, a_co, a_con):
        J = relative_stretch(G, a_co)
        return 0.5 * self.K * J**2 * outer(a_con, inv2(G)) + self.mu * IDENTITY4

    def energy(self, G, a_co):
        J = relative_stretch(G, a_co)
        I1 = float(np.sum(G * a_co))
        return (0.25 * self.K * (J**2 - 1.0 - 2.0 * np.log(J))
                + 0.5 * self.mu * (I1 - 2.0 - 2.0 * np.log(J)))

    def closed_form(self, G_n, a_con, eta, dt):
        if self.K != 0.0:
            return None
        return (eta * G_n + self.mu * dt * a_con) / (eta + self.mu * dt)


@dataclass
class NeoHookeanSplitMembrane(MembraneLaw):
    """Neo-Hookean membrane with a dilatational/deviatoric split."""

    K: float = 0.0
    mu: float = 0.0
    kind = "NeoHookeanSplitMembrane"

    def kirchhoff(self, G, a_co, a_con):
        J = relative_stretch(G, a_co)
        I1 = float(np.sum(G * a_co))
        return 0.5 * self.K * (J**2 - 1.0) * a_con + self.mu / (2.0 * J) * (2.0 * G - I1 * a_con)

    def d_metric(self, G, a_co, a_con):
        J = relative_stretch(G, a_co)
        I1 = float(np.sum(G * a_co))
        h = self.mu / (2.0 * J)
        V = 2.0 * G - I1 * a_con
        S = sym_square(a_con)
        return (
            0.5 * self.K * (J**2 * outer(a_con, a_con) - (J**2 - 1.0) * S)
            + h * (I1 * S - outer(a_con, G))
            - 0.5 * h * outer(V, a_con)
        )

    def d_reference(self, G, a_co, a_con):
        J = relative_stretch(G, a_co)
        I1 = float(np.sum(G * a_co))
        h = self.mu / (2.0 * J)
        V = 2.0 * G - I1 * a_con
        G_co = inv2(G)
        return (
            0.5 * self.K * J**2 * outer(a_con, G_co)
            + h * (2.0 * IDENTITY4 - outer(a_con, a_co))
            - 0.5 * h * outer(V, G_co)
        )

    def energy(self, G, a_co):
        J = relative_stretch(G, a_co)
        I1 = float(np.sum(G * a_co))
        return 0.25 * self.K * (J**2 - 1.0 - 2.0 * np.log(J)) + 0.5 * self.mu * (I1 / J - 2.0)


@dataclass
class IncompressibleNeoHookeanMembrane(MembraneLaw):
    mu: float = 0.0
    kind = "IncompressibleNeoHookeanMembrane"

    def kirchhoff(self, G, a_co, a_con):
        J = relative_stretch(G, a_co)
        return self.mu * (G - a_con / J**2)

    def d_metric(self, G, a_co, a_con):
        J = relative_stretch(G, a_co)
        return self.mu * (sym_square(a_con) + outer(a_con, a_con)) / J**2

    def d_reference(self, G, a_co, a_con):
        J = relative_stretch(G, a_co)
        return self.mu * (IDENTITY4 + outer(a_con, inv2(G)) / J**2)

    def energy(self, G, a_co):
        J = relative_stretch(G, a_co)
        I1 = float(np.sum(G * a_co))
        return 0.5 * self.mu * (I1 + 1.0 / J**2 - 3.0)


@dataclass
class ConstantSurfaceTension(MembraneLaw):
    gamma: float = 0.0
    kind = "ConstantSurfaceTension"

    def kirchhoff(self, G, a_co, a_con):
        return self.gamma * relative_stretch(G, a_co) * a_con

    def d_metric(self, G, a_co, a_con):
        J = relative_stretch(G, a_co)
        return self.gamma * J * (0.5 * outer(a_con, a_con) - sym_square(a_con))

    def d_reference(self, G, a_co, a_con):
        J = relative_stretch(G, a_co)
        return 0.5 * self.gamma * J * outer(a_con, inv2(G))

    def energy(self, G, a_co):
        return self.gamma * relative_stretch(G, a_co)

    # the intermediate metric of a tension branch contracts at the rate gamma/eta
    def drive(self, G, a_co, a_con):
        return self.gamma * G

    def d_drive_metric(self, G, a_co, a_con):
        return _zero4()

    def d_drive_reference(self, G, a_co, a_con):
        return self.gamma * IDENTITY4

    def closed_form(self, G_n, a_con, eta, dt):
        return eta / (eta + self.gamma * dt) * G_n


# --- Bending laws ---

@dataclass
class KoiterBending:
    c: float = 0.0
    kind = "KoiterBending"
    is_bending = True

    def evaluate(self, mp):
        f = self.c * sym_square(mp.A_con)
        kappa = mp.b_co - mp.B_co
        m0 = self.c * mp.A_con @ kappa @ mp.A_con
        return Response(m0=m0, blocks=TangentBlocks(f=f))

    def energy(self, mp):
        kappa = mp.b_co - mp.B_co
        return 0.5 * self.c * float(np.trace(mp.A_con @ kappa @ mp.A_con @ kappa))


@dataclass
class HelfrichBending:
    k: float = 0.0
    H0: float = 0.0
    k_star: float = 0.0
    kind = "HelfrichBending"
    is_bending = True

    def __post_init__(self):
        if self.k_star != 0.0:
            raise ValueError("only k_star = 0 is supported for the Helfrich model")

    def evaluate(self, mp):
        k, J, a = self.k, mp.J, mp.a_con
        b = mp.b_con
        h = mp.H - self.H0
        tau = J * (k * h**2 * a - 2.0 * k * h * b)
        m0 = J * k * h * a
        Sa = sym_square(a)
        ab = sym_product(a, b) + sym_product(b, a)
        c = J * (
            outer(k * h**2 * a - 2.0 * k * h * b, a)
            - 2.0 * k * h * outer(a, b)
            + 2.0 * k * outer(b, b)
            - 2.0 * k * h**2 * Sa
            + 4.0 * k * h * ab
        )
        d = J * (k * h * outer(a, a) - k * outer(b, a) - 2.0 * k * h * Sa)
        e = J * (k * h * outer(a, a) - k * outer(a, b) - 2.0 * k * h * Sa)
        f = 0.5 * J * k * outer(a, a)
        return Response(tau=tau, m0=m0, blocks=TangentBlocks(c=c, d=d, e=e, f=f))

    def energy(self, mp):
        return mp.J * self.k * (mp.H - self.H0) ** 2


MEMBRANE_KINDS = {
    cls.kind: cls
    for cls in (
        KoiterMembrane,
        NeoHookeanMembrane,
        NeoHookeanSplitMembrane,
        IncompressibleNeoHookeanMembrane,
        ConstantSurfaceTension,
    )
}
BENDING_KINDS = {cls.kind: cls for cls in (KoiterBending, HelfrichBending)}
MODEL_KINDS = {**MEMBRANE_KINDS, **BENDING_KINDS}


def make_model(kind, **params):
    try:
        cls = MODEL_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown material kind {kind!r}; expected one of {sorted(MODEL_KINDS)}")
    return cls(**params)


# --- Per-model operations ---

def membrane_stress(model, mp):
    """Cauchy membrane stress sigma^{ab} of one model."""
    return model.evaluate(mp).tau / mp.J


def bending_moment(model, mp):
    return model.evaluate(mp).m0 / mp.J


def elastic_tangents(model, mp):
    return model.evaluate(mp).blocks


@dataclass
class ElasticBranch:
    models: list = field(default_factory=list)

    def evaluate(self, mp):
        out = Response()
        for model in self.models:
            out = out + model.evaluate(mp)
        return out

    def energy(self, mp):
        total = 0.0
        for model in self.models:
            if model.is_bending:
                total += model.energy(mp)
            else:
                total += model.energy(mp.A_con, mp.a_co)
        return total

    @property
    def has_bending(self):
        return any(m.is_bending for m in self.models)
