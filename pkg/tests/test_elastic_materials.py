import numpy as np
import pytest

from mechanics.elastic_materials import (
    ConstantSurfaceTension,
    ElasticBranch,
    HelfrichBending,
    IncompressibleNeoHookeanMembrane,
    KoiterBending,
    KoiterMembrane,
    MaterialPoint,
    NeoHookeanMembrane,
    NeoHookeanSplitMembrane,
    bending_moment,
    elastic_tangents,
    make_model,
    membrane_stress,
)
from mechanics.errors import InvertedElementError

A_CO = np.array([[1.3, 0.2], [0.2, 0.8]])
a_CO = np.array([[1.9, 0.45], [0.45, 1.25]])
B_CO = np.array([[0.05, 0.01], [0.01, -0.02]])
b_CO = np.array([[0.3, 0.07], [0.07, 0.12]])

MEMBRANES = [
    KoiterMembrane(K=3.0, mu=1.5),
    NeoHookeanMembrane(K=3.0, mu=1.5),
    NeoHookeanSplitMembrane(K=3.0, mu=1.5),
    IncompressibleNeoHookeanMembrane(mu=1.5),
    ConstantSurfaceTension(gamma=0.7),
]


def _sym_fd(fun, x, h=1e-6):
    """Derivative of fun with respect to a symmetric 2x2 argument, shape fun(x).shape + (2, 2)."""
    shape = np.shape(fun(x))
    out = np.zeros(shape + (2, 2))
    for c in range(2):
        for d in range(2):
            dx = np.zeros((2, 2))
            dx[c, d] += h
            if c != d:
                dx[d, c] += h
            deriv = (np.asarray(fun(x + dx)) - np.asarray(fun(x - dx))) / (2 * h)
            out[..., c, d] = deriv / (2.0 if c != d else 1.0)
    return out


def _close(actual, expected, rtol=1e-5):
    scale = max(1.0, float(np.max(np.abs(expected))))
    np.testing.assert_allclose(actual, expected, atol=rtol * scale)


class TestMembraneLaws:
    @pytest.mark.parametrize("law", MEMBRANES, ids=lambda m: m.kind)
    def test_stress_is_energy_gradient(self, law):
        G = np.linalg.inv(A_CO)
        tau = law.kirchhoff(G, a_CO, np.linalg.inv(a_CO))
        _close(tau, 2.0 * _sym_fd(lambda a: law.energy(G, a), a_CO))

    @pytest.mark.parametrize("law", MEMBRANES, ids=lambda m: m.kind)
    def test_metric_tangent(self, law):
        G = np.linalg.inv(A_CO)
        fd = _sym_fd(lambda a: law.kirchhoff(G, a, np.linalg.inv(a)), a_CO)
        _close(law.d_metric(G, a_CO, np.linalg.inv(a_CO)), fd)

    @pytest.mark.parametrize("law", MEMBRANES, ids=lambda m: m.kind)
    def test_reference_tangent(self, law):
        a_con = np.linalg.inv(a_CO)
        fd = _sym_fd(lambda g: law.kirchhoff(g, a_CO, a_con), np.linalg.inv(A_CO))
        _close(law.d_reference(np.linalg.inv(A_CO), a_CO, a_con), fd)

    @pytest.mark.parametrize("law", MEMBRANES, ids=lambda m: m.kind)
    def test_stress_free_reference(self, law):
        if law.kind == "ConstantSurfaceTension":
            pytest.skip("tension is never stress free")
        mp = MaterialPoint(A_co=A_CO, a_co=A_CO.copy())
        np.testing.assert_allclose(membrane_stress(law, mp), 0.0, atol=1e-12)

    def test_evaluate_packs_twice_the_metric_derivative(self):
        law = NeoHookeanMembrane(K=2.0, mu=1.0)
        mp = MaterialPoint(A_co=A_CO, a_co=a_CO)
        response = law.evaluate(mp)
        np.testing.assert_allclose(response.blocks.c, 2.0 * law.d_metric(mp.A_con, mp.a_co, mp.a_con))
        np.testing.assert_allclose(elastic_tangents(law, mp).c, response.blocks.c)
        assert response.m0 == pytest.approx(np.zeros((2, 2)))


class TestBendingLaws:
    @pytest.mark.parametrize("law", [KoiterBending(c=2.0), HelfrichBending(k=1.5, H0=0.2)],
                             ids=lambda m: m.kind)
    def test_blocks_match_finite_differences(self, law):
        def response(a, b):
            return law.evaluate(MaterialPoint(A_co=A_CO, a_co=a, B_co=B_CO, b_co=b))

        blocks = response(a_CO, b_CO).blocks
        _close(blocks.c, 2.0 * _sym_fd(lambda a: response(a, b_CO).tau, a_CO))
        _close(blocks.d, _sym_fd(lambda b: response(a_CO, b).tau, b_CO))
        _close(blocks.e, 2.0 * _sym_fd(lambda a: response(a, b_CO).m0, a_CO))
        _close(blocks.f, _sym_fd(lambda b: response(a_CO, b).m0, b_CO))

    @pytest.mark.parametrize("law", [KoiterBending(c=2.0), HelfrichBending(k=1.5, H0=0.2)],
                             ids=lambda m: m.kind)
    def test_moment_is_energy_gradient(self, law):
        def energy(b):
            return law.energy(MaterialPoint(A_co=A_CO, a_co=a_CO, B_co=B_CO, b_co=b))

        m0 = law.evaluate(MaterialPoint(A_co=A_CO, a_co=a_CO, B_co=B_CO, b_co=b_CO)).m0
        _close(m0, _sym_fd(energy, b_CO))

    def test_helfrich_stress_is_energy_gradient(self):
        law = HelfrichBending(k=1.5, H0=0.2)

        def energy(a):
            return law.energy(MaterialPoint(A_co=A_CO, a_co=a, B_co=B_CO, b_co=b_CO))

        tau = law.evaluate(MaterialPoint(A_co=A_CO, a_co=a_CO, B_co=B_CO, b_co=b_CO)).tau
        _close(tau, 2.0 * _sym_fd(energy, a_CO))

    def test_helfrich_sphere_moment(self):
        # sphere of radius 2 with H0 = 0: M = k H a^{ab}
        R = 2.0
        A = np.eye(2)
        mp = MaterialPoint(A_co=A, a_co=A, B_co=A / R, b_co=A / R)
        law = HelfrichBending(k=3.0)
        np.testing.assert_allclose(bending_moment(law, mp), 3.0 / R * A)

    def test_helfrich_rejects_gaussian_modulus(self):
        with pytest.raises(ValueError):
            HelfrichBending(k=1.0, k_star=0.5)


class TestElasticBranch:
    def test_sums_models(self):
        mp = MaterialPoint(A_co=A_CO, a_co=a_CO, B_co=B_CO, b_co=b_CO)
        membrane, bending = KoiterMembrane(K=1.0, mu=2.0), KoiterBending(c=0.5)
        branch = ElasticBranch([membrane, bending])
        total = branch.evaluate(mp)
        np.testing.assert_allclose(total.tau, membrane.evaluate(mp).tau)
        np.testing.assert_allclose(total.m0, bending.evaluate(mp).m0)
        assert branch.energy(mp) == pytest.approx(
            membrane.energy(mp.A_con, mp.a_co) + bending.energy(mp)
        )
        assert branch.has_bending

    def test_make_model(self):
        model = make_model("NeoHookeanSplitMembrane", K=2.0, mu=1.0)
        assert isinstance(model, NeoHookeanSplitMembrane)
        assert model.mu == 1.0

    def test_make_model_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown material kind"):
            make_model("Ogden", mu=1.0)

    def test_inverted_point(self):
        with pytest.raises(InvertedElementError):
            MaterialPoint(A_co=np.eye(2), a_co=np.array([[1.0, 2.0], [2.0, 1.0]]))
