import numpy as np
import pytest

from mechanics.elastic_materials import (
    ConstantSurfaceTension,
    ElasticBranch,
    HelfrichBending,
    IncompressibleNeoHookeanMembrane,
    KoiterBending,
    KoiterMembrane,
    NeoHookeanMembrane,
    NeoHookeanSplitMembrane,
)
from mechanics.errors import InvertedElementError
from mechanics.maxwell import MaxwellBranch, ViscoelasticMaterial
from mechanics.shell_element import (
    LoadSpec,
    LoadValues,
    build_workspace,
    evaluate_element,
    f_ext,
    f_int,
    l2_project,
    stiffness,
)
from scenarios.meshes import flat_patch

DT = 0.1

# (elastic membrane, branch membrane)
MEMBRANE_PAIRS = [
    (KoiterMembrane(K=3.0, mu=1.5), KoiterMembrane(K=1.0, mu=0.8)),
    (NeoHookeanMembrane(K=3.0, mu=1.5), NeoHookeanMembrane(K=1.0, mu=0.8)),
    (NeoHookeanMembrane(K=3.0, mu=1.5), NeoHookeanMembrane(K=0.0, mu=0.8)),
    (NeoHookeanSplitMembrane(K=5.0, mu=2.0), NeoHookeanSplitMembrane(K=1.0, mu=1.0)),
    (IncompressibleNeoHookeanMembrane(mu=1.5), IncompressibleNeoHookeanMembrane(mu=0.8)),
    (ConstantSurfaceTension(gamma=0.7), ConstantSurfaceTension(gamma=0.4)),
]


def _make_material(consistent=True):
    return ViscoelasticMaterial(
        elastic=ElasticBranch([NeoHookeanSplitMembrane(K=5.0, mu=2.0), KoiterBending(c=0.4)]),
        branches=[
            MaxwellBranch(
                membrane=NeoHookeanSplitMembrane(K=1.0, mu=1.0),
                bending=KoiterBending(c=0.3),
                eta_s=0.5,
                eta_b=0.5,
            )
        ],
        consistent_tangent=consistent,
    )


def _make_element(material, seed=7):
    rng = np.random.default_rng(seed)
    mesh = flat_patch(1.0, 1.2, degrees=(2, 2), elements=(1, 1))
    mesh.control_points[:, 2] += 0.05 * rng.standard_normal(mesh.n_cp)
    element = mesh.elements[0]
    ws = build_workspace(mesh, element, material)
    x_ref = mesh.control_points[element.connectivity]
    x_cur = x_ref + 0.04 * rng.standard_normal(x_ref.shape)
    return mesh, ws, x_cur


def _fd_jacobian(fun, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    cols = []
    for i in range(flat.size):
        step = np.zeros_like(flat)
        step[i] = h
        cols.append((fun((flat + step).reshape(x.shape)) - fun((flat - step).reshape(x.shape))) / (2 * h))
    return np.column_stack(cols)


def _relative_error(actual, expected):
    return np.linalg.norm(actual - expected) / np.linalg.norm(expected)


class TestInternalForce:
    def test_consistent_tangent(self):
        material = _make_material()
        _, ws, x = _make_element(material)
        k = evaluate_element(ws, x, material, DT).k_int
        fd = _fd_jacobian(lambda y: f_int(ws, y, material, DT), x)
        assert _relative_error(k, fd) <= 1e-5

    @pytest.mark.parametrize("with_bending", [False, True], ids=["membrane", "membrane_bending"])
    @pytest.mark.parametrize("elastic, branch", MEMBRANE_PAIRS, ids=lambda m: m.kind)
    def test_consistent_tangent_per_law(self, elastic, branch, with_bending):
        material = ViscoelasticMaterial(
            elastic=ElasticBranch([elastic, HelfrichBending(k=0.4, H0=0.1)]),
            branches=[
                MaxwellBranch(
                    membrane=branch,
                    bending=KoiterBending(c=0.3) if with_bending else None,
                    eta_s=0.5,
                    eta_b=0.5,
                )
            ],
        )
        _, ws, x = _make_element(material)
        k = evaluate_element(ws, x, material, DT).k_int
        fd = _fd_jacobian(lambda y: f_int(ws, y, material, DT), x)
        assert _relative_error(k, fd) <= 1e-5

    def test_inconsistent_tangent_is_off(self):
        material = _make_material(consistent=False)
        _, ws, x = _make_element(material)
        k = evaluate_element(ws, x, material, DT).k_int
        fd = _fd_jacobian(lambda y: f_int(ws, y, material, DT), x)
        assert _relative_error(k, fd) > 1e-4

    def test_tangent_is_symmetric_for_elastic_material(self):
        material = ViscoelasticMaterial(
            elastic=ElasticBranch([NeoHookeanSplitMembrane(K=5.0, mu=2.0), KoiterBending(c=0.4)])
        )
        _, ws, x = _make_element(material)
        k = evaluate_element(ws, x, material, DT).k_int
        np.testing.assert_allclose(k, k.T, atol=1e-8 * np.abs(k).max())

    def test_rigid_motion_is_force_free(self):
        material = _make_material()
        mesh, ws, _ = _make_element(material)
        x_ref = mesh.control_points[ws.connectivity]
        c, s = np.cos(0.4), np.sin(0.4)
        rotation = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        x = x_ref @ rotation.T + np.array([0.3, -1.0, 2.0])
        np.testing.assert_allclose(f_int(ws, x, material, DT), 0.0, atol=1e-10)

    def test_trial_histories_are_not_committed(self):
        material = _make_material()
        _, ws, x = _make_element(material)
        before = [h[0].ahat_con.copy() for h in ws.committed]
        result = evaluate_element(ws, x, material, DT)
        assert len(result.trial) == len(ws.points)
        for h, ahat in zip(ws.committed, before):
            np.testing.assert_array_equal(h[0].ahat_con, ahat)
        ws.trial = result.trial
        ws.commit()
        assert ws.trial is None
        assert ws.dissipation() >= 0.0

    def test_collapsed_element(self):
        material = _make_material()
        _, ws, x = _make_element(material)
        with pytest.raises(InvertedElementError) as info:
            f_int(ws, np.zeros_like(x), material, DT)
        assert info.value.element_id == ws.element.index


class TestExternalForce:
    @pytest.mark.parametrize(
        "loads",
        [
            LoadValues(pressure=1.7),
            LoadValues(tangential=np.array([0.4, -0.9])),
            LoadValues(edge_moments={"xi_max": 0.8}),
            LoadValues(edge_moments={"eta_min": -0.5, "eta_max": 0.3}),
        ],
        ids=["pressure", "tangential", "moment_xi", "moment_eta"],
    )
    def test_load_stiffness(self, loads):
        material = ViscoelasticMaterial()
        _, ws, x = _make_element(material)
        _, k = f_ext(ws, x, loads)
        fd = _fd_jacobian(lambda y: f_ext(ws, y, loads, need_stiffness=False)[0], x)
        assert _relative_error(k, fd) <= 1e-5

    def test_total_dead_load(self):
        mesh = flat_patch(2.0, 3.0, elements=(1, 1))
        ws = build_workspace(mesh, mesh.elements[0], ViscoelasticMaterial())
        f, k = f_ext(ws, mesh.control_points, LoadValues(dead=np.array([0.0, 0.0, -1.0])))
        assert f.reshape(-1, 3).sum(axis=0) == pytest.approx([0.0, 0.0, -6.0])
        np.testing.assert_array_equal(k, 0.0)

    def test_total_edge_traction(self):
        mesh = flat_patch(2.0, 3.0, elements=(1, 1))
        ws = build_workspace(mesh, mesh.elements[0], ViscoelasticMaterial())
        f, _ = f_ext(ws, mesh.control_points, LoadValues(edge_tractions={"xi_max": np.array([1.0, 0.0, 0.0])}))
        assert f.reshape(-1, 3).sum(axis=0) == pytest.approx([3.0, 0.0, 0.0])

    def test_pressure_on_flat_plate(self):
        mesh = flat_patch(2.0, 3.0, elements=(1, 1))
        ws = build_workspace(mesh, mesh.elements[0], ViscoelasticMaterial())
        f, _ = f_ext(ws, mesh.control_points, LoadValues(pressure=2.0))
        assert f.reshape(-1, 3).sum(axis=0) == pytest.approx([0.0, 0.0, 12.0])

    def test_load_spec_evaluation(self):
        spec = LoadSpec(pressure=lambda t: 2.0 * t, edge_moments={"xi_min": lambda t: t**2})
        values = spec.at(3.0)
        assert values.pressure == 6.0
        assert values.edge_moments == {"xi_min": 9.0}
        np.testing.assert_array_equal(values.dead, 0.0)


class TestAssemblyHelpers:
    def test_stiffness_combines_internal_and_load_parts(self):
        material = _make_material()
        _, ws, x = _make_element(material)
        loads = LoadValues(pressure=0.5)
        expected = evaluate_element(ws, x, material, DT).k_int - f_ext(ws, x, loads)[1]
        np.testing.assert_allclose(stiffness(ws, x, material, loads, DT), expected)

    def test_projection_of_a_constant(self):
        mesh = flat_patch(1.0, 2.0, elements=(2, 3))
        material = ViscoelasticMaterial()
        workspaces = [build_workspace(mesh, e, material) for e in mesh.elements]
        values = [[2.5] * len(ws.points) for ws in workspaces]
        np.testing.assert_allclose(l2_project(mesh, workspaces, values), 2.5)

    def test_projection_of_a_linear_field(self):
        mesh = flat_patch(1.0, 1.0, elements=(2, 2))
        material = ViscoelasticMaterial()
        workspaces = [build_workspace(mesh, e, material) for e in mesh.elements]
        values = [[qp.ref.x[0] for qp in ws.points] for ws in workspaces]
        coeffs = l2_project(mesh, workspaces, values)
        np.testing.assert_allclose(coeffs, mesh.control_points[:, 0], atol=1e-10)
