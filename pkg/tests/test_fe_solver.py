import logging
from pathlib import Path

import numpy as np
import pytest

from mechanics.elastic_materials import ElasticBranch, NeoHookeanMembrane, NeoHookeanSplitMembrane
from mechanics.errors import StepFailure
from mechanics.fe_solver import (
    Dirichlet,
    DofMap,
    ShellProblem,
    SolverSettings,
    TimeStepper,
    assemble,
    run,
    solve_step,
)
from mechanics.maxwell import MaxwellBranch, ViscoelasticMaterial
from mechanics.shell_element import LoadValues
from scenarios.config import apply_overrides, load_config
from scenarios.meshes import flat_patch
from scenarios.runner import build_problem

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RESIDUAL_FLOOR = 1e-11
QUADRATIC_C = 10.0


def _stretch(stretch_of_t, X):
    return lambda t: (stretch_of_t(t) - 1.0) * X


def _make_stretch_problem(material, stretch_of_t, t_end=1.0, dt=0.25, elements=(2, 2)):
    """Flat unit patch with a homogeneous in-plane stretch imposed on its boundary."""
    mesh = flat_patch(1.0, 1.0, elements=elements)
    edges = np.unique(np.concatenate([mesh.boundary_nodes(e) for e in mesh.EDGES]))
    conditions = [Dirichlet(np.arange(mesh.n_cp), 2)]
    for node in edges:
        for k in (0, 1):
            conditions.append(Dirichlet(np.array([node]), k, _stretch(stretch_of_t, mesh.control_points[node, k])))
    return ShellProblem(
        mesh=mesh,
        material=material,
        dofs=DofMap(mesh.n_cp, conditions),
        stepper=TimeStepper(t_end, dt),
    )


class TestTimeStepper:
    def test_divides_the_interval(self):
        stepper = TimeStepper(1.0, 0.25)
        assert stepper.n_steps == 4
        assert [t for _, t, _ in stepper.steps()] == pytest.approx([0.25, 0.5, 0.75, 1.0])

    def test_rounds_an_uneven_step(self, caplog):
        with caplog.at_level(logging.WARNING):
            stepper = TimeStepper(1.0, 0.3)
        assert stepper.n_steps == 3
        assert stepper.dt == pytest.approx(1.0 / 3.0)
        assert "does not divide" in caplog.text

    def test_from_step_count(self):
        assert TimeStepper(2.0, n_steps=8).dt == 0.25

    @pytest.mark.parametrize("t_end, dt", [(0.0, 0.1), (1.0, -0.1), (1.0, None)])
    def test_rejects_bad_input(self, t_end, dt):
        with pytest.raises(ValueError):
            TimeStepper(t_end, dt)


class TestDofMap:
    def test_partition(self):
        dofs = DofMap(4, [Dirichlet(np.array([0, 2]), 1, lambda t: 0.5 * t), Dirichlet(np.array([3]), 2)])
        assert dofs.prescribed.tolist() == [1, 7, 11]
        assert len(dofs.free) == 9
        np.testing.assert_allclose(dofs.prescribed_values(2.0), [1.0, 1.0, 0.0])

    def test_apply(self):
        X = np.arange(12.0).reshape(4, 3)
        dofs = DofMap(4, [Dirichlet(np.array([1]), 0, lambda t: t)])
        x = dofs.apply(X.copy(), X, 0.5)
        assert x[1, 0] == 3.5
        np.testing.assert_array_equal(np.delete(x.ravel(), 3), np.delete(X.ravel(), 3))

    def test_last_condition_wins(self):
        dofs = DofMap(1, [Dirichlet(np.array([0]), 0, lambda t: 1.0), Dirichlet(np.array([0]), 0, lambda t: 2.0)])
        np.testing.assert_allclose(dofs.prescribed_values(0.0), [2.0])

    def test_rejects_bad_component(self):
        with pytest.raises(ValueError):
            DofMap(2, [Dirichlet(np.array([0]), 3)])


class TestNewton:
    def test_homogeneous_stretch(self):
        material = ViscoelasticMaterial(elastic=ElasticBranch([NeoHookeanSplitMembrane(K=2.0, mu=1.0)]))
        problem = _make_stretch_problem(material, lambda t: 1.0 + 0.5 * t)
        records = run(problem)
        expected = problem.X.copy()
        expected[:, :2] *= 1.5
        np.testing.assert_allclose(problem.x, expected, atol=1e-8)
        assert all(r.iterations <= 10 for r in records)
        assert problem.t == 1.0

    def test_every_step_is_logged(self, caplog):
        material = ViscoelasticMaterial(elastic=ElasticBranch([NeoHookeanSplitMembrane(K=2.0, mu=1.0)]))
        problem = _make_stretch_problem(material, lambda t: 1.0 + 0.2 * t, t_end=0.5, dt=0.25)
        with caplog.at_level(logging.INFO, logger="mechanics.fe_solver"):
            run(problem)
        steps = [r for r in caplog.records if "converged in" in r.getMessage()]
        assert [r.levelno for r in steps] == [logging.INFO, logging.INFO]
        assert "step 2 t=0.5" in steps[-1].getMessage()

    def test_equilibrium_residual(self):
        material = ViscoelasticMaterial(elastic=ElasticBranch([NeoHookeanSplitMembrane(K=2.0, mu=1.0)]))
        problem = _make_stretch_problem(material, lambda t: 1.0 + 0.2 * t, t_end=0.5, dt=0.5)
        solve_step(problem, 1, 0.5, 0.5)
        assembly = assemble(problem, problem.x, LoadValues(), 0.5, need_stiffness=False)
        assert np.linalg.norm(assembly.residual[problem.dofs.free]) <= 1e-8

    def test_dissipation_accumulates(self):
        material = ViscoelasticMaterial(
            elastic=ElasticBranch([NeoHookeanSplitMembrane(K=2.0, mu=1.0)]),
            branches=[MaxwellBranch(membrane=NeoHookeanMembrane(K=0.0, mu=1.0), eta_s=0.5)],
        )
        problem = _make_stretch_problem(material, lambda t: 1.0 + 0.3 * min(t, 0.5), t_end=1.0, dt=0.1)
        records = run(problem)
        values = [r.dissipation for r in records]
        assert all(b >= a - 1e-14 for a, b in zip(values, values[1:]))
        assert values[-1] > 0.0

    def test_threads_give_the_same_answer(self):
        material = ViscoelasticMaterial(elastic=ElasticBranch([NeoHookeanSplitMembrane(K=2.0, mu=1.0)]))
        serial = _make_stretch_problem(material, lambda t: 1.0 + 0.4 * t, dt=0.5)
        threaded = _make_stretch_problem(material, lambda t: 1.0 + 0.4 * t, dt=0.5)
        threaded.settings = SolverSettings(threads=3)
        run(serial)
        run(threaded)
        np.testing.assert_allclose(threaded.x, serial.x, atol=1e-12)

    def test_failed_step_names_the_step(self):
        material = ViscoelasticMaterial(elastic=ElasticBranch([NeoHookeanSplitMembrane(K=2.0, mu=1.0)]))
        # one Newton iteration cannot absorb a 50% stretch of the interior
        problem = _make_stretch_problem(material, lambda t: 1.0 + 0.5 * t, dt=1.0)
        problem.settings = SolverSettings(max_iterations=1)
        with pytest.raises(StepFailure) as info:
            run(problem)
        assert info.value.step == 1


class TestTangentConsistency:
    def _records(self, consistent):
        config = load_config(CONFIGS / "pure_bending.json")
        config = apply_overrides(config, dt=0.1, t_end=0.3)
        material = config.material.model_copy(update={"consistent_tangent": consistent})
        geometry = config.geometry.model_copy(update={"elements": (1, 4)})
        problem = build_problem(config.model_copy(update={"material": material, "geometry": geometry}))
        return run(problem)

    @staticmethod
    def _pairs(record):
        r = record.residual_norms
        return [(before, after) for before, after in zip(r, r[1:]) if after > RESIDUAL_FLOOR]

    def test_consistent_tangent_converges_quadratically(self):
        for record in self._records(True):
            pairs = self._pairs(record)[-3:]
            assert pairs
            for before, after in pairs:
                assert after <= QUADRATIC_C * before**2

    def test_defect_tangent_converges_linearly(self):
        consistent = self._records(True)
        inconsistent = self._records(False)
        factors = [after / before for before, after in self._pairs(inconsistent[0])]
        assert len(factors) >= 3
        assert all(1e-2 < f < 0.5 for f in factors)
        assert max(factors) / min(factors) < 10.0
        assert sum(r.iterations for r in consistent) < sum(r.iterations for r in inconsistent)
