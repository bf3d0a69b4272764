import json
from pathlib import Path

import numpy as np
import pytest

from mechanics.errors import ConfigError
from mechanics.maxwell import ViscoelasticMaterial
from scenarios.config import (
    DirichletSpec,
    ExpStretchSchedule,
    OracleSchedule,
    PiecewiseSchedule,
    RampSchedule,
    ReciprocalStretchSchedule,
    ScenarioConfig,
    apply_overrides,
    load_config,
    parse_config,
    with_parameter,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _make_config(**changes):
    data = {
        "name": "probe",
        "driver": "point",
        "program": {"kind": "PureShear", "displacement": {"type": "ramp", "value": 0.5, "t_ramp": 1.0}},
        "material": {
            "elastic": [{"kind": "NeoHookeanSplitMembrane", "mu": 1.0, "K": 2.0}],
            "branches": [{"membrane": "NeoHookeanSplitMembrane", "mu1": 1.0, "K1": 1.0, "eta_s": 1.0}],
        },
        "time": {"dt": 0.1, "t_end": 1.0},
    }
    data.update(changes)
    return json.dumps(data)


class TestBundledConfigs:
    @pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
    def test_loads_and_builds(self, path):
        config = load_config(path)
        assert config.name == path.stem
        assert isinstance(config.material.build(), ViscoelasticMaterial)

    @pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
    def test_dump_parses_back(self, path):
        config = load_config(path)
        assert parse_config(config.model_dump_json()).model_dump() == config.model_dump()


class TestValidation:
    def test_negative_dt(self):
        with pytest.raises(ConfigError, match="time.dt"):
            parse_config(_make_config(time={"dt": -0.1, "t_end": 1.0}))

    def test_end_before_first_step(self):
        with pytest.raises(ConfigError, match="t_end"):
            parse_config(_make_config(time={"dt": 1.0, "t_end": 0.5}))

    def test_unknown_kind(self):
        material = {"elastic": [{"kind": "Ogden", "mu": 1.0}]}
        with pytest.raises(ConfigError, match="unknown material kind"):
            parse_config(_make_config(material=material))

    def test_unknown_field(self):
        with pytest.raises(ConfigError, match="colour"):
            parse_config(_make_config(colour="red"))

    def test_membrane_branch_without_viscosity(self):
        material = {"branches": [{"membrane": "NeoHookeanMembrane", "mu1": 1.0}]}
        with pytest.raises(ConfigError, match="eta_s"):
            parse_config(_make_config(material=material))

    def test_gaussian_modulus(self):
        material = {"elastic": [{"kind": "HelfrichBending", "k": 1.0, "k_star": 0.2}]}
        with pytest.raises(ConfigError, match="k_star"):
            parse_config(_make_config(material=material))

    def test_fe_driver_needs_geometry(self):
        with pytest.raises(ConfigError, match="geometry"):
            parse_config(_make_config(driver="fe"))

    def test_two_selectors(self):
        with pytest.raises(ValueError, match="exactly one"):
            DirichletSpec(edge="xi_min", all_nodes=True, components=[0])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{ not json")
        with pytest.raises(ConfigError):
            load_config(path)


class TestSchedules:
    def test_ramp(self):
        ramp = RampSchedule(value=-0.04, t_ramp=10.0)
        assert ramp(5.0) == pytest.approx(-0.02)
        assert ramp(50.0) == pytest.approx(-0.04)

    def test_piecewise_with_jump(self):
        schedule = PiecewiseSchedule(points=[(0.0, 0.0), (1.0, 0.5), (1.0, 0.2), (3.0, 0.2)])
        assert schedule(0.5) == pytest.approx(0.25)
        assert schedule(1.0) == pytest.approx(0.2)
        assert schedule(2.0) == pytest.approx(0.2)
        assert schedule(-1.0) == 0.0
        assert schedule(10.0) == 0.2

    def test_piecewise_rejects_unsorted_times(self):
        with pytest.raises(ValueError):
            PiecewiseSchedule(points=[(1.0, 0.0), (0.5, 1.0)])

    def test_exp_stretch_reaches_its_end_value(self):
        schedule = ExpStretchSchedule(lambda_end=2.0, t_end=1.0)
        assert schedule(0.0) == 1.0
        assert schedule(1.0) == pytest.approx(2.0)
        assert schedule.tau == pytest.approx(1.0 / np.log(2.0))

    def test_reciprocal_stretch(self):
        schedule = ReciprocalStretchSchedule(displacement=RampSchedule(value=1.0, t_ramp=1.0))
        assert schedule(1.0) == pytest.approx(0.5)

    def test_oracle_moment_at_start(self):
        assert OracleSchedule(quantity="moment")(0.0) == pytest.approx(0.0, abs=1e-12)

    def test_discriminated_schedule_in_config(self):
        config = parse_config(_make_config())
        assert isinstance(config.program.displacement, RampSchedule)
        assert config.program.displacement(0.5) == pytest.approx(0.25)


class TestOverrides:
    def test_apply_overrides(self):
        config = apply_overrides(parse_config(_make_config()), dt=0.05, t_end=2.0, threads=3)
        assert (config.time.dt, config.time.t_end, config.solver.threads) == (0.05, 2.0, 3)

    def test_overrides_are_validated(self):
        with pytest.raises(ConfigError):
            apply_overrides(parse_config(_make_config()), dt=-1.0)

    def test_with_parameter(self):
        config = with_parameter(parse_config(_make_config()), "branches.0.eta_s", 7.5)
        assert config.material.branches[0].eta_s == 7.5

    def test_with_several_parameters(self):
        config = with_parameter(parse_config(_make_config()), "branches.0.mu1, elastic.0.mu", 3.0)
        assert config.material.branches[0].mu1 == 3.0
        assert config.material.elastic[0].mu == 3.0

    @pytest.mark.parametrize("path", ["branches.3.eta_s", "branches.0.viscosity", "elastic.x.mu"])
    def test_unknown_parameter_path(self, path):
        with pytest.raises(ConfigError, match="unknown material parameter"):
            with_parameter(parse_config(_make_config()), path, 1.0)

    def test_copy_leaves_original(self):
        original = parse_config(_make_config())
        with_parameter(original, "branches.0.eta_s", 9.0)
        assert isinstance(original, ScenarioConfig)
        assert original.material.branches[0].eta_s == 1.0
