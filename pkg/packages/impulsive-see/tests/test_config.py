"""
Tests for scenario configuration, the builders and the presets.
"""

import json

import numpy as np
import pytest

from impulsive_see.config import (
    ScenarioConfig,
    build_admissible,
    build_grid,
    build_initial_control,
    build_problem,
    dump_config,
    load_config,
    parse_config,
)
from impulsive_see.control import AdmissibleKind
from impulsive_see.errors import ConfigError
from impulsive_see.families import build_diffusion, build_drift
from impulsive_see.presets import (
    PRESETS,
    SINE_FIRST_MODE_COEFFICIENT,
    contraction_toy,
    dirichlet_heat_impulse,
    get_preset,
)


@pytest.fixture
def example_data():
    """The application example as a plain JSON document"""
    return json.loads(dump_config(dirichlet_heat_impulse()))


class TestRoundTrip:
    """Tests for dump_config / parse_config / load_config"""

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_preset_round_trip(self, name):
        text = dump_config(get_preset(name))
        assert dump_config(parse_config(json.loads(text))) == text

    def test_file_round_trip(self, tmp_path):
        text = dump_config(contraction_toy())
        path = tmp_path / "toy.json"
        path.write_text(text, encoding="utf-8")
        assert dump_config(load_config(path)) == text

    def test_minimal_document_uses_defaults(self):
        config = parse_config({"horizon": 2.0})
        assert config.horizon == 2.0
        assert config.state_dim == 32
        assert config.input_dim == 32
        assert config.simulation.n_paths == 1000


class TestValidation:
    """Tests for configuration errors"""

    def test_impulse_outside_horizon(self, example_data):
        example_data["impulses"][0]["time"] = 1.5
        with pytest.raises(ConfigError) as info:
            parse_config(example_data)
        assert any(
            v.startswith("impulses.0.time: impulse time outside (0,T)") for v in info.value.violations
        )

    def test_impulses_must_increase(self, example_data):
        example_data["impulses"].append({**example_data["impulses"][0], "time": 0.25})
        with pytest.raises(ConfigError) as info:
            parse_config(example_data)
        assert info.value.violations == ["impulses.1.time: impulse times must increase strictly"]

    def test_unknown_key(self, example_data):
        example_data["simulation"]["steps"] = 10
        with pytest.raises(ConfigError) as info:
            parse_config(example_data)
        assert info.value.violations[0].startswith("simulation.steps:")

    def test_every_violation_listed(self, example_data):
        example_data["horizon"] = -1.0
        example_data["simulation"]["n_paths"] = 0
        example_data["optimizer"]["cost_paths"] = 1
        with pytest.raises(ConfigError) as info:
            parse_config(example_data)
        keys = {v.split(":")[0] for v in info.value.violations}
        assert {"horizon", "simulation.n_paths", "optimizer.cost_paths"} <= keys

    def test_unknown_family(self, example_data):
        example_data["g"]["family"] = "quartic"
        with pytest.raises(ConfigError) as info:
            parse_config(example_data)
        assert info.value.violations[0].startswith("g.family: unknown drift family 'quartic'")

    def test_unknown_family_parameter(self, example_data):
        example_data["h"]["params"]["sigma"] = 1.0
        with pytest.raises(ConfigError) as info:
            parse_config(example_data)
        assert "unknown parameters ['sigma']" in info.value.violations[0]

    def test_drift_mode_outside_state(self, example_data):
        example_data["g"]["params"]["mode"] = 32.0
        with pytest.raises(ConfigError) as info:
            parse_config(example_data)
        assert info.value.violations[0].startswith("g.params.mode: must be an integer in [0, 31]")

    def test_explicit_spectrum_length(self):
        with pytest.raises(ConfigError):
            parse_config({"spectrum": {"family": "explicit", "dim": 2, "mu": [-1.0]}})

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("  \n", encoding="utf-8")
        with pytest.raises(ConfigError, match="is empty"):
            load_config(path)

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "horizon": 1.0,\n  "name": \n}\n', encoding="utf-8")
        with pytest.raises(ConfigError) as info:
            load_config(path)
        assert info.value.violations[0].startswith("line 4,")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="Cannot read"):
            load_config(tmp_path / "missing.json")

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="Unknown preset"):
            get_preset("nope")


class TestBuilders:
    """Tests for turning a configuration into library objects"""

    def test_application_example(self):
        spec = build_problem(dirichlet_heat_impulse())
        y = np.zeros(32)
        assert spec.dim == 32 and spec.noise.modes == 16
        assert np.allclose(spec.g(0.0, y), 0.4 * np.eye(32)[0])
        column = spec.h(0.0, y)[:, 0]
        assert np.allclose(column, 0.2 * np.eye(32)[0])
        assert np.all(spec.h(0.0, y)[:, 1:] == 0.0)
        (event,) = spec.impulses
        assert event.t == 0.5
        assert np.array_equal(event.D, np.eye(32))
        assert event.v[0] == SINE_FIRST_MODE_COEFFICIENT
        assert np.all(event.v[1:] == 0.0)

    def test_dirichlet_spectrum(self):
        spec = build_problem(dirichlet_heat_impulse())
        k = np.arange(1, 33)
        assert np.allclose(spec.sg.mu, -(k**2 * np.pi**2 + 0.25))

    def test_grid_contains_events(self):
        config = dirichlet_heat_impulse()
        grid = build_grid(config, dt=0.03)
        assert 0.5 in grid
        assert 0.0625 in grid
        assert grid[-1] == 1.0

    def test_admissible_and_initial_control(self):
        config = contraction_toy()
        ad = build_admissible(config)
        assert ad.kind == AdmissibleKind.BALL and ad.radius == 1.0
        u = build_initial_control(config)
        assert u.intervals == 4 and u.dim == 4 and u.horizon == 0.25

    def test_rectangular_control_space(self):
        config = ScenarioConfig.model_validate(
            {
                "spectrum": {"family": "heat", "dim": 3},
                "control_dim": 2,
                "B": {"kind": "identity"},
                "impulses": [{"time": 0.5, "v": {"kind": "unit", "mode": 1}}],
            }
        )
        spec = build_problem(config)
        assert spec.B.shape == (3, 2)
        assert spec.impulses[0].E.shape == (3, 2)
        assert spec.control_dim == 2


class TestFamilies:
    """Tests for the drift and diffusion registries"""

    def test_unknown_names(self):
        with pytest.raises(ConfigError):
            build_drift("nope", {}, 2, 2)
        with pytest.raises(ConfigError):
            build_diffusion("nope", {}, 2, 2)

    def test_unknown_parameter(self):
        with pytest.raises(ConfigError):
            build_drift("linear", {"slope": 1.0}, 2, 2)

    def test_diffusion_shapes(self):
        y = np.array([1.0, -2.0, 0.5])
        for name in ("zero", "constant", "multiplicative", "tanh", "saturation_first_mode"):
            assert build_diffusion(name, {}, 3, 5)(0.3, y).shape == (3, 5)

    def test_stacked_states_match_rows(self):
        """A (P, d) stack gives the rows' results stacked"""
        ys = np.random.default_rng(2).standard_normal((4, 3))
        for name in ("zero", "linear", "affine_drift", "saturation", "trig_forcing"):
            g = build_drift(name, {}, 3, 2)
            stacked = np.broadcast_to(g(0.4, ys), ys.shape)
            assert np.allclose(stacked, [g(0.4, y) for y in ys])
        for name in ("zero", "constant", "multiplicative", "tanh", "saturation_first_mode"):
            h = build_diffusion(name, {}, 3, 2)
            stacked = np.broadcast_to(h(0.4, ys), (4, 3, 2))
            assert np.allclose(stacked, [h(0.4, y) for y in ys])

    def test_mode_out_of_range(self):
        with pytest.raises(ConfigError):
            build_drift("affine_drift", {"mode": 3.0}, 3, 1)
        with pytest.raises(ConfigError):
            build_drift("trig_forcing", {"mode": 0.5}, 3, 1)
        assert build_drift("trig_forcing", {"mode": 2.0}, 3, 1)(np.pi / 2, np.zeros(3))[2] == pytest.approx(1.0)

    def test_saturation_drift(self):
        g = build_drift("saturation", {"scale": 2.0}, 2, 1)
        assert np.allclose(g(0.0, np.array([1.0, -3.0])), [1.0, -1.5])
