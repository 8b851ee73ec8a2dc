"""JSON config validation: fail-closed parsing, field-level error paths.

Every rejection path asserts on the message so the CLI's exit-2 diagnostics
stay actionable; the happy path checks defaults and unit conversions.
"""
import json

import pytest

from censorfuse.config import SCHEMA_VERSION, load_config, parse_config
from censorfuse.copulas import CopulaFamily
from censorfuse.errors import ConfigError
from censorfuse.simulation import Scenario


def base_raw(**kw):
    raw = {
        "schema_version": SCHEMA_VERSION,
        "scenario": "ac",
        "n_sensors": 2,
        "sensor_marginal": {"mu0": 0.0, "mu1": 0.5, "sigma": 3.0},
        "fc_marginal": {"mu0": 0.1, "mu1": 0.1, "sigma": 3.0},
        "beta": 0.35,
        "truth_copula_h1": {"family": "frank", "tau": 0.3},
        "library": ["gaussian", "gumbel", "frank", "clayton"],
        "seed": 7,
    }
    raw.update(kw)
    return raw


class TestHappyPath:
    def test_defaults_and_conversions(self):
        loaded = parse_config(base_raw())
        cfg = loaded.scenario
        assert cfg.scenario is Scenario.AC
        assert cfg.L == 100 and cfg.trials == 2000
        assert cfg.alpha == 0.1 and cfg.quad_nodes == 8
        assert cfg.t1 == (0.0, 0.0)
        assert cfg.beta == (0.35, 0.35)
        assert cfg.truth_copula_h1.family is CopulaFamily.FRANK
        assert cfg.truth_copula_h1.phi == pytest.approx(2.9174344459245227)
        assert cfg.truth_copula_h0.family is CopulaFamily.PRODUCT
        assert loaded.betas is None
        assert loaded.raw["seed"] == 7

    def test_equicorrelated_elliptical_truth(self):
        raw = base_raw(n_sensors=3,
                       truth_copula_h1={"family": "gaussian", "rho": 0.25},
                       library=["gaussian", "student_t"])
        cfg = parse_config(raw).scenario
        sig = cfg.truth_copula_h1.sigma
        assert sig.shape == (3, 3)
        assert sig[0, 1] == pytest.approx(0.25)

    def test_per_sensor_lists_and_overrides(self):
        raw = base_raw(beta=[0.2, 0.4], t1=[0.0, 0.1],
                       betas=[0.1, 0.3], q=1.0)
        loaded = parse_config(raw, trials=150, window=16, quad_nodes=12)
        cfg = loaded.scenario
        assert cfg.beta == (0.2, 0.4) and cfg.t1 == (0.0, 0.1)
        assert cfg.trials == 150 and cfg.L == 16 and cfg.quad_nodes == 12
        assert loaded.betas == (0.1, 0.3)

    def test_seed_override_beats_config(self):
        assert parse_config(base_raw(), seed=99).scenario.seed == 99
        del_raw = base_raw()
        del del_raw["seed"]
        assert parse_config(del_raw, seed=42).scenario.seed == 42


class TestFailClosed:
    def test_missing_schema_version(self):
        raw = base_raw()
        del raw["schema_version"]
        with pytest.raises(ConfigError, match="schema_version"):
            parse_config(raw)

    def test_wrong_schema_version(self):
        with pytest.raises(ConfigError, match=str(SCHEMA_VERSION)):
            parse_config(base_raw(schema_version=99))

    def test_unknown_top_level_key_is_named(self):
        with pytest.raises(ConfigError, match="windows"):
            parse_config(base_raw(windows=100))

    def test_unknown_nested_key_is_named(self):
        raw = base_raw(fc_marginal={"mu0": 0.1, "mu1": 0.1, "sigma": 3.0,
                                    "skew": 1.0})
        with pytest.raises(ConfigError, match="skew"):
            parse_config(raw)

    def test_marginal_and_copula_need_exactly_one_form(self):
        raw = base_raw(sensor_marginals=[{"mu0": 0, "mu1": 0.5, "sigma": 3}] * 2)
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config(raw)
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config(base_raw(truth_copula_h1={"family": "frank",
                                                   "tau": 0.3, "phi": 2.0}))

    def test_product_takes_no_parameters(self):
        with pytest.raises(ConfigError, match="product"):
            parse_config(base_raw(truth_copula_h1={"family": "product",
                                                   "tau": 0.1}))

    def test_rho_reserved_for_elliptical_families(self):
        with pytest.raises(ConfigError, match="rho"):
            parse_config(base_raw(truth_copula_h1={"family": "frank",
                                                   "rho": 0.2}))

    def test_unknown_family_lists_choices(self):
        with pytest.raises(ConfigError, match="plackett"):
            parse_config(base_raw(library=["plackett"]))

    def test_unknown_noise_kind(self):
        with pytest.raises(ConfigError, match="uniform"):
            parse_config(base_raw(noise={"kind": "uniform", "sigma_d": 1.0}))

    def test_nonpositive_step_rejected(self):
        with pytest.raises(ConfigError, match="config.q"):
            parse_config(base_raw(q=0.0))

    def test_rate_grid_range_checked(self):
        with pytest.raises(ConfigError, match=r"betas\[1\]"):
            parse_config(base_raw(betas=[0.1, 1.0]))

    def test_bool_is_not_a_number(self):
        with pytest.raises(ConfigError, match="config.beta"):
            parse_config(base_raw(beta=True))

    def test_scenario_vocabulary(self):
        with pytest.raises(ConfigError, match="'ac' or 'qc'"):
            parse_config(base_raw(scenario="analog"))

    def test_seed_required_somewhere(self):
        raw = base_raw()
        del raw["seed"]
        with pytest.raises(ConfigError, match="seed"):
            parse_config(raw)

    def test_quantized_scenario_requires_step(self):
        with pytest.raises(ConfigError, match="step"):
            parse_config(base_raw(scenario="qc"))

    def test_field_path_points_at_offender(self):
        raw = base_raw(sensor_marginals=[
            {"mu0": 0.0, "mu1": 0.5, "sigma": 3.0},
            {"mu0": 0.0, "mu1": 0.5, "sigma": -1.0},
        ])
        del raw["sensor_marginal"]
        with pytest.raises(ConfigError, match=r"sensor_marginals\[1\]"):
            parse_config(raw)


class TestFileLoading:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(base_raw()))
        assert load_config(str(path)).scenario.seed == 7

    def test_malformed_json_reports_position(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"schema_version": 1,\n  "scenario" "ac"}')
        with pytest.raises(ConfigError, match="line 2"):
            load_config(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(str(tmp_path / "absent.json"))
