import json

import pytest
from pydantic import ValidationError

from models.config_models import AnalysisConfig, ControlSpec, PerturbationGrid, Scenario, SystemSpec
from src.config.config_manager import CONFIG_ENV_VAR, ConfigManager
from src.errors import ScenarioError


def write_json(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


class TestAnalysisConfig:
    def test_defaults(self):
        config = AnalysisConfig.get_default_config()
        assert config.verdict_band == 0.01
        assert config.stable_threshold == 0.95
        assert config.ells == list(range(9))
        assert config.threads is None

    def test_rejects_inverted_thresholds(self):
        with pytest.raises(ValidationError):
            AnalysisConfig(stable_threshold=0.5, unstable_threshold=0.6)

    def test_rejects_bad_log_level(self):
        with pytest.raises(ValidationError):
            AnalysisConfig(log_level="LOUD")

    def test_rejects_large_dt(self):
        with pytest.raises(ValidationError):
            AnalysisConfig(dt=0.1)


class TestConfigManager:
    def test_missing_file_falls_back_to_defaults(self, tmp_path):
        manager = ConfigManager(str(tmp_path / "absent.json"))
        assert manager.get_config() == AnalysisConfig.get_default_config()

    def test_env_var(self, tmp_path, monkeypatch):
        path = write_json(tmp_path / "cfg.json", {"verdict_band": 0.02})
        monkeypatch.setenv(CONFIG_ENV_VAR, str(path))
        assert ConfigManager().get_config().verdict_band == 0.02

    def test_invalid_file(self, tmp_path):
        path = write_json(tmp_path / "cfg.json", {"min_trials": 0})
        with pytest.raises(ScenarioError):
            ConfigManager(str(path))

    def test_save_and_reload(self, tmp_path):
        manager = ConfigManager(str(tmp_path / "absent.json"))
        manager.config = AnalysisConfig(verdict_band=0.05)
        target = manager.save_config(tmp_path / "saved.json")
        assert ConfigManager(str(target)).get_config().verdict_band == 0.05

    def test_builtin_scenarios(self):
        manager = ConfigManager()
        names = manager.list_builtin_scenarios()
        for expected in ("diag-unstable-pair", "sl2", "marcus-yamabe", "solvable-suite"):
            assert expected in names
        for name in names:
            assert manager.load_scenario(name).name == name

    def test_unknown_scenario(self):
        with pytest.raises(ScenarioError):
            ConfigManager().load_scenario("no-such-scenario")

    def test_scenario_round_trip(self, tmp_path):
        manager = ConfigManager()
        original = manager.load_scenario("diag-unstable-pair")
        path = manager.dump_scenario(original, tmp_path / "copy.json")
        assert manager.load_scenario(str(path)) == original


class TestScenario:
    family = [[[-2.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, -2.0]]]

    def test_alpha_must_be_a_probability_vector(self, tmp_path):
        path = write_json(tmp_path / "bad.json", {"name": "bad", "family": self.family, "alpha": [0.5, 0.6]})
        with pytest.raises(ScenarioError):
            ConfigManager().load_scenario(str(path))

    def test_alpha_length(self):
        with pytest.raises(ValidationError):
            Scenario(name="x", family=self.family, alpha=[1.0])

    def test_exactly_one_source(self):
        with pytest.raises(ValidationError):
            Scenario(name="x")
        with pytest.raises(ValidationError):
            Scenario(name="x", family=self.family, system=SystemSpec(name="marcus-yamabe"))

    def test_signal_range(self):
        with pytest.raises(ValidationError):
            Scenario(name="x", family=self.family, signal=[1, 3])

    def test_unknown_field_forbidden(self):
        with pytest.raises(ValidationError):
            Scenario(name="x", family=self.family, horizn=10)

    def test_ragged_family(self):
        with pytest.raises(ValidationError):
            Scenario(name="x", family=[[[1.0, 0.0]]])

    def test_uniform_alpha_default(self):
        scenario = Scenario(name="x", family=self.family)
        assert scenario.to_alpha().alpha == (0.5, 0.5)

    def test_system_params_checked(self):
        with pytest.raises(ValidationError):
            SystemSpec(name="marcus-yamabe", params={"speed": 2.0})
        assert SystemSpec(name="marcus-yamabe", params={"a": 1.2}).build().name == "marcus-yamabe"

    def test_grids_must_increase(self):
        with pytest.raises(ValidationError):
            PerturbationGrid(grid=[0.1, 0.05])
        with pytest.raises(ValidationError):
            ControlSpec(delta_grid=[])
