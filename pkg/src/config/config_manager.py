#!/usr/bin/env python3
"""
Configuration Manager for switchstab using Pydantic models.
Manages the analysis configuration file and scenario files, including the
built-in scenarios shipped under config/scenarios.
"""

import json
import os
from typing import List, Optional, Union
from pathlib import Path
import logging
import sys
sys.path.append(str(Path(__file__).parent.parent.parent))

from pydantic import ValidationError

from models.config_models import AnalysisConfig, Scenario
from src.errors import ScenarioError

CONFIG_ENV_VAR = "SWITCHSTAB_CONFIG"


class ConfigManager:
    """Manages analysis configuration and scenarios using Pydantic models"""

    def __init__(self, config_file_path: Optional[str] = None):
        self.logger = logging.getLogger(self.__class__.__name__)
        self.app_root = Path(__file__).parent.parent.parent.absolute()
        self.config_dir = self.app_root / 'config'
        self.scenario_dir = self.config_dir / 'scenarios'

        if config_file_path is None:
            config_file_path = os.environ.get(CONFIG_ENV_VAR)
        if config_file_path is None:
            self.config_file = self.config_dir / 'analysis_config.json'
        else:
            self.config_file = Path(config_file_path)

        self.config = self._load_config()

    def _load_config(self) -> AnalysisConfig:
        """Load configuration from file, fall back to defaults if missing"""
        if self.config_file.exists():
            try:
                with open(self.config_file, 'r', encoding='utf-8') as f:
                    config_data = json.load(f)
                config = AnalysisConfig(**config_data)
                self.logger.info(f"Loaded configuration from {self.config_file}")
                return config
            except (json.JSONDecodeError, ValidationError) as e:
                raise ScenarioError(f"Invalid configuration file {self.config_file}: {e}") from e

        self.logger.info("Using default configuration")
        return AnalysisConfig.get_default_config()

    def save_config(self, path: Optional[Path] = None) -> Path:
        """Save configuration to file"""
        target = Path(path) if path is not None else self.config_file
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, 'w', encoding='utf-8') as f:
            json.dump(self.config.model_dump(), f, indent=2, ensure_ascii=False)
        self.logger.info(f"Configuration saved to {target}")
        return target

    def get_config(self) -> AnalysisConfig:
        return self.config

    def list_builtin_scenarios(self) -> List[str]:
        """Names of the scenarios shipped under config/scenarios"""
        if not self.scenario_dir.exists():
            return []
        return sorted(p.stem for p in self.scenario_dir.glob('*.json'))

    def resolve_scenario(self, ref: Union[str, Path]) -> Path:
        """Path of a scenario given either a file path or a built-in name"""
        path = Path(ref)
        if path.exists():
            return path
        builtin = self.scenario_dir / f"{ref}.json"
        if builtin.exists():
            return builtin
        raise ScenarioError(
            f"Scenario '{ref}' is neither a file nor a built-in ({', '.join(self.list_builtin_scenarios())})"
        )

    def load_scenario(self, ref: Union[str, Path]) -> Scenario:
        """Load and validate a scenario file or built-in scenario"""
        path = self.resolve_scenario(ref)
        try:
            text = path.read_text(encoding='utf-8')
        except (OSError, UnicodeDecodeError) as e:
            raise ScenarioError(f"Cannot read scenario {path}: {e}") from e
        try:
            scenario = Scenario.model_validate_json(text)
        except ValidationError as e:
            raise ScenarioError(f"Invalid scenario {path}:\n{e}") from e
        self.logger.info(f"Loaded scenario '{scenario.name}' from {path}")
        return scenario

    def dump_scenario(self, scenario: Scenario, path: Union[str, Path]) -> Path:
        """Write a scenario as JSON; loading it back gives an equal scenario"""
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(scenario.model_dump_json(indent=2, exclude_none=True) + "\n", encoding='utf-8')
        self.logger.info(f"Scenario '{scenario.name}' saved to {target}")
        return target
