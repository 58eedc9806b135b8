"""
Configuration manager for gap-filling runs
"""

import os
import json
import logging
import copy
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

ENV_PREFIX = "DGC_"


class ConfigManager:
    """
    Configuration manager for optimizer, synthetic-data, benchmark and logging settings
    """

    def __init__(self, config_file: Optional[str] = None):
        """
        Initialize configuration manager

        Args:
            config_file: Optional path to configuration file. Falls back to the
                DGC_CONFIG environment variable, then to the bundled config.json
        """
        if config_file is None:
            config_file = os.environ.get('DGC_CONFIG') or os.path.join(os.path.dirname(__file__), 'config.json')
        self.config_file = config_file

        self.config: Dict[str, Dict[str, Any]] = {
            'dgc': {
                'n_realizations': 100,
                'n_classes': 8,
                'm_max': 7,
                'tol': 1e-3,
                'i_max': 100_000_000,
                'w1': 0.5,
                'w2': 0.5,
                'max_retries': 20,
                'master_seed': 0,
                'accept_best': False
            },
            'synth': {
                'n_rows': 50,
                'n_cols': 50,
                'mean': 50.0,
                'sigma': 10.0,
                'xi1': 4.0,
                'xi2': 2.0,
                'nu': 2.5,
                'thin_percent': 33.0,
                'block': [20, 20, 16, 8]
            },
            'bench': {
                'scenario': 'random-thin',
                's_samples': 100,
                'n_realizations': 1,
                'accept_best': True,
                'workers': 1
            },
            'baselines': {
                'enabled': ['knn', 'nn', 'idw'],
                'k_candidates': [1, 3, 5, 7, 9, 11, 15],
                'cv_folds': 5,
                'idw_power': 2.0,
                'idw_radius': None
            },
            'logging': {
                'level': 'INFO',
                'log_dir': None,
                'json_log': False
            }
        }

        self._load_config()
        self._apply_env_overrides()

    def _load_config(self) -> None:
        """Load configuration from file if exists"""
        try:
            if os.path.exists(self.config_file):
                with open(self.config_file, 'r', encoding='utf-8') as f:
                    loaded_config = json.load(f)
                for section, values in loaded_config.items():
                    if section in self.config:
                        self.config[section].update(values)
                    else:
                        logger.warning(f"Unknown configuration section '{section}' in {self.config_file}, ignored")
                logger.debug(f"Loaded configuration from {self.config_file}")
            else:
                logger.info(f"Configuration file {self.config_file} not found, using defaults")
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Error loading configuration: {e}")

    def _apply_env_overrides(self) -> None:
        """Apply DGC_<SECTION>_<KEY> environment variables on top of file values"""
        for section, values in self.config.items():
            for key, current in values.items():
                env_name = f"{ENV_PREFIX}{section}_{key}".upper()
                raw = os.environ.get(env_name)
                if raw is None:
                    continue
                try:
                    values[key] = _coerce(raw, current)
                    logger.info(f"Setting {section}.{key} overridden from {env_name}")
                except ValueError as e:
                    logger.error(f"Ignoring {env_name}={raw!r}: {e}")

    def get_setting(self, section: str, key: str, default: Any = None) -> Any:
        """
        Get setting value

        Args:
            section: Section name (e.g. 'dgc', 'synth')
            key: Setting key
            default: Default value if setting not found

        Returns:
            Setting value or default
        """
        if section in self.config and key in self.config[section]:
            return self.config[section][key]
        return default

    def get_config_section(self, section: str) -> Dict[str, Any]:
        """
        Get entire configuration section

        Args:
            section: Section name (e.g. 'dgc', 'baselines')

        Returns:
            A copy of the configuration section dictionary
        """
        if section in self.config:
            return copy.deepcopy(self.config[section])
        return {}


def _coerce(raw: str, current: Any) -> Any:
    """Convert an environment string to the type of the setting it replaces"""
    if isinstance(current, bool):
        if raw.lower() in ('1', 'true', 'yes', 'on'):
            return True
        if raw.lower() in ('0', 'false', 'no', 'off'):
            return False
        raise ValueError("expected a boolean")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, list) or current is None:
        return json.loads(raw)
    return raw
