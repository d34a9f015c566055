import copy
import os
from typing import Dict, Any, Optional, Union
from dotenv import load_dotenv
import yaml
from pathlib import Path

from calibron.utils.error_handling import ConfigurationError
from calibron.utils.logging import get_logger

ENV_PREFIX = "CALIBRON_"
OUTPUT_DIR_ENV = "CALIBRON_OUTPUT_DIR"
DEFAULT_CONFIG_PATH = Path(__file__).parent.parent.parent / "config.yaml"

DEFAULT_CONFIG: Dict[str, Dict[str, Any]] = {
    "run": {
        "outcomes": 2,
        "epsilon": 0.1,
        "rounds": 10000,
        "forecaster": "eps",
        "method": "exact",
        "delta": 0.05,
        "tol": 1e-9,
        "projection": "sort_exact",
        "nature": "iid",  # iid sans argument : loi uniforme sur les A issues
        "seed": 0,
        "checkpoint_every": 0,  # 0: puissances de deux
        "diagnostic": False,
    },
    "scoring": {
        "delta": 0.01,
        "gamma": 2.0,
    },
    "output": {
        "directory": "runs",
        "transcript": "transcript.csv",
        "scores": "scores.csv",
        "plot": "",
        "metrics": "metrics.prom",
        "report": "report.json",
    },
    "logging": {
        "level": "INFO",
        "directory": "",
        "json": True,
    },
    "parallel": {
        "workers": 1,
    },
}


def _convert(env_value: str, reference: Any) -> Any:
    """Convertit une variable d'environnement dans le type de la valeur par défaut"""
    if isinstance(reference, bool):
        return env_value.lower() in ["true", "1", "yes", "on"]
    if isinstance(reference, int):
        return int(env_value)
    if isinstance(reference, float):
        return float(env_value)
    return env_value


class ConfigManager:
    def __init__(self, config_path: Optional[Union[str, Path]] = None, load_env: bool = True):
        self.logger = get_logger(__name__)
        self.config_path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
        self.config: Dict[str, Dict[str, Any]] = copy.deepcopy(DEFAULT_CONFIG)
        if load_env:
            self.load_environment()
        self.load_yaml()
        self.override_with_env()

    def load_environment(self) -> None:
        """Charger les variables d'environnement"""
        load_dotenv()

    def load_yaml(self) -> None:
        """Charger la configuration depuis le fichier YAML"""
        if not self.config_path.exists():
            return
        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                file_config = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Fichier de configuration invalide {self.config_path}: {e}") from e
        if not isinstance(file_config, dict):
            self.logger.warning(f"Fichier de configuration ignoré (pas un dictionnaire): {self.config_path}")
            return
        for section, values in file_config.items():
            if isinstance(values, dict):
                self.config.setdefault(section, {}).update(values)
            else:
                self.logger.warning(f"Section de configuration ignorée: {section}")

    def override_with_env(self) -> None:
        """Remplacer les valeurs de configuration par les variables d'environnement"""
        for section, values in self.config.items():
            for key, value in values.items():
                env_value = os.getenv(f"{ENV_PREFIX}{section}_{key}".upper())
                if env_value is None:
                    continue
                try:
                    values[key] = _convert(env_value, value)
                except ValueError:
                    self.logger.warning(f"Variable d'environnement ignorée: {section}.{key}={env_value!r}")

        output_dir = os.getenv(OUTPUT_DIR_ENV)
        if output_dir:
            self.config["output"]["directory"] = output_dir

    def get(self, section: str, key: Optional[str] = None, default: Optional[Any] = None) -> Any:
        """Obtenir une section ou une valeur de configuration"""
        values = self.config.get(section)
        if values is None:
            return default
        if key is None:
            return values
        return values.get(key, default)

    def __getitem__(self, section: str) -> Dict[str, Any]:
        """Accès direct à une section de configuration"""
        return self.config[section]

    def __setitem__(self, section: str, values: Dict[str, Any]) -> None:
        """Modifier une section de configuration"""
        self.config[section] = values

    def __contains__(self, section: str) -> bool:
        """Vérifier si une section existe dans la configuration"""
        return section in self.config

    def as_dict(self) -> Dict[str, Any]:
        """Obtenir la configuration complète comme dictionnaire"""
        return copy.deepcopy(self.config)

    def save(self, path: Optional[Union[str, Path]] = None) -> None:
        """Sauvegarder la configuration dans un fichier YAML"""
        target = Path(path) if path else self.config_path
        with open(target, "w", encoding="utf-8") as f:
            yaml.safe_dump(self.config, f, default_flow_style=False)


def load_config(config_path: Optional[Union[str, Path]] = None) -> ConfigManager:
    """Charger la configuration globale"""
    return ConfigManager(config_path)
