import os
import sys
from pathlib import Path

import numpy as np
import pytest

# Ajouter le répertoire parent au PYTHONPATH
sys.path.insert(0, str(Path(__file__).parent.parent))

from calibron.core.grid import build_grid
from calibron.services.harness import RunConfig
from calibron.utils.config import ConfigManager


# Configuration de base pour les tests
def pytest_configure(config):
    """Configuration globale pour les tests"""
    config.addinivalue_line("markers", "slow: simulations à l'échelle des critères d'acceptation")
    os.environ.setdefault("CALIBRON_LOGGING_LEVEL", "WARNING")


@pytest.fixture
def grid2():
    """Grille A=2, ε=0.25 (m = 8, 9 points)"""
    return build_grid(2, 0.25)


@pytest.fixture
def grid3():
    """Grille A=3, ε=0.5 (m = 6, 28 points)"""
    return build_grid(3, 0.5)


@pytest.fixture
def rng():
    """Générateur déterministe pour les tests aléatoires"""
    return np.random.default_rng(20240601)


@pytest.fixture
def run_config(tmp_path):
    """Fabrique de configurations de partie écrivant dans un répertoire temporaire"""
    def factory(**overrides) -> RunConfig:
        manager = ConfigManager(tmp_path / "absent.yaml", load_env=False)
        values = {"directory": str(tmp_path / "out"), "rounds": 64}
        values.update(overrides)
        return RunConfig.from_config(manager, values)

    return factory
