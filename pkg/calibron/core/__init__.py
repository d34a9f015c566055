from .forecaster import CalibratedForecaster, DeterministicForecaster
from .grid import Distribution, EpsilonGrid, build_grid
from .meta import MetaForecaster
from .nature import Nature, NatureSpec, parse_nature_spec
from .oracle import MinimaxMethod

__all__ = [
    'CalibratedForecaster', 'DeterministicForecaster', 'Distribution', 'EpsilonGrid', 'build_grid',
    'MetaForecaster', 'Nature', 'NatureSpec', 'parse_nature_spec', 'MinimaxMethod',
]
