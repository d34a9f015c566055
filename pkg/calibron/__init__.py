from .core import CalibratedForecaster, MetaForecaster, build_grid

__version__ = "0.1.0"

__all__ = ['CalibratedForecaster', 'MetaForecaster', 'build_grid']
