from .harness import GameRunner, RunConfig, play, run, run_sweep
from .metrics import GameMetrics

__all__ = ['GameRunner', 'RunConfig', 'play', 'run', 'run_sweep', 'GameMetrics']
