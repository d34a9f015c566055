"""
Métriques Prometheus d'une partie

Registre propre à chaque partie, écrit en fin de partie au format texte.
"""
from pathlib import Path
from typing import Optional, Union

from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, write_to_textfile

from calibron.utils.logging import get_logger

logger = get_logger(__name__)

PREFIX = 'calibron_'


class GameMetrics:
    def __init__(self, registry: Optional[CollectorRegistry] = None):
        self.registry = registry or CollectorRegistry()
        self._init_metrics()

    def _init_metrics(self):
        """Initialise les métriques Prometheus"""
        self.rounds = Counter(f'{PREFIX}rounds', 'Number of rounds played', registry=self.registry)
        self.oracle_seconds = Histogram(f'{PREFIX}oracle_seconds', 'Time spent computing the forecaster policy',
                                        registry=self.registry)
        self.blackwell_violation = Gauge(f'{PREFIX}blackwell_violation', 'Last Blackwell condition violation',
                                         registry=self.registry)
        self.blackwell_violations = Counter(f'{PREFIX}blackwell_violations',
                                            'Rounds whose violation exceeded the tolerance', registry=self.registry)
        self.regime = Gauge(f'{PREFIX}regime', 'Current doubling regime', registry=self.registry)
        self.l1_score = Gauge(f'{PREFIX}l1_score', 'l1 calibration score at the last checkpoint',
                              registry=self.registry)
        self.l2_distance = Gauge(f'{PREFIX}l2_distance', 'Distance to the target set at the last checkpoint',
                                 registry=self.registry)

    def record_round(self, diagnostics=None, regime: int = 0):
        """Enregistre un tour et, s'il y en a, les diagnostics de l'oracle"""
        self.rounds.inc()
        self.regime.set(regime)
        if diagnostics is not None:
            self.oracle_seconds.observe(diagnostics.elapsed)
            self.blackwell_violation.set(diagnostics.violation)
            if not diagnostics.within_tolerance:
                self.blackwell_violations.inc()

    def record_checkpoint(self, l1_score: float, l2_distance: float):
        self.l1_score.set(l1_score)
        self.l2_distance.set(l2_distance)

    def value(self, name: str) -> Optional[float]:
        return self.registry.get_sample_value(name)

    def write(self, path: Union[str, Path]) -> None:
        """Écrit le registre au format texte Prometheus"""
        write_to_textfile(str(path), self.registry)
        logger.debug("Métriques écrites", extra={"path": str(path)})
