"""
Prévisionniste ε-calibré

À chaque tour : calcul de ψ_t par l'oracle de Blackwell, tirage de K_t selon
ψ_t (inverse de la fonction de répartition, générateur Philox dédié),
émission de p_{K_t}, puis observation de a_t et mise à jour de m̄.
"""
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from calibron.core.grid import Distribution, EpsilonGrid, build_grid, nearest
from calibron.core.oracle import BlackwellDiagnostics, MinimaxMethod, Policy, blackwell_policy
from calibron.core.payoff import PayoffAverage
from calibron.core.projection import TargetSet
from calibron.utils.error_handling import ParameterError, ProtocolError
from calibron.utils.logging import get_logger

logger = get_logger(__name__)

SeedLike = Union[int, np.random.SeedSequence, None]


def make_generator(seed: SeedLike) -> np.random.Generator:
    """Générateur à compteur (Philox) pour une partie"""
    return np.random.Generator(np.random.Philox(seed))


class Phase(Enum):
    AWAITING_FORECAST = "awaiting-forecast"
    AWAITING_OUTCOME = "awaiting-outcome"


@dataclass(frozen=True)
class RoundRecord:
    """Tour t : index de grille K_t et issue a_t"""
    t: int
    k: int
    a: int


def sample_index(policy: Policy, rng: np.random.Generator) -> int:
    """Tirage par inverse de la fonction de répartition"""
    cumulative = np.cumsum(policy.weights)
    u = rng.random() * cumulative[-1]
    k = int(np.searchsorted(cumulative, u, side="right"))
    return min(k, policy.size - 1)


class PhaseMachine:
    """Alternance stricte prévision / observation"""

    def __init__(self):
        self.phase = Phase.AWAITING_FORECAST

    def begin_forecast(self) -> None:
        if self.phase is not Phase.AWAITING_FORECAST:
            raise ProtocolError("Prévision demandée alors qu'une issue est attendue")
        self.phase = Phase.AWAITING_OUTCOME

    def begin_observe(self) -> None:
        if self.phase is not Phase.AWAITING_OUTCOME:
            raise ProtocolError("Issue observée sans prévision préalable")
        self.phase = Phase.AWAITING_FORECAST


class CalibratedForecaster:
    """Prévisionniste ε-calibré par approchabilité"""

    is_deterministic = False

    def __init__(self, grid: EpsilonGrid, method: Optional[MinimaxMethod] = None,
                 seed: SeedLike = None, rng: Optional[np.random.Generator] = None,
                 diagnostic: bool = False):
        self.grid = grid
        self.method = method or MinimaxMethod()
        self.target = TargetSet.for_grid(grid)
        self.average = PayoffAverage(grid)
        self.rng = rng if rng is not None else make_generator(seed)
        self.diagnostic = diagnostic
        self.records: List[RoundRecord] = []
        self.diagnostics: List[BlackwellDiagnostics] = []
        self.last_diagnostics: Optional[BlackwellDiagnostics] = None
        self._machine = PhaseMachine()
        self._pending: Optional[int] = None

    @classmethod
    def create(cls, A: int, epsilon: float, **kwargs) -> 'CalibratedForecaster':
        return cls(build_grid(A, epsilon), **kwargs)

    @property
    def phase(self) -> Phase:
        return self._machine.phase

    @property
    def T(self) -> int:
        return self.average.T

    def forecast(self) -> Tuple[int, Policy]:
        """Calcule ψ_t et tire K_t ; la prévision émise est p_{K_t}"""
        self._machine.begin_forecast()
        policy, diagnostics = blackwell_policy(self.average, self.target, self.grid, self.method)
        self.last_diagnostics = diagnostics
        if self.diagnostic:
            self.diagnostics.append(diagnostics)
            if not diagnostics.within_tolerance:
                logger.warning("Condition de Blackwell violée au-delà de la tolérance",
                               extra={"round": self.T + 1, **diagnostics.to_dict()})
        k = sample_index(policy, self.rng)
        self._pending = k
        return k, policy

    def observe(self, a: int) -> RoundRecord:
        """Observe a_t et ajoute m(K_t, a_t) à la moyenne"""
        if self._machine.phase is Phase.AWAITING_OUTCOME:
            validate_outcome(a, self.grid.A)
        self._machine.begin_observe()
        k = self._pending
        self._pending = None
        self.average.update(self.grid, k, int(a))
        record = RoundRecord(t=self.average.T, k=k, a=int(a))
        self.records.append(record)
        return record


def deterministic_nearest_forecaster(history: Sequence[int], grid: EpsilonGrid) -> int:
    """Point de la grille le plus proche de la distribution empirique des issues passées"""
    return nearest(grid, Distribution.empirical(history, grid.A))


class DeterministicForecaster:
    """Contre-exemple déterministe : suit la fréquence empirique des issues"""

    is_deterministic = True

    def __init__(self, grid: EpsilonGrid):
        self.grid = grid
        self.average = PayoffAverage(grid)
        self.outcome_counts = np.zeros(grid.A, dtype=np.int64)
        self.records: List[RoundRecord] = []
        self._machine = PhaseMachine()
        self._pending: Optional[int] = None

    @property
    def phase(self) -> Phase:
        return self._machine.phase

    @property
    def T(self) -> int:
        return self.average.T

    def forecast(self) -> Tuple[int, Policy]:
        self._machine.begin_forecast()
        total = self.outcome_counts.sum()
        empirical = self.outcome_counts / total if total else np.full(self.grid.A, 1.0 / self.grid.A)
        k = nearest(self.grid, empirical)
        self._pending = k
        return k, Policy.pure(k, self.grid.N_epsilon)

    def observe(self, a: int) -> RoundRecord:
        if self._machine.phase is Phase.AWAITING_OUTCOME:
            validate_outcome(a, self.grid.A)
        self._machine.begin_observe()
        k = self._pending
        self._pending = None
        self.outcome_counts[int(a)] += 1
        self.average.update(self.grid, k, int(a))
        record = RoundRecord(t=self.average.T, k=k, a=int(a))
        self.records.append(record)
        return record


def validate_outcome(a: int, A: int) -> int:
    if isinstance(a, bool) or not isinstance(a, (int, np.integer)) or not 0 <= a < A:
        raise ParameterError(f"Issue {a!r} hors de l'alphabet de taille {A}")
    return int(a)
