"""
Méta-prévisionniste calibré (astuce du doublement)

Le régime r dure T_r = 2^r tours et délègue à un prévisionniste ε_r-calibré
neuf, avec ε_r = 2^{−r/(A+1)}. Les scores se décomposent par (régime, point
de grille).
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from calibron.core.forecaster import CalibratedForecaster, PhaseMachine, SeedLike, make_generator, validate_outcome
from calibron.core.grid import Distribution, EpsilonGrid, build_grid
from calibron.core.oracle import MinimaxMethod
from calibron.core.projection import distance_to_target
from calibron.core.scoring import DEFAULT_GAMMA, CalibrationLedger, bin_distributions, bound_U_doubling
from calibron.utils.error_handling import ParameterError
from calibron.utils.logging import get_logger

logger = get_logger(__name__)


def regime_length(r: int) -> int:
    """T_r = 2^r"""
    if r < 1:
        raise ParameterError(f"Les régimes sont numérotés à partir de 1 (reçu {r})")
    return 2 ** r


def regime_epsilon(r: int, A: int) -> float:
    """ε_r = 2^{−r/(A+1)}"""
    if r < 1:
        raise ParameterError(f"Les régimes sont numérotés à partir de 1 (reçu {r})")
    return 2.0 ** (-r / (A + 1))


def schedule_ratio(r: int, A: int) -> float:
    """ε_r / sqrt(1 / (ε_r^{A−1} T_r)) : les deux termes sont du même ordre"""
    epsilon = regime_epsilon(r, A)
    return epsilon / math.sqrt(1.0 / (epsilon ** (A - 1) * regime_length(r)))


def regime_of_round(t: int) -> int:
    """R_t : régime contenant le tour t (t ≥ 1)"""
    if t < 1:
        raise ParameterError(f"Les tours sont numérotés à partir de 1 (reçu {t})")
    # Le régime r couvre les tours 2^r − 1 … 2^{r+1} − 2
    return int(math.floor(math.log2(t + 1)))


@dataclass
class RegimeSchedule:
    """État du calendrier : régime courant, sa longueur, son rayon et les tours écoulés"""
    r: int
    T_r: int
    epsilon_r: float
    rounds_elapsed_in_regime: int = 0

    @classmethod
    def start(cls, r: int, A: int) -> 'RegimeSchedule':
        return cls(r=r, T_r=regime_length(r), epsilon_r=regime_epsilon(r, A))

    @property
    def finished(self) -> bool:
        return self.rounds_elapsed_in_regime >= self.T_r


@dataclass(frozen=True)
class MetaRoundRecord:
    """Tour t du méta-prévisionniste, avec le régime r et l'index k dans sa grille"""
    t: int
    r: int
    k: int
    forecast: Tuple[float, ...]
    a: int


class RegimeTranscript:
    """Agrégats d'un régime, sur sa propre grille"""

    def __init__(self, r: int, grid: EpsilonGrid):
        self.r = r
        self.grid = grid
        self.ledger = CalibrationLedger(grid)

    @property
    def rounds(self) -> int:
        return self.ledger.T

    def l1_score(self) -> float:
        """Score ℓ1 du prévisionniste interne sur sa propre transcription"""
        rounds = self.rounds
        return self.ledger.raw_l1() / rounds if rounds else 0.0


class MetaForecaster:
    """Méta-prévisionniste enchaînant des régimes de longueur doublée"""

    is_deterministic = False

    def __init__(self, A: int, method: Optional[MinimaxMethod] = None, seed: SeedLike = None,
                 rng: Optional[np.random.Generator] = None, diagnostic: bool = False):
        if isinstance(A, bool) or not isinstance(A, (int, np.integer)) or A < 2:
            raise ParameterError(f"Le nombre d'issues doit être un entier ≥ 2 (reçu {A!r})")
        self.A = int(A)
        self.method = method or MinimaxMethod()
        self.rng = rng if rng is not None else make_generator(seed)
        self.diagnostic = diagnostic
        self.schedule: Optional[RegimeSchedule] = None
        self.inner: Optional[CalibratedForecaster] = None
        self.regimes: List[RegimeTranscript] = []
        self.records: List[MetaRoundRecord] = []
        self.T = 0
        self._machine = PhaseMachine()
        self._pending: Optional[Tuple[int, Distribution]] = None

    @property
    def phase(self):
        return self._machine.phase

    @property
    def grid(self) -> Optional[EpsilonGrid]:
        return self.inner.grid if self.inner is not None else None

    def _start_regime(self, r: int) -> None:
        self.schedule = RegimeSchedule.start(r, self.A)
        grid = build_grid(self.A, self.schedule.epsilon_r)
        self.inner = CalibratedForecaster(grid, self.method, rng=self.rng, diagnostic=self.diagnostic)
        self.regimes.append(RegimeTranscript(r, grid))
        logger.info("Début d'un nouveau régime", extra={
            "regime": r, "length": self.schedule.T_r, "epsilon": self.schedule.epsilon_r,
            "n_epsilon": grid.N_epsilon, "round": self.T + 1,
        })

    def forecast(self) -> Distribution:
        """Prévision P_t du régime courant ; un régime terminé cède la place au suivant"""
        self._machine.begin_forecast()
        if self.schedule is None:
            self._start_regime(1)
        elif self.schedule.finished:
            self._start_regime(self.schedule.r + 1)
        k, _ = self.inner.forecast()
        distribution = self.inner.grid.point(k)
        self._pending = (k, distribution)
        return distribution

    def observe(self, a: int) -> MetaRoundRecord:
        if self._machine.phase.value == "awaiting-outcome":
            validate_outcome(a, self.A)
        self._machine.begin_observe()
        k, distribution = self._pending
        self._pending = None
        self.inner.observe(int(a))
        self.regimes[-1].ledger.update(k, int(a))
        self.schedule.rounds_elapsed_in_regime += 1
        self.T += 1
        record = MetaRoundRecord(t=self.T, r=self.schedule.r, k=k,
                                 forecast=tuple(distribution.to_list()), a=int(a))
        self.records.append(record)
        return record

    def current_distance_to_C(self) -> float:
        """Distance euclidienne de la moyenne du régime courant à son ensemble cible"""
        if self.inner is None:
            return 0.0
        return distance_to_target(self.inner.target, self.inner.average.avg, self.method.projection)


def regime_scores(meta: MetaForecaster) -> List[float]:
    """Score ℓ1 de chaque régime sur sa propre transcription"""
    return [regime.l1_score() for regime in meta.regimes]


def meta_l1_score(meta: MetaForecaster) -> float:
    """Score ℓ1 avec cases (régime, point de grille) : (1/T) Σ_r T_r · score_r"""
    if meta.T == 0:
        return 0.0
    return sum(regime.ledger.raw_l1() for regime in meta.regimes) / meta.T


def meta_brier_score(meta: MetaForecaster) -> float:
    """Score de Brier avec cases (régime, point de grille)"""
    if meta.T == 0:
        return 0.0
    total = 0.0
    for regime in meta.regimes:
        rho = bin_distributions(regime.ledger, regime.grid)
        squared = ((rho - regime.grid.points) ** 2).sum(axis=1)
        total += float((squared * regime.ledger.counts).sum())
    return total / meta.T


def meta_bound(meta: MetaForecaster, gamma_const: float = DEFAULT_GAMMA) -> float:
    """Borne de calibration uniforme (1/T) Σ_r T_r · U_{ε_r, T_r, δ_{r,T}}"""
    regimes = [(regime.rounds, regime.grid.epsilon, regime.grid.N_epsilon) for regime in meta.regimes]
    return bound_U_doubling(regimes, meta.A, meta.T, gamma_const)
