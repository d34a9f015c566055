"""
Scores de calibration

Tous les scores ne dépendent que des agrégats par case (n_k et comptes des
issues), donc pas de l'ordre des tours.
"""
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from calibron.core.grid import EpsilonGrid, build_grid
from calibron.core.projection import SORT_EXACT, TargetSet, distance_to_target
from calibron.utils.error_handling import ParameterError

DEFAULT_BOUND_DELTA = 0.01
DEFAULT_GAMMA = 2.0


class CalibrationLedger:
    """Agrégats par case : n_k et comptes des issues observées quand p_k a été prévu"""

    def __init__(self, grid: EpsilonGrid):
        self.grid = grid
        self.counts = np.zeros(grid.N_epsilon, dtype=np.int64)
        self.outcome_counts = np.zeros((grid.N_epsilon, grid.A), dtype=np.int64)

    @classmethod
    def from_records(cls, records: Iterable, grid: EpsilonGrid) -> 'CalibrationLedger':
        ledger = cls(grid)
        pairs = [(int(r.k), int(r.a)) for r in records]
        if pairs:
            ks, outcomes = np.asarray(pairs, dtype=np.int64).T
            if ks.min() < 0 or ks.max() >= grid.N_epsilon:
                raise ParameterError("Transcription avec un index de grille hors bornes")
            if outcomes.min() < 0 or outcomes.max() >= grid.A:
                raise ParameterError("Transcription avec une issue hors de l'alphabet")
            np.add.at(ledger.counts, ks, 1)
            np.add.at(ledger.outcome_counts, (ks, outcomes), 1)
        return ledger

    @property
    def T(self) -> int:
        return int(self.counts.sum())

    def update(self, k: int, a: int) -> None:
        self.grid.check_index(k)
        self.grid.check_outcome(a)
        self.counts[k] += 1
        self.outcome_counts[k, a] += 1

    def residual_sums(self) -> np.ndarray:
        """Σ_t 1{K_t = k}(p_k − δ_{a_t}) pour chaque case k, forme (N_ε, A)"""
        return self.counts[:, None] * self.grid.points - self.outcome_counts

    def average_payoff(self) -> np.ndarray:
        """m̄_T recalculé à partir des agrégats"""
        T = self.T
        if T == 0:
            return np.zeros((self.grid.N_epsilon, self.grid.A))
        return self.residual_sums() / T

    def raw_l1(self) -> float:
        """T × score ℓ1 (somme non normalisée)"""
        return float(np.abs(self.residual_sums()).sum())


Transcript = Union[CalibrationLedger, Sequence]


def _ledger(transcript: Transcript, grid: EpsilonGrid) -> CalibrationLedger:
    if isinstance(transcript, CalibrationLedger):
        if transcript.grid is not grid and (transcript.grid.A, transcript.grid.m) != (grid.A, grid.m):
            raise ParameterError("Agrégats construits sur une autre grille")
        return transcript
    return CalibrationLedger.from_records(transcript, grid)


def bin_distributions(transcript: Transcript, grid: EpsilonGrid) -> np.ndarray:
    """ρ_T(k) : distribution empirique des issues quand p_k a été prévu (p_k si jamais prévu)"""
    ledger = _ledger(transcript, grid)
    rho = np.array(grid.points, dtype=float)
    used = ledger.counts > 0
    rho[used] = ledger.outcome_counts[used] / ledger.counts[used, None]
    return rho


def l1_score(transcript: Transcript, grid: EpsilonGrid) -> float:
    """Σ_k ‖(1/T) Σ_t 1{K_t = k}(p_k − δ_{a_t})‖₁ ; 0 pour une transcription vide"""
    ledger = _ledger(transcript, grid)
    T = ledger.T
    if T == 0:
        return 0.0
    return ledger.raw_l1() / T


def brier_score(transcript: Transcript, grid: EpsilonGrid) -> float:
    """Σ_k ‖ρ_T(k) − p_k‖₂² · (n_k / T) ; les cases vides ne contribuent pas"""
    ledger = _ledger(transcript, grid)
    T = ledger.T
    if T == 0:
        return 0.0
    rho = bin_distributions(ledger, grid)
    frequencies = ledger.counts / T
    return float((((rho - grid.points) ** 2).sum(axis=1) * frequencies).sum())


def bound_U(epsilon: float, T: int, delta: float = DEFAULT_BOUND_DELTA, gamma_const: float = DEFAULT_GAMMA,
            gamma_prime_const: Optional[float] = None, A: int = 2, n_epsilon: Optional[int] = None) -> float:
    """U_{ε,T,δ} = ε + γγ′√A · sqrt(ln(1/δ) / (ε^{A−1} T))

    Par défaut γ′ = N_ε · ε^{A−1}, N_ε étant celui de la grille effectivement construite.
    """
    if not epsilon > 0 or not gamma_const > 0 or A < 2:
        raise ParameterError("ε, γ et A doivent être positifs (A ≥ 2)")
    if not 0 < delta < 1:
        raise ParameterError(f"δ doit appartenir à ]0, 1[ (reçu {delta!r})")
    if T < 0:
        raise ParameterError(f"Nombre de tours négatif: {T}")
    if gamma_prime_const is None:
        if n_epsilon is None:
            n_epsilon = build_grid(A, epsilon).N_epsilon
        gamma_prime_const = n_epsilon * epsilon ** (A - 1)
    if T == 0:
        return math.inf
    return epsilon + gamma_const * gamma_prime_const * math.sqrt(A) * math.sqrt(
        math.log(1.0 / delta) / (epsilon ** (A - 1) * T)
    )


def l2_distance_to_C(transcript: Transcript, grid: EpsilonGrid, epsilon: Optional[float] = None,
                     method: str = SORT_EXACT) -> float:
    """‖m̄_T − Π_C(m̄_T)‖₂, m̄_T étant recalculé à partir de la transcription"""
    ledger = _ledger(transcript, grid)
    target = TargetSet(epsilon=grid.epsilon if epsilon is None else epsilon, dimension=grid.dimension)
    return distance_to_target(target, ledger.average_payoff(), method)


def ball_calibration_score(forecasts: np.ndarray, outcomes: Sequence[int], center: Sequence[float],
                           radius: float) -> float:
    """‖(1/T) Σ_t 1{‖P_t − p‖₁ ≤ r}(P_t − δ_{a_t})‖₁ pour un centre p et un rayon r"""
    forecasts = np.atleast_2d(np.asarray(forecasts, dtype=float))
    outcomes = np.asarray(outcomes, dtype=np.int64)
    if forecasts.size == 0 or outcomes.size == 0:
        return 0.0
    if forecasts.shape[0] != outcomes.size:
        raise ParameterError("Autant de prévisions que d'issues sont attendues")
    center = np.asarray(center, dtype=float)
    inside = np.abs(forecasts - center).sum(axis=1) <= radius
    residual = forecasts[inside].sum(axis=0)
    np.add.at(residual, outcomes[inside], -1.0)
    return float(np.abs(residual).sum() / outcomes.size)


def brier_reference_bound(epsilon: float, T: int, delta: float = DEFAULT_BOUND_DELTA) -> float:
    """ε + (1/ε)·sqrt((ln(1/ε) + ln(1/δ)) / T), ordre de grandeur des prévisionnistes à regret interne (A = 2)"""
    if T <= 0:
        return math.inf
    return epsilon + math.sqrt((math.log(1.0 / epsilon) + math.log(1.0 / delta)) / T) / epsilon


def bound_U_doubling(regimes: Sequence[Tuple[int, float, int]], A: int, T: int,
                     gamma_const: float = DEFAULT_GAMMA) -> float:
    """(1/T) Σ_r T_r · U_{ε_r, T_r, δ_{r,T}} avec δ_{r,T} = 1/(2^r T²)

    `regimes` liste, pour r = 1, 2, …, les triplets (tours joués, ε_r, N_{ε_r}).
    """
    if T <= 0:
        return math.inf
    total = 0.0
    for r, (played, epsilon, n_epsilon) in enumerate(regimes, start=1):
        if played == 0:
            continue
        delta_r = 1.0 / (2.0 ** r * float(T) ** 2)
        total += played * bound_U(epsilon, played, delta_r, gamma_const, A=A, n_epsilon=n_epsilon)
    return total / T


def rate_normalized_score(score: float, T: int, A: int) -> float:
    """T^{1/(A+1)} / sqrt(ln T) · score"""
    if T < 2:
        return 0.0
    return score * T ** (1.0 / (A + 1)) / math.sqrt(math.log(T))


@dataclass
class BinReport:
    k: int
    count: int
    frequency: float
    rho: List[float]
    block_score: float


@dataclass
class ScoreReport:
    """Rapport de score d'une transcription"""
    T: int
    l1_score: float
    brier_score: float
    bound: float
    l2_distance_to_C: float
    per_bin: List[BinReport] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "l1_score": self.l1_score,
            "brier_score": self.brier_score,
            "bound_U": self.bound,
            "l2_distance_to_C": self.l2_distance_to_C,
            "per_bin": [vars(b) for b in self.per_bin],
        }


def score_report(transcript: Transcript, grid: EpsilonGrid, delta: float = DEFAULT_BOUND_DELTA,
                 gamma_const: float = DEFAULT_GAMMA, include_bins: bool = True) -> ScoreReport:
    """Rapport complet : scores, bornes et détail par case"""
    ledger = _ledger(transcript, grid)
    T = ledger.T
    per_bin: List[BinReport] = []
    if include_bins:
        rho = bin_distributions(ledger, grid)
        blocks = np.abs(ledger.residual_sums()).sum(axis=1) / T if T else np.zeros(grid.N_epsilon)
        for k in range(grid.N_epsilon):
            count = int(ledger.counts[k])
            per_bin.append(BinReport(k=k, count=count, frequency=count / T if T else 0.0,
                                     rho=rho[k].tolist(), block_score=float(blocks[k])))
    return ScoreReport(
        T=T,
        l1_score=l1_score(ledger, grid),
        brier_score=brier_score(ledger, grid),
        bound=bound_U(grid.epsilon, T, delta, gamma_const, A=grid.A, n_epsilon=grid.N_epsilon),
        l2_distance_to_C=l2_distance_to_C(ledger, grid),
        per_bin=per_bin,
    )
