"""
Oracle de Blackwell

Étant donnée la moyenne courante m̄, calcule une action mixte ψ sur les
indices de la grille telle que, pour toute issue a,

    (m̄ − Π_C(m̄)) · (m(ψ, a) − Π_C(m̄)) ≤ 0

en résolvant min_ψ max_a Σ_k ψ_k γ_{k,a}, exactement (programmation
linéaire) ou approximativement (poids multiplicatifs).
"""
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy.optimize import linprog

from calibron.core.grid import EpsilonGrid
from calibron.core.payoff import BlockVector, PayoffAverage
from calibron.core.projection import SORT_EXACT, METHODS as PROJECTION_METHODS, TargetSet, member, project_with_level
from calibron.utils.error_handling import ParameterError, SolverError
from calibron.utils.logging import get_logger

logger = get_logger(__name__)

EXACT = "exact"
MULTIPLICATIVE_WEIGHTS = "mw"
DEFAULT_RELATIVE_TOL = 1e-9
POLICY_TOLERANCE = 1e-9

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True, eq=False)
class Policy:
    """Distribution ψ sur les indices de la grille"""
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1 or weights.size < 1:
            raise ParameterError(f"Politique de forme invalide {weights.shape}")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ParameterError("Une politique doit avoir des poids finis et positifs")
        if abs(weights.sum() - 1.0) > POLICY_TOLERANCE:
            raise ParameterError(f"Les poids d'une politique doivent sommer à 1 (somme {weights.sum()!r})")
        weights.setflags(write=False)
        object.__setattr__(self, 'weights', weights)

    @classmethod
    def uniform(cls, size: int) -> 'Policy':
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def pure(cls, k: int, size: int) -> 'Policy':
        weights = np.zeros(size)
        weights[k] = 1.0
        return cls(weights)

    @classmethod
    def from_unnormalized(cls, weights: np.ndarray) -> 'Policy':
        """Normalise des poids positifs (après écrêtage des négatifs numériques)"""
        weights = np.maximum(np.asarray(weights, dtype=float), 0.0)
        total = weights.sum()
        if total <= 0:
            raise ParameterError("Impossible de normaliser des poids tous nuls")
        return cls(weights / total)

    @property
    def size(self) -> int:
        return int(self.weights.size)


@dataclass(frozen=True, eq=False)
class GameMatrix:
    """Matrice γ (N_ε × A) du jeu scalaire à résoudre"""
    gamma: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.ndim != 2:
            raise ParameterError(f"Matrice de jeu de forme invalide {gamma.shape}")
        if not np.all(np.isfinite(gamma)):
            raise ParameterError("La matrice de jeu contient des valeurs non finies")
        gamma.setflags(write=False)
        object.__setattr__(self, 'gamma', gamma)

    @property
    def scale(self) -> float:
        """G = max_{k,a} |γ_{k,a}|"""
        return float(np.abs(self.gamma).max()) if self.gamma.size else 0.0

    @property
    def shape(self) -> Tuple[int, int]:
        return self.gamma.shape

    def column_values(self, policy: Union[Policy, np.ndarray]) -> np.ndarray:
        """(ψᵀγ)_a pour chaque issue a"""
        weights = policy.weights if isinstance(policy, Policy) else np.asarray(policy, dtype=float)
        return weights @ self.gamma

    def value_of(self, policy: Union[Policy, np.ndarray]) -> float:
        """max_a (ψᵀγ)_a"""
        return float(self.column_values(policy).max())

    def lower_bound(self, column_mixture: np.ndarray) -> float:
        """min_k (γ q)_k : minorant de la valeur du jeu"""
        return float((self.gamma @ column_mixture).min())


@dataclass(frozen=True)
class MinimaxMethod:
    """Configuration du calcul de ψ_t"""
    kind: str = EXACT
    delta: float = 0.05
    tol: float = DEFAULT_RELATIVE_TOL
    projection: str = SORT_EXACT

    def __post_init__(self):
        if self.kind not in (EXACT, MULTIPLICATIVE_WEIGHTS):
            raise ParameterError(f"Méthode minimax inconnue: {self.kind!r}")
        if self.kind == MULTIPLICATIVE_WEIGHTS and not 0 < self.delta < 1:
            raise ParameterError(f"δ doit appartenir à ]0, 1[ (reçu {self.delta!r})")
        if not self.tol > 0:
            raise ParameterError(f"La tolérance doit être > 0 (reçu {self.tol!r})")
        if self.projection not in PROJECTION_METHODS:
            raise ParameterError(f"Méthode de projection inconnue: {self.projection!r}")

    @classmethod
    def parse(cls, text: str, tol: float = DEFAULT_RELATIVE_TOL, projection: str = SORT_EXACT) -> 'MinimaxMethod':
        """'exact', 'mw' ou 'mw:<delta>'"""
        kind, _, argument = text.partition(":")
        if kind == MULTIPLICATIVE_WEIGHTS and argument:
            try:
                delta = float(argument)
            except ValueError:
                raise ParameterError(f"δ invalide dans {text!r}") from None
            return cls(kind, delta=delta, tol=tol, projection=projection)
        return cls(kind, tol=tol, projection=projection)

    def allowed_violation(self, scale: float) -> float:
        """Violation admise de la condition de Blackwell pour une matrice d'échelle G"""
        if self.kind == EXACT:
            return self.tol * scale
        return (self.delta + self.tol) * scale

    @property
    def label(self) -> str:
        return EXACT if self.kind == EXACT else f"{MULTIPLICATIVE_WEIGHTS}({self.delta:g})"


@dataclass
class BlackwellDiagnostics:
    """Diagnostic d'un tour : distance à C, échelle et violation atteinte"""
    in_target: bool
    distance: float = 0.0
    mu: float = 0.0
    scale: float = 0.0
    value: float = 0.0
    threshold: float = 0.0
    violation: float = 0.0
    allowed: float = 0.0
    elapsed: float = 0.0
    method: str = field(default=EXACT)

    @property
    def within_tolerance(self) -> bool:
        return self.violation <= self.allowed + 1e-12

    def to_dict(self) -> dict:
        return {
            "in_target": self.in_target,
            "distance": self.distance,
            "mu": self.mu,
            "scale": self.scale,
            "value": self.value,
            "threshold": self.threshold,
            "violation": self.violation,
            "allowed": self.allowed,
            "elapsed": self.elapsed,
            "method": self.method,
        }


def _dense(values: Union[PayoffAverage, BlockVector, np.ndarray], grid: EpsilonGrid) -> np.ndarray:
    if isinstance(values, PayoffAverage):
        dense = values.avg
    elif isinstance(values, BlockVector):
        dense = values.to_array()
    else:
        dense = np.asarray(values, dtype=float)
    if dense.size != grid.dimension:
        raise ParameterError(f"Dimension {dense.size} différente de A·N_ε = {grid.dimension}")
    return dense.reshape(grid.N_epsilon, grid.A)


def compute_gamma(avg: Union[PayoffAverage, BlockVector, np.ndarray],
                  proj: Union[BlockVector, np.ndarray], grid: EpsilonGrid) -> GameMatrix:
    """γ_{k,a} = d_k · (p_k − δ_a) = d_k · p_k − d_{k,a}, avec d = m̄ − Π_C(m̄)"""
    direction = _dense(avg, grid) - _dense(proj, grid)
    along_points = np.einsum("ka,ka->k", direction, grid.points)
    return GameMatrix(along_points[:, None] - direction)


def _solve_lp(normalized: np.ndarray, presolve: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """min v s.c. γ̃ᵀψ ≤ v, Σψ = 1, ψ ≥ 0 ; retourne ψ et le mélange dual des colonnes"""
    n_rows, n_cols = normalized.shape
    c = np.zeros(n_rows + 1)
    c[-1] = 1.0
    A_ub = np.hstack([normalized.T, -np.ones((n_cols, 1))])
    b_ub = np.zeros(n_cols)
    A_eq = np.zeros((1, n_rows + 1))
    A_eq[0, :n_rows] = 1.0
    b_eq = np.array([1.0])
    bounds = [(0, None)] * n_rows + [(None, None)]

    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs-ds", options={**_HIGHS_OPTIONS, "presolve": presolve})
    if not res.success:
        raise SolverError(f"Échec du programme linéaire: {res.message}")

    psi = np.maximum(res.x[:n_rows], 0.0)
    psi /= psi.sum()
    # Multiplicateurs des contraintes ≤ : négatifs pour une minimisation
    duals = np.maximum(-np.asarray(res.ineqlin.marginals, dtype=float), 0.0)
    if duals.sum() <= 0:
        duals = np.zeros(n_cols)
        duals[int(np.argmax(psi @ normalized))] = 1.0
    return psi, duals / duals.sum()


def solve_minimax_exact(game: GameMatrix, tol: Optional[float] = None) -> Policy:
    """Politique minimax exacte, certifiée par la paire duale

    Vérifie max_a (ψᵀγ)_a − min_k (γ q)_k ≤ tol, où q est le mélange dual des
    colonnes. Par défaut tol = 1e-9·G.
    """
    n_rows, _ = game.shape
    scale = game.scale
    if tol is not None and not tol > 0:
        raise ParameterError(f"La tolérance doit être > 0 (reçu {tol!r})")
    if scale == 0.0:
        return Policy.uniform(n_rows)

    relative_tol = DEFAULT_RELATIVE_TOL if tol is None else tol / scale
    normalized = game.gamma / scale

    gap = math.inf
    for presolve in (True, False):
        psi, duals = _solve_lp(normalized, presolve=presolve)
        upper = float((psi @ normalized).max())
        lower = float((normalized @ duals).min())
        gap = upper - lower
        if gap <= relative_tol:
            return Policy(psi)
        logger.debug("Certificat minimax insuffisant, nouvel essai sans présolution",
                     extra={"gap": gap * scale, "tol": relative_tol * scale})

    raise SolverError(f"Certificat minimax non vérifié: écart {gap * scale:.3e} "
                      f"> tolérance {relative_tol * scale:.3e}")


def mw_iterations(n_rows: int, delta: float) -> int:
    """T₀ = ceil(4·ln(max(N_ε, 2)) / δ²)"""
    return math.ceil(4.0 * math.log(max(n_rows, 2)) / delta ** 2)


def solve_minimax_mw(game: GameMatrix, delta: float) -> Policy:
    """Politique approchée par poids multiplicatifs

    Les lignes jouent Hedge sur les pertes γ/G, la colonne adverse est la
    meilleure réponse au mélange courant. La moyenne des itérés vérifie
    max_a (ψ̄ᵀγ)_a ≤ v* + δ·G.
    """
    if not 0 < delta < 1:
        raise ParameterError(f"δ doit appartenir à ]0, 1[ (reçu {delta!r})")
    n_rows, _ = game.shape
    scale = game.scale
    if scale == 0.0:
        return Policy.uniform(n_rows)

    losses = game.gamma / scale
    iterations = mw_iterations(n_rows, delta)
    eta = math.sqrt(math.log(max(n_rows, 2)) / iterations)

    log_weights = np.zeros(n_rows)
    accumulated = np.zeros(n_rows)
    for _ in range(iterations):
        weights = np.exp(log_weights - log_weights.max())
        weights /= weights.sum()
        accumulated += weights
        # np.argmax retient la plus petite issue en cas d'égalité
        column = int(np.argmax(weights @ losses))
        log_weights -= eta * losses[:, column]

    return Policy.from_unnormalized(accumulated / iterations)


def complexity_estimate(method: MinimaxMethod, n_rows: int, n_outcomes: int) -> int:
    """Unités de travail par tour : A·N_ε par itération du solveur"""
    if method.kind == MULTIPLICATIVE_WEIGHTS:
        return n_outcomes * n_rows * mw_iterations(n_rows, method.delta)
    return n_outcomes * n_rows * n_rows


def blackwell_policy(avg: Union[PayoffAverage, np.ndarray], C: TargetSet, grid: EpsilonGrid,
                     method: MinimaxMethod) -> Tuple[Policy, BlackwellDiagnostics]:
    """ψ_t satisfaisant la condition de Blackwell, avec son diagnostic"""
    started = time.perf_counter()
    average = _dense(avg, grid)

    if member(C, average):
        diagnostics = BlackwellDiagnostics(in_target=True, method=method.label,
                                           elapsed=time.perf_counter() - started)
        return Policy.uniform(grid.N_epsilon), diagnostics

    projected, mu = project_with_level(C, average, method.projection)
    game = compute_gamma(average, projected, grid)
    scale = game.scale

    if method.kind == EXACT:
        policy = solve_minimax_exact(game, method.tol * scale if scale > 0 else None)
    else:
        policy = solve_minimax_mw(game, method.delta)

    direction = average - projected
    value = game.value_of(policy)
    threshold = float(np.sum(direction * projected))
    diagnostics = BlackwellDiagnostics(
        in_target=False,
        distance=float(np.linalg.norm(direction)),
        mu=mu,
        scale=scale,
        value=value,
        threshold=threshold,
        violation=value - threshold,
        allowed=method.allowed_violation(scale),
        elapsed=time.perf_counter() - started,
        method=method.label,
    )
    return policy, diagnostics
