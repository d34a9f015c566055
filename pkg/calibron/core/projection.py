"""
Projection euclidienne sur l'ensemble cible C

C = { x ∈ R^{A·N_ε} : Σ_k ‖x_k‖₁ ≤ ε } est la boule ℓ1 de rayon ε. La
projection est un seuillage doux y_i(μ) = s_i (s_i x_i − μ)⁺ où μ* est le
plus petit niveau μ ≥ 0 rendant y(μ) admissible.

Deux méthodes calculent μ* :
  - sort_exact : tri décroissant des |x_i| et recherche du niveau de seuil,
  - binary_search : dichotomie sur μ ∈ [0, max_i |x_i|] à la précision δ_proj.
"""
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from calibron.core.payoff import BlockVector
from calibron.utils.error_handling import ParameterError

MEMBERSHIP_TOLERANCE = 1e-12
DEFAULT_BINARY_PRECISION = 1e-10

SORT_EXACT = "sort_exact"
BINARY_SEARCH = "binary_search"
METHODS = (SORT_EXACT, BINARY_SEARCH)

VectorLike = Union[BlockVector, np.ndarray]


@dataclass(frozen=True)
class TargetSet:
    """Boule ℓ1 de rayon ε dans R^{A·N_ε}"""
    epsilon: float
    dimension: int

    def __post_init__(self):
        if not np.isfinite(self.epsilon) or self.epsilon <= 0:
            raise ParameterError(f"Le rayon de C doit être > 0 (reçu {self.epsilon!r})")
        if self.dimension < 1:
            raise ParameterError(f"Dimension de C invalide: {self.dimension}")

    @classmethod
    def for_grid(cls, grid) -> 'TargetSet':
        return cls(epsilon=grid.epsilon, dimension=grid.dimension)


def _as_array(C: TargetSet, x: VectorLike) -> np.ndarray:
    values = x.to_array() if isinstance(x, BlockVector) else np.asarray(x, dtype=float)
    if values.size != C.dimension:
        raise ParameterError(f"Dimension {values.size} différente de celle de C ({C.dimension})")
    return values


def sign(x: np.ndarray) -> np.ndarray:
    """Signe avec la convention sign(0) = −1"""
    return np.where(x > 0, 1.0, -1.0)


def member(C: TargetSet, x: VectorLike) -> bool:
    """x ∈ C, en temps linéaire en A·N_ε"""
    values = _as_array(C, x)
    return bool(np.abs(values).sum() <= C.epsilon + MEMBERSHIP_TOLERANCE)


def _level_sort_exact(magnitudes: np.ndarray, epsilon: float) -> float:
    """Niveau μ* par tri (seuillage doux exact)"""
    ordered = np.sort(magnitudes)[::-1]
    cumulative = np.cumsum(ordered)
    ranks = np.arange(1, ordered.size + 1)
    active = ordered - (cumulative - epsilon) / ranks > 0
    rho = int(np.flatnonzero(active).max()) + 1
    return max(0.0, float((cumulative[rho - 1] - epsilon) / rho))


def _level_binary_search(magnitudes: np.ndarray, epsilon: float, precision: float) -> float:
    """Niveau μ* par dichotomie ; la borne haute reste toujours admissible"""
    low, high = 0.0, float(magnitudes.max())
    while high - low >= precision:
        middle = 0.5 * (low + high)
        if not low < middle < high:
            # plus de progression possible en virgule flottante
            break
        if np.maximum(magnitudes - middle, 0.0).sum() <= epsilon:
            high = middle
        else:
            low = middle
    return high


def threshold_level(C: TargetSet, x: VectorLike, method: str = SORT_EXACT,
                    precision: float = DEFAULT_BINARY_PRECISION) -> float:
    """μ* : 0 si x ∈ C, sinon le niveau de seuillage doux"""
    values = _as_array(C, x)
    if not np.all(np.isfinite(values)):
        raise ParameterError("La projection exige un vecteur à coordonnées finies")
    if method not in METHODS:
        raise ParameterError(f"Méthode de projection inconnue: {method!r}")
    magnitudes = np.abs(values).reshape(-1)
    if magnitudes.sum() <= C.epsilon + MEMBERSHIP_TOLERANCE:
        return 0.0
    if method == SORT_EXACT:
        return _level_sort_exact(magnitudes, C.epsilon)
    if precision <= 0:
        raise ParameterError(f"Précision de dichotomie invalide: {precision!r}")
    return _level_binary_search(magnitudes, C.epsilon, precision)


def project_with_level(C: TargetSet, x: VectorLike, method: str = SORT_EXACT,
                       precision: float = DEFAULT_BINARY_PRECISION) -> Tuple[np.ndarray, float]:
    """Π_C(x) (même forme que x, en tableau) et le niveau μ*"""
    values = _as_array(C, x)
    mu = threshold_level(C, values, method, precision)
    if mu == 0.0:
        return values.copy(), 0.0
    s = sign(values)
    return s * np.maximum(s * values - mu, 0.0), mu


def project(C: TargetSet, x: VectorLike, method: str = SORT_EXACT,
            precision: float = DEFAULT_BINARY_PRECISION) -> VectorLike:
    """Projection euclidienne de x sur C

    Retourne un BlockVector si x en est un, sinon un tableau de même forme.
    """
    projected, _ = project_with_level(C, x, method, precision)
    if isinstance(x, BlockVector):
        return BlockVector.from_array(projected.reshape(x.n_blocks, x.A))
    return projected


def distance_to_target(C: TargetSet, x: VectorLike, method: str = SORT_EXACT) -> float:
    """‖x − Π_C(x)‖₂"""
    values = _as_array(C, x)
    projected, _ = project_with_level(C, values, method)
    return float(np.linalg.norm((values - projected).reshape(-1)))
