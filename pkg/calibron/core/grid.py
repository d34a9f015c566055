"""
Grilles ε du simplexe des probabilités

Une grille de dénominateur m contient toutes les distributions dont les
coordonnées sont des multiples entiers de 1/m. Avec m = ceil(A / ε), tout
point du simplexe est à distance ℓ1 au plus ε d'un point de la grille.
"""
import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Sequence, Tuple, Union

import numpy as np

from calibron.utils.error_handling import ParameterError

PROBABILITY_TOLERANCE = 1e-9

ArrayLike = Union[Sequence[float], np.ndarray]


@dataclass(frozen=True, eq=False)
class Distribution:
    """Distribution de probabilité sur les issues 0..A-1"""
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size < 1:
            raise ParameterError(f"Une distribution doit être un vecteur non vide (forme {probs.shape})")
        if not np.all(np.isfinite(probs)):
            raise ParameterError("Une distribution doit avoir des coordonnées finies")
        if np.any(probs < 0):
            raise ParameterError(f"Coordonnées négatives dans la distribution: {probs}")
        if abs(probs.sum() - 1.0) > PROBABILITY_TOLERANCE:
            raise ParameterError(f"La distribution doit sommer à 1 (somme {probs.sum()!r})")
        probs.setflags(write=False)
        object.__setattr__(self, 'probs', probs)

    @classmethod
    def dirac(cls, a: int, A: int) -> 'Distribution':
        """Masse de Dirac δ_a"""
        if not 0 <= a < A:
            raise ParameterError(f"Issue {a} hors de l'alphabet de taille {A}")
        probs = np.zeros(A)
        probs[a] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, A: int) -> 'Distribution':
        return cls(np.full(A, 1.0 / A))

    @classmethod
    def empirical(cls, outcomes: Iterable[int], A: int) -> 'Distribution':
        """Distribution empirique des issues (uniforme si l'historique est vide)"""
        counts = np.bincount(np.fromiter(outcomes, dtype=int), minlength=A).astype(float)
        if counts.size != A:
            raise ParameterError(f"Issue hors de l'alphabet de taille {A}")
        total = counts.sum()
        if total == 0:
            return cls.uniform(A)
        return cls(counts / total)

    @property
    def A(self) -> int:
        return int(self.probs.size)

    def l1_distance(self, other: Union['Distribution', ArrayLike]) -> float:
        other_probs = other.probs if isinstance(other, Distribution) else np.asarray(other, dtype=float)
        return float(np.abs(self.probs - other_probs).sum())

    def to_list(self) -> list:
        return self.probs.tolist()


def _as_probs(q: Union[Distribution, ArrayLike]) -> np.ndarray:
    if isinstance(q, Distribution):
        return q.probs
    return Distribution(q).probs


@dataclass(frozen=True, eq=False)
class EpsilonGrid:
    """ε-grille uniforme de dénominateur m sur Δ(𝒜)

    Les points sont ordonnés lexicographiquement sur leurs numérateurs entiers,
    l'index k (à partir de 0) est donc stable d'une exécution à l'autre.
    """
    A: int
    epsilon: float
    m: int
    numerators: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    _index: Dict[Tuple[int, ...], int] = field(repr=False, compare=False)

    @property
    def N_epsilon(self) -> int:
        return int(self.points.shape[0])

    @property
    def dimension(self) -> int:
        """Dimension A·N_ε de l'espace des paiements"""
        return self.A * self.N_epsilon

    @property
    def covering_radius(self) -> float:
        """Rayon de recouvrement garanti A/m (≤ ε)"""
        return self.A / self.m

    def point(self, k: int) -> Distribution:
        self.check_index(k)
        return Distribution(self.points[k])

    def index_of(self, numerators: Sequence[int]) -> int:
        try:
            return self._index[tuple(int(n) for n in numerators)]
        except KeyError:
            raise ParameterError(f"Numérateurs hors de la grille: {tuple(numerators)}") from None

    def check_index(self, k: int) -> None:
        if not 0 <= int(k) < self.N_epsilon:
            raise ParameterError(f"Index de grille {k} hors de [0, {self.N_epsilon})")

    def check_outcome(self, a: int) -> None:
        if not 0 <= int(a) < self.A:
            raise ParameterError(f"Issue {a} hors de l'alphabet de taille {self.A}")

    def distances(self, q: Union[Distribution, ArrayLike]) -> np.ndarray:
        """Distances ℓ1 de q à tous les points de la grille"""
        probs = _as_probs(q)
        if probs.size != self.A:
            raise ParameterError(f"Dimension {probs.size} différente de A={self.A}")
        return np.abs(self.points - probs).sum(axis=1)

    def nearest(self, q: Union[Distribution, ArrayLike]) -> int:
        return nearest(self, q)


def _compositions(m: int, A: int) -> np.ndarray:
    """Toutes les compositions de m en A parts, dans l'ordre lexicographique"""
    rows = []
    # Étoiles et barres : les positions des barres croissantes donnent l'ordre lexicographique
    for bars in itertools.combinations(range(m + A - 1), A - 1):
        previous = -1
        parts = []
        for bar in bars:
            parts.append(bar - previous - 1)
            previous = bar
        parts.append(m + A - 2 - previous)
        rows.append(parts)
    return np.asarray(rows, dtype=np.int64)


def build_grid(A: int, epsilon: float) -> EpsilonGrid:
    """Construit l'ε-grille de dénominateur m = ceil(A / ε)"""
    if isinstance(A, bool) or not isinstance(A, (int, np.integer)) or A < 2:
        raise ParameterError(f"Le nombre d'issues doit être un entier ≥ 2 (reçu {A!r})")
    if not (isinstance(epsilon, (int, float, np.floating)) and math.isfinite(epsilon)) or not 0 < epsilon <= 2:
        raise ParameterError(f"ε doit appartenir à ]0, 2] (reçu {epsilon!r})")

    A = int(A)
    # Tolérance absorbant l'arrondi de A/ε quand le quotient est entier
    m = max(1, math.ceil(A / float(epsilon) - 1e-12))
    numerators = _compositions(m, A)
    numerators.setflags(write=False)
    points = numerators / m
    points.setflags(write=False)
    index = {tuple(row): k for k, row in enumerate(numerators.tolist())}
    return EpsilonGrid(A=A, epsilon=float(epsilon), m=m, numerators=numerators, points=points, _index=index)


def round_largest_remainder(q: np.ndarray, m: int) -> np.ndarray:
    """Arrondi à plus fort reste de m·q en entiers de somme m

    Chaque coordonnée est tronquée, puis la masse restante va aux plus grandes
    parties fractionnaires (à égalité, l'index le plus bas gagne).
    """
    scaled = m * q
    floors = np.floor(scaled).astype(np.int64)
    fractions = scaled - floors
    remaining = m - int(floors.sum())
    # Tri stable : parties fractionnaires décroissantes, puis index croissant
    order = np.lexsort((np.arange(q.size), -fractions))
    if remaining > 0:
        floors[order[:remaining]] += 1
    while remaining < 0:
        # Seulement si q dépasse 1 à cause des erreurs d'arrondi
        candidates = [i for i in order[::-1] if floors[i] > 0]
        floors[candidates[0]] -= 1
        remaining += 1
    return floors


def nearest(grid: EpsilonGrid, q: Union[Distribution, ArrayLike]) -> int:
    """Index du point de la grille obtenu par arrondi à plus fort reste de q"""
    probs = _as_probs(q)
    if probs.size != grid.A:
        raise ParameterError(f"Dimension {probs.size} différente de A={grid.A}")
    numerators = round_largest_remainder(probs, grid.m)
    return grid.index_of(numerators)
