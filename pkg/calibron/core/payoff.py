"""
Paiements vectoriels du jeu de calibration

m(k, a) vit dans R^{A·N_ε}, vu comme N_ε blocs de R^A : seul le bloc k est
non nul et vaut p_k − δ_a. La moyenne m̄_T est tenue sous forme de somme
cumulée, divisée par T à la lecture.
"""
from dataclasses import dataclass, field
from typing import Dict, Mapping, Union

import numpy as np

from calibron.core.grid import EpsilonGrid
from calibron.utils.error_handling import ParameterError


@dataclass(frozen=True, eq=False)
class BlockVector:
    """Élément de R^{A·N_ε} stocké par blocs, de façon creuse"""
    A: int
    n_blocks: int
    blocks: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        frozen: Dict[int, np.ndarray] = {}
        for k, block in self.blocks.items():
            if not 0 <= k < self.n_blocks:
                raise ParameterError(f"Bloc {k} hors de [0, {self.n_blocks})")
            values = np.array(block, dtype=float)
            if values.shape != (self.A,):
                raise ParameterError(f"Le bloc {k} doit être de longueur {self.A}")
            values.setflags(write=False)
            frozen[int(k)] = values
        object.__setattr__(self, 'blocks', frozen)

    @property
    def dimension(self) -> int:
        return self.A * self.n_blocks

    @classmethod
    def zeros(cls, A: int, n_blocks: int) -> 'BlockVector':
        return cls(A, n_blocks, {})

    @classmethod
    def from_array(cls, values: np.ndarray) -> 'BlockVector':
        """Construit un vecteur creux à partir d'un tableau (N_ε, A), sans les blocs nuls"""
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise ParameterError(f"Tableau (N_ε, A) attendu, forme reçue {values.shape}")
        nonzero = np.flatnonzero(np.any(values != 0, axis=1))
        return cls(values.shape[1], values.shape[0], {int(k): values[k] for k in nonzero})

    def block(self, k: int) -> np.ndarray:
        """Bloc k (composantes k·A … (k+1)·A − 1)"""
        if not 0 <= k < self.n_blocks:
            raise ParameterError(f"Bloc {k} hors de [0, {self.n_blocks})")
        values = self.blocks.get(k)
        return values if values is not None else np.zeros(self.A)

    def to_array(self) -> np.ndarray:
        """Forme dense (N_ε, A)"""
        dense = np.zeros((self.n_blocks, self.A))
        for k, values in self.blocks.items():
            dense[k] = values
        return dense

    def flat(self) -> np.ndarray:
        return self.to_array().reshape(-1)

    def norm1(self) -> float:
        return float(sum(np.abs(values).sum() for values in self.blocks.values()))

    def norm2(self) -> float:
        return float(np.sqrt(sum(values @ values for values in self.blocks.values())))

    def dot(self, other: Union['BlockVector', np.ndarray]) -> float:
        """Produit scalaire dans R^{A·N_ε}, en O(A) par bloc non nul"""
        if isinstance(other, BlockVector):
            dense_other = other.to_array()
        else:
            dense_other = np.asarray(other, dtype=float).reshape(self.n_blocks, self.A)
        return float(sum(values @ dense_other[k] for k, values in self.blocks.items()))


def payoff_vector(grid: EpsilonGrid, k: int, a: int) -> BlockVector:
    """m(k, a) : un seul bloc, en position k, égal à p_k − δ_a"""
    grid.check_index(k)
    grid.check_outcome(a)
    block = np.array(grid.points[k], dtype=float)
    block[a] -= 1.0
    return BlockVector(grid.A, grid.N_epsilon, {int(k): block})


class PayoffAverage:
    """Moyenne courante m̄_T des paiements vectoriels

    La somme cumulée est stockée et divisée par T à la lecture, ce qui évite
    la dérive d'une mise à jour incrémentale de la moyenne.
    """

    def __init__(self, grid: EpsilonGrid):
        self.A = grid.A
        self.n_blocks = grid.N_epsilon
        self.sums = np.zeros((self.n_blocks, self.A))
        self.counts = np.zeros(self.n_blocks, dtype=np.int64)
        self.T = 0

    @property
    def avg(self) -> np.ndarray:
        """m̄_T sous forme dense (N_ε, A) ; vecteur nul quand T = 0"""
        if self.T == 0:
            return np.zeros_like(self.sums)
        return self.sums / self.T

    def block_l1_norms(self) -> np.ndarray:
        """‖m̄_{T,k}‖₁ pour chaque bloc k"""
        return np.abs(self.avg).sum(axis=1)

    def update(self, grid: EpsilonGrid, k: int, a: int) -> 'PayoffAverage':
        self._check_grid(grid)
        grid.check_index(k)
        grid.check_outcome(a)
        self.sums[k] += grid.points[k]
        self.sums[k, a] -= 1.0
        self.counts[k] += 1
        self.T += 1
        return self

    def recompute(self, grid: EpsilonGrid, ks: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
        """Recalcule m̄_T en bloc à partir d'une transcription (pour vérification)"""
        self._check_grid(grid)
        ks = np.asarray(ks, dtype=np.int64)
        outcomes = np.asarray(outcomes, dtype=np.int64)
        dense = np.zeros_like(self.sums)
        if len(ks) == 0:
            return dense
        np.add.at(dense, ks, grid.points[ks])
        np.add.at(dense, (ks, outcomes), -1.0)
        return dense / len(ks)

    def _check_grid(self, grid: EpsilonGrid) -> None:
        if grid.A != self.A or grid.N_epsilon != self.n_blocks:
            raise ParameterError(
                f"Grille ({grid.A}, {grid.N_epsilon}) incompatible avec la moyenne ({self.A}, {self.n_blocks})"
            )


def update_average(state: PayoffAverage, grid: EpsilonGrid, k: int, a: int) -> PayoffAverage:
    """Ajoute m(k, a) à la moyenne : T augmente de 1 et seul le bloc k change"""
    return state.update(grid, k, a)
