"""
Stratégies de la Nature

La Nature ne voit que le passé (P_s, a_s), s < t. La prévision courante n'est
transmise qu'aux stratégies qui l'exigent (contrarian), et seulement face à un
prévisionniste déclaré déterministe : c'est le harnais qui garde cette règle.
"""
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from calibron.core.grid import Distribution
from calibron.utils.error_handling import ConfigurationError, ParameterError
from calibron.utils.logging import get_logger

logger = get_logger(__name__)

# Arrondi des clés de case : les prévisions d'une même case ne diffèrent que par le bruit flottant
BIN_KEY_DECIMALS = 12

_SEPARATORS = re.compile(r"[\s,;]+")


class NatureVariant(Enum):
    IID = "iid"
    MARKOV = "markov"
    SEQUENCE = "seq"
    CONTRARIAN = "contrarian"
    GREEDY = "greedy"


@dataclass(frozen=True, eq=False)
class NatureSpec:
    """Description d'une stratégie de la Nature"""
    variant: NatureVariant
    A: int
    q: Optional[Distribution] = None
    transition: Optional[np.ndarray] = None
    a0: int = 0
    sequence: Tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.variant is NatureVariant.IID:
            if self.q is None or self.q.A != self.A:
                raise ConfigurationError(f"iid attend une distribution sur {self.A} issues")
        elif self.variant is NatureVariant.MARKOV:
            self._check_transition()
        elif self.variant is NatureVariant.SEQUENCE:
            if not self.sequence:
                raise ConfigurationError("La séquence d'issues est vide")
            if min(self.sequence) < 0 or max(self.sequence) >= self.A:
                raise ConfigurationError(f"La séquence contient une issue hors de 0..{self.A - 1}")

    def _check_transition(self) -> None:
        matrix = self.transition
        if matrix is None or matrix.shape != (self.A, self.A):
            raise ConfigurationError(f"La matrice de transition doit être de taille {self.A}×{self.A}")
        for row in matrix:
            try:
                Distribution(row)
            except ParameterError as e:
                raise ConfigurationError(f"Ligne de transition invalide: {e}") from e
        if not 0 <= self.a0 < self.A:
            raise ConfigurationError(f"État initial {self.a0} hors de 0..{self.A - 1}")

    @property
    def needs_current_forecast(self) -> bool:
        return self.variant is NatureVariant.CONTRARIAN

    @property
    def label(self) -> str:
        return self.variant.value


def _read_numbers(path: Path) -> List[List[str]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Lecture impossible de {path}: {e}") from e
    rows = [[token for token in _SEPARATORS.split(line.strip()) if token] for line in text.splitlines()]
    return [row for row in rows if row and not row[0].startswith("#")]


def read_sequence(path: Union[str, Path]) -> Tuple[int, ...]:
    """Liste d'indices d'issues, un par ligne"""
    rows = _read_numbers(Path(path))
    try:
        return tuple(int(token) for row in rows for token in row)
    except ValueError as e:
        raise ConfigurationError(f"Séquence d'issues invalide dans {path}: {e}") from e


def read_transition_matrix(path: Union[str, Path]) -> np.ndarray:
    """Matrice stochastique par lignes, séparateurs espaces ou virgules"""
    rows = _read_numbers(Path(path))
    try:
        matrix = np.array([[float(token) for token in row] for row in rows], dtype=float)
    except ValueError as e:
        raise ConfigurationError(f"Matrice de transition invalide dans {path}: {e}") from e
    if matrix.ndim != 2:
        raise ConfigurationError(f"Les lignes de {path} n'ont pas toutes la même longueur")
    return matrix


def parse_nature_spec(text: str, A: int) -> NatureSpec:
    """Analyse le mini-langage : iid[:p1,…,pA] | markov:<fichier>[@a0] | seq:<fichier> | contrarian | greedy"""
    if not isinstance(text, str) or not text.strip():
        raise ConfigurationError("Stratégie de la Nature manquante")
    name, _, argument = text.strip().partition(":")
    name = name.lower()

    if name == "iid":
        if not argument.strip():
            return NatureSpec(NatureVariant.IID, A, q=Distribution.uniform(A))
        try:
            probs = [float(token) for token in argument.split(",") if token.strip()]
            q = Distribution(probs)
        except ValueError as e:
            raise ConfigurationError(f"Distribution iid invalide {argument!r}: {e}") from e
        return NatureSpec(NatureVariant.IID, A, q=q)

    if name == "markov":
        path, _, start = argument.partition("@")
        if not path:
            raise ConfigurationError("markov attend un fichier de transition")
        try:
            a0 = int(start) if start else 0
        except ValueError as e:
            raise ConfigurationError(f"État initial invalide {start!r}") from e
        return NatureSpec(NatureVariant.MARKOV, A, transition=read_transition_matrix(path), a0=a0)

    if name in ("seq", "sequence"):
        if not argument:
            raise ConfigurationError("seq attend un fichier d'issues")
        return NatureSpec(NatureVariant.SEQUENCE, A, sequence=read_sequence(argument))

    if name == "contrarian" and not argument:
        return NatureSpec(NatureVariant.CONTRARIAN, A)
    if name == "greedy" and not argument:
        return NatureSpec(NatureVariant.GREEDY, A)

    raise ConfigurationError(f"Stratégie de la Nature inconnue: {text!r}")


class Nature:
    """Nature d'une partie : une instance par partie, générateur propre"""

    def __init__(self, spec: NatureSpec, rng: Optional[np.random.Generator] = None):
        self.spec = spec
        self.A = spec.A
        self.rng = rng if rng is not None else np.random.default_rng()
        self.history: List[Tuple[Tuple[float, ...], int]] = []
        self._residuals: Dict[Tuple[float, ...], np.ndarray] = {}
        self._last_forecast: Optional[np.ndarray] = None

    @property
    def t(self) -> int:
        return len(self.history)

    def next_outcome(self, current_forecast: Optional[Union[Distribution, Sequence[float]]] = None) -> int:
        """Issue a_t à partir de l'historique (et de la prévision courante pour contrarian)"""
        variant = self.spec.variant
        if variant is NatureVariant.IID:
            return int(self.rng.choice(self.A, p=self.spec.q.probs))
        if variant is NatureVariant.MARKOV:
            if not self.history:
                return self.spec.a0
            previous = self.history[-1][1]
            return int(self.rng.choice(self.A, p=self.spec.transition[previous]))
        if variant is NatureVariant.SEQUENCE:
            return self.spec.sequence[self.t % len(self.spec.sequence)]
        if variant is NatureVariant.CONTRARIAN:
            if current_forecast is None:
                raise ConfigurationError("contrarian exige la prévision courante d'un prévisionniste déterministe")
            probs = current_forecast.probs if isinstance(current_forecast, Distribution) else np.asarray(
                current_forecast, dtype=float)
            return int(np.argmin(probs))
        return self._greedy_outcome()

    def _greedy_outcome(self) -> int:
        """Issue maximisant l'accroissement du score ℓ1 si la prévision précédente est rejouée"""
        if self._last_forecast is None:
            return 0
        forecast = self._last_forecast
        residual = self._residuals.get(self._bin_key(forecast), np.zeros(self.A))
        # candidats : r + P − δ_a pour chaque a, en une matrice (A, A)
        candidates = residual + forecast - np.eye(self.A)
        return int(np.argmax(np.abs(candidates).sum(axis=1)))

    @staticmethod
    def _bin_key(forecast: np.ndarray) -> Tuple[float, ...]:
        return tuple(np.round(forecast, BIN_KEY_DECIMALS).tolist())

    def observe_round(self, forecast: Union[Distribution, Sequence[float]], a: int) -> None:
        """Enregistre le tour (P_t, a_t) une fois joué"""
        probs = forecast.probs if isinstance(forecast, Distribution) else np.asarray(forecast, dtype=float)
        key = self._bin_key(probs)
        if self.spec.variant is NatureVariant.GREEDY:
            residual = self._residuals.setdefault(key, np.zeros(self.A))
            residual += probs
            residual[int(a)] -= 1.0
            self._last_forecast = np.array(probs, dtype=float)
        self.history.append((key, int(a)))
