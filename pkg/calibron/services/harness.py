"""
Harnais de parties prévisionniste contre Nature

Joue T tours en respectant la simultanéité (le prévisionniste s'engage avant
que la Nature ne choisisse), écrit la transcription et les scores aux points de
contrôle, et retourne un code de sortie.
"""
import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from calibron.core.forecaster import CalibratedForecaster, DeterministicForecaster
from calibron.core.grid import EpsilonGrid, build_grid
from calibron.core.meta import (MetaForecaster, meta_bound, meta_brier_score, meta_l1_score, regime_of_round)
from calibron.core.nature import Nature, NatureSpec, parse_nature_spec
from calibron.core.oracle import MULTIPLICATIVE_WEIGHTS, MinimaxMethod, complexity_estimate
from calibron.core.scoring import (CalibrationLedger, ball_calibration_score, bound_U, brier_reference_bound,
                                   brier_score, l1_score, l2_distance_to_C, rate_normalized_score, score_report)
from calibron.services.metrics import GameMetrics
from calibron.utils.config import ConfigManager
from calibron.utils.error_handling import EXIT_OK, ConfigurationError, ErrorHandler, validate_fields
from calibron.utils.logging import get_logger

logger = get_logger(__name__)

FORECASTERS = ("eps", "meta", "deterministic")
SCORE_COLUMNS = ["T", "l1_score", "brier", "l2_dist_C", "bound_U"]

RUN_SCHEMA = {
    "outcomes": ["required", "integer", "positive"],
    "epsilon": ["required", "number", "positive"],
    "rounds": ["required", "integer"],
    "forecaster": ["required", "string"],
    "method": ["required", "string"],
    "delta": ["required", "number", "positive"],
    "tol": ["required", "number", "positive"],
    "projection": ["required", "string"],
    "nature": ["required", "string"],
    "seed": ["required", "integer"],
    "checkpoint_every": ["required", "integer"],
    "diagnostic": ["optional", "boolean"],
}


@dataclass
class RunConfig:
    """Configuration complète d'une partie"""
    A: int = 2
    epsilon: float = 0.1
    T: int = 10000
    forecaster: str = "eps"
    method: MinimaxMethod = field(default_factory=MinimaxMethod)
    nature: str = "iid"
    seed: int = 0
    checkpoint_every: int = 0
    output_dir: Path = Path("runs")
    transcript: str = "transcript.csv"
    scores: str = "scores.csv"
    plot: str = ""
    metrics: str = "metrics.prom"
    report: str = "report.json"
    diagnostic: bool = False
    scoring_delta: float = 0.01
    gamma: float = 2.0

    @classmethod
    def from_config(cls, config: ConfigManager, overrides: Optional[Dict[str, Any]] = None) -> 'RunConfig':
        """Fusionne la configuration chargée et les options de la ligne de commande"""
        run = dict(config.get("run") or {})
        output = dict(config.get("output") or {})
        scoring = dict(config.get("scoring") or {})
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if key in ("directory", "transcript", "scores", "plot", "metrics", "report"):
                output[key] = value
            else:
                run[key] = value
        validate_fields(run, RUN_SCHEMA)

        directory = output.get("directory") or "runs"
        method = MinimaxMethod(kind=run["method"], delta=float(run["delta"]), tol=float(run["tol"]),
                               projection=run["projection"])
        run_config = cls(
            A=run["outcomes"],
            epsilon=float(run["epsilon"]),
            T=run["rounds"],
            forecaster=run["forecaster"],
            method=method,
            nature=run["nature"],
            seed=run["seed"],
            checkpoint_every=run["checkpoint_every"],
            output_dir=Path(directory),
            transcript=output.get("transcript") or "transcript.csv",
            scores=output.get("scores") or "scores.csv",
            plot=output.get("plot") or "",
            metrics=output.get("metrics") or "",
            report=output.get("report") or "",
            diagnostic=bool(run.get("diagnostic", False)),
            scoring_delta=float(scoring.get("delta", 0.01)),
            gamma=float(scoring.get("gamma", 2.0)),
        )
        run_config.validate()
        return run_config

    def validate(self) -> NatureSpec:
        """Vérifie la configuration et retourne la stratégie de la Nature analysée"""
        if isinstance(self.A, bool) or not isinstance(self.A, int) or self.A < 2:
            raise ConfigurationError(f"Le nombre d'issues doit être un entier ≥ 2 (reçu {self.A!r})")
        if not 0 < self.epsilon <= 2:
            raise ConfigurationError(f"ε doit appartenir à ]0, 2] (reçu {self.epsilon!r})")
        if self.T < 0:
            raise ConfigurationError(f"Nombre de tours négatif: {self.T}")
        if self.forecaster not in FORECASTERS:
            raise ConfigurationError(f"Prévisionniste inconnu: {self.forecaster!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigurationError(f"La graine doit être un entier ≥ 0 (reçu {self.seed!r})")
        if self.checkpoint_every < 0:
            raise ConfigurationError(f"Intervalle de points de contrôle négatif: {self.checkpoint_every}")
        spec = parse_nature_spec(self.nature, self.A)
        if spec.needs_current_forecast and self.forecaster != "deterministic":
            raise ConfigurationError(
                f"La Nature {spec.label} exige un prévisionniste déterministe (reçu {self.forecaster!r})")
        return spec

    def with_seed(self, seed: int) -> 'RunConfig':
        """Copie de la configuration pour une graine d'un balayage, fichiers suffixés par _seed<N>"""
        def suffixed(name: str) -> str:
            if not name:
                return name
            path = Path(name)
            return str(path.with_name(f"{path.stem}_seed{seed}{path.suffix}"))

        return dataclasses.replace(self, seed=seed, transcript=suffixed(self.transcript),
                                   scores=suffixed(self.scores), plot=suffixed(self.plot),
                                   metrics=suffixed(self.metrics), report=suffixed(self.report))

    def path(self, name: str) -> Path:
        return self.output_dir / name


@dataclass
class RunResult:
    exit_code: int
    T: int = 0
    final_scores: Dict[str, float] = field(default_factory=dict)
    transcript_path: Optional[Path] = None
    scores_path: Optional[Path] = None


def checkpoint_schedule(T: int, every: int = 0) -> List[int]:
    """Points de contrôle : 1, 2, 4, … (ou multiples de `every`) et toujours T"""
    if every > 0:
        points = set(range(every, T + 1, every))
    else:
        points = set()
        t = 1
        while t <= T:
            points.add(t)
            t *= 2
    points.add(T)
    return sorted(points)


def make_generators(seed: int):
    """Flux indépendants pour le prévisionniste et pour la Nature"""
    forecaster_seed, nature_seed = np.random.SeedSequence(seed).spawn(2)
    return (np.random.Generator(np.random.Philox(forecaster_seed)),
            np.random.Generator(np.random.Philox(nature_seed)))


class GameRunner:
    """Une partie : prévisionniste, Nature, agrégats de score et écrivains CSV"""

    def __init__(self, config: RunConfig, metrics: Optional[GameMetrics] = None):
        self.config = config
        self.nature_spec = config.validate()
        forecaster_rng, nature_rng = make_generators(config.seed)
        self.nature = Nature(self.nature_spec, rng=nature_rng)
        self.metrics = metrics or GameMetrics()
        self.grid: Optional[EpsilonGrid] = None
        self.ledger: Optional[CalibrationLedger] = None

        if config.forecaster == "meta":
            self.forecaster = MetaForecaster(config.A, config.method, rng=forecaster_rng,
                                             diagnostic=config.diagnostic)
        else:
            self.grid = build_grid(config.A, config.epsilon)
            self.ledger = CalibrationLedger(self.grid)
            if config.forecaster == "deterministic":
                self.forecaster = DeterministicForecaster(self.grid)
            else:
                self.forecaster = CalibratedForecaster(self.grid, config.method, rng=forecaster_rng,
                                                       diagnostic=config.diagnostic)

    @property
    def is_meta(self) -> bool:
        return isinstance(self.forecaster, MetaForecaster)

    def _log_complexity(self) -> None:
        if self.config.forecaster == "deterministic":
            return
        if self.is_meta:
            if self.config.T == 0:
                return
            grid = build_grid(self.config.A, 2.0 ** (-regime_of_round(self.config.T) / (self.config.A + 1)))
        else:
            grid = self.grid
        logger.info("Coût estimé par tour", extra={
            "method": self.config.method.label, "n_epsilon": grid.N_epsilon,
            "work_units": complexity_estimate(self.config.method, grid.N_epsilon, grid.A),
        })

    def play_round(self) -> List[Any]:
        """Un tour : le prévisionniste s'engage, puis la Nature choisit a_t"""
        if self.is_meta:
            distribution = self.forecaster.forecast()
        else:
            k, _ = self.forecaster.forecast()
            distribution = self.grid.point(k)

        current = distribution if self.forecaster.is_deterministic else None
        a = self.nature.next_outcome(current)
        record = self.forecaster.observe(a)
        self.nature.observe_round(distribution, a)

        if self.is_meta:
            regime = record.r
            diagnostics = self.forecaster.inner.last_diagnostics
        else:
            regime = 0
            self.ledger.update(record.k, record.a)
            diagnostics = getattr(self.forecaster, "last_diagnostics", None)
        self.metrics.record_round(diagnostics, regime)
        forecast = [f"{p:.12g}" for p in distribution.probs]
        return [record.t, regime, record.k, *forecast, record.a]

    def scores(self) -> Dict[str, float]:
        """Scores courants (T, l1_score, brier, l2_dist_C, bound_U)"""
        config = self.config
        if self.is_meta:
            T = self.forecaster.T
            return {
                "T": T,
                "l1_score": meta_l1_score(self.forecaster),
                "brier": meta_brier_score(self.forecaster),
                "l2_dist_C": self.forecaster.current_distance_to_C(),
                "bound_U": meta_bound(self.forecaster, config.gamma),
            }
        T = self.ledger.T
        return {
            "T": T,
            "l1_score": l1_score(self.ledger, self.grid),
            "brier": brier_score(self.ledger, self.grid),
            "l2_dist_C": l2_distance_to_C(self.ledger, self.grid, method=config.method.projection),
            "bound_U": bound_U(self.grid.epsilon, T, config.scoring_delta, config.gamma, A=self.grid.A,
                               n_epsilon=self.grid.N_epsilon),
        }

    def play(self) -> RunResult:
        config = self.config
        config.output_dir.mkdir(parents=True, exist_ok=True)
        transcript_path = config.path(config.transcript)
        scores_path = config.path(config.scores)
        checkpoints = set(checkpoint_schedule(config.T, config.checkpoint_every))
        self._log_complexity()
        logger.info("Début de la partie", extra={
            "forecaster": config.forecaster, "nature": config.nature, "outcomes": config.A,
            "epsilon": config.epsilon, "rounds": config.T, "seed": config.seed,
        })

        header = ["t", "regime", "k", *[f"p{i}" for i in range(config.A)], "a"]
        scores: Dict[str, float] = {}
        with open(transcript_path, "w", newline="", encoding="utf-8") as transcript_file, \
                open(scores_path, "w", newline="", encoding="utf-8") as scores_file:
            transcript = csv.writer(transcript_file, lineterminator="\n")
            score_writer = csv.writer(scores_file, lineterminator="\n")
            transcript.writerow(header)
            score_writer.writerow(SCORE_COLUMNS)

            if 0 in checkpoints:
                scores = self._checkpoint(score_writer)
            for _ in range(config.T):
                transcript.writerow(self.play_round())
                if self.forecaster.T in checkpoints:
                    scores = self._checkpoint(score_writer)

        if config.metrics:
            self.metrics.write(config.path(config.metrics))
        if config.report:
            self._write_report(config.path(config.report))
        self._log_summary(scores)
        return RunResult(EXIT_OK, config.T, scores, transcript_path, scores_path)

    def _checkpoint(self, writer) -> Dict[str, float]:
        scores = self.scores()
        writer.writerow([scores["T"], *(repr(float(scores[c])) for c in SCORE_COLUMNS[1:])])
        self.metrics.record_checkpoint(scores["l1_score"], scores["l2_dist_C"])
        logger.info("Point de contrôle", extra=scores)
        return scores

    def report(self) -> Dict[str, Any]:
        """Rapport final : scores, détail par case (n_k, f_k, ρ_T(k), score du bloc) et calibration par boules"""
        config = self.config
        if self.is_meta:
            regimes = []
            for regime in self.forecaster.regimes:
                entry = score_report(regime.ledger, regime.grid, config.scoring_delta, config.gamma).to_dict()
                entry.update(regime=regime.r, epsilon=regime.grid.epsilon)
                regimes.append(entry)
            report: Dict[str, Any] = {**self.scores(), "regimes": regimes}
            records = self.forecaster.records
            forecasts = np.array([r.forecast for r in records]).reshape(-1, config.A)
            grid = self.forecaster.grid
            counts = self.forecaster.regimes[-1].ledger.counts if self.forecaster.regimes else None
        else:
            report = score_report(self.ledger, self.grid, config.scoring_delta, config.gamma).to_dict()
            records = self.forecaster.records
            forecasts = self.grid.points[[r.k for r in records]].reshape(-1, config.A)
            grid = self.grid
            counts = self.ledger.counts

        # une boule de rayon ε autour de chaque point de grille utilisé
        outcomes = [r.a for r in records]
        balls = []
        if grid is not None:
            for k in np.flatnonzero(counts):
                center = grid.points[k]
                balls.append({
                    "k": int(k), "center": center.tolist(), "radius": grid.epsilon,
                    "score": ball_calibration_score(forecasts, outcomes, center, grid.epsilon),
                })
        report["ball_calibration"] = balls
        return report

    def _write_report(self, path: Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.report(), f, indent=2)

    def _log_summary(self, scores: Dict[str, float]) -> None:
        config = self.config
        summary = dict(scores)
        if config.method.kind == MULTIPLICATIVE_WEIGHTS and config.forecaster != "deterministic":
            summary["guarantee"] = "2ε-calibrated"
        if self.is_meta:
            summary["rate_normalized_score"] = rate_normalized_score(scores["l1_score"], scores["T"], config.A)
        elif config.A == 2:
            summary["brier_reference_bound"] = brier_reference_bound(config.epsilon, scores["T"],
                                                                     config.scoring_delta)
        violations = self.metrics.value("calibron_blackwell_violations_total") or 0.0
        summary["blackwell_violations"] = int(violations)
        logger.info("Fin de la partie", extra={
            k: (str(v) if isinstance(v, float) and not math.isfinite(v) else v) for k, v in summary.items()
        })


def play(config: RunConfig) -> RunResult:
    """Joue une partie ; les erreurs sont propagées"""
    runner = GameRunner(config)
    result = runner.play()
    if config.plot:
        from calibron.services.plotting import emit_plot
        emit_plot(result.scores_path, config.path(config.plot))
    return result


def run(config: RunConfig) -> int:
    """Joue une partie et retourne le code de sortie (0, 1 ou 2)"""
    try:
        return play(config).exit_code
    except Exception as e:
        return ErrorHandler().exit_code(e, {"seed": config.seed, "nature": config.nature})


def run_sweep(config: RunConfig, seeds: Sequence[int], workers: int = 1) -> int:
    """Une partie par graine, en parallèle ; le code de sortie est le maximum des codes"""
    configs = [config.with_seed(seed) for seed in seeds]
    if workers <= 1 or len(configs) <= 1:
        codes = [run(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            codes = list(executor.map(run, configs))
    logger.info("Balayage terminé", extra={"seeds": list(seeds), "exit_codes": codes})
    return max(codes, default=EXIT_OK)
