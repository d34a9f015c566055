"""
Courbes de convergence au format SVG, générées uniquement à partir du CSV de scores
"""
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from calibron.utils.error_handling import ConfigurationError  # noqa: E402
from calibron.utils.logging import get_logger  # noqa: E402

logger = get_logger(__name__)

PLOTTED_SERIES = ("l1_score", "l2_dist_C")
REQUIRED_COLUMNS = ("T",) + PLOTTED_SERIES

_SVG_STYLE = {
    "svg.fonttype": "none",
    "svg.hashsalt": "calibron",
}


def load_scores(score_csv: Union[str, Path]) -> pd.DataFrame:
    """Lit et valide le CSV de scores"""
    try:
        frame = pd.read_csv(score_csv)
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise ConfigurationError(f"CSV de scores illisible {score_csv}: {e}") from e

    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigurationError(f"Colonnes manquantes dans {score_csv}: {', '.join(missing)}")
    if frame.empty:
        raise ConfigurationError(f"Aucun point de contrôle dans {score_csv}")

    columns = list(REQUIRED_COLUMNS)
    numeric = frame[columns].apply(pd.to_numeric, errors="coerce")
    if numeric.isna().any().any():
        raise ConfigurationError(f"Valeurs non numériques dans {score_csv}")
    return numeric


def emit_plot(score_csv: Union[str, Path], output: Optional[Union[str, Path]] = None) -> Path:
    """Graphique log-log de l1_score et l2_dist_C en fonction de T"""
    scores = load_scores(score_csv)
    output = Path(output) if output else Path(score_csv).with_suffix(".svg")

    # l'échelle log ne montre que les valeurs > 0
    scores = scores[scores["T"] > 0]
    if scores.empty:
        raise ConfigurationError(f"Aucun point de contrôle avec T > 0 dans {score_csv}")

    with plt.rc_context(_SVG_STYLE):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for name in PLOTTED_SERIES:
            series = scores[scores[name] > 0]
            ax.plot(series["T"], series[name], marker="o", markersize=3, label=name)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("T")
        ax.set_ylabel("score")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(output, format="svg", metadata={"Date": None})
        plt.close(fig)

    logger.info("Graphique écrit", extra={"path": str(output), "checkpoints": int(len(scores))})
    return output
