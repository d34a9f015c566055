import argparse
import sys
from typing import List, Optional

from dotenv import load_dotenv

from calibron.services.harness import FORECASTERS, RunConfig, run, run_sweep
from calibron.utils.config import ConfigManager
from calibron.utils.error_handling import EXIT_OK, ConfigurationError, ErrorHandler
from calibron.utils.logging import get_logger, setup_logging

# Charger les variables d'environnement
load_dotenv()

logger = get_logger(__name__)

# Options de `run` et clé correspondante de la configuration
_RUN_OPTIONS = {
    "outcomes": "outcomes",
    "epsilon": "epsilon",
    "rounds": "rounds",
    "forecaster": "forecaster",
    "method": "method",
    "delta": "delta",
    "tol": "tol",
    "projection": "projection",
    "nature": "nature",
    "seed": "seed",
    "checkpoint_every": "checkpoint_every",
    "diagnostic": "diagnostic",
    "output_dir": "directory",
    "transcript": "transcript",
    "scores": "scores",
    "plot": "plot",
    "report": "report",
}


def _seed_list(text: str) -> List[int]:
    try:
        return [int(token) for token in text.split(",") if token.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"liste de graines invalide: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="calibron", description="Prévisions calibrées par approchabilité")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="Jouer une partie prévisionniste contre Nature")
    run_parser.add_argument("--config", help="Fichier de configuration YAML")
    run_parser.add_argument("--outcomes", type=int, help="Nombre d'issues A")
    run_parser.add_argument("--epsilon", type=float, help="Rayon ε de la grille")
    run_parser.add_argument("--rounds", type=int, help="Nombre de tours T")
    run_parser.add_argument("--forecaster", choices=FORECASTERS)
    run_parser.add_argument("--method", choices=("exact", "mw"), help="Calcul de ψ_t")
    run_parser.add_argument("--delta", type=float, help="Précision δ des poids multiplicatifs")
    run_parser.add_argument("--tol", type=float, help="Tolérance relative du certificat exact")
    run_parser.add_argument("--projection", choices=("sort_exact", "binary_search"))
    run_parser.add_argument("--nature",
                            help="iid[:p1,…,pA] | markov:<fichier>[@a0] | seq:<fichier> | contrarian | greedy")
    run_parser.add_argument("--seed", type=int)
    run_parser.add_argument("--seeds", type=_seed_list, help="Balayage de graines, ex. 1,2,3")
    run_parser.add_argument("--workers", type=int, help="Processus parallèles pour --seeds")
    run_parser.add_argument("--checkpoint-every", dest="checkpoint_every", type=int,
                            help="Intervalle des points de contrôle (défaut : puissances de deux)")
    run_parser.add_argument("--output-dir", dest="output_dir")
    run_parser.add_argument("--transcript")
    run_parser.add_argument("--scores")
    run_parser.add_argument("--plot", help="Fichier SVG à produire à partir des scores")
    run_parser.add_argument("--report", help="Rapport JSON final (vide : pas de rapport)")
    run_parser.add_argument("--diagnostic", action="store_true", default=None,
                            help="Journaliser chaque violation de la condition de Blackwell")
    run_parser.add_argument("--log-level", dest="log_level")

    plot_parser = commands.add_parser("plot", help="Tracer un CSV de scores")
    plot_parser.add_argument("score_csv")
    plot_parser.add_argument("--output", help="Fichier SVG (défaut : même nom, extension .svg)")
    plot_parser.add_argument("--log-level", dest="log_level")
    return parser


def _configure_logging(config: ConfigManager, level: Optional[str]) -> None:
    settings = config.get("logging") or {}
    setup_logging(level=level or settings.get("level", "INFO"),
                  directory=settings.get("directory") or None,
                  json_format=bool(settings.get("json", True)))


def command_run(args: argparse.Namespace) -> int:
    errors = ErrorHandler()
    try:
        config = ConfigManager(args.config)
    except ConfigurationError as e:
        return errors.exit_code(e)
    _configure_logging(config, args.log_level)

    overrides = {key: getattr(args, option) for option, key in _RUN_OPTIONS.items()}
    try:
        run_config = RunConfig.from_config(config, overrides)
    except Exception as e:
        return errors.exit_code(e, {"error_type": "configuration"} if isinstance(e, ValueError) else None)

    seeds = args.seeds
    if seeds:
        workers = args.workers if args.workers is not None else int(config.get("parallel", "workers", 1))
        return run_sweep(run_config, seeds, workers)
    return run(run_config)


def command_plot(args: argparse.Namespace) -> int:
    _configure_logging(ConfigManager(load_env=False), args.log_level)
    from calibron.services.plotting import emit_plot

    try:
        emit_plot(args.score_csv, args.output)
    except Exception as e:
        return ErrorHandler().exit_code(e, {"score_csv": args.score_csv})
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "plot":
        return command_plot(args)
    return command_run(args)


if __name__ == "__main__":
    sys.exit(main())
