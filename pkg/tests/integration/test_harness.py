import csv
import json
import math

import numpy as np
import pandas as pd
import pytest

from calibron.core.forecaster import RoundRecord
from calibron.core.grid import build_grid
from calibron.core.meta import regime_epsilon, regime_of_round
from calibron.core.scoring import CalibrationLedger, l1_score
from calibron.services.harness import RunConfig, checkpoint_schedule, play, run, run_sweep
from calibron.utils.error_handling import EXIT_FAILURE, EXIT_OK, ConfigurationError


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


class TestCheckpointSchedule:
    def test_powers_of_two(self):
        assert checkpoint_schedule(10) == [1, 2, 4, 8, 10]
        assert checkpoint_schedule(8) == [1, 2, 4, 8]

    def test_fixed_interval(self):
        assert checkpoint_schedule(10, 4) == [4, 8, 10]

    def test_zero_rounds(self):
        assert checkpoint_schedule(0) == [0]


class TestRunConfig:
    """
    Tests unitaires pour RunConfig
    """

    def test_overrides(self, run_config):
        config = run_config(outcomes=3, epsilon=0.5, method="mw", delta=0.1, seed=4)
        assert (config.A, config.epsilon, config.seed) == (3, 0.5, 4)
        assert config.method.label == "mw(0.1)"

    def test_contrarian_requires_deterministic(self, run_config):
        with pytest.raises(ConfigurationError):
            run_config(nature="contrarian")
        with pytest.raises(ConfigurationError):
            run_config(nature="contrarian", forecaster="meta")
        assert run_config(nature="contrarian", forecaster="deterministic").forecaster == "deterministic"

    @pytest.mark.parametrize("overrides", [
        {"forecaster": "oracle"}, {"rounds": -1}, {"checkpoint_every": -2}, {"nature": "iid:0.5"},
        {"seed": -3}, {"outcomes": 1}, {"epsilon": 3.0},
    ])
    def test_invalid(self, run_config, overrides):
        with pytest.raises(ConfigurationError):
            run_config(**overrides)

    def test_with_seed(self, run_config):
        config = run_config(plot="curve.svg").with_seed(7)
        assert (config.seed, config.transcript, config.scores, config.plot) == (
            7, "transcript_seed7.csv", "scores_seed7.csv", "curve_seed7.svg")
        assert (config.metrics, config.report) == ("metrics_seed7.prom", "report_seed7.json")


class TestRun:
    """
    Tests d'intégration du harnais
    """

    def test_transcript_and_scores(self, run_config):
        config = run_config(rounds=100, nature="iid:0.3,0.7", seed=7)
        result = play(config)
        assert result.exit_code == EXIT_OK

        rows = read_rows(result.transcript_path)
        assert rows[0] == ["t", "regime", "k", "p0", "p1", "a"]
        assert len(rows) == 101
        assert [int(r[0]) for r in rows[1:]] == list(range(1, 101))

        scores = pd.read_csv(result.scores_path)
        assert list(scores.columns) == ["T", "l1_score", "brier", "l2_dist_C", "bound_U"]
        assert scores["T"].tolist() == [1, 2, 4, 8, 16, 32, 64, 100]
        assert (scores["brier"] <= 2 * scores["l1_score"] + 1e-12).all()
        assert (config.output_dir / "metrics.prom").exists()

    def test_checkpoints_match_transcript(self, run_config):
        """Chaque point de contrôle est égal au recalcul sur le préfixe de la transcription"""
        config = run_config(rounds=128, nature="greedy", seed=3)
        result = play(config)
        grid = build_grid(2, config.epsilon)
        records = [RoundRecord(int(r[0]), int(r[2]), int(r[-1])) for r in read_rows(result.transcript_path)[1:]]
        for row in pd.read_csv(result.scores_path).itertuples():
            assert row.l1_score == pytest.approx(l1_score(records[:row.T], grid), abs=1e-9)

    def test_meta_checkpoints_match_transcript(self, run_config):
        """Score méta recalculé par cases (régime, k) à partir des colonnes regime et k"""
        config = run_config(rounds=100, forecaster="meta", nature="greedy", seed=5)
        result = play(config)
        rows = [(int(r[1]), RoundRecord(int(r[0]), int(r[2]), int(r[-1])))
                for r in read_rows(result.transcript_path)[1:]]
        for row in pd.read_csv(result.scores_path).itertuples():
            total = 0.0
            for regime in sorted({r for r, _ in rows[:row.T]}):
                grid = build_grid(2, regime_epsilon(regime, 2))
                ledger = CalibrationLedger.from_records([rec for r, rec in rows[:row.T] if r == regime], grid)
                total += ledger.raw_l1()
            assert row.l1_score == pytest.approx(total / row.T, abs=1e-9)

    def test_report(self, run_config):
        config = run_config(rounds=50, nature="iid:0.3,0.7", seed=2)
        play(config)
        report = json.loads((config.output_dir / "report.json").read_text())
        scores = pd.read_csv(config.output_dir / "scores.csv").iloc[-1]
        assert report["T"] == 50
        assert report["l1_score"] == pytest.approx(scores["l1_score"], abs=1e-12)
        assert sum(b["count"] for b in report["per_bin"]) == 50
        assert sum(b["block_score"] for b in report["per_bin"]) == pytest.approx(report["l1_score"], abs=1e-9)
        used = [b["k"] for b in report["per_bin"] if b["count"]]
        assert [ball["k"] for ball in report["ball_calibration"]] == used
        assert all(ball["radius"] == pytest.approx(config.epsilon) for ball in report["ball_calibration"])

    def test_meta_report(self, run_config):
        config = run_config(rounds=20, forecaster="meta")
        play(config)
        report = json.loads((config.output_dir / "report.json").read_text())
        assert [r["regime"] for r in report["regimes"]] == [1, 2, 3, 4]
        assert sum(r["T"] for r in report["regimes"]) == 20
        assert report["ball_calibration"]

    def test_without_report(self, run_config):
        config = run_config(rounds=8, report="")
        play(config)
        assert not (config.output_dir / "report.json").exists()

    def test_default_nature_fits_outcomes(self, run_config):
        config = run_config(outcomes=3, rounds=20)
        assert config.nature == "iid"
        result = play(config)
        assert read_rows(result.transcript_path)[0] == ["t", "regime", "k", "p0", "p1", "p2", "a"]

    def test_forecasts_are_grid_points(self, run_config):
        config = run_config(outcomes=3, epsilon=0.5, rounds=30, nature="greedy")
        result = play(config)
        grid = build_grid(3, 0.5)
        for row in read_rows(result.transcript_path)[1:]:
            forecast = np.array([float(p) for p in row[3:6]])
            np.testing.assert_allclose(forecast, grid.points[int(row[2])], atol=1e-12)

    def test_reproducible(self, run_config, tmp_path):
        first = play(run_config(rounds=80, seed=11, directory=str(tmp_path / "a")))
        second = play(run_config(rounds=80, seed=11, directory=str(tmp_path / "b")))
        assert first.transcript_path.read_bytes() == second.transcript_path.read_bytes()
        third = play(run_config(rounds=80, seed=12, directory=str(tmp_path / "c")))
        assert first.transcript_path.read_bytes() != third.transcript_path.read_bytes()

    def test_zero_rounds(self, run_config):
        result = play(run_config(rounds=0))
        assert read_rows(result.transcript_path) == [["t", "regime", "k", "p0", "p1", "a"]]
        rows = read_rows(result.scores_path)
        assert rows[1][:4] == ["0", "0.0", "0.0", "0.0"]
        assert math.isinf(float(rows[1][4]))

    def test_deterministic_against_contrarian(self, run_config):
        config = run_config(rounds=512, forecaster="deterministic", nature="contrarian")
        scores = pd.read_csv(play(config).scores_path)
        assert (scores.loc[scores["T"] >= 64, "l1_score"] >= 0.5).all()

    def test_meta_regimes(self, run_config):
        result = play(run_config(rounds=40, forecaster="meta", nature="iid:0.5,0.5"))
        rows = read_rows(result.transcript_path)[1:]
        assert [int(r[1]) for r in rows] == [regime_of_round(t) for t in range(1, 41)]
        assert all(abs(float(r[3]) + float(r[4]) - 1.0) < 1e-9 for r in rows)
        scores = pd.read_csv(result.scores_path)
        assert np.isfinite(scores["bound_U"]).all()

    def test_mw_and_binary_search(self, run_config):
        result = play(run_config(rounds=40, method="mw", delta=0.1, projection="binary_search", diagnostic=True))
        assert result.final_scores["T"] == 40

    def test_markov_and_sequence_natures(self, run_config, tmp_path):
        matrix = tmp_path / "chain.txt"
        matrix.write_text("0.9 0.1\n0.2 0.8\n")
        sequence = tmp_path / "seq.txt"
        sequence.write_text("1\n1\n0\n")
        assert play(run_config(nature=f"markov:{matrix}@1")).exit_code == EXIT_OK
        result = play(run_config(nature=f"seq:{sequence}", rounds=9))
        assert [int(r[-1]) for r in read_rows(result.transcript_path)[1:]] == [1, 1, 0] * 3

    def test_io_failure(self, run_config, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert run(run_config(directory=str(blocker / "sub"))) == EXIT_FAILURE

    def test_sweep(self, run_config):
        config = run_config(rounds=20)
        assert run_sweep(config, [1, 2], workers=2) == EXIT_OK
        for seed in (1, 2):
            assert (config.output_dir / f"transcript_seed{seed}.csv").exists()
            assert (config.output_dir / f"scores_seed{seed}.csv").exists()

    def test_plot_after_run(self, run_config):
        config = run_config(rounds=32, plot="curve.svg")
        play(config)
        assert (config.output_dir / "curve.svg").read_text().lstrip().startswith("<?xml")
