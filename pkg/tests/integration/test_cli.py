import pytest

from calibron.__main__ import build_parser, main
from calibron.utils.error_handling import EXIT_FAILURE, EXIT_INVALID, EXIT_OK


@pytest.fixture
def base_args(tmp_path):
    return ["run", "--config", str(tmp_path / "absent.yaml"), "--output-dir", str(tmp_path / "out"),
            "--log-level", "WARNING"]


class TestCli:
    """
    Tests de la ligne de commande
    """

    def test_run(self, base_args, tmp_path):
        code = main(base_args + ["--outcomes", "2", "--epsilon", "0.2", "--rounds", "50", "--nature", "iid:0.3,0.7",
                                 "--seed", "7"])
        assert code == EXIT_OK
        assert len((tmp_path / "out" / "transcript.csv").read_text().splitlines()) == 51

    def test_three_outcomes_default_nature(self, base_args, tmp_path):
        assert main(base_args + ["--outcomes", "3", "--rounds", "10"]) == EXIT_OK
        assert (tmp_path / "out" / "report.json").exists()

    def test_contrarian_against_randomized(self, base_args):
        assert main(base_args + ["--nature", "contrarian", "--rounds", "10"]) == EXIT_INVALID

    def test_impossibility_run(self, base_args, tmp_path):
        code = main(base_args + ["--forecaster", "deterministic", "--nature", "contrarian", "--rounds", "128"])
        assert code == EXIT_OK
        assert (tmp_path / "out" / "scores.csv").exists()

    def test_invalid_nature(self, base_args):
        assert main(base_args + ["--nature", "poisson:3"]) == EXIT_INVALID

    def test_seeds(self, base_args, tmp_path):
        assert main(base_args + ["--rounds", "8", "--seeds", "3,4", "--workers", "1"]) == EXIT_OK
        assert (tmp_path / "out" / "scores_seed3.csv").exists()
        assert (tmp_path / "out" / "scores_seed4.csv").exists()

    def test_output_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CALIBRON_OUTPUT_DIR", str(tmp_path / "env"))
        code = main(["run", "--config", str(tmp_path / "absent.yaml"), "--rounds", "4", "--log-level", "WARNING"])
        assert code == EXIT_OK
        assert (tmp_path / "env" / "transcript.csv").exists()

    def test_plot(self, base_args, tmp_path):
        main(base_args + ["--rounds", "16"])
        scores = tmp_path / "out" / "scores.csv"
        assert main(["plot", str(scores), "--output", str(tmp_path / "curve.svg")]) == EXIT_OK
        assert (tmp_path / "curve.svg").exists()

    def test_plot_errors(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("T,l1_score,brier,l2_dist_C,bound_U\n")
        assert main(["plot", str(empty)]) == EXIT_INVALID
        assert main(["plot", str(tmp_path / "absent.csv")]) == EXIT_FAILURE

    def test_unknown_flag_value(self):
        with pytest.raises(SystemExit) as excinfo:
            build_parser().parse_args(["run", "--forecaster", "oracle"])
        assert excinfo.value.code == 2
