import numpy as np
import pytest

from calibron.core.forecaster import (CalibratedForecaster, DeterministicForecaster, Phase,
                                      deterministic_nearest_forecaster, make_generator, sample_index)
from calibron.core.grid import build_grid
from calibron.core.oracle import MinimaxMethod, Policy
from calibron.core.scoring import l1_score
from calibron.utils.error_handling import ParameterError, ProtocolError


def play(forecaster, outcomes):
    for a in outcomes:
        forecaster.forecast()
        forecaster.observe(a)
    return forecaster


class TestCalibratedForecaster:
    """
    Tests unitaires pour CalibratedForecaster
    """

    def test_first_policy_is_uniform(self, grid2):
        forecaster = CalibratedForecaster(grid2, seed=1)
        k, policy = forecaster.forecast()
        assert policy.weights.tolist() == pytest.approx([1 / grid2.N_epsilon] * grid2.N_epsilon)
        assert 0 <= k < grid2.N_epsilon
        assert forecaster.phase is Phase.AWAITING_OUTCOME

    def test_phase_machine(self, grid2):
        forecaster = CalibratedForecaster(grid2, seed=1)
        with pytest.raises(ProtocolError):
            forecaster.observe(0)
        forecaster.forecast()
        with pytest.raises(ProtocolError):
            forecaster.forecast()
        forecaster.observe(0)
        with pytest.raises(ProtocolError):
            forecaster.observe(1)

    def test_invalid_outcome(self, grid2):
        forecaster = CalibratedForecaster(grid2, seed=1)
        forecaster.forecast()
        for a in (2, -1, True, 0.5):
            with pytest.raises(ParameterError):
                forecaster.observe(a)
        assert forecaster.phase is Phase.AWAITING_OUTCOME

    def test_record(self, grid2):
        forecaster = CalibratedForecaster(grid2, seed=3)
        k, _ = forecaster.forecast()
        record = forecaster.observe(1)
        assert (record.t, record.k, record.a) == (1, k, 1)
        assert forecaster.T == 1

    def test_dirac_forecast_keeps_average(self):
        grid = build_grid(2, 2.0)
        forecaster = CalibratedForecaster(grid, seed=0)
        k, _ = forecaster.forecast()
        a = int(np.argmax(grid.points[k]))
        forecaster.observe(a)
        assert not forecaster.average.avg.any()
        assert forecaster.T == 1

    def test_same_seed_same_indices(self, grid2):
        outcomes = [0, 1, 1, 0, 1] * 20
        first = play(CalibratedForecaster(grid2, seed=42), outcomes)
        second = play(CalibratedForecaster(grid2, seed=42), outcomes)
        assert [r.k for r in first.records] == [r.k for r in second.records]

    def test_constant_nature(self, grid2):
        """Nature jouant toujours 0 : le score ℓ1 reste proche de ε"""
        forecaster = play(CalibratedForecaster(grid2, seed=5), [0] * 1000)
        assert l1_score(forecaster.records, grid2) <= 0.5

    def test_diagnostic_mode(self, grid2):
        forecaster = play(CalibratedForecaster(grid2, seed=2, diagnostic=True), [0, 1, 1, 1, 0, 0, 1, 1])
        assert len(forecaster.diagnostics) == 8
        assert all(d.within_tolerance for d in forecaster.diagnostics)

    def test_mw_method(self, grid2):
        forecaster = CalibratedForecaster(grid2, MinimaxMethod(kind="mw", delta=0.1), seed=2)
        play(forecaster, [1, 0, 1, 1])
        assert forecaster.T == 4


class TestSampling:
    def test_pure_policy(self):
        rng = make_generator(0)
        assert all(sample_index(Policy.pure(2, 4), rng) == 2 for _ in range(50))

    def test_frequencies(self):
        rng = make_generator(11)
        policy = Policy(np.array([0.2, 0.5, 0.3]))
        draws = np.bincount([sample_index(policy, rng) for _ in range(20000)], minlength=3) / 20000
        np.testing.assert_allclose(draws, policy.weights, atol=0.02)

    def test_counter_based_reproducible(self):
        assert make_generator(9).random(5).tolist() == make_generator(9).random(5).tolist()


class TestDeterministicForecaster:
    """
    Tests unitaires pour le contre-exemple déterministe
    """

    def test_empty_history(self, grid2):
        k = deterministic_nearest_forecaster([], grid2)
        assert grid2.points[k].tolist() == [0.5, 0.5]

    def test_all_zero_history(self, grid2):
        k = deterministic_nearest_forecaster([0, 0, 0], grid2)
        assert grid2.points[k].tolist() == [1.0, 0.0]

    def test_follows_empirical_frequency(self, grid2):
        forecaster = play(DeterministicForecaster(grid2), [0, 0, 0, 1])
        k, policy = forecaster.forecast()
        assert grid2.points[k].tolist() == [0.75, 0.25]
        assert policy.weights[k] == 1.0
        assert forecaster.is_deterministic
