import math

import numpy as np
import pytest

from calibron.core.meta import (MetaForecaster, meta_bound, meta_brier_score, meta_l1_score, regime_epsilon,
                                regime_length, regime_of_round, regime_scores, schedule_ratio)
from calibron.core.scoring import bound_U
from calibron.utils.error_handling import ParameterError, ProtocolError


def play(meta, outcomes):
    records = []
    for a in outcomes:
        meta.forecast()
        records.append(meta.observe(a))
    return records


class TestSchedule:
    """
    Tests unitaires pour le calendrier des régimes
    """

    def test_lengths_and_radii(self):
        assert [regime_length(r) for r in (1, 2, 3)] == [2, 4, 8]
        assert regime_epsilon(3, 2) == pytest.approx(0.5)

    def test_round_to_regime(self):
        assert [regime_of_round(t) for t in range(1, 8)] == [1, 1, 2, 2, 2, 2, 3]

    def test_ratio_same_order(self):
        for A in (2, 3, 4):
            for r in range(1, 21):
                assert 0.25 <= schedule_ratio(r, A) <= 4.0

    def test_invalid_regime(self):
        with pytest.raises(ParameterError):
            regime_length(0)


class TestMetaForecaster:
    """
    Tests unitaires pour MetaForecaster
    """

    def test_regime_boundaries(self):
        meta = MetaForecaster(2, seed=1)
        records = play(meta, [0, 1, 0, 1, 1, 0, 0])
        assert [r.r for r in records] == [regime_of_round(t) for t in range(1, 8)]
        assert records[2].r == 2
        assert [regime.rounds for regime in meta.regimes] == [2, 4, 1]
        assert meta.regimes[1].grid.epsilon == pytest.approx(regime_epsilon(2, 2))

    def test_inner_average_resets(self):
        meta = MetaForecaster(2, seed=4)
        play(meta, [0, 0])
        first_inner = meta.inner
        meta.forecast()
        assert meta.inner is not first_inner
        assert meta.inner.average.T == 0
        meta.observe(1)
        assert meta.T == 3

    def test_forecast_is_distribution(self):
        meta = MetaForecaster(3, seed=2)
        distribution = meta.forecast()
        assert distribution.A == 3
        record = meta.observe(2)
        assert record.forecast == tuple(distribution.to_list())

    def test_phase_machine(self):
        meta = MetaForecaster(2, seed=0)
        with pytest.raises(ProtocolError):
            meta.observe(0)
        meta.forecast()
        with pytest.raises(ProtocolError):
            meta.forecast()
        with pytest.raises(ParameterError):
            meta.observe(5)

    def test_score_decomposition(self, rng):
        """Score par cases (régime, point) = (1/T) Σ_r T_r · score du régime"""
        meta = MetaForecaster(2, seed=8)
        play(meta, rng.integers(0, 2, size=14).tolist())
        assert len(meta.regimes) == 3
        weighted = sum(regime.rounds * score for regime, score in zip(meta.regimes, regime_scores(meta)))
        assert meta_l1_score(meta) == pytest.approx(weighted / meta.T, abs=1e-12)
        assert meta_brier_score(meta) <= 2 * meta_l1_score(meta) + 1e-12

    def test_empty(self):
        meta = MetaForecaster(2, seed=0)
        assert meta_l1_score(meta) == 0.0
        assert meta_brier_score(meta) == 0.0
        assert meta.current_distance_to_C() == 0.0
        assert math.isinf(meta_bound(meta))

    def test_bound_combines_regimes(self):
        meta = MetaForecaster(2, seed=3)
        play(meta, [0, 1, 1, 0, 1, 0])
        T = meta.T
        expected = sum(
            regime.rounds * bound_U(regime.grid.epsilon, regime.rounds, 1.0 / (2 ** regime.r * T ** 2),
                                    A=2, n_epsilon=regime.grid.N_epsilon)
            for regime in meta.regimes
        ) / T
        assert meta_bound(meta) == pytest.approx(expected)

    def test_invalid_alphabet(self):
        with pytest.raises(ParameterError):
            MetaForecaster(1)

    def test_reproducible(self):
        outcomes = [0, 1, 1, 0, 1, 0, 0, 1, 1, 1]
        first = [r.forecast for r in play(MetaForecaster(2, seed=6), outcomes)]
        second = [r.forecast for r in play(MetaForecaster(2, seed=6), outcomes)]
        assert first == second
        assert np.all(np.isclose(np.sum(first, axis=1), 1.0))
