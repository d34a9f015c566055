from math import comb

import numpy as np
import pytest

from calibron.core.grid import Distribution, build_grid, nearest, round_largest_remainder
from calibron.utils.error_handling import ParameterError


class TestDistribution:
    """
    Tests unitaires pour Distribution
    """

    def test_dirac(self):
        assert Distribution.dirac(1, 3).to_list() == [0.0, 1.0, 0.0]

    def test_invalid_probabilities(self):
        """Coordonnées négatives ou somme différente de 1"""
        with pytest.raises(ParameterError):
            Distribution([0.5, 0.6])
        with pytest.raises(ParameterError):
            Distribution([1.2, -0.2])
        with pytest.raises(ParameterError):
            Distribution([np.nan, 1.0])

    def test_sum_tolerance(self):
        Distribution([0.5, 0.5 + 5e-10])

    def test_empirical(self):
        assert Distribution.empirical([0, 1, 1, 1], 2).to_list() == [0.25, 0.75]
        assert Distribution.empirical([], 2).to_list() == [0.5, 0.5]

    def test_read_only(self):
        distribution = Distribution.uniform(2)
        with pytest.raises(ValueError):
            distribution.probs[0] = 1.0


class TestBuildGrid:
    """
    Tests unitaires pour build_grid
    """

    def test_binary_unit_radius(self):
        grid = build_grid(2, 1.0)
        assert grid.m == 2
        assert grid.N_epsilon == 3
        assert grid.points.tolist() == [[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]

    def test_ternary_unit_radius(self):
        grid = build_grid(3, 1.0)
        assert grid.m == 3
        assert grid.N_epsilon == 10

    def test_coarsest_grid(self):
        grid = build_grid(2, 2.0)
        assert grid.m == 1
        assert grid.points.tolist() == [[0.0, 1.0], [1.0, 0.0]]

    @pytest.mark.parametrize("A,epsilon", [(2, 0.1), (3, 0.2), (4, 0.5), (5, 1.5)])
    def test_point_count_and_order(self, A, epsilon):
        """N_ε = binomial(m + A − 1, A − 1), points distincts et ordonnés"""
        grid = build_grid(A, epsilon)
        assert grid.N_epsilon == comb(grid.m + A - 1, A - 1)
        numerators = [tuple(row) for row in grid.numerators.tolist()]
        assert numerators == sorted(set(numerators))
        assert np.all(grid.numerators.sum(axis=1) == grid.m)
        assert grid.covering_radius <= epsilon + 1e-12

    @pytest.mark.parametrize("A,epsilon", [(1, 0.5), (2, 0.0), (2, -0.1), (2, 2.5), (2, float("nan")), (True, 0.5)])
    def test_invalid_parameters(self, A, epsilon):
        with pytest.raises(ParameterError):
            build_grid(A, epsilon)

    def test_immutable(self, grid2):
        with pytest.raises(ValueError):
            grid2.points[0, 0] = 0.3


class TestNearest:
    """
    Tests unitaires pour nearest
    """

    def test_largest_remainder_example(self):
        grid = build_grid(2, 1.0)
        k = nearest(grid, [0.3, 0.7])
        assert grid.points[k].tolist() == [0.5, 0.5]
        assert grid.point(k).l1_distance([0.3, 0.7]) == pytest.approx(0.4)

    def test_grid_point_maps_to_itself(self, grid3):
        for k in range(grid3.N_epsilon):
            assert nearest(grid3, grid3.points[k]) == k

    def test_ties_go_to_lowest_index(self):
        assert round_largest_remainder(np.array([0.5, 0.5]), 1).tolist() == [1, 0]

    def test_dimension_mismatch(self, grid2):
        with pytest.raises(ParameterError):
            nearest(grid2, [0.2, 0.3, 0.5])

    @pytest.mark.parametrize("A,epsilon", [(2, 0.1), (3, 0.25), (4, 0.6)])
    def test_covering_on_random_draws(self, A, epsilon, rng):
        """La distance au point arrondi est ≤ ε et égale au minimum sur la grille"""
        grid = build_grid(A, epsilon)
        for q in rng.dirichlet(np.ones(A), size=2000):
            k = nearest(grid, q)
            distances = grid.distances(q)
            assert distances[k] <= epsilon + 1e-12
            assert distances[k] <= distances.min() + 1e-12
