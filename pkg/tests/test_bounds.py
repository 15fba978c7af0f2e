"""Validity of the recourse caps and the scaled lower bound."""

import numpy as np
import pytest

from pgvrp.bounds import (
    b_matrix,
    lower_bound_scaled,
    theta_cap,
    ub_clustered,
    ub_simple,
)
from pgvrp.evaluation import expected_recourse
from pgvrp.model import incidence_point
from pgvrp.oracle import (
    EnumerationBudget,
    best_apriori_bruteforce,
    enumerate_apriori_solutions,
    gvrp_optimal,
)

from conftest import explicit_instance, random_euclid_instance


def test_all_certain_gives_zero_caps(rng):
    inst = random_euclid_instance(rng, 6, 3, 1, p_range=(1.0, 1.0))
    assert ub_simple(inst) == 0.0
    assert ub_clustered(inst) == 0.0
    assert np.allclose(b_matrix(inst), inst.distances)


def test_single_customer_out_and_back_term():
    inst = explicit_instance([[0, 7], [7, 0]], [(0.5, [1])])
    assert ub_simple(inst) == pytest.approx(0.5 * 2 * 7.0)
    assert ub_clustered(inst) == pytest.approx(ub_simple(inst))


def test_scaled_lower_bound():
    inst = explicit_instance(
        [[0, 3, 4], [3, 0, 5], [4, 5, 0]], [(0.5, [1]), (0.9, [2])]
    )
    _, det = gvrp_optimal(inst)
    assert lower_bound_scaled(inst, det) == pytest.approx(0.5 * det)


def test_depot_edge_rule():
    inst = explicit_instance(
        [[0, 10, 2], [10, 0, 9], [2, 9, 0]], [(0.3, [1]), (0.8, [2])]
    )
    b = b_matrix(inst)
    assert b[0, 1] == pytest.approx(0.3 * 10.0)
    assert b[0, 2] == pytest.approx(0.8 * 2.0)


def test_clustered_never_looser_than_simple(rng):
    for _ in range(25):
        n = int(rng.integers(3, 10))
        m = int(rng.integers(1, n))
        inst = random_euclid_instance(rng, n, m, 1)
        assert ub_clustered(inst) <= ub_simple(inst) + 1e-12


def test_singleton_clusters_make_bounds_equal(rng):
    inst = random_euclid_instance(rng, 7, 6, 1)
    assert ub_clustered(inst) == pytest.approx(ub_simple(inst))


def test_caps_dominate_recourse_exhaustively(rng):
    budget = EnumerationBudget(max_nodes=8, max_clusters=4, max_vehicles=2)
    for _ in range(12):
        n = int(rng.integers(4, 8))
        m = int(rng.integers(2, min(4, n - 1) + 1))
        k = int(rng.integers(1, min(2, m) + 1))
        inst = random_euclid_instance(rng, n, m, k)
        us, uc = ub_simple(inst), ub_clustered(inst)
        b = b_matrix(inst)
        for sol in enumerate_apriori_solutions(inst, budget):
            rec = expected_recourse(sol, inst, check=False)
            assert -1e-9 <= rec <= min(us, uc) + 1e-9
            cap = theta_cap(inst, incidence_point(inst, sol), b)
            assert rec <= cap + 1e-9


def test_theta_cap_linear_in_x(rng):
    inst = random_euclid_instance(rng, 6, 3, 1)
    budget = EnumerationBudget(max_nodes=8, max_clusters=4)
    sol = next(iter(enumerate_apriori_solutions(inst, budget)))
    point = incidence_point(inst, sol)
    half = type(point)(x=point.x * 0.5, y=point.y * 0.5)
    assert theta_cap(inst, half) == pytest.approx(0.5 * theta_cap(inst, point))
    zero = type(point)(x=np.zeros_like(point.x), y=np.zeros_like(point.y))
    assert theta_cap(inst, zero) == 0.0


def test_lower_bound_below_optimum(rng):
    for _ in range(8):
        n = int(rng.integers(4, 8))
        m = int(rng.integers(2, min(4, n - 1) + 1))
        inst = random_euclid_instance(rng, n, m, 1)
        _, det = gvrp_optimal(inst)
        _, best = best_apriori_bruteforce(inst)
        assert lower_bound_scaled(inst, det) <= best + 1e-9
