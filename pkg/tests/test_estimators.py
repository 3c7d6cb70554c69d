import math

import numpy as np
import pytest

from zoopt.estimators import (MU_FLOOR, averaged_estimator, clamp_mu,
                              coordinate_estimate, nes_antithetic_estimate,
                              two_point_uniform)
from zoopt.numkit import RngStream
from zoopt.oracle import StochasticObjective
from zoopt.problems import make_quadratic


class FixedDirection:
    """rng stand-in emitting preset direction vectors (already unit length)."""

    def __init__(self, *vecs):
        self.vecs = [np.array(v, dtype=float) for v in vecs]
        self.k = 0

    def normal(self, n):
        v = self.vecs[self.k % len(self.vecs)]
        self.k += 1
        assert n == v.shape[0]
        return v.copy()


def linear_obj(a):
    a = np.array(a, dtype=float)
    return StochasticObjective(a.shape[0], lambda x, xi: float(np.dot(a, x)))


def constant_obj(d, c=3.7):
    return StochasticObjective(d, lambda x, xi: c)


def test_two_point_linear_fixed_direction():
    obj = linear_obj([-2.0, -1.0])
    g = two_point_uniform(obj, np.zeros(2), 0, 0.1, FixedDirection([1.0, 0.0]))
    assert np.allclose(g, [-4.0, 0.0], atol=1e-12)


def test_two_point_constant_is_zero():
    rng = RngStream(0)
    for _ in range(20):
        g = two_point_uniform(constant_obj(4), np.ones(4), 0, 0.05, rng)
        assert np.array_equal(g, np.zeros(4))


def test_two_point_mean_zero_at_quadratic_minimum():
    obj = StochasticObjective(3, lambda x, xi: float(np.dot(x, x)))
    rng = RngStream(1)
    n = 30_000
    ests = np.empty((n, 3))
    for k in range(n):
        ests[k] = two_point_uniform(obj, np.zeros(3), 0, 0.05, rng)
    se = ests.std(axis=0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(ests.mean(axis=0)) <= 4.0 * se)


def test_averaged_reduces_to_two_point():
    prob = make_quadratic(5, condition=2.0, seed=3)
    x = np.ones(5) * 0.3
    g1 = averaged_estimator(prob.objective, x, 0.02, 1, 1, RngStream(9))
    g2 = two_point_uniform(prob.objective, x, 0, 0.02, RngStream(9))
    assert np.array_equal(g1, g2)


def test_averaged_variance_ratio_q10_vs_q1():
    prob = make_quadratic(20, condition=2.0, seed=4)
    x = np.full(20, 0.4)
    rng = RngStream(5)
    n = 2000

    def total_var(q):
        ests = np.empty((n, 20))
        for k in range(n):
            ests[k] = averaged_estimator(prob.objective, x, 0.01, 1, q, rng)
        c = ests - ests.mean(axis=0)
        return float((c * c).sum() / (n - 1))

    ratio = total_var(10) / total_var(1)
    assert 0.075 <= ratio <= 0.125  # 0.1 +/- 25%


def test_averaged_constant_zero():
    g = averaged_estimator(constant_obj(3), np.zeros(3), 0.1, 2, 4, RngStream(6))
    assert np.array_equal(g, np.zeros(3))


def test_coordinate_central_difference_quadratic():
    obj = StochasticObjective(3, lambda x, xi: float(np.dot(x, x)))
    x = np.array([1.0, 0.0, 0.0])
    g = coordinate_estimate(obj, x, 0, 0.01, [0])
    assert g[0] == pytest.approx(2.0, abs=1e-12)
    assert g[1] == 0.0 and g[2] == 0.0


def test_coordinate_linear_exact_any_mu():
    a = [1.5, -0.25, 4.0]
    obj = linear_obj(a)
    for mu in (1e-4, 0.01, 0.5):
        g = coordinate_estimate(obj, np.zeros(3), 0, mu, [0, 1, 2])
        assert np.allclose(g, a, atol=1e-9)


def test_coordinate_full_matches_analytic_gradient():
    prob = make_quadratic(6, condition=10.0, seed=7)
    rng = RngStream(8)
    x = rng.uniform(6) * 2 - 1
    g = coordinate_estimate(prob.objective, x, 0, 1e-4, list(range(6)))
    assert np.max(np.abs(g - prob.metadata.gradient(x))) <= 1e-9


def test_coordinate_rejects_duplicates_and_empty():
    obj = linear_obj([1.0, 2.0])
    with pytest.raises(ValueError):
        coordinate_estimate(obj, np.zeros(2), 0, 0.01, [0, 0])
    with pytest.raises(ValueError):
        coordinate_estimate(obj, np.zeros(2), 0, 0.01, [])


def test_nes_constant_zero():
    g = nes_antithetic_estimate(constant_obj(4), np.zeros(4), 0, 0.1, 3,
                                RngStream(10))
    assert np.array_equal(g, np.zeros(4))


def test_nes_linear_mean_recovers_slope():
    a = np.array([0.5, -1.0, 2.0])
    obj = linear_obj(a)
    rng = RngStream(11)
    n = 20_000
    ests = np.empty((n, 3))
    for k in range(n):
        ests[k] = nes_antithetic_estimate(obj, np.zeros(3), 0, 0.05, 1, rng)
    se = ests.std(axis=0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(ests.mean(axis=0) - a) <= 4.0 * se)


def test_nes_antithetic_symmetry():
    prob = make_quadratic(4, condition=3.0, seed=12)
    x = np.full(4, 0.2)
    u = np.array([0.3, -1.2, 0.7, 0.1])
    g_pos = nes_antithetic_estimate(prob.objective, x, 0, 0.05, 1,
                                    FixedDirection(u))
    g_neg = nes_antithetic_estimate(prob.objective, x, 0, 0.05, 1,
                                    FixedDirection(-u))
    assert np.allclose(g_pos, g_neg, atol=1e-12)


def test_query_costs_exact():
    prob = make_quadratic(6, seed=0, n_samples=5)
    rng = RngStream(13)
    x = np.zeros(6)
    averaged_estimator(prob.objective, x, 0.01, 3, 4, rng)
    assert prob.objective.queries == 3 * 5
    prob2 = make_quadratic(6, seed=0)
    two_point_uniform(prob2.objective, x, 0, 0.01, rng)
    assert prob2.objective.queries == 2
    prob3 = make_quadratic(6, seed=0)
    nes_antithetic_estimate(prob3.objective, x, 0, 0.01, 5, rng)
    assert prob3.objective.queries == 10
    prob4 = make_quadratic(6, seed=0)
    coordinate_estimate(prob4.objective, x, 0, 0.01, [1, 3])
    assert prob4.objective.queries == 4


def test_mu_clamp():
    assert clamp_mu(0.5) == 0.5
    assert clamp_mu(1e-12) == MU_FLOOR
    with pytest.raises(ValueError):
        clamp_mu(0.0)
    with pytest.raises(ValueError):
        clamp_mu(-1.0)


def test_gaussian_direction_ablation():
    # Gaussian directions drop the dimension factor: on a linear objective a
    # single estimate is (a.u) u
    obj = linear_obj([-2.0, -1.0])
    u = np.array([1.0, 0.0])
    g = two_point_uniform(obj, np.zeros(2), 0, 0.1, FixedDirection(u),
                          directions="gaussian")
    assert np.allclose(g, [-2.0, 0.0], atol=1e-12)
    rng = RngStream(20)
    n = 20_000
    ests = np.empty((n, 2))
    for k in range(n):
        ests[k] = two_point_uniform(obj, np.zeros(2), 0, 0.1, rng,
                                    directions="gaussian")
    se = ests.std(axis=0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(ests.mean(axis=0) - [-2.0, -1.0]) <= 4 * se)
