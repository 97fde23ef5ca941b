import math

import numpy as np
import pytest

from cachecalc.bounds import (
    BoundPair,
    analytical_lower_bound,
    analytical_upper_bound,
    expected_top_load_bounds,
    nonuniform_lower_bound,
    nonuniform_upper_bound,
    proximity_upper_bound,
    threshold_bounds,
)
from cachecalc.exact import exact_average_delay, exact_rank_loads, t_min
from cachecalc.network import IntensityVector, NetworkConfig, zipf_intensities

GRID = [(K, L, t) for K in range(1, 7) for L in range(2, 5) for t in range(L + 1)]


def test_bound_pair_order():
    with pytest.raises(ValueError):
        BoundPair(2.0, 1.0, "x")
    assert BoundPair(1.0, 3.0, "x").gap == 2.0


@pytest.mark.parametrize("K,L,t", GRID)
def test_sandwich_oracle_grid(K, L, t):
    c = NetworkConfig(K, L, t)
    exact = exact_average_delay(c)
    assert analytical_lower_bound(c) <= exact + 1e-12
    assert exact <= analytical_upper_bound(c) + 1e-12


def test_trivial_reductions():
    c = NetworkConfig(6, 4, 4)
    assert analytical_upper_bound(c) == 0.0
    assert analytical_lower_bound(c) == 0.0
    assert nonuniform_upper_bound(c, zipf_intensities(4, 1.0)) == 0.0
    for K in (3, 10, 25):
        assert analytical_lower_bound(NetworkConfig(K, 5, 0)) == pytest.approx(K, rel=1e-12)


def test_lower_bounds_need_two_caches():
    c = NetworkConfig(3, 1, 0)
    with pytest.raises(ValueError):
        analytical_lower_bound(c)
    with pytest.raises(ValueError):
        nonuniform_lower_bound(c, IntensityVector.uniform(1))
    assert analytical_upper_bound(c) >= 3 - 1e-12


def test_frozen_bound_values():
    # Frozen from a direct evaluation with scipy.stats.binom.
    c = NetworkConfig(40, 20, 2)
    assert analytical_upper_bound(c) == pytest.approx(24.0642980941, rel=1e-10)
    assert analytical_lower_bound(c) == pytest.approx(12.3332060348, rel=1e-10)


def test_top_load_bounds():
    pair = expected_top_load_bounds(NetworkConfig(1, 1, 0), 1)
    assert pair.lower == pytest.approx(1.0) and pair.upper == pytest.approx(1.0)
    for K, L in [(8, 4), (16, 8), (30, 6)]:
        c = NetworkConfig(K, L, 1)
        ranks = exact_rank_loads(c)
        first = expected_top_load_bounds(c, 1)
        assert first.lower >= math.ceil(K / L) - 1
        assert first.lower <= ranks[0] + 1e-12 <= first.upper + 2e-12
        for r in range(2, L + 1):
            assert ranks[r - 1] <= expected_top_load_bounds(c, r).upper + 1e-12
    with pytest.raises(ValueError):
        expected_top_load_bounds(NetworkConfig(8, 4, 1), 5)


@pytest.mark.parametrize("K", [8, 16])
@pytest.mark.parametrize("t", [1, 3])
def test_threshold_sandwich_and_monotonicity(K, t):
    c = NetworkConfig(K, 6, t)
    exact = exact_average_delay(c)
    prev = None
    for rho in (0.3, 0.5, 0.8, 0.9, 0.99):
        b = threshold_bounds(c, rho)
        assert b.coverage >= rho
        assert b.lower <= exact + 1e-12 <= b.upper + 2e-12
        assert b.gap == pytest.approx((1 - b.coverage) * (c.worst_delay - t_min(c)), abs=1e-10)
        if prev is not None:
            assert b.lower >= prev.lower - 1e-12
            assert b.upper <= prev.upper + 1e-12
        prev = b


def test_threshold_full_coverage_is_exact():
    c = NetworkConfig(10, 5, 2)
    b = threshold_bounds(c, 1.0)
    assert b.coverage == 1.0
    assert b.lower == pytest.approx(exact_average_delay(c), abs=1e-12)
    assert b.upper == pytest.approx(exact_average_delay(c), abs=1e-12)


def test_threshold_budget_warning():
    b = threshold_bounds(NetworkConfig(30, 10, 2), 0.999, budget=50)
    assert b.warning and b.profiles_used == 50
    assert b.coverage < 0.999
    with pytest.raises(ValueError):
        threshold_bounds(NetworkConfig(4, 2, 1), 0.0)


@pytest.mark.parametrize("K,L", [(5, 3), (20, 8), (40, 20), (100, 10)])
def test_nonuniform_reduces_to_uniform(K, L):
    for t in range(L + 1):
        c = NetworkConfig(K, L, t)
        assert nonuniform_upper_bound(c, IntensityVector.uniform(L)) == pytest.approx(
            analytical_upper_bound(c), abs=1e-10
        )
        assert nonuniform_upper_bound(c, zipf_intensities(L, 0.0)) == pytest.approx(
            analytical_upper_bound(c), abs=1e-10
        )


def test_nonuniform_lower_limits():
    K, L, t = 32, 8, 2
    c = NetworkConfig(K, L, t)
    point = IntensityVector(np.eye(L)[0])
    expected = (L - t) / (1 + t) * (K * t / (L - 1) + K / L * (L - t - 1) / (L - 1))
    assert nonuniform_lower_bound(c, point) == pytest.approx(expected, rel=1e-12)
    # Uniform intensities: max(p) = 1/L gives the no-deviation lower bound.
    u = nonuniform_lower_bound(c, IntensityVector.uniform(L))
    assert u == pytest.approx((L - t) / (1 + t) * K / L, rel=1e-12)
    assert u <= exact_average_delay(c)


def test_zipf_intensities():
    np.testing.assert_allclose(zipf_intensities(2, 1.0).probs, [2 / 3, 1 / 3], rtol=1e-15)
    np.testing.assert_allclose(zipf_intensities(5, 0.0).probs, np.full(5, 0.2))
    p = zipf_intensities(1_000_000, 1.25).probs
    assert abs(p.sum() - 1) < 1e-12
    assert np.all(np.diff(p) <= 0)
    with pytest.raises(ValueError):
        IntensityVector([0.5, 0.6])


def test_proximity_bound():
    c = NetworkConfig(64, 16, 2)
    vals = [proximity_upper_bound(c, h) for h in (1, 2, 4, 8, 16)]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] >= t_min(c)
    # h = 1 is the top-rank-only coarsening of the uniform bound plus one.
    tails_bound = expected_top_load_bounds(c, 1).upper
    assert vals[0] == pytest.approx((16 - 2) / 3 * (1 + tails_bound), rel=1e-12)
    with pytest.raises(ValueError):
        proximity_upper_bound(c, 17)
