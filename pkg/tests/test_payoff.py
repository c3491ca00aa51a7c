import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from chaosdual.market import BlackScholesParams, PathBatch, TimeGrid, simulate_black_scholes
from chaosdual.oracle import geometric_reduction
from chaosdual.payoff import PayoffSpec, evaluate_payoffs, first_in_the_money


def test_intrinsic_examples():
    assert PayoffSpec("basket_put", 100).intrinsic(np.array([100.0, 100.0])) == 0
    assert PayoffSpec("basket_put", 100, [0.25, 0.75]).intrinsic(np.array([100.0, 100.0])) == 0
    assert PayoffSpec("geometric_put", 100).intrinsic(np.array([100.0, 100.0])) == pytest.approx(0, abs=1e-12)
    assert PayoffSpec("min_put", 100).intrinsic(np.array([90.0, 120.0])) == 10
    assert PayoffSpec("max_call", 100).intrinsic(np.array([90.0, 120.0])) == 20


def test_spec_validation():
    with pytest.raises(ValueError):
        PayoffSpec("straddle", 100)
    with pytest.raises(ValueError):
        PayoffSpec("basket_put", 0)
    with pytest.raises(ValueError):
        PayoffSpec("basket_put", 100, [1, 2, 3]).intrinsic(np.ones((4, 2)))


@pytest.mark.parametrize("z,k", [([0, 0, 0, 0], 3), ([5, 0, 0], 0), ([0, 0, 3, 1], 2)])
def test_first_in_the_money(z, k):
    assert first_in_the_money(z) == k


@given(arrays(float, 6, elements=st.one_of(st.just(0.0), st.floats(1e-3, 10))), st.floats(0.01, 100))
def test_tau0_invariant_under_rescaling(z, c):
    assert first_in_the_money(z * c) == first_in_the_money(z)


def test_discounting_strictly_decreasing():
    grid = TimeGrid(2.0, 4)
    spots = np.full((3, 5, 2), 80.0)
    batch = PathBatch(np.zeros((3, 4, 2)), spots, seed=0)
    out = evaluate_payoffs(PayoffSpec("basket_put", 100), batch, 0.05, grid)
    assert np.all(np.diff(out.z, axis=1) < 0)
    np.testing.assert_allclose(out.z[0], 20 * np.exp(-0.05 * grid.dates))
    assert np.all(out.tau0 == 0)


def test_dimension_mismatch_rejected():
    batch = PathBatch(np.zeros((1, 3, 2)), np.full((1, 4, 2), 90.0), seed=0)
    with pytest.raises(ValueError):
        evaluate_payoffs(PayoffSpec("basket_put", 100), batch, 0.05, TimeGrid(1.0, 5))
    with pytest.raises(ValueError):
        evaluate_payoffs(PayoffSpec("basket_put", 100, [1, 0, 0]), batch, 0.05, TimeGrid(1.0, 3))


def test_geometric_payoff_matches_reduced_model_in_law():
    params = BlackScholesParams(100, 0.3, 0.0, 0.0488, 0.1, assets=10)
    grid = TimeGrid(1.0, 3)
    m = 100_000
    full = evaluate_payoffs(PayoffSpec("geometric_put", 100), simulate_black_scholes(params, grid, m, 1), params.rate, grid)
    red = geometric_reduction(params)
    one = BlackScholesParams(red.s_hat, red.sigma_hat, red.delta_hat, params.rate)
    reduced = evaluate_payoffs(PayoffSpec("basket_put", 100), simulate_black_scholes(one, grid, m, 2), params.rate, grid)
    for moment in (1, 2):
        a, b = full.z**moment, reduced.z**moment
        se = np.sqrt(a.var(0) / m + b.var(0) / m)
        assert np.all(np.abs(a.mean(0) - b.mean(0)) <= 4 * se + 1e-12)
