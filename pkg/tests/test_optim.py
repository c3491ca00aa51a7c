import math

import numpy as np
import pytest

from chaosdual.basis import enumerate_basis
from chaosdual.market import BlackScholesParams, TimeGrid, simulate_black_scholes
from chaosdual.optim import DescentConfig, descend, european_anchor, minimize, polyak_step
from chaosdual.dual import DualObjective
from chaosdual.oracle import bs_european_put
from chaosdual.payoff import DiscountedPayoffs, PayoffSpec, evaluate_payoffs
from chaosdual.tables import ALL_ROWS
from chaosdual.cli import run_price


def test_polyak_step_examples():
    assert polyak_step(3.0, 3.0, 2.0) == 0
    assert polyak_step(5.0, 4.0, 4.0) == 0.25
    assert polyak_step(1.0, 2.0, 1.0) == -1.0
    with pytest.raises(ZeroDivisionError):
        polyak_step(1.0, 0.0, 0.0)


def test_anchor_examples():
    z = np.zeros((4, 3))
    assert european_anchor(DiscountedPayoffs(z, np.full(4, 2))) == 0
    z[:, -1] = 2.5
    assert european_anchor(DiscountedPayoffs(z, np.full(4, 2))) == 2.5


def test_anchor_matches_closed_form():
    params = BlackScholesParams(100, 0.2, 0.0, 0.0488, assets=1)
    grid = TimeGrid(1.0, 9)
    pay = evaluate_payoffs(PayoffSpec("basket_put", 100), simulate_black_scholes(params, grid, 100_000, 1), 0.0488, grid)
    se = pay.z[:, -1].std() / math.sqrt(100_000)
    assert abs(european_anchor(pay) - bs_european_put(100, 0.2, 0.0488, 0.0, 1.0, 100)) < 3 * se


def test_config_validation():
    for bad in ({"epsilon": 0}, {"max_iters": 0}, {"gamma0": 2}, {"min_gamma": 0}):
        with pytest.raises(ValueError):
            DescentConfig(**bad)


def test_zero_payoff_stops_at_zero():
    basis = enumerate_basis(2, 3, 1)
    g = np.random.default_rng(0).standard_normal((100, 3, 1))
    pay = DiscountedPayoffs(np.zeros((100, 4)), np.full(100, 3))
    lam, res = minimize(basis, g, pay, threads=1)
    assert res.price == 0 and res.evaluations == 1
    assert res.stop_reason == "zero_gradient"
    np.testing.assert_array_equal(lam, 0)


def test_first_accepted_value_is_plain_upper_bound():
    row = ALL_ROWS["basket_d5_p2_n3_s100"]
    res = run_price(row.config(m=4096), write=False)
    cfg = row.config(m=4096)
    from chaosdual.cli import simulate

    batch = simulate(cfg)
    pay = evaluate_payoffs(cfg.payoff, batch, cfg.rate, cfg.grid)
    v0 = DualObjective(enumerate_basis(2, 3, 5), batch, pay, threads=1)(np.zeros(basis_len := res.basis_size)).value
    assert res.trace[0].value == v0 and res.trace[0].step == 0
    vals = [e.value for e in res.trace]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert res.price >= res.european - 3 * res.stderr
    assert basis_len == math.comb(5 * 3 + 2, 5 * 3) - 1


@pytest.mark.parametrize("key", ["basket_d5_p2_n3_s100", "basket_d5_p3_n3_s100"])
def test_evaluation_count_in_reported_range(key):
    res = run_price(ALL_ROWS[key].config(), write=False)
    assert res.stop_reason == "converged"
    assert 10 / 3 <= res.evaluations <= 20 * 3


def test_doubling_paths_is_stable():
    row = ALL_ROWS["geometric_d2_p2"]
    a = run_price(row.config(m=5000), write=False)
    b = run_price(row.config(m=10000), write=False)
    assert abs(a.price - b.price) < 4 * math.hypot(a.stderr, b.stderr)


def test_non_finite_payoffs_rejected():
    z = np.ones((10, 3))
    z[3, 1] = np.nan
    with pytest.raises(ValueError, match="path 3"):
        DualObjective(enumerate_basis(1, 2, 1), np.zeros((10, 2, 1)), DiscountedPayoffs(z, np.zeros(10, dtype=np.int64)))


def test_non_finite_objective_raises():
    from chaosdual.dual import ObjectiveReport
    from chaosdual.optim import NumericalError

    class Exploding:
        size = 3

        def __call__(self, lam):
            v = 1.0 if not lam.any() else math.nan
            return ObjectiveReport(v, np.ones(3), 1.0, np.zeros(1, dtype=np.int64), 1)

    with pytest.raises(NumericalError, match="evaluation 2"):
        descend(Exploding(), DescentConfig(), 0.0)
