import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chaosdual.basis import enumerate_basis, eval_basis
from chaosdual.checks import _geometric_setup
from chaosdual.dual import (
    DualObjective,
    default_chunks,
    objective_and_gradient,
    parallel_reduce,
    pathwise_max,
    restarted_martingale,
    sequential_objective,
)
from chaosdual.market import PATH_BLOCK
from chaosdual.payoff import DiscountedPayoffs


def test_restarted_martingale_examples():
    M = np.array([0.0, 1.0, 3.0, 4.0])
    np.testing.assert_array_equal(restarted_martingale(M, 0), M)
    np.testing.assert_array_equal(restarted_martingale(M, 3), 0)
    np.testing.assert_array_equal(restarted_martingale(M, 2), [0, 0, 0, 1])


def test_pathwise_max_examples():
    assert pathwise_max([0, 2, 1], np.zeros(3), 1) == (2.0, 1)
    assert pathwise_max(np.zeros(4), np.zeros(4), 2) == (0.0, 2)
    assert pathwise_max([0, 1, 1], [0, 0, 0.5], 1) == (1.0, 1)


@pytest.fixture(scope="module")
def setup():
    return _geometric_setup(p=2, n=3, d=2, m=1500)


def test_zero_coefficients_give_plain_maximum(setup):
    basis, batch, pay = setup
    rep = objective_and_gradient(basis, np.zeros(len(basis)), batch, pay)
    live = np.arange(4) >= pay.tau0[:, None]
    assert rep.value == pytest.approx(np.where(live, pay.z, -np.inf).max(1).mean(), rel=1e-14)
    assert np.any(rep.gradient != 0)
    assert rep.gradient.shape == (len(basis),)


def test_single_path_gradient_is_negative_basis():
    basis = enumerate_basis(2, 3, 1)
    g = np.array([[[0.3], [-1.2], [0.7]]])
    pay = DiscountedPayoffs(np.array([[1.0, 0.0, 0.0, 5.0]]), np.array([0]))
    rep = objective_and_gradient(basis, np.zeros(len(basis)), g, pay)
    assert rep.argmax_dates[0] == 3
    np.testing.assert_allclose(rep.gradient, -eval_basis(basis, g[0]))


def test_duplicate_paths_average_to_single(setup):
    basis, batch, pay = setup
    lam = np.random.default_rng(0).normal(0, 0.1, len(basis))
    one = objective_and_gradient(basis, lam, batch.g[:1], DiscountedPayoffs(pay.z[:1], pay.tau0[:1]))
    two = objective_and_gradient(
        basis, lam, np.repeat(batch.g[:1], 2, 0), DiscountedPayoffs(np.repeat(pay.z[:1], 2, 0), np.repeat(pay.tau0[:1], 2))
    )
    assert two.value == pytest.approx(one.value, rel=1e-15)
    np.testing.assert_allclose(two.gradient, one.gradient, rtol=1e-15)


def test_kernel_matches_numpy_evaluator(setup):
    basis, batch, pay = setup
    lam = np.random.default_rng(1).normal(0, 0.2, len(basis))
    a = objective_and_gradient(basis, lam, batch, pay)
    b = sequential_objective(basis, lam, batch, pay)
    assert a.value == pytest.approx(b.value, rel=1e-13)
    assert a.second_moment == pytest.approx(b.second_moment, rel=1e-13)
    np.testing.assert_allclose(a.gradient, b.gradient, atol=1e-13)
    np.testing.assert_array_equal(a.argmax_dates, b.argmax_dates)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 4), st.integers(1, 5), st.integers(0, 1000))
def test_chunking_and_threads_are_bitwise_invariant(threads, blocks_per_chunk, seed):
    basis, batch, pay = _geometric_setup(p=2, n=3, d=2, m=1500)
    lam = np.random.default_rng(seed).normal(0, 0.2, len(basis))
    obj = DualObjective(basis, batch, pay, threads=1)
    ref = parallel_reduce(obj, lam, [(0, obj.m)])
    got = parallel_reduce(obj, lam, default_chunks(obj.m, threads, blocks_per_chunk * PATH_BLOCK), threads)
    assert got.value == ref.value
    assert got.second_moment == ref.second_moment
    np.testing.assert_array_equal(got.gradient, ref.gradient)


def test_four_chunks_equal_one_chunk(setup):
    basis, batch, pay = setup
    lam = np.random.default_rng(2).normal(0, 0.2, len(basis))
    one = DualObjective(basis, batch, pay, threads=1, chunk_size=10**6)(lam)
    four = DualObjective(basis, batch, pay, threads=4, chunk_size=PATH_BLOCK)(lam)
    assert len(default_chunks(1500, 4, PATH_BLOCK)) == 3
    assert one.value == four.value
    np.testing.assert_array_equal(one.gradient, four.gradient)


def test_partition_errors(setup):
    basis, batch, pay = setup
    obj = DualObjective(basis, batch, pay, threads=1)
    lam = np.zeros(len(basis))
    for chunks in ([], [(0, 100), (100, obj.m)], [(0, 512)], [(512, obj.m), (0, 512)]):
        with pytest.raises(ValueError):
            parallel_reduce(obj, lam, chunks)
    with pytest.raises(ValueError):
        default_chunks(0, 1)
    with pytest.raises(ValueError):
        obj(np.zeros(3))


def test_shape_mismatch_rejected(setup):
    basis, batch, pay = setup
    with pytest.raises(ValueError):
        DualObjective(enumerate_basis(2, 4, 2), batch, pay)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_subgradient_inequality_holds_at_ties(seed):
    # integer payoffs with lam = 0 make ties common
    rng = np.random.default_rng(seed)
    basis = enumerate_basis(2, 3, 1)
    m = 64
    z = rng.integers(0, 3, (m, 4)).astype(float)
    tau0 = np.where((z > 0).any(1), (z > 0).argmax(1), 3)
    pay = DiscountedPayoffs(z, tau0)
    g = rng.standard_normal((m, 3, 1))
    obj = DualObjective(basis, g, pay, threads=1)
    rep = obj(np.zeros(len(basis)))
    for _ in range(5):
        e = rng.normal(0, 1e-3, len(basis))
        assert obj(e).value >= rep.value + rep.gradient @ e - 1e-12


def test_upper_bound_dominates_immediate_exercise(setup):
    basis, batch, pay = setup
    lower = pay.z[np.arange(pay.z.shape[0]), pay.tau0].mean()
    rng = np.random.default_rng(4)
    for scale in (0.0, 0.1, 1.0):
        rep = objective_and_gradient(basis, rng.normal(0, scale, len(basis)), batch, pay)
        assert rep.value + 3 * rep.stderr >= lower
        assert rep.variance >= 0
