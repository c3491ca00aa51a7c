"""Invariant suite run by ``chaosdual check`` and the test-suite.

Each check returns a :class:`CheckResult`; none raises on a failed property.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .basis import conditional_prefix_sum, enumerate_basis, eval_basis
from .dual import DualObjective, restarted_martingale, sequential_objective
from .market import BlackScholesParams, TimeGrid, simulate_black_scholes
from .optim import DescentConfig, minimize
from .payoff import PayoffSpec, evaluate_payoffs
from .tables import ALL_ROWS


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _timed(name, fn, *args, **kwargs) -> CheckResult:
    t0 = time.perf_counter()
    passed, detail = fn(*args, **kwargs)
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


def _geometric_setup(p=2, n=3, d=2, m=2000, seed=7):
    params = BlackScholesParams(100.0, 0.2, 0.0, 0.0488, 0.0, assets=d)
    grid = TimeGrid(1.0, n)
    batch = simulate_black_scholes(params, grid, m, seed)
    payoffs = evaluate_payoffs(PayoffSpec("geometric_put", 100.0), batch, params.rate, grid)
    return enumerate_basis(p, n, d), batch, payoffs


def check_orthonormality(m=100_000, p=2, n=2, d=2, z=5.0, seed=11):
    """Sample second moments of the normalized basis against the identity."""
    basis = enumerate_basis(p, n, d)
    rng = np.random.default_rng(seed)
    h = eval_basis(basis, rng.standard_normal((m, n, d)))
    worst = 0.0
    for a in range(len(basis)):
        prod = h[:, a : a + 1] * h[:, a:]
        target = (np.arange(prod.shape[1]) == 0).astype(float)
        se = prod.std(axis=0, ddof=1) / math.sqrt(m)
        worst = max(worst, float(np.max(np.abs(prod.mean(axis=0) - target) / se)))
    return worst <= z, f"{len(basis)} elements, m={m}, worst deviation {worst:.2f} se (limit {z})"


def check_drop_term(m=100_000, p=2, n=3, d=2, z=5.0, outer=3, seed=12):
    """Elements activated after date k average to zero given the increments up to k."""
    basis = enumerate_basis(p, n, d)
    rng = np.random.default_rng(seed)
    worst, tested = 0.0, 0
    for k in range(n):
        later = slice(basis.block_starts[k + 1], len(basis))
        for _ in range(outer):
            g = rng.standard_normal((m, n, d))
            g[:, :k] = rng.standard_normal((k, d))
            vals = eval_basis(basis, g)[:, later]
            se = vals.std(axis=0, ddof=1) / math.sqrt(m)
            worst = max(worst, float(np.max(np.abs(vals.mean(axis=0)) / se)))
            tested += vals.shape[1]
    return worst <= z, f"{tested} conditional means, worst {worst:.2f} se (limit {z})"


def check_gradient(trials=20, tol=1e-5, scale=0.05, seed=13):
    """Central differences on every coordinate at random coefficient vectors.

    The objective is piecewise linear, so a draw whose perturbations move any
    path's argmax sits on a kink; such draws are replaced.
    """
    basis, batch, payoffs = _geometric_setup()
    obj = DualObjective(basis, batch, payoffs, threads=1)
    rng = np.random.default_rng(seed)
    worst, redraws, done, seq_err = 0.0, 0, 0, 0.0
    while done < trials:
        lam = rng.normal(0.0, scale, len(basis))
        lam[lam == 0] = scale
        rep = obj(lam)
        fd = np.empty(len(basis))
        kinked = False
        for a in range(len(basis)):
            step = 1e-6 * (1 + abs(lam[a]))
            e = np.zeros(len(basis))
            e[a] = step
            up, dn = obj(lam + e), obj(lam - e)
            if not (np.array_equal(up.argmax_dates, rep.argmax_dates) and np.array_equal(dn.argmax_dates, rep.argmax_dates)):
                kinked = True
                break
            fd[a] = (up.value - dn.value) / (2 * step)
        if kinked:
            redraws += 1
            if redraws > 10 * trials:
                return False, "could not find kink-free coefficient draws"
            continue
        worst = max(worst, float(np.max(np.abs(fd - rep.gradient)) / np.max(np.abs(rep.gradient))))
        if done < 3:
            seq = sequential_objective(basis, lam, batch, payoffs)
            seq_err = max(seq_err, abs(seq.value - rep.value), float(np.max(np.abs(seq.gradient - rep.gradient))))
        done += 1
    ok = worst <= tol and seq_err <= 1e-10
    return ok, (
        f"{trials} draws ({redraws} redrawn), worst relative error {worst:.2e} (limit {tol}); "
        f"compiled vs numpy evaluator {seq_err:.1e}"
    )


def check_convexity(triples=100, scale=0.2, seed=14):
    basis, batch, payoffs = _geometric_setup()
    obj = DualObjective(basis, batch, payoffs, threads=1)
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(triples):
        l1, l2 = rng.normal(0, scale, (2, len(basis)))
        theta = rng.uniform()
        lhs = obj(theta * l1 + (1 - theta) * l2).value
        rhs = theta * obj(l1).value + (1 - theta) * obj(l2).value
        worst = max(worst, lhs - rhs)
    return worst <= 1e-12, f"{triples} triples, max excess {worst:.2e} (limit 1e-12)"


def check_descent(rows=None, m=2048):
    """Accepted iterates strictly decrease on every benchmark row (paths reduced to ``m``)."""
    from .cli import run_price

    rows = list(ALL_ROWS.values()) if rows is None else rows
    bad = []
    for row in rows:
        res = run_price(row.config(m=min(m, row.m)), write=False)
        vals = [e.value for e in res.trace]
        if any(b >= a for a, b in zip(vals, vals[1:])) or res.price < res.european - 3 * res.stderr:
            bad.append(row.key)
    return not bad, f"{len(rows)} rows at m<={m}" + (f"; failures: {', '.join(bad)}" if bad else "")


def check_restart_equivalence(m=100_000, z=4.0, seed=15, chunk=10_000):
    """Mean of max(z - M) minus max(z - N) over the same paths is zero within ``z`` se."""
    basis, batch, payoffs = _geometric_setup(p=2, n=9, d=2, m=m, seed=seed)
    lam = np.random.default_rng(seed).normal(0, 0.3, len(basis))
    diffs = np.empty(m)
    for lo in range(0, m, chunk):
        hi = min(m, lo + chunk)
        M = conditional_prefix_sum(basis, eval_basis(basis, batch.g[lo:hi]), lam)
        zz, t0 = payoffs.z[lo:hi], payoffs.tau0[lo:hi]
        N = np.stack([restarted_martingale(M[i], int(t0[i])) for i in range(hi - lo)])
        live = np.arange(basis.n + 1) >= t0[:, None]
        diffs[lo:hi] = np.where(live, zz - M, -np.inf).max(1) - np.where(live, zz - N, -np.inf).max(1)
    mean, se = diffs.mean(), diffs.std(ddof=1) / math.sqrt(m)
    return abs(mean) <= z * se, f"m={m}, mean difference {mean:.4f}, {abs(mean) / se:.2f} se (limit {z})"


def run_all(quick: bool = False) -> list[CheckResult]:
    results = [
        _timed("orthonormality", check_orthonormality),
        _timed("drop-term", check_drop_term),
        _timed("gradient", check_gradient),
        _timed("convexity", check_convexity),
        _timed("restart equivalence", check_restart_equivalence),
    ]
    if not quick:
        results.append(_timed("strict descent", check_descent))
    return results
