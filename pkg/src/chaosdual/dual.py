"""Sample-average dual objective with martingales restarted at the first in-the-money date.

For coefficients ``lam`` over the chaos basis, path ``i`` contributes

    max_{tau0 <= k <= n} (z_k - N_k),    N_k = M_k - M_{min(k, tau0)},

where ``M_k`` keeps the basis elements active by date ``k``.  The objective is
the mean of these contributions; its (sub)gradient is accumulated in the same
pass.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .basis import MultiIndexBasis, conditional_prefix_sum, eval_basis
from .market import PATH_BLOCK
from .payoff import DiscountedPayoffs


@dataclass(frozen=True, eq=False)
class ObjectiveReport:
    value: float
    gradient: np.ndarray
    second_moment: float
    argmax_dates: np.ndarray
    m: int

    @property
    def variance(self) -> float:
        return max(self.second_moment - self.value**2, 0.0)

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.m)


def restarted_martingale(Mk, tau0: int) -> np.ndarray:
    """``N_k = M_k - M_{min(k, tau0)}``; zero up to and including ``tau0``."""
    Mk = np.asarray(Mk, dtype=float)
    k = np.arange(Mk.shape[-1])
    return Mk - Mk[..., np.minimum(k, tau0)]


def pathwise_max(z, N, tau0: int) -> tuple[float, int]:
    """Maximum of ``z_k - N_k`` over ``k >= tau0``; ties go to the smallest index."""
    diff = np.asarray(z, dtype=float)[tau0:] - np.asarray(N, dtype=float)[tau0:]
    k = int(np.argmax(diff))
    return float(diff[k]), tau0 + k


def sequential_objective(basis: MultiIndexBasis, lam, g, payoffs: DiscountedPayoffs) -> ObjectiveReport:
    """Path-by-path numpy evaluation, composed from the public per-path operations.

    Slow but simple; used to cross-check the compiled evaluator.
    """
    lam = np.asarray(lam, dtype=float)
    g = getattr(g, "g", g)
    m = g.shape[0]
    values = np.empty(m)
    kstar = np.empty(m, dtype=np.int64)
    grad = np.zeros(len(basis))
    for i in range(m):
        b = eval_basis(basis, g[i])
        t0 = int(payoffs.tau0[i])
        N = restarted_martingale(conditional_prefix_sum(basis, b, lam), t0)
        values[i], kstar[i] = pathwise_max(payoffs.z[i], N, t0)
        sl = basis.active_between(t0, int(kstar[i]))
        grad[sl] -= b[sl]
    return ObjectiveReport(
        float(values.mean()), grad / m, float(np.mean(values**2)), kstar, m
    )


def default_chunks(m: int, threads: int, chunk_size: int | None = None) -> list[tuple[int, int]]:
    """Contiguous path ranges aligned to ``PATH_BLOCK``.

    The default size is ``m / (8 * threads)`` rounded up to a whole block.
    """
    if m < 1:
        raise ValueError("cannot split an empty path set")
    if chunk_size is None:
        chunk_size = -(-m // (8 * max(threads, 1)))
    chunk_size = max(PATH_BLOCK, -(-chunk_size // PATH_BLOCK) * PATH_BLOCK)
    return [(lo, min(m, lo + chunk_size)) for lo in range(0, m, chunk_size)]


class DualObjective:
    """Evaluator of the objective and gradient on a fixed set of simulated paths.

    Paths are grouped in blocks of ``PATH_BLOCK``; every block's partial sums
    are kept separately and combined in block order, so the result is bitwise
    identical for any chunking and thread count.
    """

    def __init__(
        self,
        basis: MultiIndexBasis,
        g: np.ndarray,
        payoffs: DiscountedPayoffs,
        threads: int | None = None,
        chunk_size: int | None = None,
    ):
        g = np.ascontiguousarray(getattr(g, "g", g), dtype=np.float64)
        if g.ndim != 3 or g.shape[1:] != (basis.n, basis.d):
            raise ValueError(f"increments of shape {g.shape} do not match basis (n={basis.n}, d={basis.d})")
        z = np.ascontiguousarray(payoffs.z, dtype=np.float64)
        if z.shape != (g.shape[0], basis.n + 1):
            raise ValueError(f"payoffs of shape {z.shape} do not match {g.shape[0]} paths and n={basis.n}")
        if not np.all(np.isfinite(z)):
            bad = int(np.argwhere(~np.isfinite(z))[0, 0])
            raise ValueError(f"non-finite discounted payoff on path {bad}")
        self.basis = basis
        self.g = g
        self.z = z
        self.tau0 = np.ascontiguousarray(payoffs.tau0, dtype=np.int64)
        self.threads = threads or os.cpu_count() or 1
        self.chunk_size = chunk_size
        self.evaluations = 0

    @property
    def m(self) -> int:
        return self.g.shape[0]

    @property
    def size(self) -> int:
        return len(self.basis)

    def chunks(self) -> list[tuple[int, int]]:
        return default_chunks(self.m, self.threads, self.chunk_size)

    def __call__(self, lam) -> ObjectiveReport:
        return parallel_reduce(self, lam, self.chunks(), self.threads)


def _check_partition(chunks, m: int) -> None:
    if m < 1 or not chunks:
        raise ValueError("no paths to evaluate")
    pos = 0
    for lo, hi in chunks:
        if lo != pos or hi <= lo:
            raise ValueError(f"chunks must partition [0, {m}) contiguously; got {chunks}")
        if lo % PATH_BLOCK or (hi % PATH_BLOCK and hi != m):
            raise ValueError(f"chunk ({lo}, {hi}) is not aligned to blocks of {PATH_BLOCK} paths")
        pos = hi
    if pos != m:
        raise ValueError(f"chunks cover [0, {pos}) but there are {m} paths")


def parallel_reduce(objective: DualObjective, lam, chunks, threads: int = 1) -> ObjectiveReport:
    """Map chunks of paths to workers, then reduce block partials in fixed order."""
    m = objective.m
    _check_partition(chunks, m)
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    if lam.shape != (objective.size,):
        raise ValueError(f"expected {objective.size} coefficients, got shape {lam.shape}")
    basis = objective.basis
    nblocks = -(-m // PATH_BLOCK)
    grad_part = np.empty((nblocks, objective.size))
    val_part = np.empty(nblocks)
    sq_part = np.empty(nblocks)
    kstar = np.empty(m, dtype=np.int64)

    def work(lo, hi):
        _kernels.eval_blocks(
            objective.g, objective.z, objective.tau0, lam,
            basis.factor_slots, basis.factor_degrees, basis.block_starts,
            basis.p, PATH_BLOCK, lo // PATH_BLOCK, -(-hi // PATH_BLOCK),
            grad_part, val_part, sq_part, kstar,
        )

    def run(lo, hi):
        try:
            work(lo, hi)
        except Exception as exc:
            raise RuntimeError(f"objective evaluation failed on paths [{lo}, {hi}): {exc}") from exc

    if threads <= 1 or len(chunks) == 1:
        for lo, hi in chunks:
            run(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for fut in [pool.submit(run, lo, hi) for lo, hi in chunks]:
                fut.result()

    objective.evaluations += 1
    grad = np.zeros(objective.size)
    value = 0.0
    second = 0.0
    for b in range(nblocks):
        grad += grad_part[b]
        value += val_part[b]
        second += sq_part[b]
    return ObjectiveReport(value / m, grad / m, second / m, kstar, m)


def objective_and_gradient(
    basis: MultiIndexBasis, lam, g, payoffs: DiscountedPayoffs, threads: int = 1
) -> ObjectiveReport:
    return DualObjective(basis, g, payoffs, threads=threads)(lam)
