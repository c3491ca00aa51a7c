"""Truncated Wiener chaos basis built from products of Hermite polynomials.

A basis element is a multi-index ``alpha`` assigning a nonnegative exponent to
every (time slot ``i``, Brownian component ``j``) pair.  Its value on a path of
standardized increments ``g`` is ``prod_{i,j} H_{alpha_i^j}(g_{i,j})``.  The
constant element (all exponents zero) is never part of the basis.

Slots are flattened row-major: slot ``s = (i - 1) * d + (j - 1)`` for 1-based
``i`` and ``j``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

_INDEX_MAX = np.iinfo(np.intp).max


def hermite_eval(i: int, x):
    """Probabilists' Hermite polynomial ``H_i(x)`` by the three-term recurrence."""
    if i < 0:
        raise ValueError(f"degree must be >= 0, got {i}")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if i == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for k in range(1, i):
        h_prev, h = h, x * h - k * h_prev
    return h if h.ndim else float(h)


def hermite_table(x, p: int, normalized: bool = False) -> np.ndarray:
    """Values ``H_0(x), ..., H_p(x)`` stacked on a new last axis.

    With ``normalized=True`` column ``e`` is divided by ``sqrt(e!)`` so that the
    columns are orthonormal under the standard Gaussian measure.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (p + 1,))
    out[..., 0] = 1.0
    if p >= 1:
        out[..., 1] = x
    for k in range(1, p):
        out[..., k + 1] = x * out[..., k] - k * out[..., k - 1]
    if normalized:
        out /= np.sqrt([math.factorial(e) for e in range(p + 1)])
    return out


def basis_size(p: int, n: int, d: int) -> int:
    """Number of non-constant multi-indices of total degree at most ``p``."""
    return math.comb(n * d + p, n * d) - 1


@dataclass(frozen=True)
class MultiIndex:
    """Sparse multi-index: ``entries`` holds ``((i, j), exponent)`` with 1-based slots."""

    entries: tuple[tuple[tuple[int, int], int], ...]

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.entries)

    @property
    def activation(self) -> int:
        return max(i for (i, _), _ in self.entries)

    @property
    def normalization(self) -> float:
        return math.sqrt(math.prod(math.factorial(e) for _, e in self.entries))

    def dense(self, n: int, d: int) -> np.ndarray:
        out = np.zeros((n, d), dtype=int)
        for (i, j), e in self.entries:
            out[i - 1, j - 1] = e
        return out


@dataclass(frozen=True, eq=False)
class MultiIndexBasis:
    """Enumerated chaos basis in canonical order.

    Elements are sorted by activation date, then lexicographically on the
    flattened exponent tuple.  Each element is stored as at most ``p`` factors
    ``(slot, degree)``; unused factor positions hold degree 0 at slot 0, which
    evaluates to 1.
    """

    p: int
    n: int
    d: int
    factor_slots: np.ndarray  # (size, p) int64
    factor_degrees: np.ndarray  # (size, p) int64
    activation: np.ndarray  # (size,) int64, values in 1..n
    normalization: np.ndarray  # (size,) sqrt(prod alpha!)
    block_starts: np.ndarray = field(repr=False)  # (n + 2,) first element with activation >= k

    def __len__(self) -> int:
        return self.activation.shape[0]

    @property
    def size(self) -> int:
        return len(self)

    @cached_property
    def elements(self) -> list[MultiIndex]:
        d = self.d
        out = []
        for slots, degs in zip(self.factor_slots.tolist(), self.factor_degrees.tolist()):
            out.append(
                MultiIndex(
                    tuple(((s // d + 1, s % d + 1), e) for s, e in zip(slots, degs) if e > 0)
                )
            )
        return out

    def upto(self, k: int) -> slice:
        """Slice of the elements with activation date ``<= k``."""
        return slice(0, int(self.block_starts[k + 1]))

    def active_between(self, lo: int, hi: int) -> slice:
        """Slice of the elements with ``lo < activation <= hi``."""
        return slice(int(self.block_starts[lo + 1]), int(self.block_starts[hi + 1]))


def enumerate_basis(p: int, n: int, d: int, max_size: int | None = None) -> MultiIndexBasis:
    """All multi-indices with ``1 <= |alpha|_1 <= p`` over ``n`` steps and ``d`` components."""
    if p < 1 or n < 1 or d < 1:
        raise ValueError(f"need p, n, d >= 1, got p={p}, n={n}, d={d}")
    size = basis_size(p, n, d)
    limit = _INDEX_MAX if max_size is None else min(max_size, _INDEX_MAX)
    if size > limit:
        raise OverflowError(f"basis of size {size} for p={p}, n={n}, d={d} exceeds {limit}")

    nslots = n * d
    keyed = []
    for q in range(1, p + 1):
        for combo in itertools.combinations_with_replacement(range(nslots), q):
            # combo is nondecreasing; collapse repeats into (slot, exponent)
            pairs = [(s, len(list(grp))) for s, grp in itertools.groupby(combo)]
            act = combo[-1] // d + 1
            # (-slot, exp) ordering reproduces lexicographic order of dense tuples
            keyed.append(((act, tuple((-s, e) for s, e in pairs)), pairs))
    keyed.sort(key=lambda t: t[0])

    slots = np.zeros((size, p), dtype=np.int64)
    degs = np.zeros((size, p), dtype=np.int64)
    act = np.empty(size, dtype=np.int64)
    norm = np.empty(size)
    for row, ((a, _), pairs) in enumerate(keyed):
        act[row] = a
        norm[row] = math.sqrt(math.prod(math.factorial(e) for _, e in pairs))
        for col, (s, e) in enumerate(pairs):
            slots[row, col] = s
            degs[row, col] = e
    block_starts = np.searchsorted(act, np.arange(n + 2), side="left").astype(np.int64)
    for arr in (slots, degs, act, norm, block_starts):
        arr.setflags(write=False)
    return MultiIndexBasis(p, n, d, slots, degs, act, norm, block_starts)


def eval_basis(basis: MultiIndexBasis, g, normalized: bool = True) -> np.ndarray:
    """Evaluate every basis element on increments ``g`` of shape ``(..., n, d)``.

    Returns an array of shape ``(..., len(basis))``.  With ``normalized=True``
    element ``alpha`` is divided by ``sqrt(prod alpha!)``.
    """
    g = np.asarray(g, dtype=float)
    if g.shape[-2:] != (basis.n, basis.d):
        raise ValueError(f"increments must have trailing shape {(basis.n, basis.d)}, got {g.shape}")
    lead = g.shape[:-2]
    table = hermite_table(g.reshape(lead + (basis.n * basis.d,)), basis.p, normalized=normalized)
    flat = table.reshape(lead + (-1,))
    idx = basis.factor_slots * (basis.p + 1) + basis.factor_degrees
    values = flat[..., idx[:, 0]]
    for col in range(1, basis.p):
        values = values * flat[..., idx[:, col]]
    return values


def conditional_prefix_sum(basis: MultiIndexBasis, values, lam) -> np.ndarray:
    """Martingale values ``M_k = sum_{k(alpha) <= k} lam_alpha * values_alpha`` for k = 0..n.

    ``values`` may carry leading path axes; the result then has shape ``(..., n + 1)``.
    """
    values = np.asarray(values, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (len(basis),) or values.shape[-1] != len(basis):
        raise ValueError("coefficients and values must match the basis size")
    weighted = values * lam
    out = np.zeros(values.shape[:-1] + (basis.n + 1,))
    running = np.zeros(values.shape[:-1])
    for k in range(1, basis.n + 1):
        running = running + weighted[..., basis.active_between(k - 1, k)].sum(axis=-1)
        out[..., k] = running
    return out
