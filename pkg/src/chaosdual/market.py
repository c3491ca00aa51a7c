"""Correlated Black-Scholes and Heston path simulation on a uniform grid.

Random numbers come from Philox streams keyed by ``(seed, block)`` where
blocks are fixed groups of ``PATH_BLOCK`` consecutive paths.  The draws for a
path therefore never depend on how many workers fill the batch, and a batch
of ``m`` paths is a prefix of any larger batch with the same seed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

PATH_BLOCK = 512


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"maturity must be positive, got {self.T}")
        if self.n < 1:
            raise ValueError(f"need at least one time step, got n={self.n}")

    @property
    def h(self) -> float:
        return self.T / self.n

    @property
    def dates(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h


def chol_equicorrelation(rho: float, d: int) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T`` the equicorrelation matrix.

    Uses the closed-form recursion for equicorrelation so that the
    semidefinite case ``rho = 1`` is handled without pivot failure.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if d > 1 and not (-1.0 / (d - 1) < rho <= 1.0):
        raise ValueError(
            f"correlation rho={rho} outside (-1/(d-1), 1] for d={d}; "
            "the correlation matrix is not positive definite"
        )
    L = np.zeros((d, d))
    s = 0.0  # sum of squared subdiagonal entries of previous columns
    for k in range(d):
        a = math.sqrt(max(1.0 - s, 0.0))
        L[k, k] = a
        c = (rho - s) / a if a > 1e-14 else 0.0
        L[k + 1 :, k] = c
        s += c * c
    return L


@dataclass(frozen=True, eq=False)
class BlackScholesParams:
    spot: np.ndarray
    vol: np.ndarray
    div: np.ndarray
    rate: float
    corr: float
    chol: np.ndarray = field(init=False, repr=False)

    def __init__(self, spot, vol, div, rate: float, corr: float = 0.0, assets: int | None = None):
        arrays = [np.atleast_1d(np.asarray(a, dtype=float)) for a in (spot, vol, div)]
        dim = assets if assets is not None else max(a.size for a in arrays)
        for name, a in zip(("spot", "vol", "div"), arrays):
            if a.size not in (1, dim):
                raise ValueError(f"{name} has {a.size} entries, expected 1 or {dim}")
        spot, vol, div = (np.broadcast_to(a, (dim,)).copy() for a in arrays)
        if np.any(vol <= 0):
            raise ValueError("volatilities must be > 0")
        if np.any(spot <= 0):
            raise ValueError("spot values must be > 0")
        for a in (spot, vol, div):
            a.setflags(write=False)
        object.__setattr__(self, "spot", spot)
        object.__setattr__(self, "vol", vol)
        object.__setattr__(self, "div", div)
        object.__setattr__(self, "rate", float(rate))
        object.__setattr__(self, "corr", float(corr))
        object.__setattr__(self, "chol", chol_equicorrelation(float(corr), dim))

    @property
    def dim(self) -> int:
        return self.spot.shape[0]

    @property
    def correlation(self) -> np.ndarray:
        d = self.dim
        return np.full((d, d), self.corr) + (1.0 - self.corr) * np.eye(d)


@dataclass(frozen=True)
class HestonParams:
    spot: float
    rate: float
    v0: float
    kappa: float
    theta: float
    xi: float
    rho: float
    div: float = 0.0
    substeps: int = 1

    def __post_init__(self):
        # kappa = 0 and xi = 0 are accepted as degenerate constant-variance limits
        if self.spot <= 0 or self.v0 <= 0 or self.theta <= 0:
            raise ValueError("spot, v0 and theta must be > 0")
        if self.kappa < 0 or self.xi < 0:
            raise ValueError("kappa and xi must be >= 0")
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


@dataclass(frozen=True, eq=False)
class PathBatch:
    """Simulated paths: ``g`` is ``(m, n, d)`` standardized increments,
    ``spot_paths`` is ``(m, n + 1, d')`` asset values."""

    g: np.ndarray
    spot_paths: np.ndarray
    seed: int
    block: int = PATH_BLOCK

    @property
    def m(self) -> int:
        return self.g.shape[0]

    @property
    def n(self) -> int:
        return self.g.shape[1]

    @property
    def d(self) -> int:
        return self.g.shape[2]


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent counter-based stream for one block of paths."""
    return np.random.Generator(np.random.Philox(key=[seed % 2**64, block]))


def _fill_blocks(m: int, threads: int, fill) -> None:
    nblocks = -(-m // PATH_BLOCK)
    if threads <= 1 or nblocks <= 1:
        for b in range(nblocks):
            fill(b, b * PATH_BLOCK, min(m, (b + 1) * PATH_BLOCK))
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(fill, b, b * PATH_BLOCK, min(m, (b + 1) * PATH_BLOCK))
            for b in range(nblocks)
        ]
        for f in futures:
            f.result()


def simulate_black_scholes(
    params: BlackScholesParams, grid: TimeGrid, m: int, seed: int, threads: int = 1
) -> PathBatch:
    """Exact lognormal stepping with one Brownian component per asset."""
    if m < 1:
        raise ValueError(f"path count must be >= 1, got {m}")
    d, n, h = params.dim, grid.n, grid.h
    g = np.empty((m, n, d))
    spots = np.empty((m, n + 1, d))
    drift = (params.rate - params.div - 0.5 * params.vol**2) * h
    scale = params.vol * math.sqrt(h)
    LT = params.chol.T

    def fill(b, lo, hi):
        gb = block_generator(seed, b).standard_normal((hi - lo, n, d))
        g[lo:hi] = gb
        logret = drift + scale * (gb @ LT)
        spots[lo:hi, 0] = params.spot
        spots[lo:hi, 1:] = params.spot * np.exp(np.cumsum(logret, axis=1))

    _fill_blocks(m, threads, fill)
    return PathBatch(g, spots, seed)


def simulate_heston(params: HestonParams, grid: TimeGrid, m: int, seed: int, threads: int = 1) -> PathBatch:
    """Full-truncation Euler for the variance, log-Euler for the spot.

    Component 0 of ``g`` drives the variance, component 1 the orthogonal part
    of the spot noise.  With ``substeps > 1`` each grid increment is the
    normalized sum of its substep draws.
    """
    if m < 1:
        raise ValueError(f"path count must be >= 1, got {m}")
    n, q = grid.n, params.substeps
    dt = grid.h / q
    sq = math.sqrt(dt)
    rho, rho_bar = params.rho, math.sqrt(1.0 - params.rho**2)
    g = np.empty((m, n, 2))
    spots = np.empty((m, n + 1, 1))

    def fill(b, lo, hi):
        z = block_generator(seed, b).standard_normal((hi - lo, n, q, 2))
        g[lo:hi] = z.sum(axis=2) / math.sqrt(q)
        v = np.full(hi - lo, params.v0)
        logs = np.full(hi - lo, math.log(params.spot))
        spots[lo:hi, 0, 0] = params.spot
        for i in range(n):
            for s in range(q):
                z1, z2 = z[:, i, s, 0], z[:, i, s, 1]
                vp = np.maximum(v, 0.0)
                vol = np.sqrt(vp)
                logs = logs + (params.rate - params.div - 0.5 * vp) * dt + vol * sq * (rho * z1 + rho_bar * z2)
                v = v + params.kappa * (params.theta - vp) * dt + params.xi * vol * sq * z1
            spots[lo:hi, i + 1, 0] = np.exp(logs)

    _fill_blocks(m, threads, fill)
    return PathBatch(g, spots, seed)
