"""Reference prices: geometric-basket reduction, lattice pricer, Black-Scholes put."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .market import BlackScholesParams, TimeGrid


@dataclass(frozen=True)
class ReducedParams:
    s_hat: float
    sigma_hat: float
    delta_hat: float

    def __post_init__(self):
        if not self.sigma_hat > 0:
            raise ValueError(f"reduced volatility must be > 0, got {self.sigma_hat}")


def geometric_reduction(params: BlackScholesParams) -> ReducedParams:
    """One-asset model whose price process is the geometric mean of the basket.

    The geometric mean of correlated lognormals is lognormal with volatility
    ``sqrt(sigma' Gamma sigma) / d`` and an effective dividend yield that
    makes its drift match.
    """
    d = params.dim
    sig = params.vol
    s_hat = float(np.exp(np.mean(np.log(params.spot))))
    sigma_hat = math.sqrt(float(sig @ params.correlation @ sig)) / d
    delta_hat = float(np.mean(params.div + 0.5 * sig**2)) - 0.5 * sigma_hat**2
    return ReducedParams(s_hat, sigma_hat, delta_hat)


def bs_european_put(spot: float, vol: float, rate: float, div: float, T: float, K: float) -> float:
    if not (vol > 0 and T > 0):
        raise ValueError("vol and T must be > 0")
    if K <= 0:
        return 0.0
    sd = vol * math.sqrt(T)
    d1 = (math.log(spot / K) + (rate - div + 0.5 * vol * vol) * T) / sd
    d2 = d1 - sd
    return float(K * math.exp(-rate * T) * ndtr(-d2) - spot * math.exp(-div * T) * ndtr(-d1))


def binomial_put(
    reduced: ReducedParams,
    rate: float,
    K: float,
    grid: TimeGrid,
    tree_steps: int = 9000,
    exercise: str = "bermudan",
) -> float:
    """Put on one asset priced on a recombining binomial lattice in log-spot.

    Up/down moves are ``exp(nu*dt +/- sigma*sqrt(dt))`` with the risk-neutral
    log drift ``nu``, which keeps the branch probability near 1/2 even for
    vanishing volatility.  ``exercise`` is ``"bermudan"`` (only at the grid
    dates), ``"american"`` (every lattice level) or ``"european"``.
    """
    if exercise not in ("bermudan", "american", "european"):
        raise ValueError(f"unknown exercise style {exercise!r}")
    if tree_steps < 1 or tree_steps % grid.n:
        raise ValueError(f"tree_steps={tree_steps} must be a positive multiple of n={grid.n}")
    N = tree_steps
    dt = grid.T / N
    sig, delta = reduced.sigma_hat, reduced.delta_hat
    nu = rate - delta - 0.5 * sig * sig
    log_up = nu * dt + sig * math.sqrt(dt)
    log_dn = nu * dt - sig * math.sqrt(dt)
    a = (rate - delta) * dt
    q = -math.expm1(log_dn - a) / (math.expm1(log_up - a) - math.expm1(log_dn - a))
    disc = math.exp(-rate * dt)
    log_s0 = math.log(reduced.s_hat)
    every = N // grid.n

    def spots(level):
        j = np.arange(level + 1)
        return np.exp(log_s0 + j * log_up + (level - j) * log_dn)

    V = np.maximum(K - spots(N), 0.0)
    for level in range(N - 1, -1, -1):
        V = disc * (q * V[1:] + (1.0 - q) * V[:-1])
        if exercise == "american" or (exercise == "bermudan" and level % every == 0):
            np.maximum(V, K - spots(level), out=V)
    return float(V[0])


def binomial_bermudan_put(
    reduced: ReducedParams, rate: float, K: float, grid: TimeGrid, tree_steps: int = 9000
) -> float:
    return binomial_put(reduced, rate, K, grid, tree_steps, "bermudan")
