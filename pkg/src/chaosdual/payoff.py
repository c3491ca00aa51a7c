"""Discounted exercise values and first in-the-money dates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market import PathBatch, TimeGrid

PAYOFF_KINDS = ("basket_put", "max_call", "min_put", "geometric_put")


@dataclass(frozen=True, eq=False)
class PayoffSpec:
    kind: str
    strike: float
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in PAYOFF_KINDS:
            raise ValueError(f"unknown payoff kind {self.kind!r}; expected one of {PAYOFF_KINDS}")
        if not self.strike > 0:
            raise ValueError(f"strike must be > 0, got {self.strike}")
        if self.weights is not None:
            w = np.atleast_1d(np.asarray(self.weights, dtype=float))
            if not np.all(np.isfinite(w)):
                raise ValueError("basket weights must be finite")
            object.__setattr__(self, "weights", w)

    def intrinsic(self, spots: np.ndarray) -> np.ndarray:
        """Undiscounted payoff on spot values with the asset axis last."""
        K = self.strike
        if self.kind == "basket_put":
            d = spots.shape[-1]
            w = np.full(d, 1.0 / d) if self.weights is None else self.weights
            if w.shape != (d,):
                raise ValueError(f"{w.size} basket weights for {d} assets")
            return np.maximum(K - spots @ w, 0.0)
        if self.kind == "max_call":
            return np.maximum(spots.max(axis=-1) - K, 0.0)
        if self.kind == "min_put":
            return np.maximum(K - spots.min(axis=-1), 0.0)
        return np.maximum(K - np.exp(np.log(spots).mean(axis=-1)), 0.0)


@dataclass(frozen=True, eq=False)
class DiscountedPayoffs:
    """``z[i, k] = exp(-r t_k) * phi(S_{t_k})`` and per-path first in-the-money index."""

    z: np.ndarray
    tau0: np.ndarray


def first_in_the_money(z) -> int:
    """Smallest ``k`` with ``z[k] > 0``, or ``len(z) - 1`` when there is none."""
    z = np.asarray(z)
    hits = np.flatnonzero(z > 0)
    return int(hits[0]) if hits.size else z.shape[0] - 1


def _first_positive(z: np.ndarray) -> np.ndarray:
    pos = z > 0
    n = z.shape[1] - 1
    return np.where(pos.any(axis=1), pos.argmax(axis=1), n).astype(np.int64)


def evaluate_payoffs(spec: PayoffSpec, batch: PathBatch, rate: float, grid: TimeGrid) -> DiscountedPayoffs:
    if batch.spot_paths.shape[1] != grid.n + 1:
        raise ValueError(f"paths have {batch.spot_paths.shape[1]} dates, grid has {grid.n + 1}")
    if spec.kind == "basket_put" and spec.weights is not None:
        if spec.weights.shape[0] != batch.spot_paths.shape[2]:
            raise ValueError(
                f"{spec.weights.shape[0]} basket weights for {batch.spot_paths.shape[2]} assets"
            )
    z = spec.intrinsic(batch.spot_paths) * np.exp(-rate * grid.dates)
    return DiscountedPayoffs(z, _first_positive(z))
