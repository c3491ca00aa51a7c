"""Polyak-step descent on the sample-average dual objective."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .basis import MultiIndexBasis
from .dual import DualObjective, ObjectiveReport
from .market import PathBatch
from .payoff import DiscountedPayoffs

log = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class DescentConfig:
    epsilon: float = 1e-4
    max_iters: int = 200
    gamma0: float = 1.0
    anchor: float | None = None
    min_gamma: float = 2.0**-30

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0 < self.gamma0 <= 1:
            raise ValueError(f"gamma0 must lie in (0, 1], got {self.gamma0}")
        if not self.min_gamma > 0:
            raise ValueError("min_gamma must be > 0")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    value: float
    step: float
    gamma: float
    grad_norm: float


@dataclass
class DescentTrace:
    entries: list[TraceEntry] = field(default_factory=list)
    rejections: int = 0
    evaluations: int = 0
    stop_reason: str = ""
    lam: np.ndarray | None = None

    @property
    def values(self) -> list[float]:
        return [e.value for e in self.entries]


@dataclass
class PricingResult:
    price: float
    stderr: float
    european: float
    iterations: int
    evaluations: int
    rejections: int
    basis_size: int
    seed: int | None = None
    stop_reason: str = ""
    wall_time: dict[str, float] = field(default_factory=dict)
    trace: list[TraceEntry] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("trace")
        return out


def european_anchor(payoffs: DiscountedPayoffs) -> float:
    """Monte Carlo European price: mean discounted payoff at maturity."""
    if payoffs.z.shape[0] < 1:
        raise ValueError("need at least one path")
    return float(np.mean(payoffs.z[:, -1]))


def polyak_step(value: float, anchor: float, grad_norm_sq: float) -> float:
    if not grad_norm_sq > 0:
        raise ZeroDivisionError("zero gradient: the descent has converged")
    return (value - anchor) / grad_norm_sq


def descend(objective: DualObjective, config: DescentConfig, anchor: float) -> tuple[np.ndarray, ObjectiveReport, DescentTrace]:
    """Accept a trial point only if it lowers the objective, halve the magnitude factor otherwise.

    The first trial is the origin itself; Polyak steps start once a gradient is known.
    """
    x = np.zeros(objective.size)
    direction = np.zeros_like(x)
    gamma, step, v = config.gamma0, 0.0, math.inf
    trace = DescentTrace()
    best: ObjectiveReport | None = None

    while True:
        if trace.evaluations >= config.max_iters:
            trace.stop_reason = "max_iters"
            break
        trial = x - (gamma * step) * direction
        rep = objective(trial)
        trace.evaluations += 1
        if not (math.isfinite(rep.value) and np.all(np.isfinite(rep.gradient))):
            raise NumericalError(
                f"non-finite objective at evaluation {trace.evaluations} "
                f"(|lambda| = {np.linalg.norm(trial):.6g}, gamma = {gamma:.3g})"
            )
        if rep.value < v:
            prev, x, v, best = v, trial, rep.value, rep
            direction = rep.gradient
            gnorm2 = float(direction @ direction)
            trace.entries.append(TraceEntry(len(trace.entries), float(v), float(step), gamma, math.sqrt(gnorm2)))
            log.debug("eval %d: value %.6f gamma %.3g |grad| %.3g", trace.evaluations, v, gamma, math.sqrt(gnorm2))
            if math.isfinite(prev) and (prev == 0 or abs(v - prev) / prev <= config.epsilon):
                trace.stop_reason = "converged"
                break
            if gnorm2 == 0:
                trace.stop_reason = "zero_gradient"
                break
            step = float(polyak_step(v, anchor, gnorm2))
        else:
            trace.rejections += 1
            gamma /= 2
            if gamma < config.min_gamma:
                trace.stop_reason = "gamma_underflow"
                break
    trace.lam = x
    return x, best, trace


def minimize(
    basis: MultiIndexBasis,
    batch: PathBatch,
    payoffs: DiscountedPayoffs,
    config: DescentConfig = DescentConfig(),
    threads: int | None = None,
    chunk_size: int | None = None,
) -> tuple[np.ndarray, PricingResult]:
    t0 = time.perf_counter()
    objective = DualObjective(basis, batch, payoffs, threads=threads, chunk_size=chunk_size)
    anchor = european_anchor(payoffs) if config.anchor is None else config.anchor
    lam, rep, trace = descend(objective, config, anchor)
    result = PricingResult(
        price=float(rep.value),
        stderr=rep.stderr,
        european=anchor,
        iterations=len(trace.entries),
        evaluations=trace.evaluations,
        rejections=trace.rejections,
        basis_size=len(basis),
        seed=getattr(batch, "seed", None),
        stop_reason=trace.stop_reason,
        wall_time={"optimize": time.perf_counter() - t0},
        trace=trace.entries,
    )
    return lam, result
