"""Run configuration: INI files with sections, validated before any work starts.

Example::

    [meta]
    reference = basket_put d=5 p=2 n=3 ...

    [model]
    kind = black_scholes
    assets = 5
    spot = 100
    vol = 0.2
    div = 0
    rate = 0.05
    corr = 0

    [payoff]
    kind = basket_put

    [contract]
    T = 3
    K = 100
    n = 3

    [method]
    p = 2
    m = 20000
    seed = 1
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from .basis import basis_size
from .market import BlackScholesParams, HestonParams, TimeGrid
from .payoff import PayoffSpec


class ConfigError(ValueError):
    pass


_KEYS = {
    "meta": {"reference"},
    "model": {
        "kind", "assets", "spot", "vol", "div", "rate", "corr",
        "v0", "kappa", "theta", "xi", "rho", "substeps",
    },
    "payoff": {"kind", "weights"},
    "contract": {"T", "K", "n"},
    "method": {"p", "m", "seed", "threads", "chunk_size", "epsilon", "max_iters"},
    "output": {"report", "format", "trace"},
}
_REQUIRED = {"model": {"kind", "rate"}, "payoff": {"kind"}, "contract": {"T", "K", "n"}, "method": {"p", "m"}}
_BS_ONLY = {"assets", "vol", "corr"}
_HESTON_ONLY = {"v0", "kappa", "theta", "xi", "rho", "substeps"}

# flag name -> (section, key)
OVERRIDES = {
    "p": ("method", "p"),
    "n": ("contract", "n"),
    "m": ("method", "m"),
    "seed": ("method", "seed"),
    "threads": ("method", "threads"),
    "epsilon": ("method", "epsilon"),
    "out": ("output", "report"),
}


@dataclass
class RunConfig:
    model: BlackScholesParams | HestonParams
    payoff: PayoffSpec
    grid: TimeGrid
    p: int
    m: int
    seed: int = 1
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    chunk_size: int | None = None
    epsilon: float = 1e-4
    max_iters: int = 200
    report: str | None = None
    format: str = "json"
    trace: str | None = None
    reference: str = ""

    @property
    def rate(self) -> float:
        return self.model.rate

    @property
    def d(self) -> int:
        return 2 if isinstance(self.model, HestonParams) else self.model.dim


def _num(raw: dict, section: str, key: str, conv, default=None):
    if key not in raw.get(section, {}):
        if default is not None:
            return default
        raise ConfigError(f"{section}.{key} is required")
    text = raw[section][key]
    try:
        return conv(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key}: cannot parse {text!r} as {conv.__name__}") from None


def _floats(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.replace(",", " ").split()])


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(text)
    return int(value)


def read_raw(path: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return {s: dict(parser[s]) for s in parser.sections()}


def build_config(raw: dict[str, dict[str, str]], overrides: dict | None = None) -> RunConfig:
    raw = {s: dict(v) for s, v in raw.items()}
    for name, value in (overrides or {}).items():
        if value is None:
            continue
        section, key = OVERRIDES[name]
        raw.setdefault(section, {})[key] = str(value)

    for section, items in raw.items():
        if section not in _KEYS:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(items) - _KEYS[section]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    for section, keys in _REQUIRED.items():
        for key in keys:
            if key not in raw.get(section, {}):
                raise ConfigError(f"{section}.{key} is required")

    model_raw = raw["model"]
    kind = model_raw["kind"]
    rate = _num(raw, "model", "rate", float)
    try:
        if kind == "black_scholes":
            stray = set(model_raw) & _HESTON_ONLY
            if stray:
                raise ConfigError(f"model.{sorted(stray)[0]} is not a black_scholes parameter")
            assets = _num(raw, "model", "assets", _int, 1)
            if assets < 1:
                raise ConfigError("model.assets must be >= 1")
            model = BlackScholesParams(
                _num(raw, "model", "spot", _floats),
                _num(raw, "model", "vol", _floats),
                _num(raw, "model", "div", _floats, np.zeros(1)),
                rate,
                _num(raw, "model", "corr", float, 0.0),
                assets=assets,
            )
        elif kind == "heston":
            stray = set(model_raw) & _BS_ONLY
            if stray:
                raise ConfigError(f"model.{sorted(stray)[0]} is not a heston parameter")
            model = HestonParams(
                spot=_num(raw, "model", "spot", float),
                rate=rate,
                v0=_num(raw, "model", "v0", float),
                kappa=_num(raw, "model", "kappa", float),
                theta=_num(raw, "model", "theta", float),
                xi=_num(raw, "model", "xi", float),
                rho=_num(raw, "model", "rho", float),
                div=_num(raw, "model", "div", float, 0.0),
                substeps=_num(raw, "model", "substeps", _int, 1),
            )
        else:
            raise ConfigError(f"model.kind must be black_scholes or heston, got {kind!r}")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None

    try:
        weights = raw["payoff"].get("weights")
        payoff = PayoffSpec(
            raw["payoff"]["kind"],
            _num(raw, "contract", "K", float),
            None if weights is None else _floats(weights),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"payoff: {exc}") from None
    d_assets = 1 if kind == "heston" else model.dim
    if payoff.weights is not None and payoff.weights.shape[0] != d_assets:
        raise ConfigError(f"payoff.weights has {payoff.weights.shape[0]} entries for {d_assets} assets")

    T = _num(raw, "contract", "T", float)
    n = _num(raw, "contract", "n", _int)
    if not T > 0:
        raise ConfigError("contract.T must be > 0")
    if n < 1:
        raise ConfigError("contract.n must be >= 1")
    grid = TimeGrid(T, n)

    p = _num(raw, "method", "p", _int)
    m = _num(raw, "method", "m", _int)
    if p < 1:
        raise ConfigError("method.p must be ≥ 1")
    if m < 1:
        raise ConfigError("method.m must be ≥ 1")
    threads = _num(raw, "method", "threads", _int, os.cpu_count() or 1)
    if threads < 1:
        raise ConfigError("method.threads must be ≥ 1")
    chunk = raw["method"].get("chunk_size")
    chunk_size = None if chunk is None else _num(raw, "method", "chunk_size", _int)
    if chunk_size is not None and chunk_size < 1:
        raise ConfigError("method.chunk_size must be ≥ 1")
    epsilon = _num(raw, "method", "epsilon", float, 1e-4)
    if not epsilon > 0:
        raise ConfigError("method.epsilon must be > 0")
    max_iters = _num(raw, "method", "max_iters", _int, 200)
    if max_iters < 1:
        raise ConfigError("method.max_iters must be ≥ 1")
    seed = _num(raw, "method", "seed", _int, 1)
    if seed < 0:
        raise ConfigError("method.seed must be ≥ 0")
    d = 2 if kind == "heston" else model.dim
    try:
        basis_size(p, n, d)
    except (OverflowError, ValueError) as exc:
        raise ConfigError(f"method.p: {exc}") from None

    out = raw.get("output", {})
    fmt = out.get("format", "json")
    if fmt not in ("json", "text"):
        raise ConfigError(f"output.format must be json or text, got {fmt!r}")
    return RunConfig(
        model=model,
        payoff=payoff,
        grid=grid,
        p=p,
        m=m,
        seed=seed,
        threads=threads,
        chunk_size=chunk_size,
        epsilon=epsilon,
        max_iters=max_iters,
        report=out.get("report"),
        format=fmt,
        trace=out.get("trace"),
        reference=raw.get("meta", {}).get("reference", ""),
    )


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    return build_config(read_raw(path), overrides)
