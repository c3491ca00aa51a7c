"""Command-line front end.

    chaosdual price  <config> [--p P] [--n N] [--m M] [--seed S] [--threads T] [--epsilon E] [--out PATH]
    chaosdual oracle <config>
    chaosdual bench  <config> --threads 1 2 4
    chaosdual check  [--quick]

Exit codes: 0 success, 1 failed checks, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time

from .basis import enumerate_basis
from .config import ConfigError, RunConfig, load_config
from .market import BlackScholesParams, HestonParams, simulate_black_scholes, simulate_heston
from .optim import DescentConfig, NumericalError, PricingResult, minimize
from .oracle import binomial_put, bs_european_put, geometric_reduction
from .payoff import evaluate_payoffs

log = logging.getLogger("chaosdual")

REPORT_FIELDS = (
    "price", "stderr", "european", "iterations", "evaluations", "rejections",
    "basis_size", "seed", "stop_reason", "p", "n", "m", "d", "threads",
    "time_simulate", "time_payoff", "time_basis", "time_optimize", "time_total", "reference",
)


def simulate(config: RunConfig, threads: int | None = None):
    threads = config.threads if threads is None else threads
    if isinstance(config.model, HestonParams):
        return simulate_heston(config.model, config.grid, config.m, config.seed, threads)
    return simulate_black_scholes(config.model, config.grid, config.m, config.seed, threads)


def run_price(config: RunConfig, threads: int | None = None, write: bool = True) -> PricingResult:
    threads = config.threads if threads is None else threads
    t_start = time.perf_counter()
    batch = simulate(config, threads)
    t_sim = time.perf_counter()
    payoffs = evaluate_payoffs(config.payoff, batch, config.rate, config.grid)
    t_pay = time.perf_counter()
    basis = enumerate_basis(config.p, config.grid.n, batch.d)
    t_basis = time.perf_counter()
    _, result = minimize(
        basis, batch, payoffs,
        DescentConfig(epsilon=config.epsilon, max_iters=config.max_iters),
        threads=threads, chunk_size=config.chunk_size,
    )
    t_end = time.perf_counter()
    result.seed = config.seed
    result.wall_time = {
        "simulate": t_sim - t_start,
        "payoff": t_pay - t_sim,
        "basis": t_basis - t_pay,
        "optimize": t_end - t_basis,
        "total": t_end - t_start,
    }
    if write:
        write_report(report_dict(config, result, threads), config.report, config.format)
        if config.trace:
            write_trace(result, config.trace)
    return result


def report_dict(config: RunConfig, result: PricingResult, threads: int) -> dict:
    out = {k: v for k, v in result.to_dict().items() if k != "wall_time"}
    out.update(p=config.p, n=config.grid.n, m=config.m, d=config.d, threads=threads, reference=config.reference)
    for phase in ("simulate", "payoff", "basis", "optimize", "total"):
        out[f"time_{phase}"] = result.wall_time.get(phase, 0.0)
    return {k: out[k] for k in REPORT_FIELDS}


def format_report(report: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    return "".join(f"{k} = {json.dumps(report[k])}\n" for k in REPORT_FIELDS)


def parse_report(text: str) -> dict:
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    out = {}
    for line in text.splitlines():
        key, _, value = line.partition(" = ")
        out[key.strip()] = json.loads(value)
    return out


def write_report(report: dict, path: str | None, fmt: str = "json") -> None:
    text = format_report(report, fmt)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def write_trace(result: PricingResult, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "value", "step", "gamma", "grad_norm"])
        for e in result.trace:
            writer.writerow([e.iteration, repr(e.value), repr(e.step), repr(e.gamma), repr(e.grad_norm)])


def oracle_tree_steps(n: int, target: int = 9000) -> int:
    return n * -(-target // n)


def run_oracle(config: RunConfig) -> dict:
    model = config.model
    if not isinstance(model, BlackScholesParams):
        raise ConfigError("reduction undefined: oracle needs a black_scholes model")
    one_d_put = config.payoff.kind in ("basket_put", "min_put") and model.dim == 1
    if config.payoff.kind != "geometric_put" and not one_d_put:
        raise ConfigError(f"reduction undefined for payoff {config.payoff.kind!r}")
    reduced = geometric_reduction(model)
    K, r, grid = config.payoff.strike, model.rate, config.grid
    steps = oracle_tree_steps(grid.n)
    return {
        "s_hat": reduced.s_hat,
        "sigma_hat": reduced.sigma_hat,
        "delta_hat": reduced.delta_hat,
        "tree_steps": steps,
        "bermudan_tree": binomial_put(reduced, r, K, grid, steps, "bermudan"),
        "american_tree": binomial_put(reduced, r, K, grid, steps, "american"),
        "european_closed_form": bs_european_put(reduced.s_hat, reduced.sigma_hat, r, reduced.delta_hat, grid.T, K),
    }


class BenchMismatch(NumericalError):
    pass


def run_bench(config: RunConfig, thread_counts: list[int]) -> list[dict]:
    """Price the same configuration at each thread count; prices must agree bitwise."""
    if not thread_counts:
        raise ConfigError("bench needs at least one thread count")
    rows = []
    for k in thread_counts:
        if k < 1:
            raise ConfigError(f"thread count must be >= 1, got {k}")
        res = run_price(config, threads=k, write=False)
        rows.append({"threads": k, "price": res.price, "stderr": res.stderr, "time": res.wall_time["total"]})
    base = rows[0]
    for row in rows:
        if row["price"] != base["price"]:
            raise BenchMismatch(
                f"price {row['price']!r} at {row['threads']} threads differs from "
                f"{base['price']!r} at {base['threads']} threads"
            )
        row["speedup"] = base["time"] / row["time"]
        row["efficiency"] = base["time"] * base["threads"] / (row["threads"] * row["time"])
    return rows


def _add_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--p", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--m", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaosdual", description="Dual upper bounds for Bermudan options.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    price = sub.add_parser("price", help="price a contract from a config file")
    price.add_argument("config")
    _add_overrides(price)

    oracle = sub.add_parser("oracle", help="reference prices for geometric puts")
    oracle.add_argument("config")

    bench = sub.add_parser("bench", help="price at several thread counts")
    bench.add_argument("config")
    bench.add_argument("--threads", type=int, nargs="+", required=True)
    for flag in ("--p", "--n", "--m", "--seed"):
        bench.add_argument(flag, type=int)

    check = sub.add_parser("check", help="run the invariant suite")
    check.add_argument("--quick", action="store_true", help="skip the table-config descent checks")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        if args.command == "check":
            from .checks import run_all

            results = run_all(quick=args.quick)
            for r in results:
                print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
            return 0 if all(r.passed for r in results) else 1

        overrides = {k: getattr(args, k, None) for k in ("p", "n", "m", "seed", "epsilon", "out")}
        if args.command == "price":
            overrides["threads"] = args.threads
        config = load_config(args.config, overrides)

        if args.command == "price":
            run_price(config)
        elif args.command == "oracle":
            print(json.dumps(run_oracle(config), indent=2))
        elif args.command == "bench":
            rows = run_bench(config, args.threads)
            print(f"{'threads':>7} {'time (s)':>10} {'speedup':>8} {'efficiency':>10}  price")
            for row in rows:
                print(
                    f"{row['threads']:>7} {row['time']:>10.3f} {row['speedup']:>8.2f} "
                    f"{row['efficiency']:>10.2f}  {row['price']!r}"
                )
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
