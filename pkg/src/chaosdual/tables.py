"""Published benchmark rows used by the table-reproduction configs and checks.

Each row lists the contract, the method settings and the published dual price,
its standard deviation and the external reference price.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .market import BlackScholesParams, TimeGrid
from .payoff import PayoffSpec


@dataclass(frozen=True)
class TableRow:
    key: str
    payoff: str
    d: int
    p: int
    n: int
    m: int
    spot: float
    vol: float
    corr: float
    div: float
    rate: float
    T: float
    K: float
    price: float
    stdev: float
    reference: float

    @property
    def label(self) -> str:
        return (
            f"{self.payoff} d={self.d} p={self.p} n={self.n} m={self.m} S0={self.spot:g}: "
            f"published {self.price} (stdev {self.stdev}), reference {self.reference}"
        )

    def config(self, **changes):
        """Run configuration for this row; ``changes`` replace ``RunConfig`` fields."""
        from .config import RunConfig

        cfg = RunConfig(
            model=BlackScholesParams(self.spot, self.vol, self.div, self.rate, self.corr, assets=self.d),
            payoff=PayoffSpec(self.payoff, self.K),
            grid=TimeGrid(self.T, self.n),
            p=self.p,
            m=self.m,
            threads=1,
            reference=self.label,
        )
        return replace(cfg, **changes)


def _basket(p, n, s0, price, sd, ref):
    return TableRow(
        f"basket_d5_p{p}_n{n}_s{s0}", "basket_put", 5, p, n, 20000, s0, 0.2, 0.0, 0.0, 0.05, 3.0, 100.0,
        price, sd, ref,
    )


def _maxcall(d, p, m, s0, price, sd, ref):
    return TableRow(
        f"maxcall_d{d}_p{p}_s{s0}", "max_call", d, p, 9, m, s0, 0.2, 0.0, 0.1, 0.05, 3.0, 100.0,
        price, sd, ref,
    )


def _geom(d, vol, corr, p, m, price, sd, ref):
    return TableRow(
        f"geometric_d{d}_p{p}", "geometric_put", d, p, 9, m, 100.0, vol, corr, 0.0, 0.0488, 1.0, 100.0,
        price, sd, ref,
    )


BASKET_ROWS = [
    _basket(2, 3, 100, 2.27, 0.029, 2.17),
    _basket(3, 3, 100, 2.23, 0.025, 2.17),
    _basket(2, 3, 110, 0.56, 0.014, 0.55),
    _basket(3, 3, 110, 0.53, 0.012, 0.55),
    _basket(2, 6, 100, 2.62, 0.021, 2.43),
    _basket(3, 6, 100, 2.42, 0.021, 2.43),
    _basket(2, 6, 110, 0.61, 0.012, 0.61),
    _basket(3, 6, 110, 0.55, 0.008, 0.61),
]

MAXCALL_ROWS = [
    _maxcall(2, 2, 20000, 90, 10.18, 0.07, 8.15),
    _maxcall(2, 3, 20000, 90, 8.5, 0.05, 8.15),
    _maxcall(2, 2, 20000, 100, 16.2, 0.06, 14.01),
    _maxcall(2, 3, 20000, 100, 14.4, 0.06, 14.01),
    _maxcall(5, 2, 20000, 90, 21.2, 0.09, 16.77),
    _maxcall(5, 3, 40000, 90, 16.3, 0.05, 16.77),
    _maxcall(5, 2, 20000, 100, 30.7, 0.09, 26.34),
    _maxcall(5, 3, 40000, 100, 26.0, 0.05, 26.34),
]

GEOMETRIC_ROWS = [
    _geom(2, 0.2, 0.0, 2, 5000, 4.32, 0.04, 4.20),
    _geom(2, 0.2, 0.0, 3, 5000, 4.15, 0.04, 4.20),
    _geom(10, 0.3, 0.1, 1, 5000, 5.50, 0.06, 4.60),
    _geom(10, 0.3, 0.1, 2, 20000, 4.55, 0.02, 4.60),
    _geom(40, 0.3, 0.1, 1, 10000, 4.4, 0.03, 3.69),
    _geom(40, 0.3, 0.1, 2, 20000, 3.61, 0.02, 3.69),
]

# (d, S0, sigma, rho) -> (S_hat, sigma_hat, delta_hat) as printed
REDUCTION_ROWS = [
    ((2, 100.0, 0.2, 0.0), (100.0, "0.14", "0.01")),
    ((10, 100.0, 0.3, 0.1), (100.0, "0.131", "0.036")),
    ((40, 100.0, 0.3, 0.1), (100.0, "0.105", "0.039")),
]

ALL_ROWS = {row.key: row for row in BASKET_ROWS + MAXCALL_ROWS + GEOMETRIC_ROWS}
