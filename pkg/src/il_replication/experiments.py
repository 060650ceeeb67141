"""Experiment drivers behind the command-line tool.

Every driver returns plain rows; writing them is left to :mod:`csvio`.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import amm
from .amm import Side
from .config import ExperimentConfig, NamedPosition
from .gbm import GbmParams, bs_call, bs_put, expected_uil_gbm
from .heston import HestonParams, McConfig, PathSet, mc_expected_uil, mc_price_curve, simulate
from .payoff import uil
from .replication import OptionQuote, StrikeGrid, replicate_expected_uil, replicated_uil_payoff

SIG_DIGITS = 9

TABLE1_SWEEP = (
    ("kappa", (0.3, 0.4, 0.5)),
    ("theta", (0.3, 0.4, 0.5)),
    ("xi", (0.1, 0.15, 0.2)),
)


def round_sig(value: Optional[float]) -> Optional[float]:
    """Round to the precision the CSV files carry, so rows survive a round trip exactly."""
    if value is None:
        return None
    return float(f"{value:.{SIG_DIGITS}g}")


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    side: str
    direct: float
    direct_se: Optional[float]
    replication: float
    error_ratio: float
    wall_time: Optional[float] = None

    @classmethod
    def create(cls, scenario, side, direct, direct_se, replication, wall_time=None) -> "ResultRow":
        ratio = abs(replication - direct) / abs(direct) if direct != 0 else abs(replication - direct)
        return cls(
            scenario,
            side,
            round_sig(direct),
            round_sig(direct_se),
            round_sig(replication),
            round_sig(ratio),
            round_sig(wall_time),
        )


def _option_kind(side: Side) -> str:
    return "call" if side is Side.RIGHT else "put"


def replicate_on_paths(paths: PathSet, pos: NamedPosition, n_strikes: int) -> float:
    grid = StrikeGrid.uniform(pos.interval, n_strikes)
    kind = _option_kind(pos.side)
    return replicate_expected_uil(pos.side, pos.interval, lambda k: mc_price_curve(paths, kind, k), grid)


def _independent_seed(seed: int) -> int:
    return (seed + 0x9E3779B97F4A7C15) % 2**64


def table1_scenario(
    params: HestonParams,
    cfg: ExperimentConfig,
    strike_counts: Sequence[int],
) -> dict:
    """Direct and replicated expected loss for every configured position.

    Returns ``{name: {"direct": (mean, se), n_strikes: replication, ...}}``.
    With ``cfg.shared_paths`` the option prices come from the same paths as
    the direct estimate.
    """
    paths = simulate(params, cfg.horizon, cfg.mc, workers=cfg.workers)
    if cfg.shared_paths:
        option_paths = paths
    else:
        other = McConfig(cfg.mc.n_paths, cfg.mc.n_steps, _independent_seed(cfg.mc.seed))
        option_paths = simulate(params, cfg.horizon, other, workers=cfg.workers)
    out = {}
    for pos in cfg.positions:
        res = {"direct": mc_expected_uil(paths, pos.side, pos.interval)}
        for n in strike_counts:
            res[n] = replicate_on_paths(option_paths, pos, n)
        out[pos.name] = res
    return out


def table1_rows(cfg: ExperimentConfig) -> list[ResultRow]:
    """Sweep kappa, theta and xi one at a time around the configured Heston base case."""
    rows = []
    for name, values in TABLE1_SWEEP:
        for value in values:
            params = cfg.heston.replace(**{name: value})
            start = time.perf_counter()
            res = table1_scenario(params, cfg, [cfg.n_strikes])
            elapsed = time.perf_counter() - start
            for pos in cfg.positions:
                direct, se = res[pos.name]["direct"]
                rep = res[pos.name][cfg.n_strikes]
                rows.append(ResultRow.create(f"{name}={value:g}", pos.name, direct, se, rep, elapsed))
    return rows


@dataclass(frozen=True)
class Figure1Row:
    sweep: str
    sigma: float
    t: float
    values: tuple[float, ...]


def figure1_rows(cfg: ExperimentConfig) -> list[Figure1Row]:
    """Closed-form expected loss along a volatility sweep and a horizon sweep."""
    base = cfg.gbm
    fig = cfg.figure1
    rows = []

    def point(sweep, params: GbmParams):
        vals = tuple(expected_uil_gbm(p.side, p.interval, params) for p in cfg.positions)
        rows.append(Figure1Row(sweep, params.sigma, params.horizon, vals))

    for sigma in np.linspace(fig.sigma_min, fig.sigma_max, fig.sigma_points):
        point("sigma", base.replace(sigma=float(sigma)))
    for k in range(1, fig.t_points + 1):
        point("t", base.replace(horizon=fig.t_max * k / fig.t_points))
    return rows


@dataclass(frozen=True)
class IlRow:
    position: str
    side: str
    lower: float
    upper: float
    liquidity: float
    entry_price: float
    exit_price: float
    x_held: float
    y_held: float
    il: float
    uil: float
    replicated_uil: float
    avg_sell_price: float


def il_rows(cfg: ExperimentConfig) -> list[IlRow]:
    rows = []
    for named in cfg.positions:
        pos = named.position
        for price in cfg.exit_prices:
            held = amm.holdings_at_exit(pos, price)
            split = price if cfg.adaptive_split else None
            grid = StrikeGrid.uniform(pos.interval, cfg.n_strikes, split_at=split)
            rows.append(
                IlRow(
                    position=named.name,
                    side=pos.side.value,
                    lower=pos.interval.lower,
                    upper=pos.interval.upper,
                    liquidity=pos.liquidity,
                    entry_price=pos.entry_price,
                    exit_price=price,
                    x_held=held.x,
                    y_held=held.y,
                    il=amm.impermanent_loss(pos, price),
                    uil=uil(pos.side, pos.interval, price),
                    replicated_uil=replicated_uil_payoff(pos.side, pos.interval, price, grid),
                    avg_sell_price=amm.average_sell_price(pos.interval),
                )
            )
    return rows


def expected_uil_reference(cfg: ExperimentConfig, pos: NamedPosition) -> tuple[float, Optional[float]]:
    """Model value of the expected per-liquidity loss: closed form or Monte Carlo."""
    if cfg.model == "gbm":
        return expected_uil_gbm(pos.side, pos.interval, cfg.gbm), None
    paths = simulate(cfg.heston, cfg.horizon, cfg.mc, workers=cfg.workers)
    return mc_expected_uil(paths, pos.side, pos.interval)


def synthetic_chain(params: GbmParams, strikes: Sequence[float], kinds: Sequence[str] = ("call", "put")):
    """Black-Scholes quotes at ``strikes``, used as a stand-in for market data."""
    k = np.asarray(strikes, dtype=float)
    quotes = []
    for kind in kinds:
        prices = bs_call(params, k) if kind == "call" else bs_put(params, k)
        quotes.extend(OptionQuote(kind, float(s), params.horizon, float(p)) for s, p in zip(k, prices))
    return quotes
