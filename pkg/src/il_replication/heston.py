"""Monte Carlo simulation of the pool price under Heston dynamics.

Paths are simulated in fixed-size blocks. Every block draws its normals from
its own Philox stream keyed by ``(seed, block index)`` and always draws the
full block width, so the terminal price of path ``i`` depends only on the
seed, the model and ``i``. Blocks are written back by index, which makes the
output bit-identical for any number of worker threads.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .amm import PriceInterval, Side
from .errors import DomainError
from .payoff import uil

BLOCK_SIZE = 16384


@dataclass(frozen=True)
class HestonParams:
    mu: float
    kappa: float
    theta: float
    xi: float
    rho: float
    v0: float
    spot: float

    def __post_init__(self):
        for name in ("kappa", "theta", "xi", "v0"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if not -1.0 <= self.rho <= 1.0:
            raise DomainError(f"rho must lie in [-1, 1], got {self.rho}")
        if not self.spot > 0:
            raise DomainError(f"spot must be positive, got {self.spot}")

    def replace(self, **changes) -> "HestonParams":
        return replace(self, **changes)

    @property
    def feller(self) -> bool:
        return 2 * self.kappa * self.theta >= self.xi**2


@dataclass(frozen=True)
class McConfig:
    n_paths: int
    n_steps: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.n_paths < 1:
            raise DomainError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.n_steps < 1:
            raise DomainError(f"n_steps must be >= 1, got {self.n_steps}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True, eq=False)
class PathSet:
    terminal_prices: np.ndarray
    config: McConfig
    params: HestonParams
    horizon: float

    def __post_init__(self):
        if self.terminal_prices.size == 0:
            raise DomainError("path set is empty")
        if self.terminal_prices.shape != (self.config.n_paths,):
            raise DomainError(
                f"expected {self.config.n_paths} terminal prices, got shape {self.terminal_prices.shape}"
            )
        if not np.all(self.terminal_prices > 0):
            raise DomainError("terminal prices must be positive")
        self.terminal_prices.setflags(write=False)

    def __len__(self) -> int:
        return self.terminal_prices.size


def _block_stream(seed: int, block: int) -> np.random.Generator:
    # Philox is counter-based; the 128-bit key is (seed, block index).
    return np.random.Generator(np.random.Philox(key=np.array([seed, block], dtype=np.uint64)))


def _simulate_block(params: HestonParams, horizon: float, n_steps: int, seed: int, block: int, width: int) -> np.ndarray:
    rng = _block_stream(seed, block)
    dt = horizon / n_steps
    sqrt_dt = math.sqrt(dt)
    rho_perp = math.sqrt(max(1.0 - params.rho * params.rho, 0.0))
    log_p = np.full(BLOCK_SIZE, math.log(params.spot))
    v = np.full(BLOCK_SIZE, params.v0)
    z = np.empty((2, BLOCK_SIZE))
    for _ in range(n_steps):
        rng.standard_normal(out=z)
        z_p = z[0]
        z_v = params.rho * z_p + rho_perp * z[1]
        v_pos = np.maximum(v, 0.0)
        vol = np.sqrt(v_pos)
        log_p += (params.mu - 0.5 * v_pos) * dt + vol * sqrt_dt * z_p
        v += params.kappa * (params.theta - v_pos) * dt + params.xi * vol * sqrt_dt * z_v
    return np.exp(log_p[:width])


def simulate(
    params: HestonParams,
    horizon: float,
    config: McConfig,
    workers: Optional[int] = None,
) -> PathSet:
    """Simulate terminal prices with log-Euler price steps and full-truncation variance.

    Negative variance is floored at zero inside both drift and diffusion but
    the unfloored value is carried forward. ``workers`` only changes speed.
    """
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    n = config.n_paths
    n_blocks = -(-n // BLOCK_SIZE)
    out = np.empty(n)

    def run(block: int) -> None:
        start = block * BLOCK_SIZE
        width = min(BLOCK_SIZE, n - start)
        out[start : start + width] = _simulate_block(params, horizon, config.n_steps, config.seed, block, width)

    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(workers, n_blocks))
    if workers == 1:
        for b in range(n_blocks):
            run(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(n_blocks)))
    return PathSet(out, config, params, horizon)


def _mean_and_se(samples: np.ndarray) -> tuple[float, float]:
    if samples.size == 0:
        raise DomainError("path set is empty")
    mean = float(np.mean(samples))
    if samples.size == 1:
        return mean, float("nan")
    return mean, float(np.std(samples, ddof=1) / math.sqrt(samples.size))


def _check_kind(kind: str) -> str:
    kind = kind.lower()
    if kind not in ("call", "put"):
        raise DomainError(f"option kind must be 'call' or 'put', got {kind!r}")
    return kind


def mc_price(paths: PathSet, kind: str, strike: float) -> tuple[float, float]:
    """Undiscounted Monte Carlo price and standard error of a vanilla option."""
    kind = _check_kind(kind)
    if not strike > 0:
        raise DomainError(f"strike must be positive, got {strike}")
    p = paths.terminal_prices
    payoff = np.maximum(p - strike, 0.0) if kind == "call" else np.maximum(strike - p, 0.0)
    return _mean_and_se(payoff)


def mc_price_curve(paths: PathSet, kind: str, strikes: np.ndarray) -> np.ndarray:
    """Monte Carlo prices at many strikes at once from sorted partial sums.

    Equal to ``mc_price`` at each strike up to summation-order rounding.
    """
    kind = _check_kind(kind)
    strikes = np.asarray(strikes, dtype=float)
    if np.any(strikes <= 0):
        raise DomainError("strikes must be positive")
    p = np.sort(paths.terminal_prices)
    n = p.size
    prefix = np.concatenate(([0.0], np.cumsum(p)))
    below = np.searchsorted(p, strikes, side="right")
    if kind == "call":
        above_sum = prefix[-1] - prefix[below]
        return (above_sum - strikes * (n - below)) / n
    return (strikes * below - prefix[below]) / n


def mc_expected_uil(paths: PathSet, side: Side, interval: PriceInterval) -> tuple[float, float]:
    """Sample mean and standard error of the per-liquidity IL over terminal prices."""
    return _mean_and_se(uil(side, interval, paths.terminal_prices))


def simulate_gbm_like(sigma: float, spot: float, horizon: float, config: McConfig, mu: float = 0.0, **kw) -> PathSet:
    """Heston with zero vol-of-vol and ``v0 = theta = sigma**2``: plain GBM."""
    params = HestonParams(mu=mu, kappa=1.0, theta=sigma**2, xi=0.0, rho=0.0, v0=sigma**2, spot=spot)
    return simulate(params, horizon, config, **kw)
