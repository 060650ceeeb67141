"""Static replication of impermanent loss with vanilla options.

The per-liquidity loss of a right-side position equals minus one half of the
strike integral of ``K**-1.5 * (P_t - K)+`` over the interval, pathwise, and
the left side is the same with puts. Taking expectations turns the integral
into a strip of option prices, discretized here by the trapezoidal rule or,
for real chains, by clipped midpoint cells.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .amm import ArrayLike, PriceInterval, Side
from .errors import DomainError, TruncationWarning, UnhedgeableIntervalError

DEFAULT_STRIKES = 1001
_EDGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StrikeGrid:
    strikes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.strikes.ndim != 1 or self.strikes.shape != self.weights.shape or self.strikes.size == 0:
            raise DomainError("strikes and weights must be matching non-empty 1-d arrays")
        if np.any(self.strikes <= 0):
            raise DomainError("strikes must be positive")
        if np.any(np.diff(self.strikes) <= 0):
            raise DomainError("strikes must be strictly increasing")

    @classmethod
    def from_strikes(cls, strikes: Sequence[float]) -> "StrikeGrid":
        """Trapezoidal weights for an arbitrary increasing set of nodes."""
        k = np.asarray(strikes, dtype=float)
        w = np.zeros_like(k)
        if k.size > 1:
            gaps = np.diff(k)
            w[:-1] += gaps / 2
            w[1:] += gaps / 2
        return cls(k, w)

    @classmethod
    def uniform(cls, interval: PriceInterval, n: int = DEFAULT_STRIKES, split_at: Optional[float] = None) -> "StrikeGrid":
        """``n`` equally spaced nodes spanning ``interval``.

        ``split_at`` inserts one extra node, typically at the kink of a
        pathwise payoff, so the trapezoid stays second order.
        """
        if n < 2:
            raise DomainError(f"need at least 2 strikes, got {n}")
        if interval.lower == interval.upper:
            return cls(np.array([interval.lower]), np.array([0.0]))
        k = np.linspace(interval.lower, interval.upper, n)
        if split_at is not None and interval.lower < split_at < interval.upper:
            k = np.union1d(k, [split_at])
        return cls.from_strikes(k)

    def covers(self, interval: PriceInterval) -> bool:
        tol = _EDGE_TOL * interval.upper
        return bool(self.strikes[0] >= interval.lower - tol and self.strikes[-1] <= interval.upper + tol)


def _option_kind(side: Side) -> str:
    return "call" if side is Side.RIGHT else "put"


def _check_grid(grid: StrikeGrid, interval: PriceInterval) -> None:
    if not grid.covers(interval):
        raise DomainError(
            f"strike grid [{grid.strikes[0]}, {grid.strikes[-1]}] leaves interval [{interval.lower}, {interval.upper}]"
        )


def replicate_expected_uil(
    side: Side,
    interval: PriceInterval,
    pricer: Callable[[np.ndarray], np.ndarray],
    grid: StrikeGrid,
) -> float:
    """``-1/2 * sum(w_i * K_i**-1.5 * price(K_i))`` over the grid.

    ``pricer`` maps an array of strikes to call prices for the right side or
    put prices for the left side.
    """
    _check_grid(grid, interval)
    prices = np.asarray(pricer(grid.strikes), dtype=float)
    # + 0.0 turns a -0.0 result into 0.0
    return -0.5 * float(np.sum(grid.weights * grid.strikes**-1.5 * prices)) + 0.0


def uil_delta(
    side: Side,
    interval: PriceInterval,
    delta_pricer: Callable[[np.ndarray], np.ndarray],
    grid: StrikeGrid,
) -> float:
    """Spot delta of the expected loss from option deltas on the same strip."""
    return replicate_expected_uil(side, interval, delta_pricer, grid)


def replicated_uil_payoff(side: Side, interval: PriceInterval, price: float, grid: StrikeGrid) -> float:
    """Pathwise version: the strip of intrinsic values at a single terminal price."""
    if side is Side.RIGHT:
        intrinsic = lambda k: np.maximum(price - k, 0.0)  # noqa: E731
    else:
        intrinsic = lambda k: np.maximum(k - price, 0.0)  # noqa: E731
    return replicate_expected_uil(side, interval, intrinsic, grid)


def sqrt_kernel_integral(x: ArrayLike, k_hat: ArrayLike, side: str) -> ArrayLike:
    """Closed form of the kernel integral in the square-root option identity.

    call: ``int_{k_hat}^inf K**-1.5 (x - K)+ dK``; put: ``int_0^{k_hat} K**-1.5 (K - x)+ dK``.
    Both equal ``2 (sqrt(x) - sqrt(k_hat))**2 / sqrt(k_hat)`` on the region
    where the integrand is non-zero and vanish elsewhere.
    """
    x = np.asarray(x, dtype=float)
    k_hat = np.asarray(k_hat, dtype=float)
    root_k = np.sqrt(k_hat)
    diff = (x - k_hat) / (np.sqrt(x) + root_k)  # sqrt(x) - sqrt(k_hat) without cancellation
    value = 2.0 * diff * diff / root_k
    active = x > k_hat if side == "call" else x < k_hat
    out = np.where(active, value, 0.0)
    return float(out) if out.ndim == 0 else out


def sqrt_identity_rhs(x: ArrayLike, k_hat: ArrayLike, side: str) -> ArrayLike:
    """Right-hand side of the square-root option identities.

    call: ``(x - k)+ / (2 sqrt(k)) - 1/4 * kernel``, which equals ``(sqrt(x) - sqrt(k))+``.
    put: ``(k - x)+ / (2 sqrt(k)) + 1/4 * kernel``, which equals ``(sqrt(k) - sqrt(x))+``.
    """
    if side not in ("call", "put"):
        raise DomainError(f"side must be 'call' or 'put', got {side!r}")
    x = np.asarray(x, dtype=float)
    k_hat = np.asarray(k_hat, dtype=float)
    if np.any(x <= 0) or np.any(k_hat <= 0):
        raise DomainError("x and k_hat must be positive")
    kernel = sqrt_kernel_integral(x, k_hat, side)
    if side == "call":
        out = np.maximum(x - k_hat, 0.0) / (2.0 * np.sqrt(k_hat)) - 0.25 * kernel
    else:
        out = np.maximum(k_hat - x, 0.0) / (2.0 * np.sqrt(k_hat)) + 0.25 * kernel
    return float(out) if out.ndim == 0 else out


def carr_madan_replicate(
    second_derivative: Callable[[float], float],
    anchor: float,
    value_and_slope_at_anchor: tuple[float, float],
    pricer: Callable[[float], tuple[float, float]],
    tol: float = 1e-9,
) -> float:
    """Price of a twice-differentiable payoff ``f`` from a continuum of vanillas.

    ``f(x*) + f'(x*) (F - x*) + int_0^x* f''(K) P(K) dK + int_x*^inf f''(K) C(K) dK``
    where ``pricer(K)`` returns ``(call, put)``. The forward ``F`` comes from
    put-call parity at the anchor. A :class:`TruncationWarning` is issued when
    the adaptive quadrature's error estimate exceeds ``tol``.
    """
    if not anchor > 0:
        raise DomainError(f"anchor must be positive, got {anchor}")
    f0, slope = value_and_slope_at_anchor
    call_at, put_at = pricer(anchor)
    forward = anchor + call_at - put_at
    puts, err_p = integrate.quad(lambda k: second_derivative(k) * pricer(k)[1], 0.0, anchor, limit=200)
    calls, err_c = integrate.quad(lambda k: second_derivative(k) * pricer(k)[0], anchor, np.inf, limit=200)
    bound = err_p + err_c
    if bound > tol:
        warnings.warn(f"strike integral error bound {bound:.3e} exceeds tolerance {tol:.1e}", TruncationWarning, stacklevel=2)
    return f0 + slope * (forward - anchor) + puts + calls


@dataclass(frozen=True)
class OptionQuote:
    kind: str
    strike: float
    maturity: float
    price: float

    def __post_init__(self):
        if self.kind not in ("call", "put"):
            raise DomainError(f"quote kind must be 'call' or 'put', got {self.kind!r}")
        if not self.strike > 0:
            raise DomainError(f"strike must be positive, got {self.strike}")

    def payoff(self, price: ArrayLike) -> ArrayLike:
        if self.kind == "call":
            return np.maximum(price - self.strike, 0.0)
        return np.maximum(self.strike - price, 0.0)


@dataclass(frozen=True)
class HedgeLeg:
    quote: OptionQuote
    quantity: float

    @property
    def cost(self) -> float:
        return self.quantity * self.quote.price


@dataclass(frozen=True)
class HedgePortfolio:
    legs: tuple[HedgeLeg, ...]
    side: Side
    interval: PriceInterval
    residual_bound: float
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if any(leg.quantity < 0 for leg in self.legs):
            raise DomainError("hedge quantities must be nonnegative")

    @property
    def cost(self) -> float:
        return math.fsum(leg.cost for leg in self.legs)

    def payoff(self, price: ArrayLike) -> ArrayLike:
        """Intrinsic value of the whole portfolio at terminal price(s)."""
        total = 0.0
        for leg in self.legs:
            total = total + leg.quantity * leg.quote.payoff(price)
        return total


def validate_chain(chain: Sequence[OptionQuote], spot: Optional[float] = None) -> tuple[list[OptionQuote], list[str]]:
    """Drop unusable quotes and report data problems.

    Negative or non-finite prices are excluded. Quotes below intrinsic value
    (only checkable when ``spot`` is given) are kept but flagged.
    """
    kept, notes = [], []
    for q in chain:
        if not math.isfinite(q.price) or q.price < 0:
            notes.append(f"excluded {q.kind} K={q.strike:g} T={q.maturity:g}: invalid price {q.price:g}")
            continue
        if spot is not None:
            intrinsic = max(spot - q.strike, 0.0) if q.kind == "call" else max(q.strike - spot, 0.0)
            if q.price < intrinsic:
                notes.append(f"{q.kind} K={q.strike:g} priced {q.price:g} below intrinsic {intrinsic:g}")
        kept.append(q)
    return kept, notes


def _cell_widths(strikes: np.ndarray, interval: PriceInterval) -> np.ndarray:
    mids = (strikes[1:] + strikes[:-1]) / 2
    edges = np.concatenate(([interval.lower], mids, [interval.upper]))
    return np.diff(edges)


def _residual_bound(strikes: np.ndarray, g: np.ndarray, interval: PriceInterval) -> float:
    """Second-difference estimate of the quadrature error of ``1/2 int g dK``."""
    if strikes.size < 3:
        # no curvature information: the whole strip is uncertain
        return 0.5 * interval.width * float(np.max(g))
    h = np.diff(strikes)
    slopes = np.diff(g) / h
    curv = np.abs(2.0 * np.diff(slopes) / (strikes[2:] - strikes[:-2]))
    curv_cell = np.maximum(np.concatenate(([curv[0]], curv)), np.concatenate((curv, [curv[-1]])))
    interior = np.sum(h**3 * curv_cell / 12.0)
    # midpoint cells treat g as flat between the edge strike and the interval end
    gap_lo = strikes[0] - interval.lower
    gap_hi = interval.upper - strikes[-1]
    edges = 0.5 * (gap_lo**2 * abs(slopes[0]) + gap_hi**2 * abs(slopes[-1]))
    return 0.5 * float(interior + edges)


def build_hedge_portfolio(
    side: Side,
    interval: PriceInterval,
    chain: Sequence[OptionQuote],
    maturity: float,
    maturity_tol: float = 0.5 / 365,
    liquidity: float = 1.0,
) -> HedgePortfolio:
    """Long strip of calls (right side) or puts (left side) offsetting the loss.

    Each usable strike gets ``liquidity * K**-1.5 * width / 2`` contracts,
    with width the strike's midpoint cell clipped to the interval.
    """
    kind = _option_kind(side)
    usable, notes = validate_chain(chain)
    usable = [q for q in usable if q.kind == kind and abs(q.maturity - maturity) <= maturity_tol]
    inside = [q for q in usable if interval.lower <= q.strike <= interval.upper]
    if not inside:
        below = [q.strike for q in usable if q.strike < interval.lower]
        above = [q.strike for q in usable if q.strike > interval.upper]
        nearest_below = f"{max(below):g}" if below else "none"
        nearest_above = f"{min(above):g}" if above else "none"
        gap = f"nearest {kind} strikes: below {nearest_below}, above {nearest_above}"
        raise UnhedgeableIntervalError(
            f"unhedgeable interval [{interval.lower:g}, {interval.upper:g}]: no {kind} quotes with "
            f"maturity {maturity:g} inside it ({gap})"
        )
    inside.sort(key=lambda q: q.strike)
    unique: list[OptionQuote] = []
    for q in inside:
        if unique and q.strike == unique[-1].strike:
            notes.append(f"duplicate {kind} strike {q.strike:g}; kept the first quote")
            continue
        unique.append(q)
    strikes = np.array([q.strike for q in unique])
    prices = np.array([q.price for q in unique])
    widths = _cell_widths(strikes, interval)
    qty = 0.5 * liquidity * strikes**-1.5 * widths
    legs = tuple(HedgeLeg(q, float(n)) for q, n in zip(unique, qty))
    bound = liquidity * _residual_bound(strikes, strikes**-1.5 * prices, interval)
    return HedgePortfolio(legs, side, interval, bound, tuple(notes))
