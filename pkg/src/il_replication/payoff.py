"""Impermanent loss per unit of liquidity and its option decomposition.

``uil`` evaluates the piecewise loss directly. ``decompose`` rewrites the same
payoff as four option legs: two square-root options and two vanillas struck
at the interval edges. The two routes are kept independent so each can be
checked against the other.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .amm import ArrayLike, PriceInterval, Side
from .errors import DomainError


class LegKind(enum.Enum):
    CALL = "call"
    PUT = "put"
    SQRT_CALL = "sqrt_call"
    SQRT_PUT = "sqrt_put"


@dataclass(frozen=True)
class OptionLeg:
    kind: LegKind
    strike: float
    weight: float

    def __post_init__(self):
        if not self.strike > 0:
            raise DomainError(f"strike must be positive, got {self.strike}")

    def payoff(self, price: ArrayLike) -> ArrayLike:
        """Intrinsic value per unit at ``price`` (weight not applied)."""
        if self.kind is LegKind.CALL:
            return np.maximum(price - self.strike, 0.0)
        if self.kind is LegKind.PUT:
            return np.maximum(self.strike - price, 0.0)
        root_k = np.sqrt(np.asarray(self.strike, dtype=np.asarray(price).dtype))
        if self.kind is LegKind.SQRT_CALL:
            return np.maximum(np.sqrt(price) - root_k, 0.0)
        return np.maximum(root_k - np.sqrt(price), 0.0)


@dataclass(frozen=True)
class UilPayoff:
    side: Side
    interval: PriceInterval

    def __call__(self, price: ArrayLike) -> ArrayLike:
        return uil(self.side, self.interval, price)

    def legs(self) -> list[OptionLeg]:
        return decompose(self.side, self.interval)


def _root_gap(p: np.ndarray, k: float) -> np.ndarray:
    return (p - k) / (np.sqrt(p) + math.sqrt(k))


def _inv_root_gap(lo: float, hi: float) -> float:
    # 1/sqrt(lo) - 1/sqrt(hi) without cancellation for narrow intervals
    return (hi - lo) / ((math.sqrt(hi) + math.sqrt(lo)) * math.sqrt(lo) * math.sqrt(hi))


def _uil_right(lo: float, hi: float, p: np.ndarray) -> np.ndarray:
    # 2*sqrt(p) - p/sqrt(lo) - sqrt(lo) == -(sqrt(p) - sqrt(lo))**2 / sqrt(lo);
    # the difference of roots is taken as (p - lo) / (sqrt(p) + sqrt(lo)) to avoid cancellation
    inside = -(_root_gap(p, lo) ** 2) / math.sqrt(lo)
    at_hi = -((math.sqrt(hi) - math.sqrt(lo)) ** 2) / math.sqrt(lo)
    above = at_hi - (p - hi) * _inv_root_gap(lo, hi)
    return np.where(p < lo, 0.0, np.where(p <= hi, inside, above))


def _uil_left(lo: float, hi: float, p: np.ndarray) -> np.ndarray:
    inside = -(_root_gap(p, hi) ** 2) / math.sqrt(hi)
    at_lo = -((math.sqrt(lo) - math.sqrt(hi)) ** 2) / math.sqrt(hi)
    below = at_lo - (lo - p) * _inv_root_gap(lo, hi)
    return np.where(p > hi, 0.0, np.where(p >= lo, inside, below))


def uil(side: Side, interval: PriceInterval, exit_price: ArrayLike) -> ArrayLike:
    """Impermanent loss per unit of liquidity at ``exit_price``.

    Right-side liquidity loses once the price rises past ``interval.lower``;
    left-side liquidity loses once it falls below ``interval.upper``. Both
    branches are evaluated on closed intervals, they coincide at the edges.
    """
    p = np.asarray(exit_price, dtype=float)
    if np.any(p <= 0):
        raise DomainError("exit price must be positive")
    if side is Side.RIGHT:
        out = _uil_right(interval.lower, interval.upper, p)
    else:
        out = _uil_left(interval.lower, interval.upper, p)
    return float(out) if out.ndim == 0 else out


def decompose(side: Side, interval: PriceInterval) -> list[OptionLeg]:
    """Four option legs whose combined intrinsic payoff equals ``uil``.

    Weights are carried in extended precision (where available) because the
    vanilla legs nearly cancel far from the strikes.
    """
    lo, hi = interval.lower, interval.upper
    inv_lo = 1 / np.sqrt(np.longdouble(lo))
    inv_hi = 1 / np.sqrt(np.longdouble(hi))
    if side is Side.RIGHT:
        return [
            OptionLeg(LegKind.SQRT_CALL, lo, 2.0),
            OptionLeg(LegKind.SQRT_CALL, hi, -2.0),
            OptionLeg(LegKind.CALL, lo, -inv_lo),
            OptionLeg(LegKind.CALL, hi, inv_hi),
        ]
    return [
        OptionLeg(LegKind.SQRT_PUT, lo, 2.0),
        OptionLeg(LegKind.SQRT_PUT, hi, -2.0),
        OptionLeg(LegKind.PUT, lo, -inv_lo),
        OptionLeg(LegKind.PUT, hi, inv_hi),
    ]


def evaluate_legs(legs: Sequence[OptionLeg], price: ArrayLike) -> ArrayLike:
    """Sum of weight times intrinsic payoff over ``legs``.

    The legs of a decomposition cancel heavily at prices far from the
    strikes, so the sum is accumulated in extended precision where the
    platform provides it.
    """
    p = np.asarray(price, dtype=float)
    if np.any(p <= 0):
        raise DomainError("price must be positive")
    wide = p.astype(np.longdouble)
    total = np.zeros_like(wide)
    for leg in legs:
        total = total + np.longdouble(leg.weight) * leg.payoff(wide)
    total = total.astype(float)
    return float(total) if total.ndim == 0 else total
