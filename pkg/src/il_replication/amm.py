"""Constant-product pool mechanics and realized impermanent loss.

Prices are quoted in token Y per token X. Token Y is the numeraire, so every
value and loss returned here is denominated in Y. Functions that take an exit
price accept either a float or a numpy array of prices.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError

ArrayLike = Union[float, np.ndarray]


class Side(enum.Enum):
    """Which side of the entry price the liquidity sits on."""

    RIGHT = "right"  # above the entry price, ask-like
    LEFT = "left"  # below the entry price, bid-like

    @classmethod
    def parse(cls, text: str) -> "Side":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise DomainError(f"unknown side {text!r}; expected 'right' or 'left'") from None


@dataclass(frozen=True)
class PriceInterval:
    lower: float
    upper: float

    def __post_init__(self):
        if not (0 < self.lower <= self.upper):
            raise DomainError(f"need 0 < lower <= upper, got [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, price: float) -> bool:
        return self.lower <= price <= self.upper


@dataclass(frozen=True)
class PoolState:
    liquidity: float
    price: float
    fee_rate: float = 0.0

    def __post_init__(self):
        if self.liquidity < 0:
            raise DomainError(f"liquidity must be nonnegative, got {self.liquidity}")
        if not self.price > 0:
            raise DomainError(f"pool price must be positive, got {self.price}")
        if not (0 <= self.fee_rate < 1):
            raise DomainError(f"fee rate must lie in [0, 1), got {self.fee_rate}")

    @classmethod
    def from_reserves(cls, x: float, y: float, fee_rate: float = 0.0) -> "PoolState":
        if x <= 0 or y <= 0:
            raise DomainError("reserves must be positive to infer a pool price")
        return cls(liquidity=math.sqrt(x * y), price=y / x, fee_rate=fee_rate)


@dataclass(frozen=True)
class TokenAmounts:
    x: ArrayLike
    y: ArrayLike

    def __post_init__(self):
        if np.any(np.asarray(self.x) < 0) or np.any(np.asarray(self.y) < 0):
            raise DomainError(f"token amounts must be nonnegative, got ({self.x}, {self.y})")

    def __add__(self, other: "TokenAmounts") -> "TokenAmounts":
        return TokenAmounts(self.x + other.x, self.y + other.y)

    def value(self, price: ArrayLike) -> ArrayLike:
        """Value in token Y at the given price."""
        return self.y + self.x * price


@dataclass(frozen=True)
class Position:
    liquidity: float
    interval: PriceInterval
    entry_price: float
    side: Side

    def __post_init__(self):
        if not self.liquidity > 0:
            raise DomainError(f"position liquidity must be positive, got {self.liquidity}")
        if not self.entry_price > 0:
            raise DomainError(f"entry price must be positive, got {self.entry_price}")
        if self.side is Side.RIGHT and self.entry_price > self.interval.lower:
            raise DomainError(
                f"right-side position needs entry price {self.entry_price} <= lower {self.interval.lower}"
            )
        if self.side is Side.LEFT and self.entry_price < self.interval.upper:
            raise DomainError(
                f"left-side position needs entry price {self.entry_price} >= upper {self.interval.upper}"
            )

    @property
    def deposits(self) -> TokenAmounts:
        return deposits_for_liquidity(self.liquidity, self.interval, self.entry_price)


def reserves_from_state(pool: PoolState) -> TokenAmounts:
    """Reserves (L/sqrt(P), L*sqrt(P)) of a full-range pool."""
    if not pool.price > 0:
        raise DomainError(f"pool price must be positive, got {pool.price}")
    root = math.sqrt(pool.price)
    return TokenAmounts(pool.liquidity / root, pool.liquidity * root)


def swap_out(pool: PoolState, dx_in: float) -> float:
    """Amount of token Y paid out for ``dx_in`` of token X sent in.

    The fee is taken on the input side, so only ``(1 - fee_rate) * dx_in``
    moves the reserves along the curve.
    """
    if not dx_in > 0:
        raise DomainError(f"swap input must be positive, got {dx_in}")
    reserves = reserves_from_state(pool)
    if reserves.x == 0 or reserves.y == 0:
        raise DomainError("cannot swap against an empty pool")
    dx_eff = (1.0 - pool.fee_rate) * dx_in
    return reserves.y * dx_eff / (reserves.x + dx_eff)


def deposits_for_liquidity(delta_l: float, interval: PriceInterval, current_price: ArrayLike) -> TokenAmounts:
    """Token amounts backing ``delta_l`` liquidity on ``interval`` at ``current_price``.

    Below the interval the position is all token X, above it all token Y; in
    between the price is clamped into the band, which gives the middle branch.
    """
    if delta_l < 0:
        raise DomainError(f"liquidity must be nonnegative, got {delta_l}")
    if np.any(np.asarray(current_price) <= 0):
        raise DomainError("current price must be positive")
    clamped = np.clip(current_price, interval.lower, interval.upper)
    root = np.sqrt(clamped)
    x = delta_l * (1.0 / root - 1.0 / math.sqrt(interval.upper))
    y = delta_l * (root - math.sqrt(interval.lower))
    if np.ndim(x) == 0:
        x, y = float(x), float(y)
    # rounding can leave -0.0 or -1e-17 at the band edges
    return TokenAmounts(np.maximum(x, 0.0), np.maximum(y, 0.0))


def split_position(delta_l: float, interval: PriceInterval, current_price: float) -> tuple[Position, Position]:
    """Split an in-range deposit into a left bin [lower, P0] and a right bin [P0, upper]."""
    if not interval.contains(current_price):
        raise DomainError(
            f"current price {current_price} outside interval [{interval.lower}, {interval.upper}]"
        )
    left = Position(delta_l, PriceInterval(interval.lower, current_price), current_price, Side.LEFT)
    right = Position(delta_l, PriceInterval(current_price, interval.upper), current_price, Side.RIGHT)
    return left, right


def holdings_at_exit(position: Position, exit_price: ArrayLike) -> TokenAmounts:
    """Tokens withdrawn when the position is closed at ``exit_price``."""
    return deposits_for_liquidity(position.liquidity, position.interval, exit_price)


def impermanent_loss(position: Position, exit_price: ArrayLike) -> ArrayLike:
    """Realized IL in token Y: ``Y_t - Y_0 + (X_t - X_0) * P_t``."""
    start = position.deposits
    end = holdings_at_exit(position, exit_price)
    return end.y - start.y + (end.x - start.x) * exit_price


def average_sell_price(interval: PriceInterval) -> float:
    """Average price at which a right-side position sells X once fully crossed."""
    return math.sqrt(interval.lower * interval.upper)
