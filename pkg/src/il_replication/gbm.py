"""Closed-form pricing under driftless geometric Brownian motion.

All prices use a zero interest rate and zero drift, so the terminal price is
lognormal with mean equal to the spot. Time is measured in years and
``sigma`` is annualized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.special import ndtr

from .amm import ArrayLike, PriceInterval, Side
from .errors import DomainError, QuadratureError
from .payoff import LegKind, OptionLeg, decompose


@dataclass(frozen=True)
class GbmParams:
    sigma: float
    horizon: float
    spot: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        if not self.spot > 0:
            raise DomainError(f"spot must be positive, got {self.spot}")

    @property
    def total_vol(self) -> float:
        """sigma * sqrt(t)."""
        return self.sigma * math.sqrt(self.horizon)

    def replace(self, **changes) -> "GbmParams":
        fields = {"sigma": self.sigma, "horizon": self.horizon, "spot": self.spot}
        fields.update(changes)
        return GbmParams(**fields)


@dataclass(frozen=True)
class MoneynessTerms:
    d_l: float
    d_u: float
    q_l: float
    q_u: float

    @classmethod
    def compute(cls, params: GbmParams, right: PriceInterval, left: PriceInterval) -> "MoneynessTerms":
        return cls(
            d_l=moneyness(params, right.lower),
            d_u=moneyness(params, right.upper),
            q_l=moneyness(params, left.lower),
            q_u=moneyness(params, left.upper),
        )


def normal_cdf(z: ArrayLike) -> ArrayLike:
    """Standard normal CDF, accurate to a few ulp in both tails."""
    out = ndtr(z)
    return float(out) if np.ndim(out) == 0 else out


def moneyness(params: GbmParams, strike: ArrayLike) -> ArrayLike:
    """``(ln(P0/K) - sigma^2 t / 2) / (sigma sqrt(t))``."""
    s = params.total_vol
    return (np.log(params.spot / np.asarray(strike, dtype=float)) - 0.5 * s * s) / s


def _check_strike(strike):
    if np.any(np.asarray(strike) <= 0):
        raise DomainError("strike must be positive")


def bs_call(params: GbmParams, strike: ArrayLike) -> ArrayLike:
    _check_strike(strike)
    d = moneyness(params, strike)
    s = params.total_vol
    return params.spot * normal_cdf(d + s) - strike * normal_cdf(d)


def bs_put(params: GbmParams, strike: ArrayLike) -> ArrayLike:
    # written out rather than via parity so deep in-the-money calls keep full precision here
    _check_strike(strike)
    d = moneyness(params, strike)
    s = params.total_vol
    return strike * normal_cdf(-d) - params.spot * normal_cdf(-d - s)


def bs_call_delta(params: GbmParams, strike: ArrayLike) -> ArrayLike:
    _check_strike(strike)
    return normal_cdf(moneyness(params, strike) + params.total_vol)


def bs_put_delta(params: GbmParams, strike: ArrayLike) -> ArrayLike:
    _check_strike(strike)
    return -normal_cdf(-moneyness(params, strike) - params.total_vol)


def _sqrt_forward(params: GbmParams) -> float:
    """E[sqrt(P_t)] = sqrt(P0) exp(-sigma^2 t / 8)."""
    s = params.total_vol
    return math.sqrt(params.spot) * math.exp(-s * s / 8.0)


def sqrt_call(params: GbmParams, strike: ArrayLike) -> ArrayLike:
    """Price of the payoff ``(sqrt(P_t) - sqrt(K))+``."""
    _check_strike(strike)
    d = moneyness(params, strike)
    s = params.total_vol
    return _sqrt_forward(params) * normal_cdf(d + s / 2) - np.sqrt(strike) * normal_cdf(d)


def sqrt_put(params: GbmParams, strike: ArrayLike) -> ArrayLike:
    """Price of the payoff ``(sqrt(K) - sqrt(P_t))+``."""
    _check_strike(strike)
    d = moneyness(params, strike)
    s = params.total_vol
    return np.sqrt(strike) * normal_cdf(-d) - _sqrt_forward(params) * normal_cdf(-d - s / 2)


_LEG_PRICERS = {
    LegKind.CALL: bs_call,
    LegKind.PUT: bs_put,
    LegKind.SQRT_CALL: sqrt_call,
    LegKind.SQRT_PUT: sqrt_put,
}


def leg_price(leg: OptionLeg, params: GbmParams) -> float:
    """Weighted price of one option leg."""
    return leg.weight * _LEG_PRICERS[leg.kind](params, leg.strike)


def expected_uil_gbm(side: Side, interval: PriceInterval, params: GbmParams) -> float:
    """Expected impermanent loss per unit of liquidity in closed form."""
    s = params.total_vol
    p0 = params.spot
    a = 2.0 * _sqrt_forward(params)
    lo, hi = interval.lower, interval.upper
    m_lo, m_hi = moneyness(params, lo), moneyness(params, hi)
    N = normal_cdf
    if side is Side.RIGHT:
        return (
            a * (N(m_lo + s / 2) - N(m_hi + s / 2))
            - math.sqrt(lo) * N(m_lo)
            + math.sqrt(hi) * N(m_hi)
            - p0 / math.sqrt(lo) * N(m_lo + s)
            + p0 / math.sqrt(hi) * N(m_hi + s)
        )
    return (
        a * (-N(-m_lo - s / 2) + N(-m_hi - s / 2))
        + math.sqrt(lo) * N(-m_lo)
        - math.sqrt(hi) * N(-m_hi)
        + p0 / math.sqrt(lo) * N(-m_lo - s)
        - p0 / math.sqrt(hi) * N(-m_hi - s)
    )


def expected_uil_from_legs(side: Side, interval: PriceInterval, params: GbmParams) -> float:
    """Same expectation assembled leg by leg from the option decomposition."""
    return math.fsum(leg_price(leg, params) for leg in decompose(side, interval))


# Gauss-Legendre rules of two orders; their disagreement is the error estimate.
_GL_LOW = np.polynomial.legendre.leggauss(16)
_GL_HIGH = np.polynomial.legendre.leggauss(24)
_PANEL_WIDTH = 0.5
_TAIL = 10.0


def _panel_rule(edges: np.ndarray, rule) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = rule
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    z = (a + b) / 2 + half * nodes[None, :]
    w = half * weights[None, :]
    return z.ravel(), w.ravel()


def lognormal_quadrature(
    payoff: Callable[[np.ndarray], np.ndarray],
    params: GbmParams,
    breakpoints: Iterable[float] = (),
    rtol: float = 1e-12,
) -> float:
    """Expectation of ``payoff(P_t)`` under driftless GBM by Gauss-Legendre quadrature.

    The integral is taken over the standard normal driver z on
    ``[-10, 10 + sigma sqrt(t)]`` (widened to keep every breakpoint at least
    10 units from the ends), split into panels of width 0.5 and at the
    z-images of ``breakpoints``. Payoffs are expected to be smooth between
    breakpoints and to grow at most linearly, so truncation costs less than
    ``P0 * N(-10)``.

    ``payoff`` must accept a numpy array of prices.
    """
    s = params.total_vol
    bps = [(math.log(k / params.spot) + 0.5 * s * s) / s for k in breakpoints]
    lo = min([-_TAIL] + [b - _TAIL for b in bps])
    hi = max([_TAIL + s] + [b + _TAIL for b in bps])
    n_panels = int(math.ceil((hi - lo) / _PANEL_WIDTH))
    edges = np.union1d(np.linspace(lo, hi, n_panels + 1), bps)

    def integrate(rule):
        z, w = _panel_rule(edges, rule)
        x = params.spot * np.exp(-0.5 * s * s + s * z)
        f = np.asarray(payoff(x), dtype=float) * np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
        return math.fsum(w * f), math.fsum(w * np.abs(f))

    coarse, _ = integrate(_GL_LOW)
    fine, scale = integrate(_GL_HIGH)
    err = abs(fine - coarse)
    if err > rtol * abs(fine) + 64 * np.finfo(float).eps * scale:
        raise QuadratureError("lognormal quadrature did not converge", err / max(abs(fine), 1e-300))
    return fine
