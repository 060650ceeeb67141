"""Impermanent loss of concentrated liquidity positions and its static replication with options."""

from .amm import (
    PoolState,
    Position,
    PriceInterval,
    Side,
    TokenAmounts,
    average_sell_price,
    deposits_for_liquidity,
    holdings_at_exit,
    impermanent_loss,
    reserves_from_state,
    split_position,
    swap_out,
)
from .errors import ConfigError, DomainError, QuadratureError, TruncationWarning, UnhedgeableIntervalError
from .gbm import (
    GbmParams,
    MoneynessTerms,
    bs_call,
    bs_put,
    expected_uil_gbm,
    lognormal_quadrature,
    normal_cdf,
    sqrt_call,
    sqrt_put,
)
from .heston import HestonParams, McConfig, PathSet, mc_expected_uil, mc_price, simulate
from .payoff import LegKind, OptionLeg, UilPayoff, decompose, evaluate_legs, uil
from .replication import (
    HedgePortfolio,
    OptionQuote,
    StrikeGrid,
    build_hedge_portfolio,
    carr_madan_replicate,
    sqrt_identity_rhs,
    replicate_expected_uil,
    uil_delta,
)

__version__ = "0.1.0"
