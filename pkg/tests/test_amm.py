import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from il_replication.amm import (
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
from il_replication.errors import DomainError
from il_replication.payoff import uil

I_11_14 = PriceInterval(11, 14)
RIGHT = Position(1.0, I_11_14, 10.0, Side.RIGHT)


def right(lo, hi, dl=1.0, entry=None):
    return Position(dl, PriceInterval(lo, hi), lo if entry is None else entry, Side.RIGHT)


def left(lo, hi, dl=1.0, entry=None):
    return Position(dl, PriceInterval(lo, hi), hi if entry is None else entry, Side.LEFT)


class TestTypes:
    def test_interval_rejects_inverted_or_nonpositive(self):
        with pytest.raises(DomainError):
            PriceInterval(14, 11)
        with pytest.raises(DomainError):
            PriceInterval(0, 1)

    def test_degenerate_interval_allowed(self):
        assert PriceInterval(5, 5).width == 0

    def test_position_side_must_match_entry(self):
        with pytest.raises(DomainError):
            Position(1.0, I_11_14, 12.0, Side.RIGHT)
        with pytest.raises(DomainError):
            Position(1.0, I_11_14, 12.0, Side.LEFT)
        Position(1.0, I_11_14, 14.0, Side.LEFT)

    def test_token_amounts_nonnegative(self):
        with pytest.raises(DomainError):
            TokenAmounts(-1.0, 0.0)

    def test_pool_state_validation(self):
        with pytest.raises(DomainError):
            PoolState(1.0, 0.0)
        with pytest.raises(DomainError):
            PoolState(1.0, 1.0, fee_rate=1.0)


class TestReserves:
    def test_perfect_square(self):
        r = reserves_from_state(PoolState(10, 4))
        assert (r.x, r.y) == (5.0, 20.0)

    def test_empty_pool(self):
        r = reserves_from_state(PoolState(0, 10))
        assert (r.x, r.y) == (0.0, 0.0)

    def test_unit_liquidity(self):
        r = reserves_from_state(PoolState(1, 10))
        assert r.x == pytest.approx(0.316228, abs=1e-6)
        assert r.y == pytest.approx(3.162278, abs=1e-6)
        assert r.x * r.y == pytest.approx(1.0, rel=1e-15)

    @given(st.floats(1e-6, 1e9), st.floats(1e-6, 1e6))
    def test_product_and_price(self, liq, price):
        r = reserves_from_state(PoolState(liq, price))
        assert r.x * r.y == pytest.approx(liq * liq, rel=1e-12)
        assert r.y / r.x == pytest.approx(price, rel=1e-12)


class TestSwap:
    pool = PoolState.from_reserves(10, 100)

    def test_doubling_x_halves_y(self):
        assert swap_out(self.pool, 10) == pytest.approx(50.0, rel=1e-14)

    def test_marginal_price(self):
        dx = 1e-9
        assert swap_out(self.pool, dx) / dx == pytest.approx(10.0, rel=1e-8)

    def test_fee_against_root_finding(self):
        pool = PoolState.from_reserves(10, 100, fee_rate=0.003)
        x, y, dx = 10.0, 100.0, 10.0
        brute = optimize.brentq(lambda dy: (x + 0.997 * dx) * (y - dy) - x * y, 0.0, y, xtol=1e-14)
        assert swap_out(pool, dx) == pytest.approx(brute, rel=1e-12)
        assert swap_out(pool, dx) < swap_out(self.pool, dx)

    @given(st.floats(1e-3, 1e6), st.floats(1e-3, 1e3), st.floats(1e-6, 1e6))
    def test_curve_conserved(self, liq, price, dx):
        pool = PoolState(liq, price)
        r = reserves_from_state(pool)
        dy = swap_out(pool, dx)
        # y - dy cancels when the swap drains most of the pool
        tol = 1e-13 * (r.x + dx) * r.y
        assert abs((r.x + dx) * (r.y - dy) - r.x * r.y) <= tol
        assert 0 < dy < r.y

    def test_rejects_bad_input(self):
        with pytest.raises(DomainError):
            swap_out(self.pool, 0.0)
        with pytest.raises(DomainError):
            swap_out(PoolState(0.0, 1.0), 1.0)


class TestDeposits:
    def test_below_interval_all_x(self):
        d = deposits_for_liquidity(1, I_11_14, 10)
        assert d.y == 0
        assert d.x == pytest.approx(1 / math.sqrt(11) - 1 / math.sqrt(14), rel=1e-15)
        assert d.x == pytest.approx(0.034250, abs=1e-6)

    def test_above_interval_all_y(self):
        d = deposits_for_liquidity(1, I_11_14, 15)
        assert d.x == 0
        assert d.y == pytest.approx(0.425032, abs=1e-6)

    def test_matches_curve_integral(self):
        # tokens released while the price crosses the band: integrate d(L/sqrt(P)) and d(L sqrt(P))
        dl = 2.5
        x_int, _ = integrate.quad(lambda p: dl * 0.5 * p**-1.5, 11, 14, epsabs=1e-15)
        y_int, _ = integrate.quad(lambda p: dl * 0.5 * p**-0.5, 11, 14, epsabs=1e-15)
        assert deposits_for_liquidity(dl, I_11_14, 10).x == pytest.approx(x_int, rel=1e-12)
        assert deposits_for_liquidity(dl, I_11_14, 15).y == pytest.approx(y_int, rel=1e-12)
        inside = deposits_for_liquidity(dl, I_11_14, 12.5)
        assert inside.x == pytest.approx(integrate.quad(lambda p: dl * 0.5 * p**-1.5, 12.5, 14)[0], rel=1e-12)
        assert inside.y == pytest.approx(integrate.quad(lambda p: dl * 0.5 * p**-0.5, 11, 12.5)[0], rel=1e-12)

    def test_zero_liquidity(self):
        d = deposits_for_liquidity(0.0, I_11_14, 12)
        assert (d.x, d.y) == (0.0, 0.0)

    @pytest.mark.parametrize("edge", [11.0, 14.0])
    def test_continuous_at_edges(self, edge):
        lo = deposits_for_liquidity(1, I_11_14, edge - 1e-10)
        hi = deposits_for_liquidity(1, I_11_14, edge + 1e-10)
        assert abs(lo.x - hi.x) < 1e-10 and abs(lo.y - hi.y) < 1e-10


class TestSplit:
    def test_bins(self):
        lft, rgt = split_position(1.0, PriceInterval(8, 12), 10.0)
        assert lft.side is Side.LEFT and lft.interval == PriceInterval(8, 10)
        assert rgt.side is Side.RIGHT and rgt.interval == PriceInterval(10, 12)
        assert lft.liquidity == rgt.liquidity == 1.0

    def test_degenerate_left_bin(self):
        lft, _ = split_position(1.0, PriceInterval(10, 12), 10.0)
        assert lft.interval == PriceInterval(10, 10)
        assert (lft.deposits.x, lft.deposits.y) == (0.0, 0.0)

    def test_additivity_example(self):
        whole = deposits_for_liquidity(2.0, PriceInterval(6, 14), 10.0)
        lft, rgt = split_position(2.0, PriceInterval(6, 14), 10.0)
        parts = lft.deposits + rgt.deposits
        assert parts.x == pytest.approx(whole.x, rel=1e-12)
        assert parts.y == pytest.approx(whole.y, rel=1e-12)
        assert parts.x == pytest.approx(2 * (1 / math.sqrt(10) - 1 / math.sqrt(14)), rel=1e-14)
        assert parts.y == pytest.approx(2 * (math.sqrt(10) - math.sqrt(6)), rel=1e-14)

    @given(st.floats(1e-3, 1e3), st.floats(0.1, 100), st.floats(1.0, 5.0), st.floats(0, 1))
    def test_additivity(self, dl, lo, ratio, frac):
        hi = lo * ratio
        p0 = lo + frac * (hi - lo)
        whole = deposits_for_liquidity(dl, PriceInterval(lo, hi), p0)
        lft, rgt = split_position(dl, PriceInterval(lo, hi), p0)
        parts = lft.deposits + rgt.deposits
        assert parts.x == pytest.approx(whole.x, rel=1e-12, abs=1e-300)
        assert parts.y == pytest.approx(whole.y, rel=1e-12, abs=1e-300)

    def test_outside_interval_rejected(self):
        with pytest.raises(DomainError):
            split_position(1.0, PriceInterval(8, 12), 13.0)


class TestExit:
    def test_above_upper(self):
        h = holdings_at_exit(RIGHT, 14)
        assert h.x == 0 and h.y == pytest.approx(0.425032, abs=1e-6)

    def test_price_never_entered(self):
        h = holdings_at_exit(RIGHT, 10)
        assert (h.x, h.y) == (RIGHT.deposits.x, RIGHT.deposits.y)

    def test_inside(self):
        h = holdings_at_exit(RIGHT, 12)
        assert h.x == pytest.approx(1 / math.sqrt(12) - 1 / math.sqrt(14), rel=1e-14)
        assert h.y == pytest.approx(math.sqrt(12) - math.sqrt(11), rel=1e-14)
        assert holdings_at_exit(RIGHT, 12.5).x < h.x

    @pytest.mark.parametrize("pos,edge", [(RIGHT, 11.0), (RIGHT, 14.0), (left(6, 9), 6.0), (left(6, 9), 9.0)])
    def test_continuity(self, pos, edge):
        a, b = edge * (1 - 1e-12), edge * (1 + 1e-12)
        assert abs(impermanent_loss(pos, a) - impermanent_loss(pos, b)) < 1e-10
        ha, hb = holdings_at_exit(pos, a), holdings_at_exit(pos, b)
        assert abs(ha.x - hb.x) < 1e-10 and abs(ha.y - hb.y) < 1e-10


class TestImpermanentLoss:
    def test_inside(self):
        # mpmath, 40 digits
        assert impermanent_loss(RIGHT, 12) == pytest.approx(-0.006557695013054146767, rel=1e-12)
        assert impermanent_loss(RIGHT, 12) == pytest.approx(2 * math.sqrt(12) - 12 / math.sqrt(11) - math.sqrt(11), rel=1e-10)

    def test_above(self):
        expected = math.sqrt(14) - math.sqrt(11) - (1 / math.sqrt(11) - 1 / math.sqrt(14)) * 20
        assert impermanent_loss(RIGHT, 20) == pytest.approx(expected, rel=1e-13)
        assert impermanent_loss(RIGHT, 20) == pytest.approx(-0.2599694568882432228, rel=1e-13)

    def test_zero_at_lower_edge(self):
        assert impermanent_loss(right(3, 7, entry=2), 3.0) == 0.0

    def test_left_below(self):
        # mpmath value; the commonly quoted -0.508 does not follow from the formula
        assert impermanent_loss(left(6, 9), 5.0) == pytest.approx(-0.1759354715641734866, rel=1e-13)

    def test_exactly_zero_outside(self):
        prices = np.geomspace(0.01, 11, 1000)
        assert np.all(impermanent_loss(RIGHT, prices) == 0.0)
        prices = np.geomspace(9, 1e4, 1000)
        assert np.all(impermanent_loss(left(6, 9, entry=12), prices) == 0.0)

    def test_nonpositive_million_samples(self):
        rng = np.random.default_rng(7)
        worst = -np.inf
        for _ in range(1000):
            lo = math.exp(rng.uniform(-3, 6))
            hi = lo * math.exp(rng.uniform(0, 1.5))
            dl = math.exp(rng.uniform(-3, 5))
            prices = lo * np.exp(rng.uniform(-3, 4, size=1000))
            if rng.random() < 0.5:
                pos = right(lo, hi, dl, entry=lo * rng.uniform(0.5, 1))
            else:
                pos = left(lo, hi, dl, entry=hi * rng.uniform(1, 2))
            worst = max(worst, float(np.max(impermanent_loss(pos, prices))))
        assert worst <= 1e-12

    @given(st.floats(0.5, 50), st.floats(1.0, 3.0), st.floats(0.1, 10), st.floats(0.05, 500), st.booleans())
    @settings(max_examples=300)
    def test_equals_liquidity_times_uil(self, lo, ratio, dl, price, is_right):
        hi = lo * ratio
        pos = right(lo, hi, dl) if is_right else left(lo, hi, dl)
        assert impermanent_loss(pos, price) == pytest.approx(dl * uil(pos.side, pos.interval, price), rel=1e-9, abs=1e-12)


class TestAverageSellPrice:
    def test_geometric_mean(self):
        assert average_sell_price(I_11_14) == pytest.approx(12.409674, abs=1e-6)
        assert average_sell_price(PriceInterval(7, 7)) == 7

    def test_ratio_of_proceeds_to_deposit(self):
        assert holdings_at_exit(RIGHT, 20).y / RIGHT.deposits.x == pytest.approx(average_sell_price(I_11_14), rel=1e-14)
