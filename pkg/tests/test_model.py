import math
from types import SimpleNamespace

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from htb.errors import InvalidInputError
from htb.model import (HtbParams, MarketState, RiskPremiumSpec, gamma_price_of_risk,
                       intensity_from_log, pnl_increment, theta_price_of_risk)
from htb.simulator import _advance

# e**5 to 40 digits (mpmath)
E5 = 148.4131591025766034211155800405522796235


def make(**kw):
    return HtbParams(**kw)


class TestParams:
    def test_defaults_valid(self):
        p = HtbParams()
        assert p.lambda_initial == pytest.approx(2.0)

    @pytest.mark.parametrize("kw, key", [
        ({"sigma": -0.1}, "sigma"),
        ({"kappa": -1.0}, "kappa"),
        ({"rho": 1.0}, "rho"),
        ({"rho": -0.9999999}, "rho"),
        ({"gamma": 1.0}, "gamma"),
        ({"gamma": -0.01}, "gamma"),
        ({"alpha": -0.5}, "alpha"),
        ({"lambda0": 0.0}, "lambda0"),
        ({"s0": 0.0}, "s0"),
        ({"lambda_max": 1.0, "lambda0": 2.0}, "lambda_max"),
        ({"r": float("nan")}, "r"),
    ])
    def test_invalid(self, kw, key):
        with pytest.raises(InvalidInputError, match=key):
            HtbParams(**kw)

    def test_rho_boundary_accepted(self):
        HtbParams(rho=1 - 1e-6)
        HtbParams(rho=-(1 - 1e-6))

    def test_initial_state(self):
        p = HtbParams(x0=math.log(1.5), lambda0=2.0)
        st0 = MarketState.initial(p)
        assert (st0.t, st0.s, st0.x) == (0.0, 100.0, math.log(1.5))
        assert st0.lam == pytest.approx(3.0, rel=1e-15)


class TestIntensity:
    def test_identity(self):
        assert intensity_from_log(0.0, make(lambda0=0.5, lambda_max=100.0)) == 0.5

    def test_log_inverse(self):
        assert intensity_from_log(math.log(2), make(lambda0=1.0, lambda_max=100.0)) == \
            pytest.approx(2.0, rel=1e-15)

    def test_cap(self):
        p = make(lambda0=1.0, lambda_max=50.0)
        assert intensity_from_log(5.0, p) == 50.0
        assert intensity_from_log(5.0, make(lambda0=1.0, lambda_max=1000.0)) == \
            pytest.approx(E5, rel=1e-14)

    def test_huge_x_is_capped_not_overflow(self):
        assert intensity_from_log(1e6, make()) == 50.0

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), -float("inf")])
    def test_non_finite(self, bad):
        with pytest.raises(InvalidInputError):
            intensity_from_log(bad, make())

    def test_vectorised(self):
        out = intensity_from_log(np.array([0.0, 100.0]), make())
        np.testing.assert_array_equal(out, [2.0, 50.0])

    @given(st.floats(min_value=1e-6, max_value=50.0))
    def test_roundtrip(self, lam):
        p = make(lambda0=2.0, lambda_max=50.0)
        assert intensity_from_log(math.log(lam / p.lambda0), p) == pytest.approx(lam, rel=1e-13)

    @given(st.floats(min_value=-700, max_value=700))
    def test_positive_and_bounded(self, x):
        lam = intensity_from_log(x, make())
        assert 0 < lam <= 50.0


class TestRiskPrices:
    def test_gamma_vanishes(self):
        p = make(gamma=0.05, r=0.1)
        assert gamma_price_of_risk(2.0, p) == 0.0

    def test_gamma_zero_everything(self):
        assert gamma_price_of_risk(7.3, make(gamma=0.0, r=0.0, sigma=0.2)) == 0.0

    def test_gamma_arithmetic(self):
        p = make(gamma=0.05, r=0.01, sigma=0.3)
        assert gamma_price_of_risk(2.0, p) == pytest.approx((0.10 - 0.01) / 0.3, rel=1e-15)
        assert gamma_price_of_risk(2.0, p) == pytest.approx(0.3, rel=1e-14)

    def test_gamma_needs_sigma(self):
        with pytest.raises(InvalidInputError, match="sigma"):
            gamma_price_of_risk(1.0, make(sigma=0.0))

    def test_theta_zero_spec(self):
        assert theta_price_of_risk(0.3, 1.2, 90.0, RiskPremiumSpec.zero(), make()) == 0.0

    def test_theta_zero_alpha(self):
        assert theta_price_of_risk(0.0, 0.0, 100.0, RiskPremiumSpec.constant(5.0),
                                   make(alpha=0.0)) == 0.0

    def test_theta_arithmetic(self):
        p = make(alpha=1.5, kappa=0.5)
        assert theta_price_of_risk(0.0, 0.0, 100.0, RiskPremiumSpec.constant(0.2), p) == \
            pytest.approx(0.6, rel=1e-15)

    def test_theta_affine(self):
        p = make(alpha=1.0, kappa=0.5)
        spec = RiskPremiumSpec.affine_in_x(0.1, -0.2)
        assert theta_price_of_risk(0.0, 0.5, 100.0, spec, p) == pytest.approx(0.0, abs=1e-16)
        np.testing.assert_allclose(theta_price_of_risk(0.0, np.array([0.0, 1.0]), 1.0, spec, p),
                                   [0.2, -0.2], rtol=1e-15)

    def test_spec_rejects_unknown_variant(self):
        with pytest.raises(InvalidInputError):
            RiskPremiumSpec("quadratic")

    @given(st.floats(-1e3, 1e3), st.floats(-50, 50), st.floats(1e-3, 1e4),
           st.sampled_from([RiskPremiumSpec.zero(), RiskPremiumSpec.constant(-0.4),
                            RiskPremiumSpec.affine_in_x(0.3, 0.7)]))
    def test_theta_finite(self, t, x, s, spec):
        assert math.isfinite(theta_price_of_risk(t, x, s, spec, make()))

    @given(st.floats(-100, 100))
    def test_zero_spec_identically_zero(self, x):
        assert RiskPremiumSpec.zero()(0.0, x, 1.0) == 0.0


class TestPnl:
    def test_trivial(self):
        assert pnl_increment(100.0, 0.0, 0.01, 2.0, make(gamma=0.0)) == 0.0

    def test_arithmetic(self):
        p = make(sigma=0.3, gamma=0.05)
        assert pnl_increment(100.0, 0.01, 0.01, 2.0, p) == pytest.approx(-0.4, rel=1e-13)

    def test_requires_positive_dt(self):
        with pytest.raises(InvalidInputError):
            pnl_increment(100.0, 0.0, 0.0, 2.0, make())

    def test_mean_over_draws(self):
        p = make(sigma=0.3, gamma=0.05)
        s, lam, dt = 100.0, 2.0, 0.01
        rng = np.random.default_rng(2024)
        dw = rng.standard_normal(1_000_000) * math.sqrt(dt)
        v = pnl_increment(s, dw, dt, lam, p)
        se = v.std(ddof=1) / math.sqrt(v.size)
        assert abs(v.mean() - (-s * lam * p.gamma * dt)) <= 3 * se

    @pytest.mark.parametrize("measure", ["P", "Q"])
    def test_equals_minus_ds_minus_jump_loss(self, measure):
        # expand the engine's own price update with symbolic inputs
        S, sig, dw, g, lam, dt, r, xi = sp.symbols("S sigma dW gamma lambda dt r xi")
        kap, alpha, xbar, beta, x, dz = sp.symbols("kappa alpha xbar beta x dZ")
        sym = SimpleNamespace(sigma=sig, gamma=g, r=r, kappa=kap, alpha=alpha, x_bar=xbar,
                              beta=beta)
        for xi_val in (0, 1):
            s_new, _ = _advance("P", 0, S, x, lam, dw, dz, xi_val, dt, sym,
                                RiskPremiumSpec.zero())
            dS = s_new - S
            pnl = -S * (sig * dw + lam * g * dt)
            assert sp.expand(-dS - xi_val * g * S - pnl) == 0
        if measure == "Q":
            # under Q the same cancellation holds with the carry replaced by r
            for xi_val in (0, 1):
                s_new, _ = _advance("Q", 0, S, x, lam, dw, dz, xi_val, dt, sym,
                                    RiskPremiumSpec.zero())
                assert sp.expand(-(s_new - S) - xi_val * g * S + S * (sig * dw + r * dt)) == 0
