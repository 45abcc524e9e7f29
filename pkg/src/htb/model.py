"""Model constants, market state and the risk-price functions of the HTB model.

The price ``S`` and the log buy-in intensity ``x = ln(lambda / lambda0)``
follow two coupled SDEs driven by correlated Brownian motions ``W`` and ``Z``
and a Poisson buy-in counter ``N`` with intensity ``lambda``.  Time is in
years and all rates are annualised.

Every function here accepts scalars or numpy arrays (elementwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InvalidInputError

RHO_LIMIT = 1.0 - 1e-6


def _require(cond: bool, name: str, constraint: str, value) -> None:
    if not cond:
        raise InvalidInputError(f"{name}={value!r} violates {constraint}")


@dataclass(frozen=True)
class HtbParams:
    sigma: float = 0.3
    kappa: float = 0.5
    rho: float = 0.0
    gamma: float = 0.05
    alpha: float = 1.0
    x_bar: float = 0.0
    beta: float = 0.5
    r: float = 0.01
    lambda0: float = 2.0
    s0: float = 100.0
    x0: float = 0.0
    lambda_max: float = 50.0

    def __post_init__(self) -> None:
        for name in ("sigma", "kappa", "rho", "gamma", "alpha", "x_bar", "beta",
                     "r", "lambda0", "s0", "x0", "lambda_max"):
            value = getattr(self, name)
            _require(isinstance(value, (int, float)) and math.isfinite(value),
                     name, "finite real", value)
        # zero volatilities are legal for simulation; risk prices reject them
        _require(self.sigma >= 0, "sigma", "sigma >= 0", self.sigma)
        _require(self.kappa >= 0, "kappa", "kappa >= 0", self.kappa)
        _require(self.lambda0 > 0, "lambda0", "lambda0 > 0", self.lambda0)
        _require(self.s0 > 0, "s0", "s0 > 0", self.s0)
        _require(abs(self.rho) <= RHO_LIMIT, "rho", f"|rho| <= {RHO_LIMIT!r}", self.rho)
        _require(0 <= self.gamma < 1, "gamma", "0 <= gamma < 1", self.gamma)
        _require(self.alpha >= 0, "alpha", "alpha >= 0", self.alpha)
        _require(self.lambda_max >= self.lambda0 * math.exp(self.x0), "lambda_max",
                 "lambda_max >= lambda0*exp(x0)", self.lambda_max)

    @property
    def lambda_initial(self) -> float:
        return intensity_from_log(self.x0, self)


@dataclass(frozen=True)
class MarketState:
    """Instantaneous ``(t, S, x, lambda)``."""

    t: float
    s: float
    x: float
    lam: float

    @classmethod
    def initial(cls, params: HtbParams) -> "MarketState":
        return cls(0.0, params.s0, params.x0, params.lambda_initial)


PremiumVariant = Literal["zero", "constant", "affine_in_x"]


@dataclass(frozen=True)
class RiskPremiumSpec:
    """Market price of buy-in risk ``z(t, x, S)``.

    ``zero`` gives 0, ``constant`` gives ``c`` and ``affine_in_x`` gives
    ``a + b*x``.  Since ``x`` itself is unbounded, the affine variant stays
    bounded only through the intensity cap acting on typical paths; use
    ``constant`` where strict boundedness matters.
    """

    variant: PremiumVariant = "zero"
    c: float = 0.0
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self) -> None:
        if self.variant not in ("zero", "constant", "affine_in_x"):
            raise InvalidInputError(
                f"variant={self.variant!r} violates one of zero|constant|affine_in_x")
        for name in ("c", "a", "b"):
            value = getattr(self, name)
            _require(math.isfinite(value), name, "finite real", value)

    @classmethod
    def zero(cls) -> "RiskPremiumSpec":
        return cls("zero")

    @classmethod
    def constant(cls, c: float) -> "RiskPremiumSpec":
        return cls("constant", c=float(c))

    @classmethod
    def affine_in_x(cls, a: float, b: float) -> "RiskPremiumSpec":
        return cls("affine_in_x", a=float(a), b=float(b))

    def __call__(self, t, x, s):
        x = np.asarray(x, dtype=float)
        if self.variant == "zero":
            out = np.zeros_like(x)
        elif self.variant == "constant":
            out = np.full_like(x, self.c)
        else:
            out = self.a + self.b * x
        return out if out.ndim else float(out)


def _intensity(x, params: HtbParams):
    # overflow in exp is clipped by the cap anyway
    with np.errstate(over="ignore"):
        lam = np.minimum(params.lambda0 * np.exp(x), params.lambda_max)
    return lam if np.ndim(lam) else float(lam)


def intensity_from_log(x, params: HtbParams):
    """Buy-in intensity ``min(lambda0 * e^x, lambda_max)``."""
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"log-intensity must be finite, got {x!r}")
    return _intensity(x, params)


def gamma_price_of_risk(lam, params: HtbParams):
    """Market price of price risk ``(gamma*lambda - r) / sigma``."""
    _require(params.sigma > 0, "sigma", "sigma > 0 for a price of risk", params.sigma)
    return (params.gamma * lam - params.r) / params.sigma


def theta_price_of_risk(t, x, s, spec: RiskPremiumSpec, params: HtbParams):
    """Market price of buy-in risk ``alpha * z(t, x, S) / kappa``."""
    if params.kappa == 0 and (spec.variant == "zero" or params.alpha == 0):
        # numerator vanishes identically; frozen-intensity configurations
        return params.alpha * 0.0 * spec(t, x, s)
    _require(params.kappa > 0, "kappa", "kappa > 0 for a price of risk", params.kappa)
    return params.alpha * spec(t, x, s) / params.kappa


def pnl_increment(s, dw, dt, lam, params: HtbParams):
    """Short-seller's profit or loss over one interval, net of buy-in losses.

    Equals ``-dS - xi*gamma*S`` whatever the jump flag ``xi``, so the jump
    term cancels and only the diffusion and the carry ``lambda*gamma*dt``
    remain.
    """
    if not np.all(np.asarray(dt) > 0):
        raise InvalidInputError(f"dt={dt!r} violates dt > 0")
    return -s * (params.sigma * dw + lam * params.gamma * dt)
