"""European option pricing and the cost-of-carry martingale check.

Two Monte Carlo estimators of the same risk-neutral price are provided:
direct simulation of the Q-dynamics, and P-simulation reweighted by a
Radon-Nikodym density.  With the corrected density both target the same
number; ``black_scholes_reference`` covers the no-jump limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InvalidInputError
from .girsanov import Variant, simulate_densities
from .model import HtbParams, RiskPremiumSpec
from .simulator import Ensemble, PathGrid, iter_ensemble
from .stats import McSummary, summarize

OptionKind = Literal["call", "put"]
Method = Literal["direct_q", "reweighted_p", "closed_form"]


@dataclass(frozen=True)
class OptionSpec:
    kind: OptionKind
    strike: float
    maturity: float

    def __post_init__(self) -> None:
        if self.kind not in ("call", "put"):
            raise InvalidInputError(f"kind={self.kind!r} violates one of call|put")
        if not (math.isfinite(self.strike) and self.strike > 0):
            raise InvalidInputError(f"strike={self.strike!r} violates strike > 0")
        if not (math.isfinite(self.maturity) and self.maturity > 0):
            raise InvalidInputError(f"maturity={self.maturity!r} violates maturity > 0")

    def check_grid(self, grid: PathGrid) -> None:
        if not math.isclose(self.maturity, grid.horizon, rel_tol=1e-12, abs_tol=0.0):
            raise InvalidInputError(
                f"maturity={self.maturity!r} must equal the grid horizon {grid.horizon!r}")


@dataclass(frozen=True)
class PriceEstimate:
    value: float
    std_error: float
    n_paths: int
    method: Method


def payoff_european(spec: OptionSpec, s_terminal):
    """``max(S_T - K, 0)`` for calls, ``max(K - S_T, 0)`` for puts."""
    if spec.kind == "call":
        out = np.maximum(np.asarray(s_terminal, dtype=float) - spec.strike, 0.0)
    else:
        out = np.maximum(spec.strike - np.asarray(s_terminal, dtype=float), 0.0)
    return out if out.ndim else float(out)


def _discounted(summary: McSummary, params: HtbParams, maturity: float, method: Method,
                ) -> PriceEstimate:
    disc = math.exp(-params.r * maturity)
    return PriceEstimate(disc * summary.estimate, disc * summary.std_error, summary.n, method)


def price_direct_q(spec: OptionSpec, params: HtbParams, riskspec: RiskPremiumSpec,
                   grid: PathGrid, n_paths: int, seed: int,
                   workers: int | None = None) -> PriceEstimate:
    """Discounted mean payoff over a Q-ensemble."""
    spec.check_grid(grid)
    payoffs = [payoff_european(spec, b.s[:, -1])
               for b in iter_ensemble("Q", params, riskspec, grid, n_paths, seed, workers=workers)]
    return _discounted(summarize(np.concatenate(payoffs)), params, spec.maturity, "direct_q")


def price_reweighted_p(spec: OptionSpec, params: HtbParams, riskspec: RiskPremiumSpec,
                       grid: PathGrid, n_paths: int, seed: int, variant: Variant = "corrected",
                       workers: int | None = None) -> PriceEstimate:
    """Discounted ``E_P[M_T * payoff]`` with ``M_T`` from the chosen density variant."""
    spec.check_grid(grid)
    run = simulate_densities(params, riskspec, grid, n_paths, seed, (variant,),
                             functional=lambda b: payoff_european(spec, b.s[:, -1]),
                             workers=workers)
    return reweighted_price(run.log_m[variant], run.values, params, spec.maturity)


def _norm_cdf(v: float) -> float:
    return 0.5 * math.erfc(-v / math.sqrt(2.0))


def black_scholes_reference(s0: float, strike: float, r: float, sigma: float, maturity: float,
                            kind: OptionKind = "call") -> PriceEstimate:
    """Black-Scholes price of a European option (no buy-ins)."""
    for name, v in (("s0", s0), ("strike", strike), ("sigma", sigma), ("maturity", maturity)):
        if not (math.isfinite(v) and v > 0):
            raise InvalidInputError(f"{name}={v!r} violates {name} > 0")
    if not math.isfinite(r):
        raise InvalidInputError(f"r={r!r} must be finite")
    vol = sigma * math.sqrt(maturity)
    d1 = (math.log(s0 / strike) + (r + 0.5 * sigma * sigma) * maturity) / vol
    d2 = d1 - vol
    df = math.exp(-r * maturity)
    if kind == "call":
        value = s0 * _norm_cdf(d1) - strike * df * _norm_cdf(d2)
    elif kind == "put":
        value = strike * df * _norm_cdf(-d2) - s0 * _norm_cdf(-d1)
    else:
        raise InvalidInputError(f"kind={kind!r} violates one of call|put")
    return PriceEstimate(value, 0.0, 0, "closed_form")


def _require_q(ensemble: Ensemble) -> None:
    if ensemble.measure != "Q":
        raise InvalidInputError(
            f"carry check needs a Q-ensemble, got measure {ensemble.measure!r}")


def carry_values(ensemble_q: Ensemble) -> np.ndarray:
    """Per-path ``e^{-rT} S_T + sum_k gamma*lambda_k*e^{-r t_k}*S_k*dt``.

    Under Q the deflated price plus the accumulated buy-in carry has
    expectation ``s0``.
    """
    _require_q(ensemble_q)
    p, grid = ensemble_q.params, ensemble_q.grid
    disc = np.exp(-p.r * grid.times)
    deflated = ensemble_q.s * disc
    carry = p.gamma * grid.dt * np.sum(ensemble_q.lam[:, :-1] * deflated[:, :-1], axis=1)
    return deflated[:, -1] + carry


def carry_martingale_check(ensemble_q: Ensemble, params: HtbParams | None = None) -> McSummary:
    """Sample mean of :func:`carry_values` with SE and z-score against ``s0``."""
    params = ensemble_q.params if params is None else params
    if params != ensemble_q.params:
        raise InvalidInputError("params differ from those that produced the ensemble")
    return summarize(carry_values(ensemble_q), target=params.s0)


def carry_drift_values(ensemble_q: Ensemble) -> np.ndarray:
    """Per-path sum of the exact one-step conditional drifts of the carry value.

    For each step ``E[C_{k+1} - C_k | F_k] = D_k*(e^{-r dt}*(1 + r dt - gamma*lambda_k*dt)
    + gamma*lambda_k*dt - 1)`` with ``D_k = e^{-r t_k} S_k``; summing these
    over a path gives a quantity with the same expectation as
    ``carry_values - s0`` but almost no sampling noise.  Its mean isolates
    the time-discretisation bias of the carry check.
    """
    _require_q(ensemble_q)
    p, grid = ensemble_q.params, ensemble_q.grid
    dt = grid.dt
    deflated = (ensemble_q.s * np.exp(-p.r * grid.times))[:, :-1]
    carry = p.gamma * ensemble_q.lam[:, :-1] * dt
    drift = math.exp(-p.r * dt) * (1.0 + p.r * dt - carry) + carry - 1.0
    return np.sum(deflated * drift, axis=1)


def reweighted_price(log_m, payoffs, params: HtbParams, maturity: float) -> PriceEstimate:
    """Discounted importance-sampling price from per-path log-densities and payoffs."""
    weighted = np.exp(np.asarray(log_m, dtype=float)) * np.asarray(payoffs, dtype=float)
    return _discounted(summarize(weighted), params, maturity, "reweighted_p")
