"""Statistical verification workloads behind the ``verify-*`` commands.

Every check yields a :class:`VerificationReport` whose pass flag is exactly
``|z| <= 3``.  Checks marked ``asserted=False`` are measurements (for example
the bias of the single-driver density) and never fail a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .correlation import estimate_covariation, make_correlated
from .girsanov import VARIANTS, DensityRun, simulate_densities
from .model import HtbParams, RiskPremiumSpec
from .pricing import (OptionSpec, PriceEstimate, carry_drift_values, carry_values,
                      payoff_european, price_direct_q, reweighted_price)
from .rng import PathStreams, check_seed
from .simulator import PathGrid, iter_ensemble
from .stats import Z_THRESHOLD, McSummary, difference_z, summarize

FAMILY_WISE_CAVEAT = (
    f"each check passes at |z| <= {Z_THRESHOLD:g} (about 99.7% coverage); "
    "running several checks inflates the family-wise false-alarm rate")


@dataclass(frozen=True)
class VerificationReport:
    check: str
    estimate: float
    std_error: float
    z_score: float
    target: float
    asserted: bool = True
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return abs(self.z_score) <= Z_THRESHOLD

    @classmethod
    def from_summary(cls, check: str, summary: McSummary, target: float, asserted: bool = True,
                     **metadata) -> "VerificationReport":
        return cls(check, summary.estimate, summary.std_error, summary.z_score, target, asserted,
                   metadata)


def derived_seed(master_seed: int, offset: int) -> int:
    """Independent companion seed, e.g. for the second estimator of a pair."""
    return (check_seed(master_seed) + offset) % (1 << 64)


def terminal_drivers(rho: float, grid: PathGrid, n_paths: int, master_seed: int,
                     ) -> tuple[np.ndarray, np.ndarray]:
    """``(W_T, Z_T)`` per path, from the same per-path streams the simulator uses."""
    streams = PathStreams(master_seed)
    b = np.empty((n_paths, 2))
    draws = np.empty((2, grid.n_steps))
    for i in range(n_paths):
        streams.reset(i).standard_normal(out=draws)
        b[i] = draws.sum(axis=1)
    b *= math.sqrt(grid.dt)
    return make_correlated(b[:, 0], b[:, 1], rho)


def verify_correlation(params: HtbParams, grid: PathGrid, n_paths: int,
                       master_seed: int) -> list[VerificationReport]:
    w, z = terminal_drivers(params.rho, grid, n_paths, master_seed)
    est = estimate_covariation(w, z, params.rho, grid.horizon)
    meta = {"n_paths": n_paths, "seed": master_seed}
    t = grid.horizon
    return [
        VerificationReport("covariation_wz", est.cov, est.cov_se, est.cov_z, params.rho * t,
                           metadata=meta),
        VerificationReport("variance_w", est.var_w, est.var_w_se, est.var_w_z, t, metadata=meta),
        VerificationReport("variance_z", est.var_z, est.var_z_se, est.var_z_z, t, metadata=meta),
    ]


@dataclass
class MeasureVerification:
    reports: list[VerificationReport]
    prices: dict[str, PriceEstimate]
    densities: DensityRun


def verify_measure(params: HtbParams, spec: RiskPremiumSpec, grid: PathGrid, option: OptionSpec,
                   n_paths: int, master_seed: int, workers: int | None = None,
                   ) -> MeasureVerification:
    """Unit expectation of each density variant and P-vs-Q price consistency.

    The P-ensemble uses ``master_seed`` and the Q-ensemble an independent
    derived seed, so the two price estimators are independent.
    """
    option.check_grid(grid)
    seed_q = derived_seed(master_seed, 1)
    run = simulate_densities(params, spec, grid, n_paths, master_seed, VARIANTS,
                             functional=lambda b: payoff_european(option, b.s[:, -1]),
                             workers=workers)
    direct = price_direct_q(option, params, spec, grid, n_paths, seed_q, workers=workers)
    meta = {"n_paths": n_paths, "seed": master_seed}
    reports = []
    prices = {"direct_q": direct}
    for variant in VARIANTS:
        reports.append(VerificationReport.from_summary(
            f"unit_expectation[{variant}]", summarize(np.exp(run.log_m[variant]), 1.0), 1.0,
            asserted=variant == "corrected", **meta))
    for variant in VARIANTS:
        rw = reweighted_price(run.log_m[variant], run.values, params, option.maturity)
        prices[f"reweighted_p[{variant}]"] = rw
        se, z = difference_z(rw.value, rw.std_error, direct.value, direct.std_error)
        reports.append(VerificationReport(f"price_consistency[{variant}]", rw.value - direct.value,
                                          se, z, 0.0, asserted=variant == "corrected",
                                          metadata=meta))
    return MeasureVerification(reports, prices, run)


def carry_check_streamed(params: HtbParams, spec: RiskPremiumSpec, grid: PathGrid, n_paths: int,
                         master_seed: int, workers: int | None = None,
                         ) -> tuple[McSummary, McSummary]:
    """Carry martingale summary and the discretisation drift summary, block by block."""
    vals, drift = [], []
    for block in iter_ensemble("Q", params, spec, grid, n_paths, master_seed, workers=workers):
        vals.append(carry_values(block))
        drift.append(carry_drift_values(block))
    return (summarize(np.concatenate(vals), target=params.s0),
            summarize(np.concatenate(drift), target=0.0))


@dataclass(frozen=True)
class CarryRefinement:
    coarse: McSummary
    fine: McSummary
    coarse_drift: McSummary
    fine_drift: McSummary

    @property
    def improves(self) -> bool:
        """Halving dt moved the expected carry value closer to ``s0``."""
        return abs(self.fine_drift.estimate) < abs(self.coarse_drift.estimate)


def carry_refinement(params: HtbParams, spec: RiskPremiumSpec, grid: PathGrid, n_paths: int,
                     master_seed: int, workers: int | None = None) -> CarryRefinement:
    """Carry check on ``grid`` and on the grid with half the step."""
    fine_grid = PathGrid(grid.horizon, 2 * grid.n_steps)
    coarse, coarse_drift = carry_check_streamed(params, spec, grid, n_paths, master_seed, workers)
    fine, fine_drift = carry_check_streamed(params, spec, fine_grid, n_paths, master_seed, workers)
    return CarryRefinement(coarse, fine, coarse_drift, fine_drift)
