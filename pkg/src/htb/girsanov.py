"""Pathwise Radon-Nikodym log-densities dQ/dP for the HTB model.

Three variants are available, all accumulated in log space with Ito
(left-endpoint) integrands ``Gamma_k``, ``Theta_k``:

``corrected``
    Two-factor Girsanov density on the independent drivers ``(B1, B2)``,
    with ``u1 = Gamma`` and ``u2 = (Theta - rho*Gamma)/sqrt(1 - rho^2)``::

        sum_k  -u1*dB1 - u2*dB2 - (u1^2 + u2^2)*dt/2

``uncorrelated``
    Both prices of risk integrated against ``dW`` alone::

        sum_k  -(Gamma + Theta)*dW - (Gamma^2 + Theta^2)*dt/2

    This density is *not* a martingale once ``Gamma*Theta != 0``; it is kept
    so that its bias can be measured.

``independent``
    Diagnostic density that treats ``W`` and ``Z`` as independent::

        sum_k  -Gamma*dW - Theta*dZ - (Gamma^2 + Theta^2)*dt/2
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Callable, Iterable, Literal, Sequence

import numpy as np

from .correlation import check_rho
from .errors import DensityOverflowError, InvalidInputError
from .model import (HtbParams, RiskPremiumSpec, _intensity, gamma_price_of_risk,
                    theta_price_of_risk)
from .simulator import Ensemble, Path, PathGrid, iter_ensemble
from .stats import McSummary, summarize

Variant = Literal["corrected", "uncorrelated", "independent"]
VARIANTS: tuple[str, ...] = ("corrected", "uncorrelated", "independent")


@dataclass(frozen=True)
class DensityRecord:
    log_m: float
    variant: Variant
    path_index: int


def solve_market_price_vector(gamma_mpr, theta_mpr, rho: float):
    """Solve ``[[1, 0], [rho, sqrt(1-rho^2)]] @ (u1, u2) = (Gamma, Theta)``."""
    rho = check_rho(rho)
    return gamma_mpr, (theta_mpr - rho * gamma_mpr) / math.sqrt(1.0 - rho * rho)


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise InvalidInputError(f"variant={variant!r} violates one of {'|'.join(VARIANTS)}")


def _log_density_rows(s, x, db1, db2, grid: PathGrid, params: HtbParams,
                      spec: RiskPremiumSpec, variant: str, first_index: int = 0) -> np.ndarray:
    _check_variant(variant)
    dt = grid.dt
    t = grid.times[:-1]
    x_left, s_left = x[:, :-1], s[:, :-1]
    lam = _intensity(x_left, params)
    g = gamma_price_of_risk(lam, params)
    th = np.broadcast_to(theta_price_of_risk(t, x_left, s_left, spec, params), g.shape)
    with np.errstate(over="ignore", invalid="ignore"):
        if variant == "corrected":
            u1, u2 = solve_market_price_vector(g, th, params.rho)
            terms = -u1 * db1 - u2 * db2 - 0.5 * (u1 * u1 + u2 * u2) * dt
        elif variant == "uncorrelated":
            terms = -(g + th) * db1 - 0.5 * (g * g + th * th) * dt
        else:
            rho = check_rho(params.rho)
            dz = rho * db1 + math.sqrt(1.0 - rho * rho) * db2
            terms = -g * db1 - th * dz - 0.5 * (g * g + th * th) * dt
        log_m = np.sum(terms, axis=1)
    bad = ~np.isfinite(log_m)
    if bad.any():
        row = int(np.argmax(bad))
        with np.errstate(over="ignore", invalid="ignore"):
            partial = np.cumsum(terms[row])
        step = int(np.argmax(~np.isfinite(partial)))
        raise DensityOverflowError(f"{variant} log-density left the finite range",
                                   step, first_index + row)
    return log_m


def _require_p(measure: str) -> None:
    if measure != "P":
        raise InvalidInputError(f"densities reweight P-paths, got measure {measure!r}")


def _path_log_density(path: Path, params: HtbParams, spec: RiskPremiumSpec, variant: str) -> float:
    _require_p(path.measure)
    return float(_log_density_rows(path.s[None, :], path.x[None, :], path.db1[None, :],
                                   path.db2[None, :], path.grid, params, spec, variant,
                                   path.index)[0])


def log_density_corrected(path: Path, params: HtbParams, spec: RiskPremiumSpec) -> float:
    """Log of the two-factor density at the horizon of ``path``."""
    return _path_log_density(path, params, spec, "corrected")


def log_density_uncorrelated(path: Path, params: HtbParams, spec: RiskPremiumSpec) -> float:
    """Log of the single-driver density (both risk prices against ``dW``)."""
    return _path_log_density(path, params, spec, "uncorrelated")


def log_density_independent(path: Path, params: HtbParams, spec: RiskPremiumSpec) -> float:
    return _path_log_density(path, params, spec, "independent")


def log_densities(ensemble: Ensemble, variant: Variant = "corrected") -> np.ndarray:
    """Vectorised log-densities, one per path of a P-ensemble."""
    _require_p(ensemble.measure)
    return _log_density_rows(ensemble.s, ensemble.x, ensemble.db1, ensemble.db2, ensemble.grid,
                             ensemble.params, ensemble.spec, variant, ensemble.first_index)


def density_records(ensemble: Ensemble, variant: Variant = "corrected") -> list[DensityRecord]:
    log_m = log_densities(ensemble, variant)
    return [DensityRecord(float(v), variant, int(i)) for v, i in zip(log_m, ensemble.indices)]


def _records_array(records: Sequence[DensityRecord], minimum: int) -> np.ndarray:
    if len(records) == 0:
        raise InvalidInputError("no density records")
    if len(records) < minimum:
        raise InvalidInputError(f"{len(records)} records violates n >= {minimum}")
    variants = {r.variant for r in records}
    if len(variants) != 1:
        raise InvalidInputError(f"records mix variants {sorted(variants)}")
    return np.fromiter((r.log_m for r in records), dtype=float, count=len(records))


def unit_expectation_check(records: Sequence[DensityRecord]) -> McSummary:
    """Mean of ``exp(log_m)``, its SE and the z-score against 1."""
    return summarize(np.exp(_records_array(records, 100)), target=1.0)


PathFunctional = Callable[[Ensemble], np.ndarray]


def reweighted_expectation(ensemble_p: Ensemble, records: Sequence[DensityRecord],
                           payoff: PathFunctional) -> McSummary:
    """Importance-sampling estimate of ``E_Q[payoff] = E_P[M_T * payoff]``.

    ``payoff`` maps an ensemble to one value per path.  The z-score in the
    result is against 0 and carries no meaning here.
    """
    _require_p(ensemble_p.measure)
    log_m = _records_array(records, 2)
    idx = np.fromiter((r.path_index for r in records), dtype=np.int64, count=len(records))
    if idx.size != len(ensemble_p) or not np.array_equal(idx, ensemble_p.indices):
        raise InvalidInputError("density records are not aligned with the ensemble paths")
    values = np.asarray(payoff(ensemble_p), dtype=float)
    if values.shape != (len(ensemble_p),):
        raise InvalidInputError(f"payoff returned shape {values.shape}, expected ({len(ensemble_p)},)")
    return summarize(np.exp(log_m) * values)


@dataclass
class DensityRun:
    """Per-path output of a streamed P-simulation."""

    indices: np.ndarray
    log_m: dict[str, np.ndarray]
    values: np.ndarray | None

    def records(self, variant: str) -> list[DensityRecord]:
        return [DensityRecord(float(v), variant, int(i))
                for v, i in zip(self.log_m[variant], self.indices)]


def simulate_densities(params: HtbParams, spec: RiskPremiumSpec, grid: PathGrid, n_paths: int,
                       master_seed: int, variants: Iterable[Variant] = ("corrected",),
                       functional: PathFunctional | None = None,
                       workers: int | None = None) -> DensityRun:
    """Simulate under P block by block, keeping only log-densities and ``functional``.

    Memory stays bounded by one wave of blocks, whatever ``n_paths`` is.
    """
    variants = tuple(variants)
    for v in variants:
        _check_variant(v)
    idx, logs, vals = [], {v: [] for v in variants}, []
    for block in iter_ensemble("P", params, spec, grid, n_paths, master_seed, workers=workers):
        idx.append(block.indices)
        for v in variants:
            logs[v].append(log_densities(block, v))
        if functional is not None:
            vals.append(np.asarray(functional(block), dtype=float))
    return DensityRun(np.concatenate(idx), {v: np.concatenate(a) for v, a in logs.items()},
                      np.concatenate(vals) if functional is not None else None)


DENSITY_COLUMNS = ("path_index", "variant", "log_m")


def write_density_csv(records: Iterable[DensityRecord], fh: IO[str], header: bool = True) -> None:
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(DENSITY_COLUMNS)
    for r in records:
        w.writerow((r.path_index, r.variant, format(r.log_m, ".17g")))
