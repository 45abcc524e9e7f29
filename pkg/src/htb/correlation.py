"""Correlated Brownian drivers built from two independent ones.

``W = B1`` and ``Z = rho*B1 + sqrt(1 - rho^2)*B2`` give ``dZ dZ = dt`` and
``dW dZ = rho dt``.  ``estimate_covariation`` checks both statistically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .model import RHO_LIMIT


def check_rho(rho: float) -> float:
    if not (math.isfinite(rho) and abs(rho) <= RHO_LIMIT):
        raise InvalidInputError(f"rho={rho!r} violates |rho| <= {RHO_LIMIT!r}")
    return float(rho)


@dataclass(frozen=True)
class DriverIncrement:
    db1: float
    db2: float
    dw: float
    dz: float

    @classmethod
    def from_independent(cls, db1: float, db2: float, rho: float) -> "DriverIncrement":
        dw, dz = make_correlated(db1, db2, rho)
        return cls(db1, db2, dw, dz)


def make_correlated(db1, db2, rho: float):
    """Map independent increments ``(db1, db2)`` to ``(dw, dz)``."""
    rho = check_rho(rho)
    return db1, rho * db1 + math.sqrt(1.0 - rho * rho) * db2


def recover_independent(dw, dz, rho: float):
    """Inverse of :func:`make_correlated` for the second driver."""
    rho = check_rho(rho)
    return (dz - rho * dw) / math.sqrt(1.0 - rho * rho)


@dataclass(frozen=True)
class CovariationEstimate:
    horizon: float
    rho: float
    n: int
    cov: float
    cov_se: float
    var_w: float
    var_w_se: float
    var_z: float
    var_z_se: float

    @property
    def cov_z(self) -> float:
        return _z(self.cov, self.rho * self.horizon, self.cov_se)

    @property
    def var_w_z(self) -> float:
        return _z(self.var_w, self.horizon, self.var_w_se)

    @property
    def var_z_z(self) -> float:
        return _z(self.var_z, self.horizon, self.var_z_se)


def _z(est: float, target: float, se: float) -> float:
    if se > 0:
        return (est - target) / se
    return 0.0 if est == target else math.copysign(math.inf, est - target)


def _moment_and_se(prod: np.ndarray) -> tuple[float, float]:
    n = prod.size
    mean = float(np.sum(prod) / n)
    se = math.sqrt(float(np.sum((prod - mean) ** 2)) / (n - 1) / n)
    return mean, se


def estimate_covariation(w_terminal, z_terminal, rho: float, horizon: float) -> CovariationEstimate:
    """Sample covariance/variances of terminal ``(W_t, Z_t)`` with standard errors.

    The standard errors are those of the centred cross/square products, which
    is the usual delta-method SE of a sample covariance for large ``n``.
    Under a correct construction ``cov -> rho*t`` and both variances ``-> t``.
    """
    w = np.asarray(w_terminal, dtype=float).ravel()
    z = np.asarray(z_terminal, dtype=float).ravel()
    if w.size == 0 or w.size != z.size:
        raise InvalidInputError(f"need equally sized non-empty samples, got {w.size} and {z.size}")
    if w.size < 100:
        raise InvalidInputError(f"ensemble size {w.size} violates n >= 100")
    check_rho(rho)
    wc = w - np.sum(w) / w.size
    zc = z - np.sum(z) / z.size
    cov, cov_se = _moment_and_se(wc * zc)
    var_w, var_w_se = _moment_and_se(wc * wc)
    var_z, var_z_se = _moment_and_se(zc * zc)
    # Bessel correction on the point estimates only
    k = w.size / (w.size - 1)
    return CovariationEstimate(horizon, rho, w.size, cov * k, cov_se, var_w * k, var_w_se,
                               var_z * k, var_z_se)
