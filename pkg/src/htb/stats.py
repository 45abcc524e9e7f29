"""Sample mean / standard-error summaries used by every Monte Carlo check."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

Z_THRESHOLD = 3.0


@dataclass(frozen=True)
class McSummary:
    estimate: float
    std_error: float
    z_score: float
    n: int

    @property
    def passed(self) -> bool:
        return abs(self.z_score) <= Z_THRESHOLD


def summarize(values, target: float = 0.0) -> McSummary:
    """Mean, standard error and ``(mean - target) / SE`` of i.i.d. samples.

    Sums go through ``np.sum`` (pairwise), so the result depends only on the
    order of ``values``, never on how they were produced.
    """
    v = np.asarray(values, dtype=float).ravel()
    n = v.size
    if n < 2:
        raise InvalidInputError(f"need at least 2 samples, got {n}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("samples contain non-finite values")
    mean = float(np.sum(v) / n)
    var = float(np.sum((v - mean) ** 2) / (n - 1))
    se = math.sqrt(var / n)
    diff = mean - target
    if se > 0:
        z = diff / se
    else:
        z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return McSummary(mean, se, z, n)


def difference_z(est_a: float, se_a: float, est_b: float, se_b: float) -> tuple[float, float]:
    """Combined SE and z-score of ``est_a - est_b`` for independent estimators."""
    se = math.hypot(se_a, se_b)
    diff = est_a - est_b
    if se > 0:
        return se, diff / se
    return se, 0.0 if diff == 0 else math.copysign(math.inf, diff)
