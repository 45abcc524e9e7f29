"""Euler discretisation of the coupled price / log-intensity system.

Under the physical measure ``P`` one step is

    ret = sigma*dW + gamma*lambda*dt - gamma*xi
    S'  = S * (1 + ret)
    x'  = x + kappa*dZ + alpha*(x_bar - x)*dt + beta*ret

and under the risk-neutral measure ``Q`` the carry ``gamma*lambda*dt`` is
replaced by ``r*dt`` while the log-intensity picks up the extra drift
``-alpha*z(t, x, S)*dt``.  The jump flag ``xi`` is Bernoulli with
probability ``lambda*dt`` (frozen at the left endpoint) under both measures.

The jump enters the level update additively, so ``E[S'/S - 1 | S]`` is
exactly the compensated drift and ``-dS - xi*gamma*S`` reproduces the
short-seller PNL for either value of ``xi``.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterator, Literal, Sequence

import numpy as np

from .correlation import DriverIncrement, check_rho, make_correlated
from .errors import InvalidInputError, SimulationDivergedError
from .model import HtbParams, MarketState, RiskPremiumSpec, _intensity
from .rng import PathStreams, check_seed

Measure = Literal["P", "Q"]

JUMP_FIDELITY = 0.1
DEFAULT_BLOCK = 2048
WORKERS_ENV = "HTB_WORKERS"


def _check_measure(measure: str) -> str:
    if measure not in ("P", "Q"):
        raise InvalidInputError(f"measure={measure!r} violates one of P|Q")
    return measure


@dataclass(frozen=True)
class PathGrid:
    horizon: float
    n_steps: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise InvalidInputError(f"horizon={self.horizon!r} violates horizon > 0")
        if isinstance(self.n_steps, bool) or not isinstance(self.n_steps, (int, np.integer)) \
                or self.n_steps < 1:
            raise InvalidInputError(f"n_steps={self.n_steps!r} violates integer >= 1")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def check_jump_fidelity(self, lambda_max: float) -> None:
        """Reject grids on which a capped intensity could jump with probability > 0.1."""
        p = lambda_max * self.dt
        if p > JUMP_FIDELITY:
            raise InvalidInputError(
                f"lambda_max*dt={p:g} violates jump-fidelity bound lambda_max*dt <= {JUMP_FIDELITY}")


def jump_indicator(lam, dt, u):
    """Buy-in flag: 1 iff ``u < lambda*dt``."""
    xi = np.asarray(u) < np.asarray(lam) * dt
    return xi if xi.ndim else int(xi)


def _advance(measure, t, s, x, lam, dw, dz, xi, dt, params: HtbParams, spec: RiskPremiumSpec):
    drift = params.gamma * lam * dt if measure == "P" else params.r * dt
    ret = params.sigma * dw + drift - params.gamma * xi
    s_new = s * (1.0 + ret)
    x_new = x + params.kappa * dz + params.alpha * (params.x_bar - x) * dt + params.beta * ret
    if measure == "Q" and spec.variant != "zero":
        x_new = x_new - params.alpha * spec(t, x, s) * dt
    return s_new, x_new


def _step(measure, state: MarketState, inc: DriverIncrement, xi: int, dt: float,
          params: HtbParams, spec: RiskPremiumSpec, step: int) -> MarketState:
    if not dt > 0:
        raise InvalidInputError(f"dt={dt!r} violates dt > 0")
    s, x = _advance(measure, state.t, state.s, state.x, state.lam, inc.dw, inc.dz,
                    int(xi), dt, params, spec)
    if not (math.isfinite(s) and math.isfinite(x) and s > 0):
        raise SimulationDivergedError(f"non-finite or non-positive state S={s!r}, x={x!r}", step)
    return MarketState(state.t + dt, s, x, _intensity(x, params))


def step_p(state: MarketState, inc: DriverIncrement, xi: int, params: HtbParams,
           spec: RiskPremiumSpec, dt: float, step: int = 0) -> MarketState:
    """One Euler step of the physical dynamics."""
    return _step("P", state, inc, xi, dt, params, spec, step)


def step_q(state: MarketState, inc: DriverIncrement, xi: int, params: HtbParams,
           spec: RiskPremiumSpec, dt: float, step: int = 0) -> MarketState:
    """One Euler step of the risk-neutral dynamics."""
    return _step("Q", state, inc, xi, dt, params, spec, step)


@dataclass
class Path:
    grid: PathGrid
    measure: Measure
    index: int
    s: np.ndarray
    x: np.ndarray
    lam: np.ndarray
    db1: np.ndarray
    db2: np.ndarray
    jumps: np.ndarray

    @property
    def states(self) -> list[MarketState]:
        times = self.grid.times
        return [MarketState(float(t), float(s), float(x), float(l))
                for t, s, x, l in zip(times, self.s, self.x, self.lam)]

    @property
    def n_jumps(self) -> int:
        return int(np.sum(self.jumps))


@dataclass
class Ensemble:
    """Struct-of-arrays ensemble: rows are paths, columns are grid points/steps.

    ``s`` and ``x`` have ``n_steps + 1`` columns; ``db1``, ``db2`` and
    ``jumps`` have one column per step.  Row ``k`` is path
    ``first_index + k``.
    """

    measure: Measure
    params: HtbParams
    spec: RiskPremiumSpec
    grid: PathGrid
    master_seed: int
    s: np.ndarray
    x: np.ndarray
    db1: np.ndarray
    db2: np.ndarray
    jumps: np.ndarray
    first_index: int = 0
    _extra: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return self.s.shape[0]

    @property
    def n_paths(self) -> int:
        return len(self)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.first_index, self.first_index + len(self))

    @cached_property
    def lam(self) -> np.ndarray:
        return _intensity(self.x, self.params)

    @cached_property
    def dz(self) -> np.ndarray:
        return make_correlated(self.db1, self.db2, self.params.rho)[1]

    def path(self, row: int) -> Path:
        return Path(self.grid, self.measure, self.first_index + row, self.s[row], self.x[row],
                    self.lam[row], self.db1[row], self.db2[row], self.jumps[row])

    def __iter__(self) -> Iterator[Path]:
        return (self.path(k) for k in range(len(self)))

    @classmethod
    def concat(cls, blocks: Sequence["Ensemble"]) -> "Ensemble":
        if not blocks:
            raise InvalidInputError("cannot concatenate an empty list of blocks")
        head = blocks[0]
        expect = head.first_index
        for b in blocks:
            if b.first_index != expect:
                raise InvalidInputError("blocks are not contiguous in path index")
            expect += len(b)
        return cls(head.measure, head.params, head.spec, head.grid, head.master_seed,
                   np.concatenate([b.s for b in blocks]),
                   np.concatenate([b.x for b in blocks]),
                   np.concatenate([b.db1 for b in blocks]),
                   np.concatenate([b.db2 for b in blocks]),
                   np.concatenate([b.jumps for b in blocks]),
                   head.first_index)


def simulate_block(measure: Measure, params: HtbParams, spec: RiskPremiumSpec, grid: PathGrid,
                   master_seed: int, start: int, stop: int) -> Ensemble:
    """Simulate paths ``start .. stop-1`` of a run."""
    _check_measure(measure)
    check_rho(params.rho)
    n, n_steps, dt = stop - start, grid.n_steps, grid.dt
    if n < 1:
        raise InvalidInputError(f"empty path range [{start}, {stop})")
    streams = PathStreams(master_seed)
    db = np.empty((n, 2, n_steps))
    u = np.empty((n, n_steps))
    for j in range(n):
        g = streams.reset(start + j)
        g.standard_normal(out=db[j])
        g.random(out=u[j])
    db *= math.sqrt(dt)
    db1 = np.ascontiguousarray(db[:, 0, :])
    db2 = np.ascontiguousarray(db[:, 1, :])
    del db
    _, dz = make_correlated(db1, db2, params.rho)

    s = np.empty((n, n_steps + 1))
    x = np.empty((n, n_steps + 1))
    jumps = np.empty((n, n_steps), dtype=bool)
    s[:, 0] = params.s0
    x[:, 0] = params.x0
    s_k = s[:, 0].copy()
    x_k = x[:, 0].copy()
    lam_k = np.full(n, params.lambda_initial)
    for k in range(n_steps):
        p = lam_k * dt
        if p.max() > JUMP_FIDELITY:
            j = int(np.argmax(p))
            raise SimulationDivergedError(
                f"jump probability lambda*dt={p[j]:g} exceeds fidelity bound {JUMP_FIDELITY}",
                k, start + j)
        xi = u[:, k] < p
        s_k, x_k = _advance(measure, k * dt, s_k, x_k, lam_k, db1[:, k], dz[:, k], xi, dt,
                            params, spec)
        bad = ~(np.isfinite(s_k) & np.isfinite(x_k) & (s_k > 0))
        if bad.any():
            j = int(np.argmax(bad))
            raise SimulationDivergedError(
                f"non-finite or non-positive state S={s_k[j]!r}, x={x_k[j]!r}", k, start + j)
        lam_k = _intensity(x_k, params)
        s[:, k + 1] = s_k
        x[:, k + 1] = x_k
        jumps[:, k] = xi
    ens = Ensemble(measure, params, spec, grid, check_seed(master_seed), s, x, db1, db2, jumps,
                   start)
    ens.__dict__["dz"] = dz
    return ens


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        workers = int(raw)
    except ValueError:
        raise InvalidInputError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
    if workers < 1:
        raise InvalidInputError(f"{WORKERS_ENV}={raw!r} violates workers >= 1")
    return workers


def iter_ensemble(measure: Measure, params: HtbParams, spec: RiskPremiumSpec, grid: PathGrid,
                  n_paths: int, master_seed: int, block_size: int = DEFAULT_BLOCK,
                  workers: int | None = None) -> Iterator[Ensemble]:
    """Yield the ensemble as contiguous blocks, in path order.

    Blocks are simulated by up to ``workers`` threads at a time; since every
    path owns its random stream the output does not depend on ``workers`` or
    ``block_size``.
    """
    _check_measure(measure)
    if isinstance(n_paths, bool) or not isinstance(n_paths, (int, np.integer)) or n_paths < 1:
        raise InvalidInputError(f"n_paths={n_paths!r} violates n_paths >= 1")
    check_seed(master_seed)
    workers = default_workers() if workers is None else workers
    if workers < 1:
        raise InvalidInputError(f"workers={workers!r} violates workers >= 1")
    bounds = [(a, min(a + block_size, n_paths)) for a in range(0, n_paths, block_size)]

    def run(b):
        return simulate_block(measure, params, spec, grid, master_seed, *b)

    if workers == 1:
        for b in bounds:
            yield run(b)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for w in range(0, len(bounds), workers):
            yield from pool.map(run, bounds[w:w + workers])


def simulate_ensemble(measure: Measure, params: HtbParams, spec: RiskPremiumSpec,
                      grid: PathGrid, n_paths: int, master_seed: int,
                      workers: int | None = None) -> Ensemble:
    """Simulate ``n_paths`` paths under ``measure``; path ``i`` depends only on ``(seed, i)``."""
    return Ensemble.concat(list(iter_ensemble(measure, params, spec, grid, n_paths, master_seed,
                                              workers=workers)))


def expected_one_step_return(state: MarketState, params: HtbParams, spec: RiskPremiumSpec,
                             dt: float, measure: Measure = "P", order: int = 8) -> float:
    """``E[S'/S - 1]`` of one engine step, computed without sampling.

    The jump flag is enumerated with probabilities ``1 - lambda*dt`` and
    ``lambda*dt``; the Gaussian drivers are integrated out with a
    Gauss-Hermite product rule, which is exact for the polynomial step.
    """
    _check_measure(measure)
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    weights = weights / weights.sum()
    p = state.lam * dt
    step = step_p if measure == "P" else step_q
    total = 0.0
    for xi, pxi in ((0, 1.0 - p), (1, p)):
        if pxi == 0:
            continue
        acc = 0.0
        for n1, w1 in zip(nodes, weights):
            for n2, w2 in zip(nodes, weights):
                inc = DriverIncrement.from_independent(n1 * math.sqrt(dt), n2 * math.sqrt(dt),
                                                       params.rho)
                nxt = step(state, inc, xi, params, spec, dt)
                acc += w1 * w2 * (nxt.s / state.s - 1.0)
        total += pxi * acc
    return total


PATH_COLUMNS = ("path", "t", "S", "x", "lambda", "db1", "db2", "jump", "measure")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_paths_csv(ensembles: Ensemble | Sequence[Ensemble], fh: IO[str],
                    header: bool = True) -> None:
    """One row per grid point; increments and jump flag are those of the step ending there."""
    if isinstance(ensembles, Ensemble):
        ensembles = [ensembles]
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(PATH_COLUMNS)
    for ens in ensembles:
        times = [_fmt(t) for t in ens.grid.times]
        lam = ens.lam
        for row in range(len(ens)):
            idx = ens.first_index + row
            w.writerow((idx, times[0], _fmt(ens.s[row, 0]), _fmt(ens.x[row, 0]),
                        _fmt(lam[row, 0]), "", "", "", ens.measure))
            for k in range(ens.grid.n_steps):
                w.writerow((idx, times[k + 1], _fmt(ens.s[row, k + 1]), _fmt(ens.x[row, k + 1]),
                            _fmt(lam[row, k + 1]), _fmt(ens.db1[row, k]), _fmt(ens.db2[row, k]),
                            int(ens.jumps[row, k]), ens.measure))
