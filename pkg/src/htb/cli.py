"""``htb <command> --config PATH [--out PATH] [--seed N] [--paths N]``.

Exit codes: 0 all asserted checks passed, 1 a check failed, 2 configuration
error, 3 engine error, 4 I/O failure.  The worker count for path simulation
is read from ``HTB_WORKERS`` (default 1); it never changes the output.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import asdict
from typing import IO, Sequence

from .config import COMMANDS, ConfigError, RunConfig, parse_config
from .errors import HtbError
from .pricing import PriceEstimate, black_scholes_reference, price_direct_q, price_reweighted_p
from .simulator import iter_ensemble, write_paths_csv
from .stats import difference_z
from .verify import (FAMILY_WISE_CAVEAT, VerificationReport, derived_seed, verify_correlation,
                     verify_measure)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3, 4

REPORT_COLUMNS = ("kind", "name", "estimate", "std_error", "z_score", "target", "asserted",
                  "pass", "n_paths", "seed")


def _g(v: float) -> str:
    return format(float(v), ".17g")


def _price_row(name: str, p: PriceEstimate, seed: int | str) -> tuple:
    return ("price", name, _g(p.value), _g(p.std_error), "", "", "", "", p.n_paths, seed)


def _check_row(r: VerificationReport) -> tuple:
    return ("check", r.check, _g(r.estimate), _g(r.std_error), _g(r.z_score), _g(r.target),
            int(r.asserted), int(r.passed), r.metadata.get("n_paths", ""),
            r.metadata.get("seed", ""))


def _write_report(path: str, rows: Sequence[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        w.writerows(rows)


def _echo(cfg: RunConfig, out: IO[str]) -> None:
    print(f"command={cfg.command} n_paths={cfg.n_paths} seed={cfg.master_seed} "
          f"horizon={cfg.grid.horizon!r} n_steps={cfg.grid.n_steps}", file=out)
    print("params " + " ".join(f"{k}={v!r}" for k, v in asdict(cfg.params).items()), file=out)
    print("risk_premium " + " ".join(f"{k}={v!r}" for k, v in asdict(cfg.riskspec).items()),
          file=out)


def _print_checks(reports: Sequence[VerificationReport], out: IO[str]) -> None:
    for r in reports:
        status = ("PASS" if r.passed else "FAIL") if r.asserted else "INFO"
        print(f"{status} {r.check}: estimate={r.estimate:.6g} se={r.std_error:.3g} "
              f"target={r.target:.6g} z={r.z_score:+.3f}", file=out)
    print(f"note: {FAMILY_WISE_CAVEAT}", file=out)


def _status(reports: Sequence[VerificationReport]) -> int:
    ok = all(r.passed for r in reports if r.asserted)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def run(cfg: RunConfig, out: IO[str] | None = None) -> int:
    """Execute one configured workload and write its artifact to ``cfg.output_path``."""
    out = sys.stdout if out is None else out
    _echo(cfg, out)
    if cfg.command == "simulate":
        with open(cfg.output_path, "w", newline="") as fh:
            first = True
            for block in iter_ensemble(cfg.measure, cfg.params, cfg.riskspec, cfg.grid,
                                       cfg.n_paths, cfg.master_seed):
                write_paths_csv(block, fh, header=first)
                first = False
        print(f"wrote {cfg.n_paths} {cfg.measure}-paths to {cfg.output_path}", file=out)
        return EXIT_OK

    if cfg.command == "verify-correlation":
        reports = verify_correlation(cfg.params, cfg.grid, cfg.n_paths, cfg.master_seed)
        _write_report(cfg.output_path, [_check_row(r) for r in reports])
        _print_checks(reports, out)
        return _status(reports)

    option = cfg.option_or_default()
    if cfg.command == "verify-measure":
        mv = verify_measure(cfg.params, cfg.riskspec, cfg.grid, option, cfg.n_paths,
                            cfg.master_seed)
        rows = [_price_row(k, p, cfg.master_seed) for k, p in mv.prices.items()]
        rows += [_check_row(r) for r in mv.reports]
        _write_report(cfg.output_path, rows)
        _print_checks(mv.reports, out)
        return _status(mv.reports)

    # price
    seed_p = derived_seed(cfg.master_seed, 1)
    direct = price_direct_q(option, cfg.params, cfg.riskspec, cfg.grid, cfg.n_paths,
                            cfg.master_seed)
    reweighted = price_reweighted_p(option, cfg.params, cfg.riskspec, cfg.grid, cfg.n_paths,
                                    seed_p)
    rows = [_price_row("direct_q", direct, cfg.master_seed),
            _price_row("reweighted_p", reweighted, seed_p)]
    se, z = difference_z(reweighted.value, reweighted.std_error, direct.value, direct.std_error)
    reports = [VerificationReport("price_consistency[corrected]", reweighted.value - direct.value,
                                  se, z, 0.0, metadata={"n_paths": cfg.n_paths,
                                                        "seed": cfg.master_seed})]
    for name, p in (("direct_q", direct), ("reweighted_p", reweighted)):
        print(f"method={name} value={p.value:.6f} std_error={p.std_error:.6f} "
              f"n_paths={p.n_paths}", file=out)
    if cfg.params.gamma == 0:
        bs = black_scholes_reference(cfg.params.s0, option.strike, cfg.params.r,
                                     cfg.params.sigma, option.maturity, option.kind)
        rows.append(_price_row("closed_form", bs, ""))
        print(f"method=closed_form value={bs.value:.6f}", file=out)
        z_bs = (direct.value - bs.value) / direct.std_error if direct.std_error > 0 else 0.0
        reports.append(VerificationReport("direct_q_vs_closed_form", direct.value - bs.value,
                                          direct.std_error, z_bs, 0.0,
                                          metadata={"n_paths": cfg.n_paths,
                                                    "seed": cfg.master_seed}))
    rows += [_check_row(r) for r in reports]
    _write_report(cfg.output_path, rows)
    _print_checks(reports, out)
    return _status(reports)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="htb", description="Hard-to-borrow stock Monte Carlo engine")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="INI configuration file")
    ap.add_argument("--out", help="output CSV path (overrides run.output)")
    ap.add_argument("--seed", help="master seed (overrides run.seed)")
    ap.add_argument("--paths", help="number of paths (overrides run.n_paths)")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"run.command": args.command}
    for flag, key in (("out", "run.output"), ("seed", "run.seed"), ("paths", "run.n_paths")):
        if getattr(args, flag) is not None:
            overrides[key] = getattr(args, flag)
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(cfg)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except HtbError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
