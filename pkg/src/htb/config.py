"""Run configuration: an INI document with fixed sections and keys.

Grammar (every key optional unless noted; ``#`` and ``;`` start comments)::

    [model]         sigma kappa rho gamma alpha x_bar beta r lambda0 s0 x0 lambda_max
    [risk_premium]  variant = zero | constant | affine_in_x ; c ; a ; b
    [grid]          horizon n_steps
    [option]        kind = call | put ; strike ; maturity
    [run]           command (required, unless given on the command line)
                    n_paths seed output measure = P | Q

Unknown sections or keys are errors.  Defaults are the module-level
``DEFAULTS``; a missing ``[option]`` section means an at-the-money call
expiring at the grid horizon.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields
from typing import Mapping

from .errors import InvalidInputError
from .model import HtbParams, RiskPremiumSpec
from .pricing import OptionSpec
from .simulator import PathGrid

COMMANDS = ("simulate", "price", "verify-measure", "verify-correlation")


class ConfigError(InvalidInputError):
    """The configuration document is malformed or violates a constraint."""


_MODEL_KEYS = tuple(f.name for f in fields(HtbParams))

DEFAULTS: dict[str, dict[str, str]] = {
    "model": {f.name: repr(f.default) for f in fields(HtbParams)},
    "risk_premium": {"variant": "zero", "c": "0.0", "a": "0.0", "b": "0.0"},
    "grid": {"horizon": "1.0", "n_steps": "500"},
    "option": {"kind": "call", "strike": "", "maturity": ""},
    "run": {"command": "", "n_paths": "10000", "seed": "12345", "output": "htb_output.csv",
            "measure": "P"},
}


@dataclass(frozen=True)
class RunConfig:
    params: HtbParams
    riskspec: RiskPremiumSpec
    grid: PathGrid
    option: OptionSpec | None
    n_paths: int
    master_seed: int
    command: str
    output_path: str
    measure: str = "P"

    def option_or_default(self) -> OptionSpec:
        if self.option is not None:
            return self.option
        return OptionSpec("call", self.params.s0, self.grid.horizon)


def _float(section: str, key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}={raw!r} is not a number") from None
    if not math.isfinite(value):
        raise ConfigError(f"{section}.{key}={raw!r} must be finite")
    return value


def _int(section: str, key: str, raw: str, lo: int, hi: int | None = None) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}={raw!r} is not an integer") from None
    if value < lo or (hi is not None and value > hi):
        bound = f">= {lo}" if hi is None else f"in [{lo}, {hi}]"
        raise ConfigError(f"{section}.{key}={value} violates {section}.{key} {bound}")
    return value


def _build(section: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except InvalidInputError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def parse_config(text: str, overrides: Mapping[str, str] | None = None) -> RunConfig:
    """Parse and validate a configuration document.

    ``overrides`` maps ``"section.key"`` to raw string values and wins over
    the document (the CLI flags use this).
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    values = {sec: dict(keys) for sec, keys in DEFAULTS.items()}
    for sec in cp.sections():
        if sec not in DEFAULTS:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in DEFAULTS[sec]:
                raise ConfigError(f"unknown key {sec}.{key}")
            values[sec][key] = raw.strip()
    for path, raw in (overrides or {}).items():
        sec, _, key = path.partition(".")
        if sec not in DEFAULTS or key not in DEFAULTS[sec]:
            raise ConfigError(f"unknown key {path}")
        values[sec][key] = str(raw)

    model = {k: _float("model", k, values["model"][k]) for k in _MODEL_KEYS}
    params = _build("model", HtbParams, **model)

    rp = values["risk_premium"]
    riskspec = _build("risk_premium", RiskPremiumSpec, variant=rp["variant"],
                      c=_float("risk_premium", "c", rp["c"]),
                      a=_float("risk_premium", "a", rp["a"]),
                      b=_float("risk_premium", "b", rp["b"]))

    g = values["grid"]
    grid = _build("grid", PathGrid, horizon=_float("grid", "horizon", g["horizon"]),
                  n_steps=_int("grid", "n_steps", g["n_steps"], 1))
    try:
        grid.check_jump_fidelity(params.lambda_max)
    except InvalidInputError as exc:
        raise ConfigError(f"[grid] {exc}") from None

    option = None
    if cp.has_section("option") or any(p.startswith("option.") for p in overrides or {}):
        o = values["option"]
        strike = params.s0 if not o["strike"] else _float("option", "strike", o["strike"])
        maturity = grid.horizon if not o["maturity"] else _float("option", "maturity",
                                                                   o["maturity"])
        option = _build("option", OptionSpec, kind=o["kind"], strike=strike, maturity=maturity)
        if option.maturity > grid.horizon:
            raise ConfigError(f"option.maturity={option.maturity} violates maturity <= "
                              f"grid.horizon={grid.horizon}")

    r = values["run"]
    command = r["command"]
    if not command:
        raise ConfigError("missing required key run.command")
    if command not in COMMANDS:
        raise ConfigError(f"run.command={command!r} violates one of {'|'.join(COMMANDS)}")
    if r["measure"] not in ("P", "Q"):
        raise ConfigError(f"run.measure={r['measure']!r} violates one of P|Q")
    if not r["output"]:
        raise ConfigError("run.output must not be empty")
    return RunConfig(params, riskspec, grid, option,
                     n_paths=_int("run", "n_paths", r["n_paths"], 1),
                     master_seed=_int("run", "seed", r["seed"], 0, (1 << 64) - 1),
                     command=command, output_path=r["output"], measure=r["measure"])
