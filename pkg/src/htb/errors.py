"""Exception hierarchy shared by the engine and the command-line harness."""

from __future__ import annotations


class HtbError(Exception):
    """Base class for all engine errors."""


class InvalidInputError(HtbError, ValueError):
    """An argument or parameter violates its documented constraint."""


class SimulationDivergedError(HtbError, ArithmeticError):
    """A simulated state became non-finite or non-positive."""

    def __init__(self, message: str, step: int, path: int | None = None):
        where = f"step {step}" if path is None else f"path {path}, step {step}"
        super().__init__(f"{message} ({where})")
        self.step = step
        self.path = path


class DensityOverflowError(HtbError, ArithmeticError):
    """A log-density accumulation left the finite range."""

    def __init__(self, message: str, step: int, path: int | None = None):
        where = f"step {step}" if path is None else f"path {path}, step {step}"
        super().__init__(f"{message} ({where})")
        self.step = step
        self.path = path
