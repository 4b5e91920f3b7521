"""Exception hierarchy shared by every stage of the pipeline.

Each error carries a ``stage`` tag of the form ``"module.operation"`` so that
the command line front end can report where a failure originated.
"""

from __future__ import annotations


class PencilError(Exception):
    """Base class; ``stage`` names the originating module and operation."""

    exit_code = 3

    def __init__(self, message: str, stage: str = "") -> None:
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class InputError(PencilError, ValueError):
    """Malformed or out-of-contract input (bad schema, domain violation)."""

    exit_code = 2


class NumericalError(PencilError, ArithmeticError):
    """A numerical routine failed (divergence, underflow, unstable estimate)."""

    exit_code = 3


class ConditionError(PencilError):
    """A hypothesis check (completeness, (S), (A) proxies) failed."""

    exit_code = 4
