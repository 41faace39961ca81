"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SubhError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SubhError):
    """Inconsistent or invalid configuration (periods, shapes, options)."""


class AliasingError(SubhError):
    """Too few samples for the requested truncation order."""


class ParseError(SubhError):
    """Expression syntax error; carries the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EvaluationError(SubhError):
    """Domain error during Hamiltonian/gamma evaluation, with witness point."""

    def __init__(self, message: str, t=None, x=None):
        loc = ""
        if t is not None:
            loc = f" at t={t!r}"
            if x is not None:
                loc += f", x={x!r}"
        super().__init__(message + loc)
        self.t = t
        self.x = x


class FlowError(SubhError):
    """Hard failure inside the gradient flow (non-finite state); carries a dump."""

    def __init__(self, message: str, state_dump: str):
        super().__init__(f"{message}\nstate dump: {state_dump}")
        self.state_dump = state_dump
