"""Exception types shared by the solvers and the command line."""

from __future__ import annotations


class IvelvpError(Exception):
    """Base class for all library errors."""

    kind = "error"

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.message = message
        self.witness = witness

    def to_json(self) -> dict:
        return {"kind": self.kind, "message": self.message, "witness": self.witness}


class HypothesisViolation(IvelvpError, ValueError):
    """A checkable premise of a theorem failed on the evaluated set.

    ``witness`` names the offending point(s), pair or triple so the caller can
    inspect it.
    """

    kind = "hypothesis"


class ProblemError(IvelvpError, ValueError):
    """Malformed problem description (bad domain, inverted endpoints, ...)."""

    kind = "problem"


class SolverError(IvelvpError, RuntimeError):
    """A solver gave up, e.g. an iteration cap was hit."""

    kind = "solver"


class InternalError(IvelvpError, RuntimeError):
    """Something that the theory rules out happened anyway."""

    kind = "internal"


class IOFailure(IvelvpError, OSError):
    """A problem file could not be read or decoded."""

    kind = "io"
