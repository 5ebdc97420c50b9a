"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 1, numeric failures (assembly / eigensolver) with 2, and violated
mathematical checks with 3.
"""


class DriftSpectraError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(DriftSpectraError):
    """Raised by the expression parser; carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class EvalDomainError(DriftSpectraError):
    """Evaluation left the domain of a subexpression (log/sqrt of a
    negative number, division by zero, |x|' at 0)."""


class MeshError(DriftSpectraError):
    """Invalid mesh or grid request (degenerate counts, a >= b, ...)."""


class AssemblyError(DriftSpectraError):
    """Assembly failed, typically a non-positive weight at a quadrature point."""


class SolverError(DriftSpectraError):
    """Eigensolver failure: indefinite mass matrix, non-convergence, or
    block breakdown that survived a reseed."""


class ReferenceNotConverged(SolverError):
    """The 1D reference solve is not resolved enough to support an
    epsilon-order fit."""


class ConfigError(DriftSpectraError):
    """Malformed or inconsistent job configuration."""


class CheckFailure(DriftSpectraError):
    """An asserted identity or inequality was violated beyond tolerance."""
