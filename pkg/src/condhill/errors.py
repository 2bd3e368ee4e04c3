"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class CondHillError(Exception):
    """Base class for every error raised by condhill."""


class EmptyWindow(CondHillError):
    """No covariate carries positive kernel weight at the conditioning point."""

    def __init__(self, x0: float, h: float):
        self.x0 = x0
        self.h = h
        super().__init__(f"no observation with positive kernel weight at x0={x0!r} (h={h!r})")


class DegenerateDensity(RuntimeWarning):
    """Covariate density estimate is zero, so no confidence interval can be formed."""


class UnboundedKernelWarning(UserWarning):
    """A kernel without compact support was handed to a local estimator."""


class DegenerateSample(CondHillError):
    """Sample has zero variance."""


class NoRoot(CondHillError):
    """Sheather-Jones fixed-point equation could not be bracketed."""


class SheatherJonesFallback(UserWarning):
    """Sheather-Jones failed and the normal-reference bandwidth was used instead."""


class TooFewConcomitants(CondHillError):
    """Fewer than ten concomitants requested for a concomitant bandwidth."""


class CholeskyFailure(CondHillError):
    """Jittered Gaussian-process covariance is not positive definite."""


class AllMissing(CondHillError):
    """Every Monte Carlo replication failed at some k."""


class EmptySide(CondHillError):
    """One side of a signed split holds fewer than two observations."""


class NonPositiveResponse(CondHillError):
    """A response used on the log scale is not strictly positive."""


class DegenerateSeries(CondHillError):
    """Time series has zero sample variance."""


class ParseError(CondHillError):
    """Malformed input file."""

    def __init__(self, line: int, column: str | None, reason: str):
        self.line = line
        self.column = column
        self.reason = reason
        where = f"line {line}" + (f", column {column!r}" if column else "")
        super().__init__(f"{where}: {reason}")


class InvariantViolation(CondHillError):
    """Input parses but violates a data invariant (e.g. non-positive response)."""

    def __init__(self, reason: str, line: int | None = None):
        self.line = line
        self.reason = reason
        super().__init__(reason if line is None else f"line {line}: {reason}")
