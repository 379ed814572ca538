"""Exception hierarchy and exit-code mapping.

Every failure mode raised by this package derives from ModeCrossError.
The CLI maps exceptions to process exit codes: 2 for configuration
problems, 3 for violated model assumptions (no crossing, degenerate
slopes, spectator gap failures), 4 for numeric failures (precision
loss, tracking ambiguity, quadrature or integration breakdown).
"""

from __future__ import annotations


class ModeCrossError(Exception):
    """Base class for all package errors."""

    exit_code = 4


class ConfigError(ModeCrossError):
    """Malformed configuration, bad CLI arguments, or unparseable input."""

    exit_code = 2


class ModelError(ModeCrossError):
    """A catalog model violates its own assumptions (root count, gaps)."""

    exit_code = 3


class DegeneracyError(ModeCrossError):
    """Eigenvalue-coincidence structure is not the expected simple pair."""

    exit_code = 3


class NoCrossingError(DegeneracyError):
    """No eigenvalue coincidence found on the search interval."""


class MultipleCrossingsError(DegeneracyError):
    """More than one coincidence point; analysis handles exactly one."""


class DegenerateSlopeError(DegeneracyError):
    """The two branches meet with equal slopes, so the gap parameter vanishes."""


class MetricDegenerateError(DegeneracyError):
    """A mode of the crossing pair has (numerically) zero metric norm."""


class DefectivePencilError(DegeneracyError):
    """An eigenvalue cluster has fewer independent eigenvectors than its size."""


class TrackingError(ModeCrossError):
    """Mode continuation between neighbouring points is ambiguous."""

    exit_code = 4


class SpectralGapError(ModeCrossError):
    """A reduced solve is ill-conditioned because spectator levels crowd the pair."""

    exit_code = 3


class DomainError(ModeCrossError):
    """Arguments lie outside the validated domain of an evaluator."""

    exit_code = 4


class ValidityError(ModeCrossError):
    """A quantity was requested outside its asymptotic validity region."""

    exit_code = 4


class PrecisionError(ModeCrossError):
    """A computation cannot reach, or failed to verify, its accuracy target."""

    exit_code = 4


class InterpretationError(ModeCrossError):
    """The requested physical reading does not apply to this crossing type."""

    exit_code = 3


class ProjectionWarning(UserWarning):
    """Projection residual exceeded the expected leakage bound."""


class AsymptoticsWarning(UserWarning):
    """A result was produced outside its nominal validity window."""
