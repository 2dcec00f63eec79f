"""Shared exception types for construction and certification failures."""

__all__ = [
    "RangeError",
    "UnsupportedOrderError",
    "InvalidMetricError",
    "ConstructionError",
    "NoCertificateError",
    "DegeneratePlaneError",
]


class RangeError(ValueError):
    """Evaluation requested outside a function's domain."""


class UnsupportedOrderError(ValueError):
    """Derivative order beyond the library-wide jet truncation."""


class InvalidMetricError(ValueError):
    """Metric data violates a precondition (non-positive scale, domain mismatch)."""


class ConstructionError(ValueError):
    """Requested construction is infeasible for the given parameters."""


class NoCertificateError(RuntimeError):
    """A parameter search ended without producing a positivity certificate."""


class DegeneratePlaneError(ValueError):
    """Sectional curvature requested for a degenerate coordinate plane."""
