"""Exceptions raised throughout the package"""
import typing as t

from .utils import ValueObject

__all__ = [
    "LookaheadError",
    "ValidationError",
    "Violation",
    "InvalidInput",
    "ShapeMismatch",
    "FlowInfeasible",
    "CorrelatedRewardsError",
    "DomainError",
    "ResourceCapExceeded",
    "LPError",
]


class LookaheadError(Exception):
    """base class for all errors raised by this package"""


class ValidationError(LookaheadError):
    """base class for malformed input"""


class Violation(ValueObject):
    """A single violated invariant, as reported by the ``validate`` family"""

    __fields__ = [
        ("subject", str, "Name of the offending array, e.g. 'P' or 'mu'"),
        ("index", tuple, "Index of the offending entry or row"),
        ("magnitude", float, "The offending value or deviation"),
        ("message", str, "Human readable description"),
    ]

    def __str__(self):
        return "{}{}: {} ({:.3g})".format(
            self.subject, list(self.index), self.message, self.magnitude
        )


class InvalidInput(ValueObject, ValidationError):
    """Input violating one or more invariants"""

    __fields__ = [
        ("what", str, "The kind of object being validated"),
        ("violations", t.Tuple[Violation, ...], "The violated invariants"),
    ]

    def __str__(self):
        shown = "\n    ".join(map(str, self.violations[:20]))
        return "invalid {} ({} violations):\n    {}".format(
            self.what, len(self.violations), shown
        )


class ShapeMismatch(ValueObject, ValidationError):
    __fields__ = [
        ("what", str, "The mismatching object"),
        ("expected", tuple, "Expected shape"),
        ("actual", tuple, "Actual shape"),
    ]

    def __str__(self):
        return "{} has shape {}, expected {}".format(
            self.what, self.actual, self.expected
        )


class FlowInfeasible(ValueObject, ValidationError):
    """An occupancy measure violating the flow constraints"""

    __fields__ = [
        ("violations", t.Tuple[Violation, ...], "The violated constraints")
    ]

    def __str__(self):
        return "occupancy measure is not flow-feasible: {}".format(
            "; ".join(map(str, self.violations[:5]))
        )


class CorrelatedRewardsError(ValueObject, ValidationError):
    __fields__ = [("family", str, "The unsupported reward family")]

    def __str__(self):
        return (
            "rewards of family {!r} are not independent across "
            "state-actions; within-step correlation is unsupported"
        ).format(self.family)


class DomainError(ValueObject, LookaheadError, ValueError):
    """A parameter outside of its admissible range"""

    __fields__ = [
        ("name", str, "Parameter name"),
        ("value", object, "(Invalid) value"),
        ("expected", str, "Description of the admissible range"),
    ]

    def __str__(self):
        return "{}={!r} out of range, expected {}".format(
            self.name, self.value, self.expected
        )


class ResourceCapExceeded(ValueObject, LookaheadError):
    """An exact procedure would exceed its size cap"""

    __fields__ = [
        ("what", str, "The capped procedure"),
        ("size", float, "The size the procedure would need"),
        ("cap", float, "The configured cap"),
        ("hint", str, "Suggested alternative"),
    ]
    __defaults__ = ("",)

    def __str__(self):
        msg = "{} needs size {:.4g}, exceeding cap {:.4g}".format(
            self.what, self.size, self.cap
        )
        return msg + ("; " + self.hint if self.hint else "")


class LPError(ValueObject, LookaheadError):
    """The LP solver did not reach an optimum"""

    __fields__ = [
        ("status", str, "Solver status"),
        ("message", str, "Solver message"),
    ]

    def __str__(self):
        return "LP solve failed ({}): {}".format(self.status, self.message)
