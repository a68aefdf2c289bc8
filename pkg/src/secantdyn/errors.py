"""Exceptions raised by secantdyn.

``NumericalError`` covers failures of the mathematics (a multiple root, a point
on the singular set, a cycle that does not close). ``InputError`` covers bad
arguments; it also derives from ``ValueError`` so callers can treat it as one.
"""


class SecantError(Exception):
    """Base class for every secantdyn error."""


class NumericalError(SecantError):
    pass


class InputError(SecantError, ValueError):
    pass


# polynomial

class MultipleRootDetected(NumericalError):
    pass


class DegreeZero(NumericalError):
    pass


class DegreeTooHigh(InputError):
    pass


class DuplicateNodes(InputError):
    pass


class PolynomialSyntaxError(InputError):
    pass


# secant map

class SingularPoint(NumericalError):
    """The denominator q vanishes (within tolerance) at the given point."""

    def __init__(self, x: float, y: float, q: float):
        super().__init__(f"point ({x:.12g}, {y:.12g}) is on the singular set (q={q:.3g})")
        self.x = x
        self.y = y
        self.q = q


class CriticalPoint(NumericalError):
    pass


class PoleSlope(NumericalError):
    pass


class Asymptote(NumericalError):
    pass


class NotUnique(NumericalError):
    pass


class NotInternalRoot(NumericalError):
    pass


class DegenerateTarget(NumericalError):
    pass


# cycles

class DegenerateQuadruple(NumericalError):
    pass


class Incompatible(NumericalError):
    pass


class SignPatternMismatch(NumericalError):
    pass


class VerificationFailed(NumericalError):
    pass


class OrderingViolation(InputError):
    pass


# basins

class SeedNotInBasin(NumericalError):
    pass


class InvalidBounds(InputError):
    pass
