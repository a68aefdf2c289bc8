"""Real univariate polynomials and the secant-slope polynomial q.

Coefficients are stored in ascending order, ``coeffs[i]`` multiplies ``x**i``,
the same convention as ``numpy.polynomial.polynomial``.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq

from secantdyn.errors import (
    DegreeTooHigh,
    DegreeZero,
    DuplicateNodes,
    InputError,
    MultipleRootDetected,
    PolynomialSyntaxError,
)

logger = logging.getLogger(__name__)

MAX_DEGREE = 64
ROOT_RESIDUAL_TOL = 1e-12
BISECTION_XTOL = 1e-13
MULTIPLE_ROOT_TOL = 1e-8

Number = Union[float, np.ndarray]


def _out(value):
    """Unwrap 0-d arrays so scalar callers get plain floats back."""
    if np.ndim(value) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class Polynomial:
    coeffs: Tuple[float, ...]

    def __post_init__(self):
        c = [float(a) for a in self.coeffs]
        if not all(np.isfinite(c)):
            raise InputError(f"non-finite coefficient in {self.coeffs!r}")
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        if not c:
            c = [0.0]
        if len(c) - 1 > MAX_DEGREE:
            raise DegreeTooHigh(f"degree {len(c) - 1} exceeds the cap of {MAX_DEGREE}")
        object.__setattr__(self, "coeffs", tuple(c))

    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    @property
    def scale(self) -> float:
        return max(abs(a) for a in self.coeffs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    def eval(self, x: Number) -> Number:
        return _out(P.polyval(x, self.coeffs))

    __call__ = eval

    def eval_with_derivative(self, x: Number) -> Tuple[Number, Number]:
        """Return (p(x), p'(x)) in one pass of Horner's scheme."""
        x = np.asarray(x, dtype=float)
        value = np.full_like(x, self.coeffs[-1])
        slope = np.zeros_like(x)
        for a in reversed(self.coeffs[:-1]):
            slope = slope * x + value
            value = value * x + a
        return _out(value), _out(slope)

    def derivative(self, order: int = 1) -> "Polynomial":
        if order < 1:
            raise InputError("derivative order must be >= 1")
        if order > self.degree():
            return Polynomial((0.0,))
        return Polynomial(tuple(P.polyder(self.as_array(), order)))

    def __str__(self) -> str:
        return ",".join(repr(a) for a in self.coeffs)


@dataclass(frozen=True)
class RootSet:
    roots: Tuple[float, ...]
    simple: bool = True

    def __len__(self) -> int:
        return len(self.roots)

    def __iter__(self) -> Iterator[float]:
        return iter(self.roots)

    def __getitem__(self, i: int) -> float:
        return self.roots[i]

    def as_list(self) -> List[float]:
        return list(self.roots)


def cauchy_bound(p: Polynomial) -> float:
    a = p.coeffs
    return 1.0 + max(abs(c / a[-1]) for c in a[:-1])


def _polish(coeffs: np.ndarray, x: float, lo: float, hi: float) -> float:
    fx = P.polyval(x, coeffs)
    dfx = P.polyval(x, P.polyder(coeffs))
    if dfx == 0.0:
        return x
    x1 = x - fx / dfx
    if lo <= x1 <= hi and abs(P.polyval(x1, coeffs)) <= abs(fx):
        return float(x1)
    return x


def _sign_change_roots(coeffs: np.ndarray, lo: float, hi: float) -> List[float]:
    """Roots of odd multiplicity in [lo, hi], ascending.

    The interval is split at the sign-change roots of the derivative (found
    recursively) so p is monotone on every piece; each piece holds at most
    one root, which is bracketed and refined.
    """
    deg = len(coeffs) - 1
    if deg <= 0:
        return []
    if deg == 1:
        r = -coeffs[0] / coeffs[1]
        return [float(r)] if lo <= r <= hi else []

    crit = [c for c in _sign_change_roots(P.polyder(coeffs), lo, hi) if lo < c < hi]
    breaks = [lo] + crit + [hi]

    def f(t: float) -> float:
        return float(P.polyval(t, coeffs))

    roots: List[float] = []
    for u, v in zip(breaks[:-1], breaks[1:]):
        fu, fv = f(u), f(v)
        if fu == 0.0:
            r = u
        elif fv == 0.0:
            r = v
        elif fu * fv < 0.0:
            r = brentq(f, u, v, xtol=BISECTION_XTOL)
            r = _polish(coeffs, r, u, v)
        else:
            continue
        if not roots or abs(r - roots[-1]) > BISECTION_XTOL:
            roots.append(float(r))
    return roots


def real_roots(p: Polynomial, interval: Optional[Tuple[float, float]] = None, require_simple: bool = True) -> RootSet:
    """All real roots of p in ``interval`` (default: a Cauchy root bound).

    With ``require_simple`` a root where p' (nearly) vanishes, or a critical
    point where p (nearly) vanishes, raises MultipleRootDetected.
    """
    if p.degree() < 1:
        raise DegreeZero("polynomial has no roots to isolate (degree 0)")
    if interval is None:
        bound = cauchy_bound(p)
        lo, hi = -bound, bound
    else:
        lo, hi = float(interval[0]), float(interval[1])
    coeffs = p.as_array()
    roots = _sign_change_roots(coeffs, lo, hi)
    if not require_simple:
        return RootSet(tuple(roots), simple=False)

    dp = p.derivative()
    for r in roots:
        threshold = MULTIPLE_ROOT_TOL * (1.0 + abs(r) * p.scale)
        if abs(dp.eval(r)) < threshold:
            raise MultipleRootDetected(f"root {r:.12g} has p'={dp.eval(r):.3g}")
        residual = abs(p.eval(r))
        if residual > ROOT_RESIDUAL_TOL * (1.0 + p.scale):
            logger.debug("root %.15g keeps residual %.3g after polish", r, residual)
    if dp.degree() >= 1:
        for c in _sign_change_roots(dp.as_array(), lo, hi):
            if abs(p.eval(c)) <= ROOT_RESIDUAL_TOL * (1.0 + p.scale):
                raise MultipleRootDetected(f"critical point {c:.12g} is also a root")
    return RootSet(tuple(roots), simple=True)


def critical_and_inflection_points(p: Polynomial, interval: Tuple[float, float]) -> Tuple[RootSet, RootSet]:
    """Real roots of p' and p'' inside the open interval."""
    lo, hi = float(interval[0]), float(interval[1])
    if not hi > lo:
        raise InputError(f"degenerate interval ({lo}, {hi})")
    out = []
    for order in (1, 2):
        d = p.derivative(order)
        if d.degree() < 1:
            out.append(RootSet((), simple=False))
            continue
        found = real_roots(d, (lo, hi), require_simple=False)
        out.append(RootSet(tuple(r for r in found if lo < r < hi), simple=False))
    return out[0], out[1]


def one_inflection(p: Polynomial, interval: Tuple[float, float]) -> bool:
    """True when p has exactly one inflection point inside the interval."""
    _, inflections = critical_and_inflection_points(p, interval)
    return len(inflections) == 1


def chebyshev(k: int) -> Polynomial:
    if k < 0:
        raise InputError("Chebyshev index must be nonnegative")
    return Polynomial(tuple(C.cheb2poly([0.0] * k + [1.0])))


def from_newton_form(centers: Sequence[float], coefficients: Sequence[float]) -> Polynomial:
    """Expand c0 + c1 (x-t0) + c2 (x-t0)(x-t1) + ... into power form."""
    c = [float(v) for v in coefficients]
    t = [float(v) for v in centers]
    if len(t) < len(c) - 1:
        raise InputError("Newton form needs one center fewer than coefficients")
    acc = np.array([c[-1]])
    for k in range(len(c) - 2, -1, -1):
        acc = P.polyadd(P.polymul(acc, [-t[k], 1.0]), [c[k]])
    return Polynomial(tuple(acc))


@dataclass(frozen=True)
class NewtonInterpolant:
    nodes: Tuple[float, ...]
    coefficients: Tuple[float, ...]
    polynomial: Polynomial


def newton_interpolate(nodes: Sequence[float], values: Sequence[float]) -> NewtonInterpolant:
    """Interpolating polynomial through (nodes[i], values[i]) by divided differences."""
    x = np.asarray(nodes, dtype=float)
    c = np.array(values, dtype=float)
    n = len(x)
    if n == 0 or len(c) != n:
        raise InputError("nodes and values must be nonempty and of equal length")
    if len(np.unique(x)) != n:
        raise DuplicateNodes(f"interpolation nodes are not distinct: {list(x)}")
    for j in range(1, n):
        c[j:] = (c[j:] - c[j - 1:-1]) / (x[j:] - x[:n - j])
    return NewtonInterpolant(tuple(x), tuple(c), from_newton_form(x[:-1], c))


def _powers(x: np.ndarray, m: int) -> List[np.ndarray]:
    out = [np.ones_like(x)]
    for _ in range(m):
        out.append(out[-1] * x)
    return out


def q_eval(p: Polynomial, x: Number, y: Number) -> Number:
    """q(x, y) = (p(x) - p(y)) / (x - y) evaluated without the division.

    Terms x^i y^j and x^j y^i are summed as pairs so the result is exactly
    symmetric in (x, y).
    """
    a = p.coeffs
    k = len(a) - 1
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    total = np.zeros(x.shape)
    if k == 0:
        return _out(total)
    xp = _powers(x, k - 1)
    yp = _powers(y, k - 1)
    for s in range(k):
        h = np.zeros(x.shape)
        for i in range(s // 2 + 1):
            j = s - i
            if i == j:
                h = h + xp[i] * yp[i]
            else:
                h = h + (xp[i] * yp[j] + xp[j] * yp[i])
        total = total + a[s + 1] * h
    return _out(total)


@lru_cache(maxsize=64)
def _qx_matrix(coeffs: Tuple[float, ...]) -> np.ndarray:
    k = len(coeffs) - 1
    m = np.zeros((max(k - 1, 1), max(k - 1, 1)))
    for i in range(k - 1):
        for j in range(k - 1 - i):
            m[i, j] = (i + 1) * coeffs[i + j + 2]
    return m


def q_coefficients(p: Polynomial) -> np.ndarray:
    """Matrix C with q(x, y) = sum C[i, j] x^i y^j, i.e. C[i, j] = a[i + j + 1]."""
    a = p.coeffs
    k = len(a) - 1
    c = np.zeros((max(k, 1), max(k, 1)))
    for i in range(k):
        for j in range(k - i):
            c[i, j] = a[i + j + 1]
    return c


def q_x_eval(p: Polynomial, x: Number, y: Number) -> Number:
    """Partial derivative of q in its first argument; q_x(y, y) = p''(y)/2."""
    return _out(P.polyval2d(x, y, _qx_matrix(p.coeffs)))


def q_y_eval(p: Polynomial, x: Number, y: Number) -> Number:
    return q_x_eval(p, y, x)


def q_in_x(p: Polynomial, y: float) -> Polynomial:
    """The polynomial x -> q(x, y) for a fixed y."""
    a = p.coeffs
    k = len(a) - 1
    if k == 0:
        return Polynomial((0.0,))
    out = []
    for i in range(k):
        out.append(sum(a[i + j + 1] * y ** j for j in range(k - i)))
    return Polynomial(tuple(out))


def q_x_in_x(p: Polynomial, y: float) -> Polynomial:
    """The polynomial x -> q_x(x, y) for a fixed y."""
    q = q_in_x(p, y)
    if q.degree() < 1:
        return Polynomial((0.0,))
    return q.derivative()


def parse_polynomial(text: str) -> Polynomial:
    """Parse the CLI polynomial syntax.

    ``"0.15,-0.05,0,-0.333,0,0.2"`` ascending coefficients,
    ``"cheb:5"`` a Chebyshev polynomial,
    ``"newton:1,2,3:2.236,-1.118,-0.691,3.27"`` centers then Newton coefficients,
    or one of the names in ``NAMED_POLYNOMIALS``.
    """
    text = text.strip()
    if text in NAMED_POLYNOMIALS:
        return named_polynomial(text)
    try:
        if text.startswith("cheb:"):
            return chebyshev(int(text[5:]))
        if text.startswith("newton:"):
            centers, coeffs = text[7:].split(":")
            return from_newton_form(_floats(centers), _floats(coeffs))
        return Polynomial(tuple(_floats(text)))
    except (ValueError, IndexError) as e:
        if isinstance(e, InputError) and not isinstance(e, PolynomialSyntaxError):
            raise
        raise PolynomialSyntaxError(f"cannot parse polynomial {text!r}: {e}") from e


def _floats(text: str) -> List[float]:
    parts = [s for s in text.split(",") if s.strip()]
    if not parts:
        raise PolynomialSyntaxError("empty coefficient list")
    return [float(s) for s in parts]


NAMED_POLYNOMIALS = {
    "cubic-i": "newton:1,2,3:2.23606798,-1.11803390,-0.6909830,3.27254249",
    "cubic-ii": "newton:1,2,3:2.818,-5.236,4.3316,-16.106",
    "cubic-iii": "newton:1,2,3:2.236,-1.118,1.809,-0.4774",
    "cubic-iv": "newton:1,2,3:1.618,-2.118,0.809,-1.7135",
    "quintic-a": "0.8,1,0,-20,0,16",
    "quintic-b": "0.15,-0.05,0,-0.3333333333333333,0,0.2",
}


def named_polynomial(name: str) -> Polynomial:
    try:
        return parse_polynomial(NAMED_POLYNOMIALS[name])
    except KeyError:
        raise PolynomialSyntaxError(f"unknown polynomial name {name!r}") from None
