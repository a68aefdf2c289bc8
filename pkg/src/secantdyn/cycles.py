"""Periodic orbits of the secant map, with the 4-cycle theory on top.

A 4-cycle (a,b) -> (b,c) -> (c,d) -> (d,a) is stored by its four base reals.
Its cross ratio is always one of the two golden values and the relative
order of a, b, c, d falls in one of four admissible types.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from secantdyn.errors import (
    DegenerateQuadruple,
    Incompatible,
    InputError,
    OrderingViolation,
    SignPatternMismatch,
    SingularPoint,
    VerificationFailed,
)
from secantdyn.polynomial import NewtonInterpolant, Polynomial, newton_interpolate, q_eval
from secantdyn.secant_map import PlanarPoint, SecantSystem, jacobian_along_orbit, step

logger = logging.getLogger(__name__)

GOLDEN_POSITIVE = (math.sqrt(5.0) - 1.0) / 2.0
GOLDEN_NEGATIVE = -(1.0 + math.sqrt(5.0)) / 2.0

DEFAULT_SEED_DENSITY = 48
DEFAULT_NEWTON_TOL = 1e-13
DEFAULT_NEWTON_MAX_ITER = 80
CLOSURE_TOL = 1e-9
DEDUP_TOL = 1e-7
GOLDEN_TOL = 1e-8


class CycleType(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"


# position of a, b, c, d when sorted ascending, a always first
_ORDERINGS = {
    "abdc": CycleType.I,
    "acdb": CycleType.II,
    "adbc": CycleType.III,
    "acbd": CycleType.IV,
}
_FORBIDDEN = ("abcd", "adcb")

# signs of (p(a), p(b), p(c), p(d)), up to a global flip
SIGN_PATTERNS = {
    CycleType.I: (1, 1, -1, -1),
    CycleType.II: (1, -1, 1, 1),
    CycleType.III: (1, 1, 1, 1),
    CycleType.IV: (1, -1, -1, -1),
}

# signs of y - x at (a,b), (b,c), (c,d), (d,a)
DIAGONAL_PATTERNS = {
    CycleType.I: "++--",
    CycleType.II: "+-+-",
    CycleType.III: "++--",
    CycleType.IV: "+-+-",
}

# (slots of the base triple, slot solved from the cross ratio)
_CONSTRUCTION_SLOTS = {
    CycleType.I: ((0, 1, 2), 3),
    CycleType.II: ((0, 2, 1), 3),
    CycleType.III: ((0, 1, 2), 3),
    CycleType.IV: ((0, 2, 3), 1),
}


def cross_ratio(a: float, b: float, c: float, d: float) -> float:
    den = (c - b) * (d - a)
    if c == b or d == a or den == 0.0:
        raise DegenerateQuadruple(f"cross ratio undefined for ({a}, {b}, {c}, {d})")
    return (c - a) * (d - b) / den


def golden_defect(lam: float) -> float:
    """|λ²/(1-λ) - 1|; zero exactly at the two golden values."""
    if lam == 1.0:
        return math.inf
    return abs(lam * lam / (1.0 - lam) - 1.0)


def canonical(xs: Sequence[float], values: Optional[Sequence[float]] = None):
    """Rotate a cycle (and any per-point values) so its smallest entry comes first."""
    k = int(np.argmin(xs))
    rot = list(xs[k:]) + list(xs[:k])
    if values is None:
        return tuple(rot)
    return tuple(rot), tuple(list(values[k:]) + list(values[:k]))


def ordering(a: float, b: float, c: float, d: float) -> str:
    vals = (a, b, c, d)
    if len(set(vals)) != 4:
        raise DegenerateQuadruple(f"repeated entries in ({a}, {b}, {c}, {d})")
    return "".join("abcd"[i] for i in np.argsort(vals, kind="stable"))


def _sign_pattern_ok(cycle_type: CycleType, p_values: Sequence[float]) -> bool:
    s = tuple(int(np.sign(v)) for v in p_values)
    pat = SIGN_PATTERNS[cycle_type]
    return s == pat or s == tuple(-v for v in pat)


def classify(a: float, b: float, c: float, d: float, p_values: Optional[Sequence[float]] = None) -> CycleType:
    """Type of the 4-cycle with base points a, b, c, d in dynamical order.

    The quadruple is rotated so a is the minimum. When ``p_values`` is given
    the signs of p at the four points are checked against the type.
    """
    if p_values is not None:
        (a, b, c, d), p_values = canonical((a, b, c, d), p_values)
    else:
        a, b, c, d = canonical((a, b, c, d))
    key = ordering(a, b, c, d)
    if key in _FORBIDDEN:
        raise Incompatible(f"no 4-cycle has the configuration {' < '.join(key)}")
    cycle_type = _ORDERINGS[key]
    if p_values is not None and not _sign_pattern_ok(cycle_type, p_values):
        raise SignPatternMismatch(
            f"type {cycle_type.value} expects signs {SIGN_PATTERNS[cycle_type]} up to a flip, "
            f"got {tuple(np.sign(p_values).astype(int))}"
        )
    return cycle_type


def diagonal_pattern(xs: Sequence[float]) -> str:
    n = len(xs)
    return "".join("+" if xs[(i + 1) % n] > xs[i] else "-" for i in range(n))


@dataclass
class Stability:
    eigenvalues: Tuple[complex, complex]
    eigenvectors: Tuple[np.ndarray, np.ndarray]
    label: str
    trace: float
    determinant: float
    matrix: np.ndarray


def _eigen_2x2(m: np.ndarray):
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = tr * tr / 4.0 - det
    if disc >= 0:
        root = math.sqrt(disc)
        # larger magnitude first; the other from det to avoid cancellation
        big = tr / 2.0 + math.copysign(root, tr) if tr != 0 else root
        small = det / big if big != 0 else tr / 2.0 - root
        lams = (big, small)
    else:
        root = math.sqrt(-disc)
        lams = (complex(tr / 2.0, root), complex(tr / 2.0, -root))
    vecs = []
    for lam in lams:
        u = np.array([m[0, 1], lam - m[0, 0]], dtype=complex)
        w = np.array([lam - m[1, 1], m[1, 0]], dtype=complex)
        v = u if np.linalg.norm(u) >= np.linalg.norm(w) else w
        if np.linalg.norm(v) == 0:
            v = np.array([1.0, 0.0], dtype=complex) if lam == lams[0] else np.array([0.0, 1.0], dtype=complex)
        v = v / np.linalg.norm(v)
        if np.all(np.abs(v.imag) < 1e-14):
            v = v.real
        vecs.append(v)
    return lams, tuple(vecs), tr, det


def _label(lams) -> str:
    mags = sorted(abs(v) for v in lams)
    if mags[0] < 1.0 < mags[1]:
        return "saddle"
    if mags[1] < 1.0:
        return "attractor"
    if mags[0] > 1.0:
        return "repeller"
    return "non-hyperbolic"


def stability(sys: SecantSystem, xs: Sequence[float]) -> Stability:
    """Multipliers of S^n at (x₀, x₁) for the cycle with base reals ``xs``."""
    n = len(xs)
    m = jacobian_along_orbit(sys, (xs[0], xs[1]), n)
    lams, vecs, tr, det = _eigen_2x2(m)
    lams = tuple(v.real if isinstance(v, complex) and v.imag == 0 else v for v in lams)
    return Stability(lams, vecs, _label(lams), tr, det, m)


def closure_residual(sys: SecantSystem, xs: Sequence[float]) -> float:
    """Largest max-norm gap |S^n(P_k) - P_k| over the n points of the cycle."""
    n = len(xs)
    worst = 0.0
    for k in range(n):
        start = PlanarPoint(xs[k], xs[(k + 1) % n])
        z = start
        for _ in range(n):
            z = step(sys, z)
        worst = max(worst, abs(z.x - start.x), abs(z.y - start.y))
    return worst


@dataclass
class PeriodicOrbit:
    xs: Tuple[float, ...]
    residual: float

    @property
    def period(self) -> int:
        return len(self.xs)

    @property
    def points(self) -> List[PlanarPoint]:
        n = len(self.xs)
        return [PlanarPoint(self.xs[i], self.xs[(i + 1) % n]) for i in range(n)]


@dataclass
class FourCycle:
    a: float
    b: float
    c: float
    d: float
    lam: float
    cycle_type: CycleType
    residual: float
    multipliers: Tuple[complex, complex] = ()
    label: str = ""
    p_values: Tuple[float, ...] = field(default=())

    @property
    def xs(self) -> Tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    @property
    def points(self) -> List[PlanarPoint]:
        return PeriodicOrbit(self.xs, self.residual).points

    @property
    def diagonal_pattern(self) -> str:
        return diagonal_pattern(self.xs)

    @property
    def sign_pattern(self) -> str:
        return "".join("+" if v > 0 else "-" for v in self.p_values)

    def as_dict(self) -> Dict:
        def num(v):
            if isinstance(v, complex):
                return [v.real, v.imag]
            return float(v)

        return {
            "points": [[pt.x, pt.y] for pt in self.points],
            "lambda": self.lam,
            "type": self.cycle_type.value,
            "multipliers": [num(v) for v in self.multipliers],
            "stability": self.label,
            "residual": self.residual,
            "p_values": list(self.p_values),
            "sign_pattern": self.sign_pattern,
            "diagonal_pattern": self.diagonal_pattern,
        }


def shooting_residual(p: Polynomial, X: np.ndarray) -> np.ndarray:
    """Secant recurrence cleared of denominators, one row per candidate:

    G_i = p(x_{i+1})(x_{i+2} - x_i) - p(x_i)(x_{i+2} - x_{i+1}), indices mod n.
    """
    X1 = np.roll(X, -1, axis=1)
    X2 = np.roll(X, -2, axis=1)
    P0 = p.eval(X)
    P1 = np.roll(P0, -1, axis=1)
    return P1 * (X2 - X) - P0 * (X2 - X1)


def shooting_jacobian(p: Polynomial, X: np.ndarray) -> np.ndarray:
    m, n = X.shape
    X1 = np.roll(X, -1, axis=1)
    X2 = np.roll(X, -2, axis=1)
    P0 = p.eval(X)
    D0 = p.derivative().eval(X)
    P1 = np.roll(P0, -1, axis=1)
    D1 = np.roll(D0, -1, axis=1)
    d0 = -P1 - D0 * (X2 - X1)
    d1 = D1 * (X2 - X) + P0
    d2 = P1 - P0
    J = np.zeros((m, n, n))
    for i in range(n):
        J[:, i, i] += d0[:, i]
        J[:, i, (i + 1) % n] += d1[:, i]
        J[:, i, (i + 2) % n] += d2[:, i]
    return J


def _seed_quadruples(sys: SecantSystem, rect, period: int, density: int) -> np.ndarray:
    x_min, x_max, y_min, y_max = rect
    a, b = np.meshgrid(np.linspace(x_min, x_max, density), np.linspace(y_min, y_max, density))
    cols = [a.ravel(), b.ravel()]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(period - 2):
            x, y = cols[-2], cols[-1]
            cols.append(y - sys.p.eval(y) / q_eval(sys.p, x, y))
    X = np.stack(cols, axis=1)
    return X[np.all(np.isfinite(X), axis=1)]


def _levenberg_marquardt(p: Polynomial, X: np.ndarray, tol: float, max_iter: int, bound: float) -> np.ndarray:
    m, n = X.shape
    mu = np.full(m, 1e-3)
    eye = np.eye(n)
    for it in range(max_iter):
        if X.shape[0] == 0:
            break
        G = shooting_residual(p, X)
        g2 = np.sum(G * G, axis=1)
        J = shooting_jacobian(p, X)
        JT = np.transpose(J, (0, 2, 1))
        A = JT @ J
        rhs = -(JT @ G[..., None])[..., 0]
        scale = 1.0 + np.max(np.abs(np.diagonal(A, axis1=1, axis2=2)), axis=1)
        delta = np.linalg.solve(A + (mu * scale)[:, None, None] * eye, rhs[..., None])[..., 0]
        trial = X + delta
        with np.errstate(over="ignore", invalid="ignore"):
            G_trial = shooting_residual(p, trial)
            g2_trial = np.sum(G_trial * G_trial, axis=1)
        better = np.isfinite(g2_trial) & (g2_trial < g2)
        X = np.where(better[:, None], trial, X)
        mu = np.where(better, np.maximum(mu / 3.0, 1e-15), np.minimum(mu * 4.0, 1e12))

        alive = np.all(np.abs(X) < bound, axis=1) & np.all(np.isfinite(X), axis=1)
        X, mu = X[alive], mu[alive]
        if X.shape[0] and np.all(np.sqrt(np.minimum(g2, g2_trial)[alive]) <= tol):
            logger.debug("shooting iteration settled after %d steps", it + 1)
            break
    return X


def _dedupe(rows: List[Tuple[float, ...]], tol: float) -> List[Tuple[float, ...]]:
    kept: List[Tuple[float, ...]] = []
    for r in rows:
        if all(max(abs(u - v) for u, v in zip(r, k)) > tol for k in kept):
            kept.append(r)
    return kept


def find_periodic_orbits(
    sys: SecantSystem,
    rect: Tuple[float, float, float, float],
    period: int,
    density: int = DEFAULT_SEED_DENSITY,
    newton_tol: float = DEFAULT_NEWTON_TOL,
    max_iter: int = DEFAULT_NEWTON_MAX_ITER,
) -> List[PeriodicOrbit]:
    """Orbits of minimal period ``period`` whose points all lie in the closed rectangle.

    Seeds are a density x density grid of (x₀, x₁) completed by forward
    iteration; each is driven to a zero of the shooting residual by a
    damped Gauss-Newton iteration and kept only if S^period closes it.
    """
    if period < 2:
        raise InputError("period must be at least 2")
    x_min, x_max, y_min, y_max = rect
    if not (x_max > x_min and y_max > y_min):
        raise InputError(f"degenerate search rectangle {rect}")
    lo, hi = min(x_min, y_min), max(x_max, y_max)
    bound = 1e3 * (1.0 + abs(lo) + abs(hi))

    X = _seed_quadruples(sys, rect, period, density)
    X = _levenberg_marquardt(sys.p, X, newton_tol * (1.0 + sys.p.scale), max_iter, bound)

    spread = 1e-6 * (1.0 + np.max(np.abs(X), axis=1)) if X.size else np.zeros(0)
    candidates = []
    for row, eps in zip(X, spread):
        xs = canonical(tuple(float(v) for v in row))
        gaps = [abs(u - v) for i, u in enumerate(xs) for v in xs[i + 1:]]
        if min(gaps) <= eps:
            continue
        if not all(lo - 1e-9 <= v <= hi + 1e-9 for v in xs):
            continue
        candidates.append(xs)
    candidates = _dedupe(candidates, DEDUP_TOL)

    found = []
    singular = 0
    for xs in candidates:
        pts = PeriodicOrbit(xs, 0.0).points
        if not all(x_min - 1e-9 <= pt.x <= x_max + 1e-9 and y_min - 1e-9 <= pt.y <= y_max + 1e-9 for pt in pts):
            continue
        try:
            residual = closure_residual(sys, xs)
        except SingularPoint:
            singular += 1
            continue
        if residual <= CLOSURE_TOL:
            found.append(PeriodicOrbit(xs, residual))
    if singular:
        logger.warning(f"{singular} period-{period} candidates touched the singular set and were dropped")
    logger.info(f"period {period}: {len(found)} orbits from {len(candidates)} distinct candidates")
    return found


def make_four_cycle(sys: SecantSystem, xs: Sequence[float], residual: Optional[float] = None) -> FourCycle:
    xs = canonical(tuple(float(v) for v in xs))
    p_values = tuple(float(sys.p.eval(v)) for v in xs)
    cycle_type = classify(*xs, p_values=p_values)
    lam = cross_ratio(*xs)
    if residual is None:
        residual = closure_residual(sys, xs)
    st = stability(sys, xs)
    return FourCycle(*xs, lam=lam, cycle_type=cycle_type, residual=residual,
                     multipliers=st.eigenvalues, label=st.label, p_values=p_values)


def find_four_cycles(
    sys: SecantSystem,
    rect: Tuple[float, float, float, float],
    density: int = DEFAULT_SEED_DENSITY,
    newton_tol: float = DEFAULT_NEWTON_TOL,
    max_iter: int = DEFAULT_NEWTON_MAX_ITER,
) -> List[FourCycle]:
    cycles = []
    for orb in find_periodic_orbits(sys, rect, 4, density, newton_tol, max_iter):
        try:
            cyc = make_four_cycle(sys, orb.xs, orb.residual)
        except (Incompatible, SignPatternMismatch, DegenerateQuadruple, SingularPoint) as e:
            logger.warning(f"dropping 4-cycle {orb.xs}: {e}")
            continue
        if golden_defect(cyc.lam) > GOLDEN_TOL:
            logger.warning(f"dropping 4-cycle {orb.xs}: cross ratio {cyc.lam:.12g} is not golden")
            continue
        cycles.append(cyc)
    return cycles


def _solve_slot(known: Dict[int, float], unknown: int, lam: float) -> float:
    """The cross-ratio relation λ(c-b)(d-a) = (c-a)(d-b) is affine in each entry."""

    def f(t: float) -> float:
        v = dict(known)
        v[unknown] = t
        a, b, c, d = v[0], v[1], v[2], v[3]
        return lam * (c - b) * (d - a) - (c - a) * (d - b)

    f0, f1 = f(0.0), f(1.0)
    if f1 == f0:
        raise OrderingViolation("base points leave the cross-ratio equation without a solution")
    return -f0 / (f1 - f0)


def cycle_p_values(xs: Sequence[float], free_value: float) -> np.ndarray:
    """p at the four cycle points, from the homogeneous secant relations, scaled so p(d) = free_value."""
    n = len(xs)
    M = np.zeros((n, n))
    for i in range(n):
        x0, x1, x2 = xs[i], xs[(i + 1) % n], xs[(i + 2) % n]
        M[i, (i + 1) % n] += x2 - x0
        M[i, i] -= x2 - x1
    ns = null_space(M, rcond=1e-10)
    if ns.shape[1] != 1:
        raise VerificationFailed(f"secant relations have a {ns.shape[1]}-dimensional solution space")
    v = ns[:, 0]
    if v[-1] == 0.0:
        raise VerificationFailed("p(d) is forced to zero")
    return v * (free_value / v[-1])


@dataclass
class Construction:
    polynomial: Polynomial
    interpolant: NewtonInterpolant
    cycle: FourCycle
    system: SecantSystem


def construct_polynomial(cycle_type: CycleType, base: Sequence[float] = (1.0, 2.0, 3.0), free_value: float = -1.0) -> Construction:
    """Build a cubic whose secant map has a 4-cycle of the requested type.

    ``base`` fills the three slots of the cycle that the type fixes; the
    fourth is solved from the golden cross ratio and p at the four points
    follows from the secant relations with p(d) = ``free_value``.
    """
    cycle_type = CycleType(cycle_type)
    base = tuple(float(v) for v in base)
    if len(base) != 3 or not (base[0] < base[1] < base[2]):
        raise OrderingViolation(f"base must be three increasing reals, got {base}")
    if free_value == 0.0:
        raise InputError("free value must be nonzero")
    lam = GOLDEN_POSITIVE if cycle_type in (CycleType.I, CycleType.II) else GOLDEN_NEGATIVE

    slots, unknown = _CONSTRUCTION_SLOTS[cycle_type]
    known = dict(zip(slots, base))
    known[unknown] = _solve_slot(known, unknown, lam)
    xs = tuple(known[i] for i in range(4))
    try:
        key = ordering(*xs)
    except DegenerateQuadruple as e:
        raise OrderingViolation(str(e)) from e
    if _ORDERINGS.get(key) is not cycle_type:
        raise OrderingViolation(f"solved point {known[unknown]:.10g} gives ordering {key}, not type {cycle_type.value}")

    p_values = cycle_p_values(xs, free_value)
    nodes = list(base) + [known[unknown]]
    values = [p_values[xs.index(v)] for v in nodes]
    interp = newton_interpolate(nodes, values)
    sys = SecantSystem.from_polynomial(interp.polynomial)

    try:
        residual = closure_residual(sys, xs)
    except SingularPoint as e:
        raise VerificationFailed(f"constructed cycle hits the singular set: {e}") from e
    if residual > CLOSURE_TOL:
        raise VerificationFailed(f"constructed cycle closes with residual {residual:.3g}")
    cycle = make_four_cycle(sys, xs, residual)
    logger.info(f"type {cycle_type.value}: cycle {xs} with λ={lam:.10f}, residual {residual:.2g}")
    return Construction(interp.polynomial, interp, cycle, sys)
