"""The secant map S(x, y) = (y, y - p(y)/q(x, y)) as a planar dynamical system."""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from secantdyn.errors import (
    Asymptote,
    CriticalPoint,
    DegenerateTarget,
    InputError,
    NotInternalRoot,
    NotUnique,
    PoleSlope,
    SingularPoint,
)
from secantdyn.polynomial import (
    ROOT_RESIDUAL_TOL,
    Polynomial,
    RootSet,
    _qx_matrix,
    critical_and_inflection_points,
    one_inflection,
    q_eval,
    q_in_x,
    q_x_eval,
    q_x_in_x,
    q_y_eval,
    real_roots,
)

logger = logging.getLogger(__name__)

DEFAULT_SING_TOL = 1e-12
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 500
ESCAPE_FACTOR = 1e9
X_STAR_TIE_TOL = 1e-8

# outcome codes of iterate_batch; nonnegative codes are root indices
NON_CONVERGED = -1
SINGULAR = -2


class PlanarPoint(NamedTuple):
    x: float
    y: float


class Outcome(str, Enum):
    CONVERGED = "converged"
    NON_CONVERGED = "non_converged"
    SINGULAR = "singular"


@dataclass(frozen=True)
class FocalPoint:
    i: int
    j: int
    location: PlanarPoint
    prefocal_x: float


@dataclass
class OrbitResult:
    outcome: Outcome
    iterations: int
    final: PlanarPoint
    root_index: Optional[int] = None
    trace: List[PlanarPoint] = field(default_factory=list)


@dataclass(frozen=True)
class SecantSystem:
    p: Polynomial
    roots: RootSet
    sing_tol: float = DEFAULT_SING_TOL
    escape_bound: float = math.inf

    def __post_init__(self):
        if not self.sing_tol > 0:
            raise InputError("sing_tol must be positive")
        largest = max((abs(r) for r in self.roots), default=0.0)
        if not self.escape_bound > largest:
            raise InputError("escape_bound must exceed every root in absolute value")

    @classmethod
    def from_polynomial(cls, p: Polynomial, sing_tol: float = DEFAULT_SING_TOL, escape_bound: Optional[float] = None) -> "SecantSystem":
        roots = real_roots(p)
        if escape_bound is None:
            escape_bound = ESCAPE_FACTOR * (1.0 + max((abs(r) for r in roots), default=0.0))
        logger.debug("secant system for degree %d with roots %s", p.degree(), roots.roots)
        return cls(p=p, roots=roots, sing_tol=sing_tol, escape_bound=escape_bound)

    def is_internal(self, root_index: int) -> bool:
        return 0 < root_index < len(self.roots) - 1

    def triple(self, root_index: int) -> Tuple[float, float, float]:
        """(α₀, α₁, α₂): the internal root with its two neighbours."""
        if not self.is_internal(root_index):
            raise NotInternalRoot(f"root {root_index} of {len(self.roots)} has no neighbour on both sides")
        r = self.roots
        return r[root_index - 1], r[root_index], r[root_index + 1]


def _is_singular(sys: SecantSystem, q, py):
    return np.abs(q) < sys.sing_tol * (1.0 + np.abs(py))


def step(sys: SecantSystem, pt: Sequence[float]) -> PlanarPoint:
    x, y = float(pt[0]), float(pt[1])
    q = q_eval(sys.p, x, y)
    py = sys.p.eval(y)
    if _is_singular(sys, q, py):
        raise SingularPoint(x, y, q)
    return PlanarPoint(y, y - py / q)


def _converged_root(sys: SecantSystem, x: float, y: float, tol: float) -> Optional[int]:
    for i, a in enumerate(sys.roots):
        if max(abs(x - a), abs(y - a)) <= tol:
            return i
    return None


def orbit(sys: SecantSystem, seed: Sequence[float], max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL, record_trace: bool = False) -> OrbitResult:
    """Iterate S from ``seed`` until it settles on a fixed point (α, α),
    hits the singular set, escapes, or runs out of iterations."""
    pt = PlanarPoint(float(seed[0]), float(seed[1]))
    trace = [pt] if record_trace else []
    for it in range(max_iter + 1):
        hit = _converged_root(sys, pt.x, pt.y, tol)
        if hit is not None:
            return OrbitResult(Outcome.CONVERGED, it, pt, hit, trace)
        if it == max_iter:
            break
        try:
            pt = step(sys, pt)
        except SingularPoint:
            return OrbitResult(Outcome.SINGULAR, it, pt, None, trace)
        if record_trace:
            trace.append(pt)
        if not (abs(pt.x) <= sys.escape_bound and abs(pt.y) <= sys.escape_bound):
            return OrbitResult(Outcome.NON_CONVERGED, it + 1, pt, None, trace)
    return OrbitResult(Outcome.NON_CONVERGED, max_iter, pt, None, trace)


def iterate_batch(sys: SecantSystem, x0: np.ndarray, y0: np.ndarray, max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised ``orbit`` over many seeds.

    Returns (codes, iterations): code is the root index on convergence,
    NON_CONVERGED or SINGULAR otherwise. Each seed follows exactly the
    arithmetic of ``orbit``.
    """
    x = np.asarray(x0, dtype=float).ravel()
    y = np.asarray(y0, dtype=float).ravel()
    n = x.size
    codes = np.full(n, NON_CONVERGED, dtype=np.int16)
    iters = np.full(n, max_iter, dtype=np.int32)
    roots = np.asarray(sys.roots.roots, dtype=float)

    active = np.arange(n)
    ax, ay = x.copy(), y.copy()
    for it in range(max_iter + 1):
        if active.size == 0:
            break
        if roots.size:
            hit = np.maximum(np.abs(ax[:, None] - roots), np.abs(ay[:, None] - roots)) <= tol
            done = hit.any(axis=1)
            if done.any():
                codes[active[done]] = np.argmax(hit[done], axis=1)
                iters[active[done]] = it
                keep = ~done
                active, ax, ay = active[keep], ax[keep], ay[keep]
        if it == max_iter or active.size == 0:
            break

        q = q_eval(sys.p, ax, ay)
        py = sys.p.eval(ay)
        sing = _is_singular(sys, q, py)
        if sing.any():
            codes[active[sing]] = SINGULAR
            iters[active[sing]] = it
            keep = ~sing
            active, ax, ay, q, py = active[keep], ax[keep], ay[keep], q[keep], py[keep]

        with np.errstate(over="ignore", invalid="ignore"):
            ax, ay = ay, ay - py / q
            escaped = ~((np.abs(ax) <= sys.escape_bound) & (np.abs(ay) <= sys.escape_bound))
        if escaped.any():
            iters[active[escaped]] = it + 1
            keep = ~escaped
            active, ax, ay = active[keep], ax[keep], ay[keep]
    return codes, iters


def newton_map(sys: SecantSystem, x: float) -> float:
    px, dpx = sys.p.eval_with_derivative(x)
    if _is_singular(sys, dpx, px):
        raise CriticalPoint(f"p'({x:.12g}) = {dpx:.3g}")
    return x - px / dpx


def newton_map_derivative(sys: SecantSystem, x: float) -> float:
    px, dpx = sys.p.eval_with_derivative(x)
    if _is_singular(sys, dpx, px):
        raise CriticalPoint(f"p'({x:.12g}) = {dpx:.3g}")
    return px * sys.p.derivative(2).eval(x) / dpx ** 2


def focal_points(sys: SecantSystem) -> List[FocalPoint]:
    r = sys.roots
    return [
        FocalPoint(i, j, PlanarPoint(r[i], r[j]), r[j])
        for i in range(len(r))
        for j in range(len(r))
        if i != j
    ]


def slope_to_landing(sys: SecantSystem, focal: FocalPoint, m: float) -> float:
    """Ordinate on the prefocal line x = α_j reached by arcs through Q_{i,j} with slope m."""
    ai, aj = focal.location
    di = sys.p.derivative().eval(ai)
    dj = sys.p.derivative().eval(aj)
    if math.isinf(m):
        return ai
    den = di - dj * m
    if abs(den) <= 1e-14 * (abs(di) + abs(dj * m)):
        raise PoleSlope(f"slope {m:.12g} lands at infinity for Q_({focal.i},{focal.j})")
    return (aj * di - ai * dj * m) / den


def landing_to_slope(sys: SecantSystem, focal: FocalPoint, y: float) -> float:
    ai, aj = focal.location
    di = sys.p.derivative().eval(ai)
    dj = sys.p.derivative().eval(aj)
    if y == ai:
        return math.inf
    return di * (aj - y) / (dj * (ai - y))


def phi(sys: SecantSystem, y0: float, x: float) -> float:
    """Second component of S on the horizontal line y = y0."""
    q = q_eval(sys.p, x, y0)
    py = sys.p.eval(y0)
    if _is_singular(sys, q, py):
        raise Asymptote(f"q({x:.12g}, {y0:.12g}) = {q:.3g}")
    return y0 - py / q


def phi_prime(sys: SecantSystem, y0: float, x: float) -> float:
    q = q_eval(sys.p, x, y0)
    py = sys.p.eval(y0)
    if _is_singular(sys, q, py):
        raise Asymptote(f"q({x:.12g}, {y0:.12g}) = {q:.3g}")
    return py * q_x_eval(sys.p, x, y0) / q ** 2


def phi_asymptotes(sys: SecantSystem, y0: float, interval: Tuple[float, float]) -> List[float]:
    """Abscissae in the open interval where q(x, y0) = 0."""
    poly = q_in_x(sys.p, y0)
    if poly.degree() < 1:
        return []
    lo, hi = interval
    return [r for r in real_roots(poly, (lo, hi), require_simple=False) if lo < r < hi]


def inflection_point(sys: SecantSystem, root_index: int = 1) -> float:
    """γ₀, the only inflection point of p in (α₀, α₂)."""
    a0, _, a2 = sys.triple(root_index)
    _, inflections = critical_and_inflection_points(sys.p, (a0, a2))
    if len(inflections) != 1:
        raise NotUnique(f"p has {len(inflections)} inflection points in ({a0:.6g}, {a2:.6g})")
    return inflections[0]


def x_star(sys: SecantSystem, y: float, root_index: int = 1) -> float:
    """The unique x in (α₀, α₂) with q_x(x, y) = 0."""
    a0, _, a2 = sys.triple(root_index)
    gamma0 = inflection_point(sys, root_index)
    if abs(y - gamma0) <= ROOT_RESIDUAL_TOL:
        return gamma0
    poly = q_x_in_x(sys.p, y)
    if poly.degree() < 1:
        raise NotUnique(f"q_x(., {y:.12g}) has no isolated zero")
    found = [r for r in real_roots(poly, (a0, a2), require_simple=False) if a0 < r < a2]
    if len(found) == 2 and abs(found[1] - found[0]) <= X_STAR_TIE_TOL:
        found = [min(found, key=lambda r: abs(poly.eval(r)))]
    if len(found) != 1:
        raise NotUnique(f"q_x(., {y:.12g}) has {len(found)} zeros in ({a0:.6g}, {a2:.6g})")
    return found[0]


def xi_point(sys: SecantSystem, root_index: int = 1) -> float:
    """ξ with x*(ξ) = α₁, i.e. the zero of y -> q_x(α₁, y) in (α₀, α₂)."""
    a0, a1, a2 = sys.triple(root_index)
    coeffs = P.polyval(a1, _qx_matrix(sys.p.coeffs))
    poly = Polynomial(tuple(np.atleast_1d(coeffs)))
    if poly.degree() < 1:
        raise NotUnique("q_x(α₁, .) is constant")
    found = [r for r in real_roots(poly, (a0, a2), require_simple=False) if a0 < r < a2]
    if len(found) != 1:
        raise NotUnique(f"x*(y) = α₁ has {len(found)} solutions")
    return found[0]


@dataclass
class CriticalCurves:
    ys: np.ndarray
    x_star: np.ndarray
    gamma: np.ndarray
    gamma0: float
    xi: float
    structure: str
    gamma_min: PlanarPoint
    gamma_max: PlanarPoint
    sampled_extrema: List[Tuple[str, float, float]]
    newton_extrema: List[Tuple[str, float]]


def _sampled_extrema(xs: np.ndarray, vs: np.ndarray) -> List[Tuple[str, float, float]]:
    out = []
    dv = np.sign(np.diff(vs))
    for k in range(1, len(dv)):
        if dv[k - 1] < 0 < dv[k]:
            out.append(("min", float(xs[k]), float(vs[k])))
        elif dv[k - 1] > 0 > dv[k]:
            out.append(("max", float(xs[k]), float(vs[k])))
    return out


def newton_map_extrema(sys: SecantSystem, root_index: int = 1) -> List[Tuple[str, float]]:
    """Local extrema of N_p in (α₀, α₂): sign changes of N_p' = p p''/p'^2."""
    a0, a1, a2 = sys.triple(root_index)
    _, inflections = critical_and_inflection_points(sys.p, (a0, a2))
    out = []
    h = 1e-6 * (a2 - a0)
    for c in sorted(set(inflections.as_list() + [a1])):
        try:
            left = newton_map_derivative(sys, c - h)
            right = newton_map_derivative(sys, c + h)
        except CriticalPoint:
            continue
        if left < 0 < right:
            out.append(("min", c))
        elif left > 0 > right:
            out.append(("max", c))
    return out


def critical_curves(sys: SecantSystem, samples: int, root_index: int = 1) -> CriticalCurves:
    """Sample Θ = {(x*(y), y)} and its image Γ = {(y, N_p(x*(y)))} over (α₀, α₂)."""
    a0, a1, a2 = sys.triple(root_index)
    if not one_inflection(sys.p, (a0, a2)):
        raise NotUnique("critical curves need exactly one inflection point in (α₀, α₂)")
    gamma0 = inflection_point(sys, root_index)
    xi = xi_point(sys, root_index)
    ys = a0 + (a2 - a0) * np.arange(1, samples + 1) / (samples + 1)
    xs = np.array([x_star(sys, y, root_index) for y in ys])
    gs = np.array([newton_map(sys, x) for x in xs])

    n_gamma0 = newton_map(sys, gamma0)
    if abs(gamma0 - a1) <= ROOT_RESIDUAL_TOL * (1.0 + abs(a1)):
        structure = "increasing_with_inflection"
        gmin = gmax = PlanarPoint(a1, a1)
    elif gamma0 < a1:
        structure = "min_then_max"
        gmin, gmax = PlanarPoint(gamma0, n_gamma0), PlanarPoint(xi, a1)
    else:
        structure = "max_then_min"
        gmin, gmax = PlanarPoint(xi, a1), PlanarPoint(gamma0, n_gamma0)
    logger.info(f"critical curves: γ₀={gamma0:.10g}, ξ={xi:.10g}, Γ {structure}")
    return CriticalCurves(
        ys=ys,
        x_star=xs,
        gamma=gs,
        gamma0=gamma0,
        xi=xi,
        structure=structure,
        gamma_min=gmin,
        gamma_max=gmax,
        sampled_extrema=_sampled_extrema(ys, gs),
        newton_extrema=newton_map_extrema(sys, root_index),
    )


def theta_curve(sys: SecantSystem, samples: int, root_index: int = 1) -> List[PlanarPoint]:
    cc = critical_curves(sys, samples, root_index)
    return [PlanarPoint(float(x), float(y)) for x, y in zip(cc.x_star, cc.ys)]


def gamma_curve(sys: SecantSystem, samples: int, root_index: int = 1) -> List[PlanarPoint]:
    cc = critical_curves(sys, samples, root_index)
    return [PlanarPoint(float(y), float(g)) for y, g in zip(cc.ys, cc.gamma)]


def jacobian(sys: SecantSystem, pt: Sequence[float]) -> np.ndarray:
    x, y = float(pt[0]), float(pt[1])
    q = q_eval(sys.p, x, y)
    py, dpy = sys.p.eval_with_derivative(y)
    if _is_singular(sys, q, py):
        raise SingularPoint(x, y, q)
    qx = q_x_eval(sys.p, x, y)
    qy = q_y_eval(sys.p, x, y)
    return np.array([
        [0.0, 1.0],
        [py * qx / q ** 2, 1.0 - (dpy * q - py * qy) / q ** 2],
    ])


def jacobian_along_orbit(sys: SecantSystem, pt: Sequence[float], n: int) -> np.ndarray:
    """D(S^n) at pt by the chain rule, latest step leftmost."""
    m = np.eye(2)
    z = PlanarPoint(float(pt[0]), float(pt[1]))
    for _ in range(n):
        m = jacobian(sys, z) @ m
        z = step(sys, z)
    return m


def preimages_in_rect(sys: SecantSystem, target: Sequence[float], rect: Tuple[float, float, float, float]) -> List[PlanarPoint]:
    """Points (w, x₁) of the rectangle with S(w, x₁) = (x₁, y₁).

    ``rect`` is (x_min, x_max, y_min, y_max), interior only.
    """
    x1, y1 = float(target[0]), float(target[1])
    x_min, x_max, y_min, y_max = rect
    px1 = sys.p.eval(x1)
    if abs(y1 - x1) <= ROOT_RESIDUAL_TOL and abs(px1) <= ROOT_RESIDUAL_TOL:
        raise DegenerateTarget(f"every (w, {x1:.12g}) lands on the fixed point")
    if not (y_min < x1 < y_max):
        return []
    q = q_in_x(sys.p, x1)
    poly = Polynomial(tuple((x1 - y1) * c for c in q.coeffs)) if x1 != y1 else Polynomial((0.0,))
    poly = Polynomial(tuple(c - (px1 if i == 0 else 0.0) for i, c in enumerate(poly.coeffs)))
    if poly.degree() < 1:
        return []
    out = []
    for w in real_roots(poly, (x_min, x_max), require_simple=False):
        if not (x_min < w < x_max):
            continue
        if _is_singular(sys, q_eval(sys.p, w, x1), px1):
            continue
        out.append(PlanarPoint(w, x1))
    return out


def count_preimages_by_scan(sys: SecantSystem, target: Sequence[float], rect: Tuple[float, float, float, float], samples: int = 20001) -> int:
    """Brute-force preimage count: sign changes of φ_{x₁}(w) - y₁ on a fine grid,
    skipping sample pairs that straddle a vertical asymptote."""
    x1, y1 = float(target[0]), float(target[1])
    x_min, x_max, y_min, y_max = rect
    if not (y_min < x1 < y_max):
        return 0
    w = np.linspace(x_min, x_max, samples + 2)[1:-1]
    q = q_eval(sys.p, w, x1)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = x1 - sys.p.eval(x1) / q - y1
    same_branch = np.sign(q[:-1]) == np.sign(q[1:])
    crossing = np.sign(f[:-1]) * np.sign(f[1:]) < 0
    return int(np.count_nonzero(same_branch & crossing))
