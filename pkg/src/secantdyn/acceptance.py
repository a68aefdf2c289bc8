"""The ``verify`` suite: numeric checks of the secant-map theory, reported as rows."""
import logging
import math
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from secantdyn import basins, cycles
from secantdyn.errors import SecantError
from secantdyn.polynomial import chebyshev, named_polynomial, q_coefficients, q_eval
from secantdyn.secant_map import (
    SecantSystem,
    count_preimages_by_scan,
    focal_points,
    jacobian,
    landing_to_slope,
    newton_map,
    phi_asymptotes,
    preimages_in_rect,
    slope_to_landing,
    step,
    x_star,
)

logger = logging.getLogger(__name__)

CUBIC_RECT = (0.5, 3.5, 0.5, 3.5)

Check = Callable[["Context"], Tuple[bool, str]]


class Context:
    """Shared settings and cached systems for one verify run."""

    def __init__(self, resolution: int = 512, workers: int = 1, quick: bool = False, seed: int = 0):
        self.resolution = resolution
        self.workers = workers
        self.quick = quick
        self.rng = np.random.default_rng(seed)
        self._systems: Dict[str, SecantSystem] = {}

    def system(self, name: str) -> SecantSystem:
        if name not in self._systems:
            if name.startswith("cheb:"):
                p = chebyshev(int(name[5:]))
            else:
                p = named_polynomial(name)
            self._systems[name] = SecantSystem.from_polynomial(p)
        return self._systems[name]

    def basin(self, name: str, root_index: int, res: Optional[int] = None) -> basins.ImmediateBasin:
        sys = self.system(name)
        res = res or self.resolution
        grid = basins.compute_grid(sys, basins.region_bounds(sys, root_index), res, res, workers=self.workers)
        return basins.immediate_basin(grid, sys, root_index)


def check_cross_ratio_law(ctx: Context) -> Tuple[bool, str]:
    parts = []
    ok = True
    for name in ("cubic-i", "cubic-ii", "cubic-iii", "cubic-iv", "cheb:3"):
        sys = ctx.system(name)
        rect = basins.region_bounds(sys, 1) if name.startswith("cheb") else CUBIC_RECT
        found = cycles.find_four_cycles(sys, rect)
        worst = max((cycles.golden_defect(c.lam) for c in found), default=0.0)
        ok &= worst <= cycles.GOLDEN_TOL
        parts.append(f"{name}: {len(found)} cycle(s), types {sorted({c.cycle_type.value for c in found})}")
    return ok, "; ".join(parts)


def check_construction(ctx: Context) -> Tuple[bool, str]:
    built = cycles.construct_polynomial(cycles.CycleType.I, (1.0, 2.0, 3.0), -1.0)
    c = built.cycle
    expected_p = (2.23606798, 1.118033989, -1.381966011, -1.0)
    expected_newton = (2.23606798, -1.11803390, -0.6909830, 3.27254249)
    ok = (
        abs(c.d - 2.447213595) <= 1e-8
        and all(abs(u - v) <= 1e-6 for u, v in zip(c.p_values, expected_p))
        and all(abs(u - v) <= 1e-6 for u, v in zip(built.interpolant.coefficients, expected_newton))
        and c.residual <= cycles.CLOSURE_TOL
    )
    return ok, f"d={c.d:.10f}, residual={c.residual:.2g}, newton={[round(v, 8) for v in built.interpolant.coefficients]}"


def check_stability(ctx: Context) -> Tuple[bool, str]:
    sys = ctx.system("cubic-i")
    st = cycles.stability(sys, (1.0, 2.0, 3.0, 2.447213595))
    big, small = st.eigenvalues
    ok = abs(big - 483.55) <= 0.01 * 483.55 and abs(small - 0.05) <= 0.005 and st.label == "saddle"
    for v, ref in zip(st.eigenvectors, ((-0.65, -0.76), (-0.75, 0.66))):
        v = np.real(v)
        ok &= min(np.max(np.abs(v - ref)), np.max(np.abs(v + ref))) <= 0.02
    return ok, f"eigenvalues {big:.2f}, {small:.4f} ({st.label})"


def check_simply_connected(ctx: Context) -> Tuple[bool, str]:
    resolutions = (256, 512) if ctx.quick else (256, 512, 1024)
    parts = []
    ok = True
    for name, idx in (("cheb:3", 1), ("cheb:5", 2), ("cubic-i", 1)):
        sys = ctx.system(name)
        holes = basins.hole_count_at(sys, idx, resolutions, workers=ctx.workers)
        ok &= all(h == 0 for h in holes)
        parts.append(f"{name}: holes {holes}")
    return ok, "; ".join(parts)


def check_multiply_connected(ctx: Context) -> Tuple[bool, str]:
    parts = []
    ok = True
    for name in ("quintic-a", "quintic-b"):
        ib = ctx.basin(name, 1, 512)
        ok &= ib.hole_count >= 1
        parts.append(f"{name}: {ib.hole_count} hole(s)")
    return ok, "; ".join(parts)


def check_containment(ctx: Context) -> Tuple[bool, str]:
    cases = [("cheb:3", [1]), ("cheb:4", [1, 2]), ("cheb:5", [1, 2, 3]), ("cheb:11", [5])]
    res = 256 if ctx.quick else ctx.resolution
    parts = []
    ok = True
    for name, indices in cases:
        for idx in indices:
            row = basins.check_containment_in_R(ctx.basin(name, idx, res), ctx.system(name))
            ok &= row["passed"]
            parts.append(f"{name}[{idx}]: {row['cells_outside']} outside")
    return ok, "; ".join(parts)


def check_boundary_structure(ctx: Context) -> Tuple[bool, str]:
    parts = []
    ok = True
    for name in ("cheb:3", "quintic-b"):
        sys = ctx.system(name)
        ib = ctx.basin(name, 1, 512)
        hexagon = basins.check_hexagon_vertices(ib, sys)
        found = [c for c in cycles.find_four_cycles(sys, basins.RegionR.of(sys, 1).bounds)
                 if c.cycle_type is cycles.CycleType.I]
        limit = 2 * ib.grid.cell_diagonal
        best = min((basins.boundary_cycle_distance(ib, c) for c in found), default=math.inf)
        ok &= hexagon["passed"] and best <= limit
        parts.append(f"{name}: hexagon {'ok' if hexagon['passed'] else 'FAIL'}, cycle distance {best:.3g} (limit {limit:.3g})")
    return ok, "; ".join(parts)


def _random_targets(ctx: Context, sys: SecantSystem, n: int) -> np.ndarray:
    lo, hi = basins.RegionR.of(sys, 1).alpha_low, basins.RegionR.of(sys, 1).alpha_high
    return ctx.rng.uniform(lo, hi, size=(n, 2))


def check_preimages(ctx: Context) -> Tuple[bool, str]:
    t3 = ctx.system("cheb:3")
    rect = basins.RegionR.of(t3, 1).bounds
    targets = _random_targets(ctx, t3, 1000 if ctx.quick else 10_000)
    counts = [len(preimages_in_rect(t3, t, rect)) for t in targets]
    agree = sum(
        count_preimages_by_scan(t3, t, rect) == counts[k]
        for k, t in enumerate(targets[:100])
    )
    p2 = ctx.system("quintic-b")
    rect2 = basins.RegionR.of(p2, 1).bounds
    three = next(
        (t for t in _random_targets(ctx, p2, 10_000) if len(preimages_in_rect(p2, t, rect2)) >= 3),
        None,
    )
    ok = max(counts) <= 2 and agree == 100 and three is not None
    shown = f"({three[0]:.4f}, {three[1]:.4f})" if three is not None else "none"
    return ok, f"T3 max preimages {max(counts)}, scan agreement {agree}/100, quintic-b target with 3: {shown}"


def check_worked_example(ctx: Context) -> Tuple[bool, str]:
    sys = ctx.system("cheb:3")
    expected = np.array([[-3.0, 0.0, 4.0], [0.0, 4.0, 0.0], [4.0, 0.0, 0.0]])
    ok = np.array_equal(q_coefficients(sys.p), expected)
    a0, a1, a2 = sys.triple(1)
    ys = np.linspace(a0, a2, 1002)[1:-1]
    worst_x = max(abs(x_star(sys, y) + y / 2) for y in ys)
    ok &= worst_x <= 1e-10
    worst_asym = 0.0
    for y0 in np.linspace(a0, a1, 52)[1:-1]:
        asym = min(phi_asymptotes(sys, y0, (-10.0, 10.0)))
        worst_asym = max(worst_asym, abs(asym + (y0 + math.sqrt(3 * (1 - y0 * y0))) / 2))
    ok &= worst_asym <= 1e-8
    return bool(ok), f"x* error {worst_x:.2g}, asymptote error {worst_asym:.2g}"


def _finite_difference_jacobian(sys: SecantSystem, pt, h: float = 1e-6) -> np.ndarray:
    out = np.zeros((2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fwd = np.array(step(sys, np.asarray(pt) + e))
        bwd = np.array(step(sys, np.asarray(pt) - e))
        out[:, k] = (fwd - bwd) / (2 * h)
    return out


def check_identities(ctx: Context) -> Tuple[bool, str]:
    sys = ctx.system("cheb:5")
    p = sys.p
    x, y = ctx.rng.uniform(-1, 1, size=(2, 1000))
    q = q_eval(p, x, y)
    scale = 1 + np.abs(p.eval(x)) + np.abs(p.eval(y))
    telescoping = np.max(np.abs(q * (x - y) - (p.eval(x) - p.eval(y))) / scale)
    symmetry = np.max(np.abs(q - q_eval(p, y, x)))
    diagonal = np.max(np.abs(q_eval(p, x, x) - p.derivative().eval(x)))

    newton_gap = 0.0
    for t in x[:200]:
        try:
            n = newton_map(sys, t)
            newton_gap = max(newton_gap, abs(step(sys, (t, t)).y - n) / (1 + abs(n)))
        except SecantError:
            continue

    jac_gap = 0.0
    for pt in zip(x[:100], y[:100]):
        try:
            exact = jacobian(sys, pt)
            gap = np.max(np.abs(exact - _finite_difference_jacobian(sys, pt)))
            jac_gap = max(jac_gap, gap / (1 + np.max(np.abs(exact))))
        except SecantError:
            continue

    mobius_gap = 0.0
    for f in focal_points(sys):
        for m in (-2.0, -0.5, 0.3, 1.7):
            try:
                mobius_gap = max(mobius_gap, abs(landing_to_slope(sys, f, slope_to_landing(sys, f, m)) - m))
            except SecantError:
                continue

    quads = ctx.rng.uniform(-5, 5, size=(1000, 4))
    ratio_gap = 0.0
    for a, b, c, d in quads:
        lam = cycles.cross_ratio(a, b, c, d)
        ratio_gap = max(
            ratio_gap,
            abs(cycles.cross_ratio(a, d, c, b) - lam / (lam - 1)) / (1 + abs(lam / (lam - 1))),
            abs(cycles.cross_ratio(d, c, b, a) - lam) / (1 + abs(lam)),
        )
    ok = (telescoping <= 1e-10 and symmetry <= 1e-10 and diagonal <= 1e-12
          and newton_gap <= 1e-12 and jac_gap <= 1e-4 and mobius_gap <= 1e-9 and ratio_gap <= 1e-10)
    detail = (f"telescoping {telescoping:.1g}, symmetry {symmetry:.1g}, diagonal {diagonal:.1g}, "
              f"newton {newton_gap:.1g}, jacobian {jac_gap:.1g}, mobius {mobius_gap:.1g}, cross ratio {ratio_gap:.1g}")
    return bool(ok), detail


CHECKS: List[Tuple[str, Check]] = [
    ("cross_ratio_law", check_cross_ratio_law),
    ("construction", check_construction),
    ("stability", check_stability),
    ("simply_connected", check_simply_connected),
    ("multiply_connected", check_multiply_connected),
    ("containment", check_containment),
    ("boundary_structure", check_boundary_structure),
    ("preimages", check_preimages),
    ("worked_example", check_worked_example),
    ("identities", check_identities),
]


def run_checks(resolution: int = 512, workers: int = 1, quick: bool = False, only: Optional[Sequence[str]] = None) -> Dict[str, object]:
    """Run the verify suite.

    Returns a dict with one row per check (name, passed, detail, elapsed)
    and a summary with pass/fail totals.
    """
    ctx = Context(resolution=resolution, workers=workers, quick=quick)
    rows: List[Dict[str, object]] = []
    for name, fn in CHECKS:
        if only and name not in only:
            continue
        t0 = time.perf_counter()
        try:
            passed, detail = fn(ctx)
        except SecantError as e:
            passed, detail = False, f"{type(e).__name__}: {e}"
        elapsed = time.perf_counter() - t0
        logger.info(f"{name}: {'pass' if passed else 'FAIL'} in {elapsed:.1f}s")
        rows.append({"name": name, "passed": bool(passed), "detail": detail, "elapsed": elapsed})

    passed = sum(1 for r in rows if r["passed"])
    return {
        "rows": rows,
        "summary": {"passed": passed, "failed": len(rows) - passed, "resolution": resolution, "quick": quick},
    }
