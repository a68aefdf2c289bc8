"""Basins of attraction on a raster, immediate basins and their checks."""
import logging
import math
import multiprocessing as mp
import os
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from secantdyn.errors import InvalidBounds, NotUnique, SeedNotInBasin, SingularPoint
from secantdyn.secant_map import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    NON_CONVERGED,
    SINGULAR,
    PlanarPoint,
    SecantSystem,
    focal_points,
    inflection_point,
    iterate_batch,
    newton_map,
    step,
    xi_point,
)

logger = logging.getLogger(__name__)

TAG_NON_CONVERGED = 254
TAG_SINGULAR = 255
MAX_ROOTS = 254

Bounds = Tuple[float, float, float, float]


def _default_workers() -> int:
    raw = os.getenv("SECANTDYN_WORKERS")
    if not raw:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("Invalid SECANTDYN_WORKERS; must be a positive integer")
        return os.cpu_count() or 1


DEFAULT_WORKERS = _default_workers()

# 4-connectivity for masks and for holes
CROSS = ndimage.generate_binary_structure(2, 1)

# other basins reach focal points in wedges thinner than a cell; their
# cut-off tips leave pockets that are not holes of the basin
FOCAL_LEAK_CELLS = 3.0
HOLE_AREA_FRACTION = 5e-3


def check_bounds(bounds: Sequence[float]) -> Bounds:
    if len(bounds) != 4:
        raise InvalidBounds(f"bounds need four values x_min,x_max,y_min,y_max, got {len(bounds)}")
    x_min, x_max, y_min, y_max = (float(v) for v in bounds)
    if not all(math.isfinite(v) for v in (x_min, x_max, y_min, y_max)):
        raise InvalidBounds("bounds must be finite")
    if not (x_max > x_min and y_max > y_min):
        raise InvalidBounds(f"empty rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}]")
    return x_min, x_max, y_min, y_max


@dataclass(frozen=True)
class RegionR:
    """The open square spanned by the neighbours of an internal root."""
    alpha_low: float
    alpha_high: float

    @classmethod
    def of(cls, sys: SecantSystem, root_index: int) -> "RegionR":
        a0, _, a2 = sys.triple(root_index)
        return cls(a0, a2)

    def contains(self, x, y):
        return (self.alpha_low < x) & (x < self.alpha_high) & (self.alpha_low < y) & (y < self.alpha_high)

    def excess(self, x, y):
        """Euclidean distance outside the square (0 inside)."""
        dx = np.maximum(np.maximum(self.alpha_low - x, x - self.alpha_high), 0.0)
        dy = np.maximum(np.maximum(self.alpha_low - y, y - self.alpha_high), 0.0)
        return np.hypot(dx, dy)

    @property
    def bounds(self) -> Bounds:
        return self.alpha_low, self.alpha_high, self.alpha_low, self.alpha_high


def region_bounds(sys: SecantSystem, root_index: int, margin: float = 0.05) -> Bounds:
    r = RegionR.of(sys, root_index)
    pad = margin * (r.alpha_high - r.alpha_low)
    return r.alpha_low - pad, r.alpha_high + pad, r.alpha_low - pad, r.alpha_high + pad


@dataclass
class BasinGrid:
    """Tags and iteration counts per cell; row 0 is the top edge (y_max)."""
    bounds: Bounds
    tags: np.ndarray
    iterations: np.ndarray
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL

    @property
    def width(self) -> int:
        return self.tags.shape[1]

    @property
    def height(self) -> int:
        return self.tags.shape[0]

    @property
    def cell_size(self) -> Tuple[float, float]:
        x_min, x_max, y_min, y_max = self.bounds
        return (x_max - x_min) / self.width, (y_max - y_min) / self.height

    @property
    def cell_diagonal(self) -> float:
        return math.hypot(*self.cell_size)

    def centers(self) -> Tuple[np.ndarray, np.ndarray]:
        x_min, _, _, y_max = self.bounds
        dx, dy = self.cell_size
        xs = x_min + (np.arange(self.width) + 0.5) * dx
        ys = y_max - (np.arange(self.height) + 0.5) * dy
        return np.meshgrid(xs, ys)

    def center_of(self, row: int, col: int) -> PlanarPoint:
        x_min, _, _, y_max = self.bounds
        dx, dy = self.cell_size
        return PlanarPoint(x_min + (col + 0.5) * dx, y_max - (row + 0.5) * dy)

    def cell_of(self, x: float, y: float) -> Optional[Tuple[int, int]]:
        x_min, x_max, y_min, y_max = self.bounds
        if not (x_min <= x <= x_max and y_min <= y <= y_max):
            return None
        dx, dy = self.cell_size
        col = min(int((x - x_min) / dx), self.width - 1)
        row = min(int((y_max - y) / dy), self.height - 1)
        return row, col

    def root_fractions(self) -> Dict[str, float]:
        total = self.tags.size
        values, counts = np.unique(self.tags, return_counts=True)
        out = {}
        for v, c in zip(values, counts):
            if v == TAG_NON_CONVERGED:
                key = "non_converged"
            elif v == TAG_SINGULAR:
                key = "singular"
            else:
                key = f"root_{int(v)}"
            out[key] = c / total
        return out

    def summary(self) -> Dict:
        return {
            "bounds": list(self.bounds),
            "width": self.width,
            "height": self.height,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "fractions": self.root_fractions(),
            "mean_iterations": float(self.iterations.mean()),
        }


def _codes_to_tags(codes: np.ndarray) -> np.ndarray:
    tags = codes.astype(np.int16)
    tags[codes == NON_CONVERGED] = TAG_NON_CONVERGED
    tags[codes == SINGULAR] = TAG_SINGULAR
    return tags.astype(np.uint8)


def _classify_rows(sys: SecantSystem, bounds: Bounds, width: int, height: int, row0: int, row1: int, max_iter: int, tol: float):
    x_min, x_max, y_min, y_max = bounds
    dx = (x_max - x_min) / width
    dy = (y_max - y_min) / height
    xs = x_min + (np.arange(width) + 0.5) * dx
    ys = y_max - (np.arange(row0, row1) + 0.5) * dy
    X, Y = np.meshgrid(xs, ys)
    codes, iters = iterate_batch(sys, X, Y, max_iter=max_iter, tol=tol)
    shape = (row1 - row0, width)
    return _codes_to_tags(codes).reshape(shape), iters.reshape(shape)


def compute_grid(
    sys: SecantSystem,
    bounds: Sequence[float],
    width: int,
    height: int,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> BasinGrid:
    """Classify every cell centre by its orbit under S."""
    bounds = check_bounds(bounds)
    if width < 1 or height < 1:
        raise InvalidBounds(f"grid must have at least one cell, got {width}x{height}")
    if len(sys.roots) > MAX_ROOTS:
        raise InvalidBounds(f"at most {MAX_ROOTS} roots fit in a cell tag")
    if max_iter > np.iinfo(np.uint16).max:
        raise InvalidBounds("max_iter does not fit the 16-bit iteration count")

    workers = max(1, min(workers, height))
    band = max(1, math.ceil(height / (4 * workers)))
    jobs = [
        (sys, bounds, width, height, r, min(r + band, height), max_iter, tol)
        for r in range(0, height, band)
    ]
    if workers == 1:
        parts = [_classify_rows(*job) for job in jobs]
    else:
        with mp.Pool(processes=workers) as pool:
            parts = pool.starmap(_classify_rows, jobs)

    tags = np.vstack([t for t, _ in parts])
    iterations = np.vstack([i for _, i in parts]).astype(np.uint16)
    grid = BasinGrid(bounds, tags, iterations, max_iter, tol)
    logger.info(f"grid {width}x{height} over {bounds} computed with {workers} worker(s)")
    return grid


def flood_fill(cells: np.ndarray, start: Tuple[int, int]) -> np.ndarray:
    """4-connected breadth-first fill of the True cells reachable from ``start``."""
    h, w = cells.shape
    filled = np.zeros_like(cells, dtype=bool)
    if not cells[start]:
        return filled
    queue = deque([start])
    filled[start] = True
    while queue:
        r, c = queue.popleft()
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= nr < h and 0 <= nc < w and cells[nr, nc] and not filled[nr, nc]:
                filled[nr, nc] = True
                queue.append((nr, nc))
    return filled


def count_holes(mask: np.ndarray, min_area: int = 1, open_cells: Optional[np.ndarray] = None, min_fraction: float = 0.0) -> int:
    """Components of the complement inside the padded bounding box that do not reach its frame.

    Components touching ``open_cells`` count as outside. Components smaller than
    ``min_area`` cells or ``min_fraction`` of the box are ignored.
    """
    rows = np.any(mask, axis=1)
    cols = np.any(mask, axis=0)
    if not rows.any():
        return 0
    r0, r1 = np.where(rows)[0][[0, -1]]
    c0, c1 = np.where(cols)[0][[0, -1]]
    box = np.pad(mask[r0:r1 + 1, c0:c1 + 1], 1, constant_values=False)
    labels, n = ndimage.label(~box, structure=CROSS)
    if n == 0:
        return 0
    outside = set(np.unique(np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])).tolist())
    if open_cells is not None:
        leaks = np.pad(open_cells[r0:r1 + 1, c0:c1 + 1], 1, constant_values=False)
        outside |= set(np.unique(labels[leaks & (labels > 0)]).tolist())
    floor = max(min_area, math.ceil(min_fraction * (r1 - r0 + 1) * (c1 - c0 + 1)))
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    return sum(1 for lab in range(1, n + 1) if lab not in outside and areas[lab] >= floor)


def default_min_hole_area(grid: BasinGrid) -> int:
    return 2 if grid.width * grid.height < 512 * 512 else 1


def focal_leaks(grid: BasinGrid, sys: SecantSystem, cells: float = FOCAL_LEAK_CELLS) -> np.ndarray:
    """Cells within ``cells`` cell diagonals of any focal point."""
    X, Y = grid.centers()
    radius = cells * grid.cell_diagonal
    x_min, x_max, y_min, y_max = grid.bounds
    out = np.zeros(X.shape, dtype=bool)
    for f in focal_points(sys):
        fx, fy = f.location
        if x_min - radius <= fx <= x_max + radius and y_min - radius <= fy <= y_max + radius:
            out |= np.hypot(X - fx, Y - fy) <= radius
    return out


@dataclass
class ImmediateBasin:
    root_index: int
    mask: np.ndarray
    hole_count: int
    boundary_cells: np.ndarray
    grid: BasinGrid
    seed_cell: Tuple[int, int]

    @property
    def area(self) -> int:
        return int(self.mask.sum())

    @property
    def touches_frame(self) -> bool:
        m = self.mask
        return bool(m[0].any() or m[-1].any() or m[:, 0].any() or m[:, -1].any())

    def boundary_points(self) -> np.ndarray:
        if len(self.boundary_cells) == 0:
            return np.zeros((0, 2))
        return np.array([self.grid.center_of(r, c) for r, c in self.boundary_cells])

    def contains_point(self, x: float, y: float, slack_cells: int = 0) -> bool:
        cell = self.grid.cell_of(x, y)
        if cell is None:
            return False
        if slack_cells == 0:
            return bool(self.mask[cell])
        r, c = cell
        s = slack_cells
        return bool(self.mask[max(r - s, 0):r + s + 1, max(c - s, 0):c + s + 1].any())


def immediate_basin(
    grid: BasinGrid,
    sys: SecantSystem,
    root_index: int,
    min_hole_area: Optional[int] = None,
    hole_fraction: float = HOLE_AREA_FRACTION,
    focal_cells: float = FOCAL_LEAK_CELLS,
) -> ImmediateBasin:
    """The 4-connected component of root ``root_index``'s cells containing (α, α)."""
    alpha = sys.roots[root_index]
    seed = grid.cell_of(alpha, alpha)
    if seed is None:
        raise SeedNotInBasin(f"({alpha:.10g}, {alpha:.10g}) lies outside the grid bounds")
    if grid.tags[seed] != root_index:
        raise SeedNotInBasin(f"cell {seed} of ({alpha:.10g}, {alpha:.10g}) is tagged {int(grid.tags[seed])}")

    labels, _ = ndimage.label(grid.tags == root_index, structure=CROSS)
    mask = labels == labels[seed]

    if min_hole_area is None:
        min_hole_area = default_min_hole_area(grid)
    holes = count_holes(mask, min_hole_area, focal_leaks(grid, sys, focal_cells), hole_fraction)
    eroded = ndimage.binary_erosion(mask, structure=CROSS, border_value=0)
    boundary = np.argwhere(mask & ~eroded)
    ib = ImmediateBasin(root_index, mask, holes, boundary, grid, seed)
    if ib.touches_frame:
        logger.warning("immediate basin reaches the grid frame; it may be truncated")
    logger.info(f"immediate basin of root {root_index}: {ib.area} cells, {holes} hole(s)")
    return ib


def verify_mask(ib: ImmediateBasin) -> bool:
    """Recompute the mask with an independent breadth-first fill."""
    again = flood_fill(ib.grid.tags == ib.root_index, ib.seed_cell)
    return bool(np.array_equal(again, ib.mask))


def check_containment_in_R(ib: ImmediateBasin, sys: SecantSystem) -> Dict:
    if not sys.is_internal(ib.root_index):
        return {
            "name": "containment",
            "passed": False,
            "max_violation": None,
            "cells_outside": None,
            "note": "external root: the immediate basin is unbounded, check not applicable",
        }
    region = RegionR.of(sys, ib.root_index)
    X, Y = ib.grid.centers()
    excess = region.excess(X[ib.mask], Y[ib.mask])
    slack = ib.grid.cell_diagonal
    outside = int(np.count_nonzero(excess > slack))
    return {
        "name": "containment",
        "passed": outside == 0,
        "max_violation": float(excess.max()) if excess.size else 0.0,
        "cells_outside": outside,
        "note": "basin reaches the grid frame" if ib.touches_frame else "",
    }


def _focal_triple(sys: SecantSystem, root_index: int):
    idx = {root_index - 1, root_index, root_index + 1}
    return [f for f in focal_points(sys) if f.i in idx and f.j in idx]


def check_hexagon_vertices(ib: ImmediateBasin, sys: SecantSystem, cells: float = 2.0) -> Dict:
    """Distance from each of the six focal points of the triple to the nearest boundary cell."""
    sys.triple(ib.root_index)
    tree = cKDTree(ib.boundary_points())
    focal = _focal_triple(sys, ib.root_index)
    dist, _ = tree.query([f.location for f in focal])
    limit = cells * ib.grid.cell_diagonal
    distances = {f"Q{f.i}{f.j}": float(d) for f, d in zip(focal, np.atleast_1d(dist))}
    return {
        "name": "hexagon_vertices",
        "passed": all(d <= limit for d in distances.values()),
        "distances": distances,
        "limit": limit,
    }


def boundary_distance(ib: ImmediateBasin, points: Sequence[Sequence[float]]) -> np.ndarray:
    tree = cKDTree(ib.boundary_points())
    dist, _ = tree.query(np.asarray(points, dtype=float).reshape(-1, 2))
    return np.atleast_1d(dist)


def boundary_cycle_distance(ib: ImmediateBasin, cycle) -> float:
    """Largest distance from the cycle's planar points to the basin boundary."""
    points = cycle.points if hasattr(cycle, "points") else cycle
    return float(boundary_distance(ib, points).max())


def forward_invariance_check(ib: ImmediateBasin, sys: SecantSystem, sample_count: int = 10_000, seed: int = 0) -> Dict:
    """Map random mask cells by S and count images landing outside the mask (1-cell slack)."""
    if ib.hole_count > 0:
        return {
            "name": "forward_invariance",
            "status": "skipped",
            "reason": f"basin has {ib.hole_count} hole(s); invariance is only claimed for simply connected basins",
        }
    rng = np.random.default_rng(seed)
    cells = np.argwhere(ib.mask)
    picks = cells[rng.choice(len(cells), size=min(sample_count, len(cells)), replace=False)]
    widened = ndimage.binary_dilation(ib.mask, structure=np.ones((3, 3), dtype=bool))
    violations = 0
    singular = 0
    for r, c in picks:
        try:
            img = step(sys, ib.grid.center_of(r, c))
        except SingularPoint:
            singular += 1
            continue
        cell = ib.grid.cell_of(img.x, img.y)
        if cell is None or not widened[cell]:
            violations += 1
    return {
        "name": "forward_invariance",
        "status": "ok",
        "samples": int(len(picks)),
        "violations": violations,
        "singular": singular,
    }


def critical_points_in_basin(ib: ImmediateBasin, sys: SecantSystem) -> Dict:
    """(γ₀, N_p(γ₀)) and (ξ, α₁) must sit in the immediate basin."""
    _, a1, _ = sys.triple(ib.root_index)
    try:
        gamma0 = inflection_point(sys, ib.root_index)
        xi = xi_point(sys, ib.root_index)
    except NotUnique as e:
        return {"name": "critical_points", "passed": False, "note": str(e)}
    pts = {"gamma0": PlanarPoint(gamma0, newton_map(sys, gamma0)), "xi": PlanarPoint(xi, a1)}
    inside = {k: ib.contains_point(p.x, p.y, slack_cells=1) for k, p in pts.items()}
    return {
        "name": "critical_points",
        "passed": all(inside.values()),
        "points": {k: list(p) for k, p in pts.items()},
        "inside": inside,
    }


def axis_segments_check(ib: ImmediateBasin, sys: SecantSystem, focal_cells: float = 2.0) -> Dict:
    """Cells on x = α₁ and y = α₁ inside R lie in the mask, away from focal points."""
    a0, a1, a2 = sys.triple(ib.root_index)
    grid = ib.grid
    anchor = grid.cell_of(a1, a1)
    if anchor is None:
        return {"name": "axis_segments", "passed": False, "note": "α₁ outside the grid"}
    row, col = anchor
    X, Y = grid.centers()
    region = RegionR(a0, a2)
    focal = np.array([f.location for f in _focal_triple(sys, ib.root_index)])
    near_focal = np.zeros(X.shape, dtype=bool)
    for fx, fy in focal:
        near_focal |= np.hypot(X - fx, Y - fy) <= focal_cells * grid.cell_diagonal

    line = np.zeros(X.shape, dtype=bool)
    line[:, col] = True
    line[row, :] = True
    wanted = line & region.contains(X, Y) & ~near_focal
    missing = int(np.count_nonzero(wanted & ~ib.mask))
    return {
        "name": "axis_segments",
        "passed": missing == 0,
        "checked": int(wanted.sum()),
        "missing": missing,
    }


def hole_count_at(sys: SecantSystem, root_index: int, resolutions: Sequence[int], bounds: Optional[Bounds] = None, workers: int = 1) -> List[int]:
    """hole_count of the same immediate basin at several square resolutions."""
    if bounds is None:
        bounds = region_bounds(sys, root_index)
    out = []
    for res in resolutions:
        grid = compute_grid(sys, bounds, res, res, workers=workers)
        out.append(immediate_basin(grid, sys, root_index).hole_count)
    return out
