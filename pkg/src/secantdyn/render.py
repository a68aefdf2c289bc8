"""Raster images of basin grids with overlays."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image, ImageDraw
from skimage import measure

from secantdyn.basins import TAG_NON_CONVERGED, TAG_SINGULAR, BasinGrid, check_bounds
from secantdyn.errors import InputError
from secantdyn.polynomial import q_eval
from secantdyn.secant_map import SecantSystem

logger = logging.getLogger(__name__)

RGB = Tuple[int, int, int]

DEFAULT_ROOT_COLORS: Tuple[RGB, ...] = (
    (230, 85, 13),
    (49, 130, 189),
    (49, 163, 84),
    (117, 107, 177),
    (253, 174, 107),
    (158, 202, 225),
    (161, 217, 155),
    (188, 189, 220),
    (214, 97, 107),
    (231, 203, 148),
    (140, 109, 49),
    (99, 121, 57),
)


@dataclass(frozen=True)
class Palette:
    roots: Tuple[RGB, ...] = DEFAULT_ROOT_COLORS
    non_converged: RGB = (0, 0, 0)
    singular: RGB = (255, 255, 255)
    highlight: RGB = (255, 237, 160)
    delta_s: RGB = (255, 255, 255)
    curves: RGB = (40, 40, 40)
    focal: RGB = (0, 0, 0)
    cycle: RGB = (0, 0, 0)

    def __post_init__(self):
        reserved = {self.non_converged, self.singular}
        if reserved & set(self.roots):
            raise InputError("root colours must differ from the non-converged and singular colours")

    def lookup(self, n_roots: int) -> np.ndarray:
        if n_roots > len(self.roots):
            raise InputError(f"palette has {len(self.roots)} root colours, grid needs {n_roots}")
        lut = np.zeros((256, 3), dtype=np.uint8)
        lut[:len(self.roots)] = self.roots
        lut[TAG_NON_CONVERGED] = self.non_converged
        lut[TAG_SINGULAR] = self.singular
        return lut


@dataclass
class Overlays:
    highlight: Optional[np.ndarray] = None
    delta_s: List[np.ndarray] = field(default_factory=list)
    curves: Dict[str, np.ndarray] = field(default_factory=dict)
    focal_points: List[Tuple[float, float]] = field(default_factory=list)
    cycle_points: List[Tuple[float, float]] = field(default_factory=list)


def _to_pixel(grid: BasinGrid, x: float, y: float) -> Tuple[int, int]:
    x_min, _, _, y_max = grid.bounds
    dx, dy = grid.cell_size
    return int(round((x - x_min) / dx - 0.5)), int(round((y_max - y) / dy - 0.5))


def _polyline(draw: ImageDraw.ImageDraw, grid: BasinGrid, pts: np.ndarray, color: RGB) -> None:
    pixels = [_to_pixel(grid, x, y) for x, y in np.asarray(pts).reshape(-1, 2)]
    if len(pixels) == 1:
        draw.point(pixels, fill=color)
    elif pixels:
        draw.line(pixels, fill=color, width=1)


def render_image(grid: BasinGrid, palette: Optional[Palette] = None, overlays: Optional[Overlays] = None, n_roots: Optional[int] = None) -> Image.Image:
    palette = palette or Palette()
    overlays = overlays or Overlays()
    if n_roots is None:
        roots_seen = grid.tags[grid.tags < TAG_NON_CONVERGED]
        n_roots = int(roots_seen.max()) + 1 if roots_seen.size else 0
    rgb = palette.lookup(n_roots)[grid.tags]
    if overlays.highlight is not None:
        rgb[overlays.highlight] = palette.highlight
    img = Image.fromarray(rgb)
    draw = ImageDraw.Draw(img)

    for piece in overlays.delta_s:
        _polyline(draw, grid, piece, palette.delta_s)
    for pts in overlays.curves.values():
        _polyline(draw, grid, pts, palette.curves)
    for x, y in overlays.focal_points:
        px, py = _to_pixel(grid, x, y)
        draw.line([(px - 2, py), (px + 2, py)], fill=palette.focal)
        draw.line([(px, py - 2), (px, py + 2)], fill=palette.focal)
    for x, y in overlays.cycle_points:
        px, py = _to_pixel(grid, x, y)
        draw.rectangle([px - 1, py - 1, px + 1, py + 1], fill=palette.cycle)
    return img


def render_ppm(grid: BasinGrid, palette: Optional[Palette], overlays: Optional[Overlays], out_path: Union[str, Path], n_roots: Optional[int] = None) -> Path:
    """Write a binary PPM (or PNG when the suffix says so)."""
    out_path = Path(out_path)
    img = render_image(grid, palette, overlays, n_roots)
    fmt = "PNG" if out_path.suffix.lower() == ".png" else "PPM"
    img.save(out_path, format=fmt)
    logger.info(f"wrote {grid.width}x{grid.height} {fmt} to {out_path}")
    return out_path


def delta_s_contour(sys: SecantSystem, bounds: Sequence[float], resolution: int) -> List[np.ndarray]:
    """Zero set of q(x, y) by marching squares on a (resolution+1)^2 lattice.

    Each polyline is an (n, 2) array of (x, y) vertices.
    """
    x_min, x_max, y_min, y_max = check_bounds(bounds)
    xs = np.linspace(x_min, x_max, resolution + 1)
    ys = np.linspace(y_min, y_max, resolution + 1)
    X, Y = np.meshgrid(xs, ys)
    Q = q_eval(sys.p, X, Y)
    out = []
    for c in measure.find_contours(Q, 0.0):
        rows, cols = c[:, 0], c[:, 1]
        out.append(np.column_stack([
            x_min + cols * (x_max - x_min) / resolution,
            y_min + rows * (y_max - y_min) / resolution,
        ]))
    logger.debug("δ_S: %d polyline(s) at resolution %d", len(out), resolution)
    return out
