"""File formats: binary grid dumps, CSV exports and JSON reports."""
import csv
import json
import logging
import struct
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

import numpy as np

from secantdyn.basins import BasinGrid, check_bounds
from secantdyn.errors import InputError

logger = logging.getLogger(__name__)

GRID_MAGIC = b"SBG1"
GRID_HEADER = struct.Struct("<4sII4d")
CELL_DTYPE = np.dtype([("tag", "u1"), ("iterations", "<u2")])

PathLike = Union[str, Path]


def dump_grid(grid: BasinGrid, path: PathLike) -> None:
    """Little-endian: magic, width, height, bounds as four doubles, then (tag, iterations) per cell row-major."""
    cells = np.empty(grid.tags.size, dtype=CELL_DTYPE)
    cells["tag"] = grid.tags.ravel()
    cells["iterations"] = grid.iterations.ravel()
    with open(path, "wb") as fh:
        fh.write(GRID_HEADER.pack(GRID_MAGIC, grid.width, grid.height, *grid.bounds))
        fh.write(cells.tobytes())
    logger.debug("wrote %dx%d grid to %s", grid.width, grid.height, path)


def load_grid(path: PathLike) -> BasinGrid:
    raw = Path(path).read_bytes()
    if len(raw) < GRID_HEADER.size:
        raise InputError(f"{path}: too short for a grid header")
    magic, width, height, *bounds = GRID_HEADER.unpack_from(raw)
    if magic != GRID_MAGIC:
        raise InputError(f"{path}: bad magic {magic!r}")
    body = raw[GRID_HEADER.size:]
    if len(body) != width * height * CELL_DTYPE.itemsize:
        raise InputError(f"{path}: expected {width}x{height} cells, got {len(body)} bytes")
    cells = np.frombuffer(body, dtype=CELL_DTYPE).reshape(height, width)
    return BasinGrid(check_bounds(bounds), cells["tag"].copy(), cells["iterations"].copy())


def write_orbit_csv(trace: Iterable[Sequence[float]], path: PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "x", "y"])
        for k, (x, y) in enumerate(trace):
            w.writerow([k, repr(float(x)), repr(float(y))])


def write_curves_csv(ys: Sequence[float], x_star: Sequence[float], gamma: Sequence[float], path: PathLike) -> None:
    """Samples of Θ = (x*(y), y) and Γ = (y, N_p(x*(y))) sharing the y column."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", "x_star", "gamma"])
        for row in zip(ys, x_star, gamma):
            w.writerow([repr(float(v)) for v in row])


def write_polylines_csv(polylines: Dict[str, List[np.ndarray]], path: PathLike) -> None:
    """One row per vertex; ``curve_id`` is the name plus the piece number."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["curve_id", "x", "y"])
        for name, pieces in polylines.items():
            for k, piece in enumerate(pieces):
                for x, y in np.asarray(piece).reshape(-1, 2):
                    w.writerow([f"{name}:{k}", repr(float(x)), repr(float(y))])


def read_polylines_csv(path: PathLike) -> Dict[str, np.ndarray]:
    out: Dict[str, list] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["curve_id"], []).append((float(row["x"]), float(row["y"])))
    return {k: np.array(v) for k, v in out.items()}


def to_json(report: Dict) -> str:
    return json.dumps(report, indent=2, default=_json_default)


def write_json(report: Dict, path: PathLike) -> None:
    Path(path).write_text(to_json(report) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"{type(obj).__name__} is not JSON serialisable")
