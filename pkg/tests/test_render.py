import numpy as np
import pytest
from PIL import Image

from secantdyn.basins import TAG_NON_CONVERGED, TAG_SINGULAR, BasinGrid
from secantdyn.errors import InputError
from secantdyn.polynomial import chebyshev, q_eval
from secantdyn.render import (
    DEFAULT_ROOT_COLORS,
    Overlays,
    Palette,
    delta_s_contour,
    render_image,
    render_ppm,
)
from secantdyn.secant_map import SecantSystem


def _grid(tags):
    tags = np.asarray(tags, dtype=np.uint8)
    return BasinGrid((0.0, float(tags.shape[1]), 0.0, float(tags.shape[0])), tags, np.zeros(tags.shape, dtype=np.uint16))


def test_two_pixel_ppm_bytes(tmp_path):
    out = render_ppm(_grid([[0, TAG_NON_CONVERGED]]), None, None, tmp_path / "tiny.ppm")
    data = out.read_bytes()
    assert data == b"P6\n2 1\n255\n" + bytes(DEFAULT_ROOT_COLORS[0]) + b"\x00\x00\x00"


def test_png_by_suffix(tmp_path):
    out = render_ppm(_grid([[0, 1], [2, TAG_SINGULAR]]), None, None, tmp_path / "tiny.png")
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    with Image.open(out) as img:
        assert img.size == (2, 2)
        assert img.getpixel((1, 1)) == (255, 255, 255)


def test_rendering_is_deterministic(tmp_path):
    rng = np.random.default_rng(2)
    grid = _grid(rng.integers(0, 3, size=(20, 30)))
    a = render_ppm(grid, None, None, tmp_path / "a.ppm").read_bytes()
    b = render_ppm(grid, None, None, tmp_path / "b.ppm").read_bytes()
    assert a == b


def test_overlays_are_drawn():
    grid = _grid(np.zeros((11, 11)))
    highlight = np.zeros((11, 11), dtype=bool)
    highlight[0, 0] = True
    palette = Palette(focal=(1, 2, 3), cycle=(4, 5, 6))
    overlays = Overlays(highlight=highlight, focal_points=[(5.5, 5.5)], cycle_points=[(1.5, 1.5)])
    img = render_image(grid, palette, overlays)
    assert img.getpixel((0, 0)) == palette.highlight
    assert img.getpixel((5, 5)) == (1, 2, 3)
    assert img.getpixel((7, 5)) == (1, 2, 3)
    assert img.getpixel((1, 9)) == (4, 5, 6)
    assert img.getpixel((9, 9)) == DEFAULT_ROOT_COLORS[0]


def test_palette_rejects_reserved_colours():
    with pytest.raises(InputError):
        Palette(roots=((0, 0, 0), (10, 10, 10)))
    with pytest.raises(InputError):
        Palette(roots=((10, 10, 10),)).lookup(3)


def test_delta_s_of_chebyshev_three_is_an_ellipse():
    sys = SecantSystem.from_polynomial(chebyshev(3))
    pieces = delta_s_contour(sys, (-1.5, 1.5, -1.5, 1.5), 300)
    assert len(pieces) == 1
    ring = pieces[0]
    assert np.allclose(ring[0], ring[-1])
    assert np.max(np.abs(q_eval(sys.p, ring[:, 0], ring[:, 1]))) < 1e-2
    assert np.max(np.abs(ring[:, 0])) == pytest.approx(1.0, abs=1e-2)
