import json

import pytest

from secantdyn import db
from secantdyn.main import main


def test_roots_of_chebyshev_three(capsys):
    assert main(["roots", "--poly", "cheb:3"]) == 0
    assert capsys.readouterr().out.strip() == "-0.8660254038 0 0.8660254038"


def test_bad_polynomial_is_a_usage_error(capsys):
    assert main(["roots", "--poly", "1,x"]) == 1
    assert "error" in capsys.readouterr().err


def test_double_root_is_a_numerical_error(capsys):
    assert main(["roots", "--poly", "2,-3,0,1"]) == 2
    assert "MultipleRootDetected" in capsys.readouterr().err


def test_unknown_option():
    assert main(["roots", "--poly", "cheb:3", "--nope"]) == 1


def test_orbit_writes_trace(tmp_path, capsys):
    out = tmp_path / "orbit.csv"
    assert main(["orbit", "--poly", "cheb:3", "--seed", "0.05,-0.03", "--out", str(out)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["outcome"] == "converged"
    assert report["root_index"] == 1
    lines = out.read_text().splitlines()
    assert lines[0] == "iter,x,y"
    assert len(lines) == report["iterations"] + 2


def test_orbit_seed_needs_two_values():
    assert main(["orbit", "--poly", "cheb:3", "--seed", "0.5"]) == 1


def test_construct_type_one(tmp_path, capsys):
    path = tmp_path / "built.json"
    assert main(["cycles", "construct", "--type", "I", "--json", str(path)]) == 0
    report = json.loads(path.read_text())
    assert report == json.loads(capsys.readouterr().out)
    assert report["d"] == pytest.approx(2.447213595, abs=1e-8)
    assert report["cycle"]["type"] == "I"
    assert report["newton"]["nodes"][:3] == [1.0, 2.0, 3.0]


def test_construct_rejects_bad_input():
    assert main(["cycles", "construct", "--type", "V"]) == 1
    assert main(["cycles", "construct", "--type", "I", "--base", "1,3,2"]) == 1


def test_find_cycles_of_named_cubic(capsys):
    assert main(["cycles", "find", "--poly", "cubic-i", "--bounds", "0.5,3.5,0.5,3.5", "--density", "32"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["cycles"]
    assert all(c["type"] in ("I", "II", "III", "IV") for c in report["cycles"])


def test_basin_image_and_grid(tmp_path, capsys):
    image = tmp_path / "basin.ppm"
    grid = tmp_path / "grid.bin"
    code = main([
        "basin", "--poly", "cheb:3", "--res", "48", "--workers", "1",
        "--out", str(image), "--grid-out", str(grid), "--overlay", "focal,delta", "--highlight", "1",
    ])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["width"] == 48
    assert image.read_bytes().startswith(b"P6\n48 48\n255\n")

    assert main(["immediate", "--poly", "cheb:3", "--grid", str(grid), "--samples", "100", "--density", "16"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["hole_count"] == 0
    assert report["mask_verified"]


def test_basin_bad_overlay(tmp_path):
    code = main(["basin", "--poly", "cheb:3", "--res", "8", "--workers", "1", "--out", str(tmp_path / "x.ppm"), "--overlay", "stars"])
    assert code == 1


def test_basin_bad_bounds():
    assert main(["basin", "--poly", "cheb:3", "--res", "8", "--bounds", "1,0,0,1"]) == 1


def test_curves_outputs(tmp_path, capsys):
    out = tmp_path / "curves.csv"
    lines_path = tmp_path / "lines.csv"
    code = main(["curves", "--poly", "cheb:3", "--samples", "50", "--res", "64", "--out", str(out), "--polylines", str(lines_path)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["structure"] == "increasing_with_inflection"
    assert len(out.read_text().splitlines()) == 51
    assert "delta_s:0" in lines_path.read_text()


def test_curves_need_internal_root():
    assert main(["curves", "--poly", "cheb:3", "--root", "0"]) == 2


def test_verify_records_run(tmp_path):
    url = f"sqlite:///{tmp_path / 'runs.db'}"
    code = main(["verify", "--quick", "--only", "construction,worked_example", "--db", url])
    assert code == 0
    latest = db.list_runs()[0]
    assert (latest.passed, latest.failed) == (2, 0)
    assert main(["history", "--db", url]) == 0
    assert main(["history", "--db", url, "--run", "1"]) == 0
    assert main(["history", "--db", url, "--run", "99"]) == 1
