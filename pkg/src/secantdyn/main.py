import logging
from pathlib import Path
from typing import List, Optional, Sequence

import click
import numpy as np
import typer
from rich.console import Console
from rich.table import Table
from typer import Typer

from secantdyn import basins, cycles, db, render
from secantdyn.errors import InputError, NumericalError
from secantdyn.io import dump_grid, load_grid, to_json, write_curves_csv, write_orbit_csv, write_polylines_csv, write_json
from secantdyn.polynomial import parse_polynomial
from secantdyn.secant_map import (
    DEFAULT_MAX_ITER,
    DEFAULT_SING_TOL,
    DEFAULT_TOL,
    SecantSystem,
    critical_curves,
    focal_points,
    orbit as run_orbit,
)

logger = logging.getLogger(__name__)

cli = Typer(help="Secant-method dynamics on the real plane.")
cycles_cli = Typer(help="Find, classify and construct 4-cycles.")
cli.add_typer(cycles_cli, name="cycles")

err_console = Console(stderr=True)
console = Console()


@cli.callback()
def setup(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging")):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO)


def _floats(text: str, count: Optional[int], what: str) -> List[float]:
    try:
        values = [float(s) for s in text.split(",")]
    except ValueError:
        raise typer.BadParameter(f"{what} must be comma-separated numbers, got {text!r}")
    if count is not None and len(values) != count:
        raise typer.BadParameter(f"{what} needs {count} values, got {len(values)}")
    return values


def _system(poly: str, sing_tol: float = DEFAULT_SING_TOL) -> SecantSystem:
    return SecantSystem.from_polynomial(parse_polynomial(poly), sing_tol=sing_tol)


def _emit(report: dict, json_out: Optional[Path]) -> None:
    if json_out:
        write_json(report, json_out)
    typer.echo(to_json(report))


@cli.command(name="roots")
def roots(poly: str = typer.Option(..., "--poly", help="Coefficients, cheb:k, newton:... or a named polynomial")):
    """Print the simple real roots, ascending."""
    sys = _system(poly)
    typer.echo(" ".join("0" if abs(r) < 1e-12 else f"{r:.10g}" for r in sys.roots))


@cli.command(name="orbit")
def orbit(
    poly: str = typer.Option(..., "--poly"),
    seed: str = typer.Option(..., "--seed", help="x,y"),
    max_iter: int = typer.Option(DEFAULT_MAX_ITER, "--max-iter"),
    tol: float = typer.Option(DEFAULT_TOL, "--tol"),
    sing_tol: float = typer.Option(DEFAULT_SING_TOL, "--sing-tol"),
    out: Optional[Path] = typer.Option(None, "--out", help="CSV trace iter,x,y"),
):
    """Iterate the secant map from one seed."""
    sys = _system(poly, sing_tol)
    res = run_orbit(sys, _floats(seed, 2, "--seed"), max_iter=max_iter, tol=tol, record_trace=True)
    if out:
        write_orbit_csv(res.trace, out)
    typer.echo(to_json({
        "outcome": res.outcome.value,
        "root_index": res.root_index,
        "root": sys.roots[res.root_index] if res.root_index is not None else None,
        "iterations": res.iterations,
        "final": list(res.final),
    }))


def _overlays(sys: SecantSystem, grid: basins.BasinGrid, names: Sequence[str], root: int, highlight: Optional[int]) -> render.Overlays:
    ov = render.Overlays()
    bad = set(names) - {"focal", "cycles", "delta", "curves"}
    if bad:
        raise typer.BadParameter(f"unknown overlay(s): {', '.join(sorted(bad))}")
    if highlight is not None:
        ov.highlight = basins.immediate_basin(grid, sys, highlight).mask
    if "delta" in names:
        ov.delta_s = render.delta_s_contour(sys, grid.bounds, max(grid.width, grid.height))
    if "curves" in names:
        cc = critical_curves(sys, 2000, root)
        ov.curves = {"theta": np.column_stack([cc.x_star, cc.ys]), "gamma": np.column_stack([cc.ys, cc.gamma])}
    if "focal" in names:
        ov.focal_points = [f.location for f in focal_points(sys)]
    if "cycles" in names:
        for c in cycles.find_four_cycles(sys, grid.bounds):
            ov.cycle_points.extend(c.points)
    return ov


@cli.command(name="basin")
def basin(
    poly: str = typer.Option(..., "--poly"),
    bounds: str = typer.Option("-1.5,1.5,-1.5,1.5", "--bounds", help="x_min,x_max,y_min,y_max"),
    res: int = typer.Option(512, "--res"),
    max_iter: int = typer.Option(DEFAULT_MAX_ITER, "--max-iter"),
    tol: float = typer.Option(DEFAULT_TOL, "--tol"),
    workers: int = typer.Option(basins.DEFAULT_WORKERS, "--workers"),
    out: Optional[Path] = typer.Option(None, "--out", help="Image path (.ppm or .png)"),
    grid_out: Optional[Path] = typer.Option(None, "--grid-out", help="Binary grid dump"),
    overlay: str = typer.Option("", "--overlay", help="Comma list of focal,cycles,delta,curves"),
    highlight: Optional[int] = typer.Option(None, "--highlight", help="Root index whose immediate basin is highlighted"),
    root: int = typer.Option(1, "--root", help="Internal root for the curves overlay"),
    json_out: Optional[Path] = typer.Option(None, "--json"),
):
    """Classify a grid of seeds by the root their orbit reaches."""
    sys = _system(poly)
    grid = basins.compute_grid(sys, _floats(bounds, 4, "--bounds"), res, res, max_iter, tol, workers)
    if grid_out:
        dump_grid(grid, grid_out)
    if out:
        names = [s for s in overlay.split(",") if s]
        render.render_ppm(grid, render.Palette(), _overlays(sys, grid, names, root, highlight), out, len(sys.roots))
    report = grid.summary()
    report["roots"] = sys.roots.as_list()
    _emit(report, json_out)


@cli.command(name="immediate")
def immediate(
    poly: str = typer.Option(..., "--poly"),
    root: int = typer.Option(1, "--root"),
    res: int = typer.Option(512, "--res"),
    bounds: Optional[str] = typer.Option(None, "--bounds", help="Defaults to the root's square R plus a margin"),
    max_iter: int = typer.Option(DEFAULT_MAX_ITER, "--max-iter"),
    tol: float = typer.Option(DEFAULT_TOL, "--tol"),
    workers: int = typer.Option(basins.DEFAULT_WORKERS, "--workers"),
    grid_path: Optional[Path] = typer.Option(None, "--grid", help="Reuse a binary grid dump"),
    samples: int = typer.Option(10_000, "--samples", help="Forward-invariance samples"),
    density: int = typer.Option(cycles.DEFAULT_SEED_DENSITY, "--density", help="4-cycle seed density"),
    json_out: Optional[Path] = typer.Option(None, "--json"),
):
    """Immediate basin of one root: holes, containment, focal points and the boundary cycle."""
    sys = _system(poly)
    if not 0 <= root < len(sys.roots):
        raise typer.BadParameter(f"--root must be in 0..{len(sys.roots) - 1}")
    if grid_path:
        grid = load_grid(grid_path)
    else:
        if bounds:
            box = _floats(bounds, 4, "--bounds")
        elif sys.is_internal(root):
            box = basins.region_bounds(sys, root)
        else:
            raise typer.BadParameter("--bounds is required for an external root")
        grid = basins.compute_grid(sys, box, res, res, max_iter, tol, workers)

    ib = basins.immediate_basin(grid, sys, root)
    report = {
        "root_index": root,
        "alpha": sys.roots[root],
        "bounds": list(grid.bounds),
        "resolution": [grid.width, grid.height],
        "connectivity": {"mask": 4, "holes": 4},
        "hole_count": ib.hole_count,
        "area_cells": ib.area,
        "boundary_cells": int(len(ib.boundary_cells)),
        "mask_verified": basins.verify_mask(ib),
        "containment": basins.check_containment_in_R(ib, sys),
        "caveat": "raster connectivity only; a piecewise smooth outer boundary is assumed, not checked",
    }
    if sys.is_internal(root):
        report["hexagon"] = basins.check_hexagon_vertices(ib, sys)
        report["forward_invariance"] = basins.forward_invariance_check(ib, sys, samples)
        report["critical_points"] = basins.critical_points_in_basin(ib, sys)
        report["axis_segments"] = basins.axis_segments_check(ib, sys)
        found = [c for c in cycles.find_four_cycles(sys, basins.RegionR.of(sys, root).bounds, density)
                 if c.cycle_type is cycles.CycleType.I]
        if found:
            best = min(found, key=lambda c: basins.boundary_cycle_distance(ib, c))
            report["boundary_cycle"] = {
                "cycle": best.as_dict(),
                "distance": basins.boundary_cycle_distance(ib, best),
                "limit": 2 * grid.cell_diagonal,
            }
        else:
            report["boundary_cycle"] = None
    _emit(report, json_out)


@cycles_cli.command(name="find")
def cycles_find(
    poly: str = typer.Option(..., "--poly"),
    bounds: str = typer.Option(..., "--bounds", help="Search rectangle x_min,x_max,y_min,y_max"),
    density: int = typer.Option(cycles.DEFAULT_SEED_DENSITY, "--density"),
    newton_tol: float = typer.Option(cycles.DEFAULT_NEWTON_TOL, "--tol"),
    max_iter: int = typer.Option(cycles.DEFAULT_NEWTON_MAX_ITER, "--max-iter"),
    period: int = typer.Option(4, "--period", help="4 for typed cycles; 2 or 3 for a plain periodic-orbit search"),
    json_out: Optional[Path] = typer.Option(None, "--json"),
):
    """Search a rectangle for periodic orbits."""
    sys = _system(poly)
    rect = basins.check_bounds(_floats(bounds, 4, "--bounds"))
    if period == 4:
        report = {"cycles": [c.as_dict() for c in cycles.find_four_cycles(sys, rect, density, newton_tol, max_iter)]}
    else:
        found = cycles.find_periodic_orbits(sys, rect, period, density, newton_tol, max_iter)
        report = {"orbits": [{"xs": list(o.xs), "residual": o.residual} for o in found]}
    _emit(report, json_out)


@cycles_cli.command(name="construct")
def cycles_construct(
    cycle_type: str = typer.Option(..., "--type", help="I, II, III or IV"),
    base: str = typer.Option("1,2,3", "--base"),
    scale: float = typer.Option(-1.0, "--scale", help="Value of p at the point d"),
    json_out: Optional[Path] = typer.Option(None, "--json"),
):
    """Build a cubic with a 4-cycle of the given type."""
    try:
        kind = cycles.CycleType(cycle_type.upper())
    except ValueError:
        raise typer.BadParameter(f"--type must be one of I, II, III, IV, got {cycle_type!r}")
    built = cycles.construct_polynomial(kind, _floats(base, 3, "--base"), scale)
    c = built.cycle
    report = {
        "type": kind.value,
        "a": c.a, "b": c.b, "c": c.c, "d": c.d,
        "polynomial": list(built.polynomial.coeffs),
        "newton": {"nodes": list(built.interpolant.nodes), "coefficients": list(built.interpolant.coefficients)},
        "roots": built.system.roots.as_list(),
        "cycle": c.as_dict(),
    }
    _emit(report, json_out)


@cli.command(name="curves")
def curves(
    poly: str = typer.Option(..., "--poly"),
    root: int = typer.Option(1, "--root"),
    samples: int = typer.Option(1000, "--samples"),
    res: int = typer.Option(512, "--res", help="Lattice size for the singular-set contour"),
    bounds: Optional[str] = typer.Option(None, "--bounds"),
    out: Optional[Path] = typer.Option(None, "--out", help="CSV y,x_star,gamma"),
    polylines: Optional[Path] = typer.Option(None, "--polylines", help="CSV curve_id,x,y of theta, gamma and delta_s"),
    json_out: Optional[Path] = typer.Option(None, "--json"),
):
    """Critical curves Θ and Γ and the singular set of one internal root."""
    sys = _system(poly)
    cc = critical_curves(sys, samples, root)
    box = _floats(bounds, 4, "--bounds") if bounds else basins.region_bounds(sys, root)
    if out:
        write_curves_csv(cc.ys, cc.x_star, cc.gamma, out)
    if polylines:
        write_polylines_csv({
            "theta": [np.column_stack([cc.x_star, cc.ys])],
            "gamma": [np.column_stack([cc.ys, cc.gamma])],
            "delta_s": render.delta_s_contour(sys, box, res),
        }, polylines)
    _emit({
        "gamma0": cc.gamma0,
        "xi": cc.xi,
        "structure": cc.structure,
        "gamma_min": list(cc.gamma_min),
        "gamma_max": list(cc.gamma_max),
        "sampled_extrema": cc.sampled_extrema,
        "newton_extrema": cc.newton_extrema,
    }, json_out)


@cli.command(name="verify")
def verify(
    res: int = typer.Option(512, "--res"),
    workers: int = typer.Option(basins.DEFAULT_WORKERS, "--workers"),
    quick: bool = typer.Option(False, "--quick", help="Smaller grids and sample counts"),
    only: Optional[str] = typer.Option(None, "--only", help="Comma list of check names"),
    record: bool = typer.Option(True, "--record/--no-record"),
    db_url: str = typer.Option(db.DATABASE_URL, "--db"),
):
    """Run the acceptance checks and report them as a table."""
    from secantdyn.acceptance import run_checks

    result = run_checks(res, workers, quick, only.split(",") if only else None)
    table = Table(title="secantdyn verify")
    for col in ("check", "result", "time", "detail"):
        table.add_column(col)
    for row in result["rows"]:
        table.add_row(row["name"], "pass" if row["passed"] else "[red]FAIL[/red]", f"{row['elapsed']:.1f}s", row["detail"])
    console.print(table)

    if record:
        db.init_db(db_url)
        run = db.start_run("default", res)
        for row in result["rows"]:
            db.add_check(run.id, row["name"], row["passed"], row["detail"], row["elapsed"])
        db.finish_run(run.id)
        logger.info(f"recorded verify run {run.id}")
    if result["summary"]["failed"]:
        raise typer.Exit(code=2)


@cli.command(name="history")
def history(
    run_id: Optional[int] = typer.Option(None, "--run"),
    limit: int = typer.Option(20, "--limit"),
    db_url: str = typer.Option(db.DATABASE_URL, "--db"),
):
    """List recorded verify runs, or the checks of one run."""
    db.init_db(db_url)
    if run_id is None:
        table = Table(title="verify runs")
        for col in ("id", "started", "resolution", "passed", "failed"):
            table.add_column(col)
        for r in db.list_runs(limit):
            table.add_row(str(r.id), r.started_at.strftime("%Y-%m-%d %H:%M"), str(r.resolution), str(r.passed), str(r.failed))
    else:
        if db.get_run(run_id) is None:
            raise typer.BadParameter(f"no verify run {run_id}")
        table = Table(title=f"verify run {run_id}")
        for col in ("check", "result", "time", "detail"):
            table.add_column(col)
        for c in db.get_checks(run_id):
            table.add_row(c.name, "pass" if c.passed else "FAIL", f"{c.elapsed:.1f}s", c.detail)
    console.print(table)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and map failures to exit codes: 1 usage, 2 numerical or I/O."""
    command = typer.main.get_command(cli)
    try:
        rv = command.main(args=list(argv) if argv is not None else None, prog_name="secantdyn", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return 1
    except click.Abort:
        err_console.print("aborted")
        return 1
    except InputError as e:
        err_console.print(f"error: {e}")
        return 1
    except (NumericalError, OSError) as e:
        err_console.print(f"error: {type(e).__name__}: {e}")
        return 2
    return rv if isinstance(rv, int) else 0


def app():
    """Console-script entry: exit with the code main() maps the outcome to (0, 1 or 2)."""
    raise SystemExit(main())


if __name__ == "__main__":
    app()
