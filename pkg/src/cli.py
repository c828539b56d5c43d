"""Command-line interface for the Blaschke cocycle entropy experiments."""

import functools
import json
import multiprocessing as mp
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import click
import numpy as np
import pandas as pd
from loguru import logger
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from config import settings
from src.admissibility import check_admissible, covering_time, origin_example_checks
from src.blaschke import classify_fixed_points, pushforward_identity_residual
from src.circle_numerics import CircleGrid, build_lift
from src.cocycle import DrivingKind, MapTable, sample_path, uniform_contraction_radius
from src.domain.configuration import CocycleConfig, load_configuration, setup_logging
from src.domain.protocols import (
    DegenerateClassification,
    NonConvergence,
    NotCovered,
    RootSolveFailure,
    WindingMismatch,
)
from src.entropy import (
    ESTIMATORS,
    analytic_fibre_average,
    average_entropy_analytic,
    base_entropy,
    entropy_report,
    theta_grid,
    theta_sweep,
)
from src.presets import attracting_square, sigma1, sigma2, two_map_table
from src.random_acim import (
    convergence_curve,
    density_equivariance_residual,
    pole_equivariance_residual,
    pullback_law_residual,
    random_fixed_point,
    uniqueness_residual,
)


__version__ = "1.0.0"

console = Console(stderr=True)

IDENTITY_TOL = 1e-10
TRANSFER_TOL = 1e-6
SWEEP_COLUMNS = {DrivingKind.BERNOULLI: "h_fib_sigma1", DrivingKind.ROTATION: "h_fib_sigma2"}


# ==============================================================================
# SHARED OPTIONS AND OUTPUT
# ==============================================================================

config_option = click.option(
    "--config", "config_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Cocycle JSON config (default: two-map Bernoulli example)",
)
seed_option = click.option("--seed", type=int, default=None, help="Master seed (default: config, then settings)")
out_option = click.option(
    "--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
    help="Output file (default: stdout)",
)
grid_option = click.option("--grid", type=click.IntRange(min=8), default=None, help="Quadrature grid size N")
n_steps_option = click.option("--n-steps", type=click.IntRange(min=100), default=None, help="Orbit steps after burn-in")
theta_points_option = click.option("--theta-points", type=click.IntRange(min=1), default=None, help="θ-grid size")
workers_option = click.option("--workers", type=click.IntRange(min=0), default=None, help="Worker processes (0 = all cores)")
estimator_option = click.option("--estimator", type=click.Choice(ESTIMATORS), default="orbit", show_default=True)
verbose_option = click.option("-v", "--verbose", is_flag=True, help="Enable verbose logging")


def handle_errors(command: Callable) -> Callable:
    """Ctrl+C exits 0; any other error prints in red and exits 1 (re-raised with --verbose)."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        setup_logging(kwargs.get("verbose", False), settings.log_level)
        try:
            return command(*args, **kwargs)
        except KeyboardInterrupt:
            console.print("\n[yellow]Operation cancelled by user[/yellow]")
            sys.exit(0)
        except Exception as e:
            console.print(f"[red]Error:[/red] {e}")
            if kwargs.get("verbose"):
                raise
            sys.exit(1)

    return wrapper


def _write(text: str, out: Optional[Path]) -> None:
    """stdout when out is None; relative paths land in settings.output_folder."""
    if out is None:
        click.echo(text, nl=False)
        return
    if not out.is_absolute():
        settings.ensure_directories()
        out = settings.output_folder / out
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    console.print(f"[green]✓[/green] Wrote {out}")


def emit_json(data: dict, out: Optional[Path]) -> None:
    _write(json.dumps(data, indent=2, sort_keys=True) + "\n", out)


def emit_csv(frame: pd.DataFrame, out: Optional[Path], config_hash: str, seed: Optional[int]) -> None:
    text = f"# config_hash={config_hash} seed={seed}\n" + frame.to_csv(index=False, float_format="%.12g")
    _write(text, out)


def _load(config_path: Optional[Path]) -> CocycleConfig:
    config = load_configuration(config_path)
    console.print(f"[blue]Config:[/blue] {config.name or config_path} ([dim]{config.config_hash()}[/dim])")
    return config


def _check(name: str, value, passed: bool, tolerance=None) -> dict:
    return {"name": name, "value": value, "tolerance": tolerance, "passed": bool(passed)}


def _classifications(table: MapTable) -> List[dict]:
    entries = []
    for j, T in enumerate(table):
        try:
            classification = classify_fixed_points(T, settings.tol_indiff, settings.tol_root, settings.grid_size)
            entries.append(classification.to_dict())
        except (DegenerateClassification, RootSolveFailure, WindingMismatch) as e:
            logger.warning(f"Map {j}: fixed point classification failed: {e}")
            entries.append({"case": None, "error": f"{type(e).__name__}: {e}"})
    return entries


def _checks_table(checks: List[dict]) -> Table:
    table = Table(show_header=True, header_style="bold magenta")
    table.add_column("Check", style="cyan")
    table.add_column("Value", style="yellow")
    table.add_column("Result")
    for item in checks:
        value = item["value"]
        shown = f"{value:.3e}" if isinstance(value, float) else str(value)
        table.add_row(item["name"], shown, "[green]pass[/green]" if item["passed"] else "[red]FAIL[/red]")
    return table


# ==============================================================================
# COMMANDS
# ==============================================================================

@click.group()
@click.version_option(version=__version__)
def cli():
    """Random Blaschke product dynamics: invariant densities and entropy.

    Computes random fixed points, acim densities, fibre entropies and
    admissibility diagnostics, and writes CSV/JSON results.
    """


@cli.command()
def config():
    """Show current numerical settings."""
    console.print(Panel.fit("Current Settings", style="bold blue"))
    table = Table(show_header=True, header_style="bold magenta")
    table.add_column("Setting", style="cyan")
    table.add_column("Value", style="yellow")
    for name, value in settings.model_dump().items():
        table.add_row(name, str(value))
    table.add_row("worker_count", str(settings.worker_count))
    console.print(table)
    console.print("\n[cyan]Override with environment variables or a .env file, e.g.[/cyan] GRID_SIZE=8192")


@cli.command()
@out_option
@click.option("--points", type=click.IntRange(min=2), default=1024, show_default=True)
@grid_option
@verbose_option
@handle_errors
def fig1(out: Optional[Path], points: int, grid: Optional[int], verbose: bool):
    """Circle coordinates (t, S(t) mod 1) of the attracting map T1."""
    T = attracting_square()
    lift = build_lift(T, grid or settings.grid_size, settings.lift_max_grid)
    t = np.arange(points, dtype=float) / points
    frame = pd.DataFrame({"t": t, "S": np.mod(lift(t), 1.0)})
    source = CocycleConfig.model_validate({
        "name": "T1",
        "maps": [{"rotation_angle": 0.5, "zeros": [[0.4, 0.0]], "multiplicities": [2]}],
        "driving": {"kind": "bernoulli", "p": [1.0]},
    })
    emit_csv(frame, out, source.config_hash(), None)


@cli.command()
@config_option
@seed_option
@n_steps_option
@theta_points_option
@grid_option
@workers_option
@estimator_option
@out_option
@verbose_option
@handle_errors
def fig2(config_path, seed, n_steps, theta_points, grid, workers, estimator, out, verbose):
    """Fibre entropy along the θ-family: Bernoulli and rotation driving.

    Without --config both drivings of the two-map example are swept. With
    --config only the configured driving is swept; its column is
    h_fib_sigma1 for a Bernoulli and h_fib_sigma2 for a rotation driving.
    """
    config = _load(config_path)
    seed = config.resolved_seed(seed, settings.seed)
    n_steps = n_steps or settings.n_steps
    ts = theta_grid(theta_points or settings.theta_points)
    options = _estimator_options(grid)

    if config_path is None:
        table = two_map_table()
        runs = {"h_fib_sigma1": sigma1(), "h_fib_sigma2": sigma2()}
    else:
        table = config.build_table()
        driving = config.build_driving()
        runs = {SWEEP_COLUMNS[driving.kind]: driving}

    frame = pd.DataFrame({"t": ts})
    means = {}
    for column, driving in runs.items():
        result = theta_sweep(
            table, driving, ts, n_steps, seed,
            estimator=estimator, workers=_workers(workers),
            show_progress=True, chunk_size=settings.chunk_size, **options,
        )
        frame[column] = result.values
        means[column] = result.mean
        for failure in result.failures:
            logger.warning(failure)

    reference = analytic_fibre_average(table, next(iter(runs.values())), grid or settings.grid_size)
    frame["analytic_fibre"] = reference

    summary = Table(title="θ-average of fibre entropy")
    summary.add_column("Column", style="cyan")
    summary.add_column("Mean", style="green")
    for column, mean in means.items():
        summary.add_row(column, f"{mean:.6f}")
    summary.add_row("analytic", f"{reference:.6f}")
    console.print(summary)
    emit_csv(frame, out, config.config_hash(), seed)


def _workers(requested: Optional[int]) -> int:
    if requested is None:
        return settings.worker_count
    return requested if requested > 0 else mp.cpu_count()


def _estimator_options(grid: Optional[int]) -> Dict[str, int]:
    return {
        "burn_in": settings.burn_in,
        "n_fibres": settings.n_fibres,
        "grid_size": grid or settings.grid_size,
        "max_backward_steps": settings.max_backward_steps,
        "n_batches": settings.n_batches,
    }


@cli.command()
@config_option
@seed_option
@n_steps_option
@theta_points_option
@grid_option
@workers_option
@estimator_option
@out_option
@verbose_option
@handle_errors
def summary(config_path, seed, n_steps, theta_points, grid, workers, estimator, out, verbose):
    """Analytic θ-average of the entropy against the sweep mean."""
    config = _load(config_path)
    seed = config.resolved_seed(seed, settings.seed)
    n_steps = n_steps or settings.n_steps
    N = grid or settings.grid_size
    table, driving = config.build_table(), config.build_driving()

    result = theta_sweep(
        table, driving, theta_grid(theta_points or settings.theta_points), n_steps, seed,
        estimator=estimator, workers=_workers(workers),
        show_progress=True, chunk_size=settings.chunk_size, **_estimator_options(grid),
    )
    analytic_fibre = analytic_fibre_average(table, driving, N)
    base = base_entropy(driving)
    gap = abs(result.mean - analytic_fibre)
    relative_error = gap / abs(analytic_fibre) if analytic_fibre != 0.0 else gap
    passed = bool(np.isfinite(relative_error) and relative_error <= settings.relative_error_target)

    report = {
        "analytic_fibre_average": analytic_fibre,
        "analytic_total": average_entropy_analytic(table, driving, N),
        "base_entropy": base,
        "sweep_mean": result.mean,
        "sweep_total": result.mean + base,
        "relative_error": relative_error,
        "relative_error_target": settings.relative_error_target,
        "passed": passed,
        "failed_points": result.n_failed,
        "estimator": estimator,
        "n_steps": n_steps,
        "theta_points": len(result.t_grid),
        "seed": seed,
        "config_hash": config.config_hash(),
    }
    style = "green" if passed else "red"
    console.print(f"[{style}]relative error {relative_error:.4%}[/{style}] (target {settings.relative_error_target:.2%})")
    emit_json(report, out)
    if not passed:
        sys.exit(1)


@cli.command()
@config_option
@seed_option
@grid_option
@out_option
@verbose_option
@handle_errors
def check(config_path, seed, grid, out, verbose):
    """Admissibility, random fixed point and identity residuals, pass/fail."""
    config = _load(config_path)
    seed = config.resolved_seed(seed, settings.seed)
    N = grid or settings.grid_size
    table, driving = config.build_table(), config.build_driving()
    fp_options = _fixed_point_options()

    admissibility = check_admissible(table, driving, settings.inf_grid_size)
    checks = [
        _check("admissibility", admissibility.label, admissibility.passed),
        _check("martin_bound", min(d.inf_deriv - d.martin_bound for d in admissibility.per_map),
               all(d.martin_holds for d in admissibility.per_map)),
    ]
    for j, T in enumerate(table):
        residual = pushforward_identity_residual(T, 0.3 + 0.2j, N=2048)
        checks.append(_check(f"pushforward_identity[{j}]", residual, residual < IDENTITY_TOL, IDENTITY_TOL))

    path = sample_path(driving, table, seed, settings.max_backward_steps, 2, config.theta)
    pullback = pullback_law_residual(path, 3, CircleGrid(512), settings.tol_root)
    checks.append(_check("transfer_pullback_law", pullback, pullback < TRANSFER_TOL, TRANSFER_TOL))

    fixed = random_fixed_point(path, **fp_options)
    checks.append(_check("random_fixed_point", fixed.status.value, fixed.converged))
    if fixed.converged:
        pole = pole_equivariance_residual(path, **fp_options)
        unique = uniqueness_residual(path, **fp_options)
        density = density_equivariance_residual(path, 1, CircleGrid(1024), settings.tol_root, **fp_options)
        checks += [
            _check("pole_equivariance", pole, pole < IDENTITY_TOL, IDENTITY_TOL),
            _check("uniqueness", unique, unique < IDENTITY_TOL, IDENTITY_TOL),
            _check("density_equivariance", density, density < TRANSFER_TOL, TRANSFER_TOL),
        ]

    report = {
        "admissibility": admissibility.to_dict(),
        "random_fixed_point": fixed.to_dict(),
        "classifications": _classifications(table),
        "uniform_contraction": {"R": 0.5, "r": uniform_contraction_radius(table, 0.5, N)},
        "checks": checks,
        "passed": all(item["passed"] for item in checks),
        "seed": seed,
        "config_hash": config.config_hash(),
    }
    console.print(_checks_table(checks))
    emit_json(report, out)
    if not report["passed"]:
        sys.exit(1)


def _fixed_point_options() -> dict:
    return {
        "tol_fp": settings.tol_fp,
        "max_n": settings.max_backward_steps,
        "boundary_eps": settings.boundary_eps,
        "boundary_band": settings.boundary_band,
        "boundary_streak": settings.boundary_streak,
    }


@cli.command("fixed-point")
@config_option
@seed_option
@grid_option
@click.option("--start", type=(float, float), default=(0.0, 0.0), show_default=True,
              help="Starting point of the backward iteration as RE IM")
@out_option
@verbose_option
@handle_errors
def fixed_point(config_path, seed, grid, start, out, verbose):
    """Random fixed point x_ω and the density convergence curve."""
    config = _load(config_path)
    seed = config.resolved_seed(seed, settings.seed)
    table, driving = config.build_table(), config.build_driving()
    path = sample_path(driving, table, seed, settings.max_backward_steps, 0, config.theta)
    fixed = random_fixed_point(path, z=complex(*start), **_fixed_point_options())

    report = {
        "random_fixed_point": fixed.to_dict(),
        "classifications": _classifications(table),
        "seed": seed,
        "config_hash": config.config_hash(),
    }
    if fixed.converged:
        curve = convergence_curve(path, grid=CircleGrid(grid or settings.grid_size), fixed_point=fixed)
        report["convergence_curve"] = [[n, diff] for n, diff in curve]
        console.print(f"[green]✓[/green] x_ω = {fixed.x_omega.value:.12g} after {fixed.n_used} steps")
    else:
        console.print(f"[yellow]{fixed.status.value}[/yellow] after {fixed.n_used} steps")
    emit_json(report, out)


@cli.command()
@config_option
@seed_option
@n_steps_option
@grid_option
@click.option("--theta-turns", type=float, default=None, help="θ = e^{2πit} (default: config)")
@click.option("--n-fibres", type=click.IntRange(min=1), default=None, help="Fibres of the quadrature estimator")
@estimator_option
@out_option
@verbose_option
@handle_errors
def entropy(config_path, seed, n_steps, grid, theta_turns, n_fibres, estimator, out, verbose):
    """Both fibre-entropy estimators on one path, with base entropy and total."""
    config = _load(config_path)
    if theta_turns is not None:
        config = config.model_copy(update={"theta_turns": theta_turns})
    seed = config.resolved_seed(seed, settings.seed)
    n_steps = n_steps or settings.n_steps
    n_fibres = n_fibres or settings.n_fibres
    N = grid or settings.grid_size
    table, driving = config.build_table(), config.build_driving()

    orbit_path = sample_path(driving, table, seed, 0, settings.burn_in + n_steps, config.theta)
    fibre_path = sample_path(driving, table, seed, settings.max_backward_steps, n_fibres, config.theta)
    try:
        report = entropy_report(
            orbit_path, fibre_path, n_steps, settings.burn_in, n_fibres, CircleGrid(N),
            estimator=estimator, n_batches=settings.n_batches, **_fixed_point_options(),
        )
    except NonConvergence as e:
        logger.warning(f"Quadrature estimator unavailable: {e}")
        report = entropy_report(
            orbit_path, None, n_steps, settings.burn_in, estimator="orbit", n_batches=settings.n_batches
        )

    data = report.to_dict()
    data.update(
        analytic_fibre_average=analytic_fibre_average(table, driving, N),
        seed=seed,
        config_hash=config.config_hash(),
    )
    emit_json(data, out)


@cli.command()
@config_option
@seed_option
@click.option("--arc-start", type=float, default=0.0, show_default=True)
@click.option("--arc-length", type=float, default=0.1, show_default=True)
@click.option("--seeds", type=click.IntRange(min=1), default=1, show_default=True, help="Number of consecutive seeds")
@click.option("--max-n", type=click.IntRange(min=1), default=None, help="Composition cap")
@grid_option
@out_option
@verbose_option
@handle_errors
def covering(config_path, seed, arc_start, arc_length, seeds, max_n, grid, out, verbose):
    """Covering time of an arc under backward compositions."""
    config = _load(config_path)
    seed = config.resolved_seed(seed, settings.seed)
    max_n = max_n or settings.covering_max_n
    table, driving = config.build_table(), config.build_driving()
    arc = (arc_start, arc_start + arc_length)

    runs = []
    for s in range(seed, seed + seeds):
        path = sample_path(driving, table, s, max_n, 0, config.theta)
        try:
            runs.append({"seed": s, **covering_time(path, arc, max_n, grid or settings.grid_size).to_dict()})
        except NotCovered as e:
            runs.append({"seed": s, "n": None, "error": str(e)})

    all_finite = all(run["n"] is not None for run in runs)
    emit_json({"arc": list(arc), "max_n": max_n, "runs": runs, "all_finite": all_finite,
               "config_hash": config.config_hash()}, out)
    if not all_finite:
        sys.exit(1)


@cli.command("origin-example")
@click.option("--c", "c", type=float, default=3.0, show_default=True)
@click.option("--j", "j", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--zero-magnitude", type=float, default=None, help="Default: minimal admissible magnitude")
@click.option("--rho-turns", type=float, default=0.0, show_default=True)
@click.option("--j-max", type=click.IntRange(min=1), default=None, help="Truncation level of the cocycle")
@seed_option
@grid_option
@out_option
@verbose_option
@handle_errors
def origin_example(c, j, zero_magnitude, rho_turns, j_max, seed, grid, out, verbose):
    """Origin-fixing maps: bounded expansion, unbounded degree."""
    report = origin_example_checks(
        c, j, zero_magnitude, rho_turns,
        j_max=j_max or settings.origin_j_max,
        N=grid or settings.inf_grid_size,
        seed=seed if seed is not None else settings.seed,
    )
    style = "green" if report.passed else "red"
    console.print(f"[{style}]inf |T'| = {report.inf_deriv:.12g} (bound {c + 1})[/{style}], degree {report.degree}")
    emit_json(report.to_dict(), out)
    if not report.passed:
        sys.exit(1)


def main():
    """Entry point for the CLI."""
    cli()


if __name__ == "__main__":
    main()
