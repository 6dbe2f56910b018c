"""
==============================================================================
Command-Line Interface
==============================================================================
Batch front end for the solver, optimizer and unloaded-shape iteration.

Usage:
    python propeller_cli.py solve     --config data/convergence.json
    python propeller_cli.py converge  --config data/convergence.json
    python propeller_cli.py optimize  --config data/b5_45.json --seed 1 --threads 4
    python propeller_cli.py response  --config data/b5_45.json
    python propeller_cli.py unloaded  --config data/unloaded.json
    python propeller_cli.py thickness --config data/thickness_study.json

Exit codes:
    0  success
    1  invalid input (configuration, mesh, schedule)
    2  numerical failure (singular system, divergence)

Every command writes effective_config.json next to its artifacts; the file
reparses to the same RunConfig.
==============================================================================
"""

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from blade.response import response_curve, write_response_csv
from fem.assembly import PlateModel
from fem.solver import DisplacementField, unrestrained_modes
from fem.vtk_export import write_vtk
from laminate.clt import build_stiffness
from meshing.mesh import Mesh
from models.run_config import RunConfig, load_run_config
from optimization.ga import layup_block, run_ga, write_history_csv
from optimization.objective import oracle_optimum
from optimization.study import thickness_study, write_thickness_csv
from unloaded.shape import iterate_unloaded_shape, write_trace_csv
from utils.config import config, configure_logging
from utils.errors import ConfigurationError, DivergenceError, InvalidInputError, NumericalError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2


@dataclass
class RunContext:
    """Parsed command line plus the effective configuration."""

    cfg: RunConfig
    out_dir: Path
    threads: int
    base_dir: Path


# =============================================================================
# Artifacts
# =============================================================================

def _write_effective_config(ctx: RunContext) -> None:
    (ctx.out_dir / "effective_config.json").write_text(ctx.cfg.model_dump_json(indent=2) + "\n", encoding="utf-8")


def _write_displacement_csv(path: Path, model: PlateModel, disp: DisplacementField) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["node", "x", "y", "u", "v", "w", "thetax", "thetay"])
        for i, ((x, y), row) in enumerate(zip(model.mesh.nodes.tolist(), disp.values.tolist())):
            writer.writerow([i, f"{x:.9f}", f"{y:.9f}", *(f"{v:.10e}" for v in row)])


def _try_write_vtk(path: Path, model: PlateModel, disp: DisplacementField, title: str) -> None:
    try:
        write_vtk(path, model.mesh, disp, title=title)
    except ImportError:
        logger.warning("vtk is not installed; skipping %s", path.name)


# =============================================================================
# Commands
# =============================================================================

def _build_mesh(ctx: RunContext, mesh_block=None) -> Mesh:
    """Mesh of the run, rejected up front when the supports leave rigid-body modes."""
    mesh = (mesh_block or ctx.cfg.mesh).build(ctx.base_dir)
    mesh.validate(require_clamped=True)
    free = unrestrained_modes(mesh.nodes, mesh.clamped_nodes)
    if free:
        raise ConfigurationError("clamped nodes leave rigid-body modes free: " + ", ".join(free))
    return mesh


def _solve_once(ctx: RunContext, mesh_block=None) -> tuple:
    cfg = ctx.cfg
    mesh = _build_mesh(ctx, mesh_block)
    model = PlateModel(mesh, cfg.solver)
    laminate = build_stiffness(cfg.layup.build(cfg.material.build()))
    disp = model.solve_case(laminate, cfg.surface_load(mesh, ctx.base_dir))
    return model, disp


def cmd_solve(ctx: RunContext) -> int:
    """One static solve; writes solution.vtk and displacements.csv."""
    model, disp = _solve_once(ctx)
    max_w = disp.max_deflection()
    print(f"nodes {model.mesh.node_count}, elements {model.mesh.element_count}")
    print(f"max |w| = {max_w * 1e3:.6f} mm")
    _write_displacement_csv(ctx.out_dir / "displacements.csv", model, disp)
    _try_write_vtk(ctx.out_dir / "solution.vtk", model, disp, ctx.cfg.name)
    return EXIT_OK


def cmd_converge(ctx: RunContext) -> int:
    """Mesh convergence sweep; writes convergence.csv (nx, ny, max_w_mm)."""
    cfg = ctx.cfg
    sizes = cfg.convergence or []
    if not sizes:
        if cfg.mesh.rect is None:
            raise ConfigurationError("converge needs a rect mesh or a convergence list")
        return cmd_solve(ctx)

    rows: List[tuple] = []
    for size in sizes:
        _, disp = _solve_once(ctx, cfg.mesh.with_size(size))
        rows.append((size.nx, size.ny, disp.max_deflection() * 1e3))
        print(f"{size.nx:4d} x {size.ny:<4d} max |w| = {rows[-1][2]:.6f} mm")

    with open(ctx.out_dir / "convergence.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["nx", "ny", "max_w_mm"])
        for nx, ny, w in rows:
            writer.writerow([nx, ny, f"{w:.6f}"])

    values = [r[2] for r in rows]
    if any(b < a for a, b in zip(values, values[1:])):
        logger.warning("max deflection is not monotone over the mesh sequence: %s",
                       ", ".join(f"{v:.4f}" for v in values))
        print("WARNING: non-monotone convergence")
    return EXIT_OK


def cmd_optimize(ctx: RunContext) -> int:
    """Oracle lower bound, then the GA; writes ga_history.csv and best_layup.json."""
    cfg = ctx.cfg
    mesh = _build_mesh(ctx)
    problem = cfg.problem(mesh)
    oracle = oracle_optimum(problem.schedule)
    print(f"oracle: s* = {math.degrees(oracle.slope) * 1e3:.6f} deg/kPa, "
          f"f* = {oracle.objective:.6e} rad ({math.degrees(oracle.objective):.4f} deg)")

    model = PlateModel(mesh, cfg.solver)
    result = run_ga(problem, threads=ctx.threads, model=model)
    gap = result.best_objective / oracle.objective - 1.0 if oracle.objective > 0.0 else float("nan")
    print(f"GA: f = {result.best_objective:.6e} rad ({math.degrees(result.best_objective):.4f} deg), "
          f"{gap * 100:+.2f}% vs oracle, {result.evaluations} evaluations")
    print("best angles (deg): " + ", ".join(f"{a:.2f}" for a in result.best_layup.angles_deg()))

    write_history_csv(ctx.out_dir / "ga_history.csv", result.history)
    summary = {
        "layup": layup_block(result.best_layup),
        "best_objective_rad": result.best_objective,
        "oracle_objective_rad": oracle.objective,
        "oracle_slope_rad_per_pa": oracle.slope,
        "evaluations": result.evaluations,
        "generations": result.history[-1].generation,
        "stopped_on_stall": result.stopped_on_stall,
    }
    (ctx.out_dir / "best_layup.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_response(ctx: RunContext) -> int:
    """Pitch response of the explicit layup over the schedule; writes response.csv."""
    cfg = ctx.cfg
    mesh = _build_mesh(ctx)
    schedule = cfg.require_schedule()
    layup = cfg.layup.build(cfg.material.build())
    response = response_curve(PlateModel(mesh, cfg.solver), layup, schedule, cfg.extraction, ctx.threads)
    for point in response.points:
        print(f"dP {point.delta_pressure / 1e3:+8.2f} kPa  dphi {math.degrees(point.delta_phi):+.4f} deg  "
              f"rake {point.rake * 1e3:+.4f} mm")
    print(f"slope {math.degrees(response.slope) * 1e3:.6f} deg/kPa, R^2 {response.r_squared():.8f}")
    write_response_csv(ctx.out_dir / "response.csv", response)
    return EXIT_OK


def cmd_unloaded(ctx: RunContext) -> int:
    """Unloaded-shape iteration; writes unloaded_trace.csv (also on divergence)."""
    cfg = ctx.cfg
    block = cfg.unloaded
    if block is None:
        raise ConfigurationError("unloaded command needs an unloaded block")
    mesh = _build_mesh(ctx)
    layup = cfg.layup.build(cfg.material.build())
    trace_path = ctx.out_dir / "unloaded_trace.csv"
    try:
        result = iterate_unloaded_shape(
            PlateModel(mesh, cfg.solver),
            layup,
            cfg.cruise_load(mesh, ctx.base_dir),
            block.target_tip_pitch_deg,
            response_model=block.model,
            tol_deg=block.tol_deg,
            max_iter=block.max_iter,
            initialization=block.initialization,
            extraction=cfg.extraction,
        )
    except DivergenceError as exc:
        if exc.trace is not None:
            write_trace_csv(trace_path, exc.trace)
        raise
    write_trace_csv(trace_path, result.trace)
    for row in result.trace.rows:
        print(f"{row.iteration:3d}  initial {row.initial_tip_deg:8.4f}  loaded {row.loaded_tip_deg:8.4f}  "
              f"error {row.pct_error:+8.4f}%  adjust {row.adjustment_deg:+.4f}")
    print(f"unloaded tip pitch {result.unloaded_tip_pitch_deg:.4f} deg after {result.iterations} iterations")
    return EXIT_OK


def cmd_thickness(ctx: RunContext) -> int:
    """Layer thickness study; writes thickness_study.csv."""
    cfg = ctx.cfg
    if not cfg.thickness_study:
        raise ConfigurationError("thickness command needs a thickness_study list")
    mesh = _build_mesh(ctx)
    rows = cfg.thickness_study
    if cfg.layup.ply_count is None:
        cfg = cfg.model_copy(update={"layup": cfg.layup.model_copy(update={"ply_count": rows[0].layers})})
    problem = cfg.problem(mesh)
    results = thickness_study(rows, problem, threads=ctx.threads, model=PlateModel(mesh, cfg.solver))
    for r in results:
        print(f"{r.row.layers:3d} x {r.row.layer_thickness_um:6.1f} um  "
              f"({r.row.total_thickness * 1e3:.3f} mm)  f = {r.best_objective:.6e} rad")
    write_thickness_csv(ctx.out_dir / "thickness_study.csv", results)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunContext], int]] = {
    "solve": cmd_solve,
    "converge": cmd_converge,
    "optimize": cmd_optimize,
    "response": cmd_response,
    "unloaded": cmd_unloaded,
    "thickness": cmd_thickness,
}


# =============================================================================
# Entry Point
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="propeller_cli",
        description="Shape-adaptive composite propeller blade toolkit",
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="Command to run")
    parser.add_argument("--config", required=True, help="Run configuration (JSON)")
    parser.add_argument("--seed", type=int, default=None, help="Override ga.rng_seed")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (default: PROPELLER_THREADS)")
    parser.add_argument("--out", default=None, help="Output directory (default: config output_dir)")
    return parser


def _context(args: argparse.Namespace) -> RunContext:
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg = cfg.model_copy(update={"ga": cfg.ga.model_copy(update={"rng_seed": args.seed})})
    out_dir = Path(args.out or cfg.output_dir or config.OUTPUT_DIR)
    cfg = cfg.model_copy(update={"output_dir": str(out_dir)})
    threads = args.threads if args.threads is not None else config.THREADS
    if threads < 1:
        raise ConfigurationError(f"--threads must be at least 1, got {threads}")
    out_dir.mkdir(parents=True, exist_ok=True)
    return RunContext(cfg=cfg, out_dir=out_dir, threads=threads, base_dir=Path(args.config).resolve().parent)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        try:
            config.validate()
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        ctx = _context(args)
        _write_effective_config(ctx)
        logger.info("%s: config %s, output %s, %d threads", args.command, args.config, ctx.out_dir, ctx.threads)
        return COMMANDS[args.command](ctx)
    except ValidationError as exc:
        print(f"invalid configuration:\n{exc}", file=sys.stderr)
        return EXIT_INVALID
    except InvalidInputError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
