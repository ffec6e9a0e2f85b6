"""
Command-line front end.

Subcommands::

    picardfem run            convergence table of one experiment
    picardfem optimize-alpha golden-section search for the damping parameter
    picardfem sweep-alpha    total iterations over a grid of damping parameters
    picardfem mesh           write a graded mesh of the L-shaped domain

Tables are CSV with ``%.10g`` floats; identical flags give identical bytes.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

from . import analysis, mesh as meshmod, problems, solver

DEFAULT_H_LIST = (0.25, 0.15, 0.08, 0.035, 0.016, 0.008, 0.0038, 0.0019)
DESK_MAX_DOFS = 100_000
# the damping search runs on one mesh only, so it can afford a finer mesh
OPTIMIZE_MAX_DOFS = 400_000
MAX_UNIFORM_LEVELS = 12

EXPERIMENT_DEFAULTS = {
    "exp1": dict(mesh="uniform", beta=0.0, alpha=0.8, gamma=4),
    "exp2": dict(mesh="graded", beta=0.4, alpha=0.8, gamma=4),
    "exp3": dict(mesh="graded", beta=0.7, alpha=0.5, gamma=2),
}

RUN_HEADER = "level,h,N,iterations,err_h1,eoc"


class CLIError(Exception):
    pass


@dataclass
class RunConfig:
    experiment: str
    mesh_mode: str
    beta: float
    alpha: float
    gamma: int
    levels: Optional[int]
    h_list: Optional[List[float]]
    slope_threshold: float
    max_dofs: Optional[int]
    prolongate: bool = False
    log_base: float = math.e
    linear_solver: str = "cg"
    target_err: float = 2e-2
    out_path: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in problems.EXPERIMENTS:
            raise CLIError(f"unknown experiment {self.experiment!r}")
        if self.mesh_mode not in ("uniform", "graded"):
            raise CLIError(f"unknown mesh mode {self.mesh_mode!r}")
        if not 0.0 <= self.beta < 1.0:
            raise CLIError("--beta must lie in [0, 1)")
        if self.levels is not None and self.levels < 1:
            raise CLIError("--levels must be positive")

    def problem(self) -> problems.ManufacturedProblem:
        return problems.EXPERIMENTS[self.experiment]()

    def picard(self) -> solver.PicardConfig:
        return solver.PicardConfig(alpha=self.alpha, gamma=self.gamma, log_base=self.log_base,
                                   linear_solver=self.linear_solver)


def _fmt(x: float) -> str:
    return "%.10g" % x


def build_meshes(cfg: RunConfig, problem: problems.ManufacturedProblem):
    """Mesh sequence and the ``h`` column for a run configuration."""
    mesh0 = problem.initial_mesh()
    if cfg.mesh_mode == "uniform":
        meshes = meshmod.uniform_sequence(mesh0, cfg.levels or MAX_UNIFORM_LEVELS, cfg.max_dofs)
        return meshes, [m.mesh_size() for m in meshes]
    h_list = list(cfg.h_list or DEFAULT_H_LIST)
    if cfg.levels is not None:
        h_list = h_list[:cfg.levels]
    corners = ((problem.corner, cfg.beta),)
    meshes = meshmod.graded_sequence(mesh0, corners, h_list, cfg.max_dofs)
    return meshes, h_list[:len(meshes)]


def _check_out(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise CLIError(f"output directory {parent!r} does not exist")
    if os.path.isdir(path):
        raise CLIError(f"output path {path!r} is a directory")


def _write(path: str, lines: Sequence[str]) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def run_table(records: Sequence[solver.LevelRecord]) -> List[str]:
    lines = [RUN_HEADER]
    for r in records:
        eoc = "" if r.eoc is None else _fmt(r.eoc)
        lines.append(f"{r.level},{_fmt(r.h)},{r.N},{r.n_iters},{_fmt(r.err_h1)},{eoc}")
    return lines


def cmd_run(cfg: RunConfig) -> int:
    _check_out(cfg.out_path)
    problem = cfg.problem()
    meshes, h_values = build_meshes(cfg, problem)
    records = solver.multilevel_run(problem, meshes, cfg.picard(), slope_threshold=cfg.slope_threshold,
                                    h_values=h_values, prolongate_guess=cfg.prolongate)
    _write(cfg.out_path, run_table(records))
    print(f"total iterations: {solver.total_iterations(records)}")
    return 0


def cmd_optimize_alpha(cfg: RunConfig, x_tol: float) -> int:
    _check_out(cfg.out_path)
    problem = cfg.problem()
    meshes, _ = build_meshes(cfg, problem)
    finest = meshes[-1]
    objective = analysis.alpha_objective(problem, finest, cfg.target_err, cfg.gamma, cfg.picard())
    result = analysis.golden_section(objective, 0.0, 1.0, x_tol)
    lines = ["probe,alpha,objective"]
    lines += [f"{k},{_fmt(a)},{_fmt(v)}" for k, (a, v) in enumerate(result.trace)]
    _write(cfg.out_path, lines)
    print(f"N = {objective.disc.n_free}")
    print(f"alpha_opt = {_fmt(result.alpha_opt)} (objective {_fmt(result.objective_at_opt)})")
    return 0


def cmd_sweep_alpha(cfg: RunConfig, grid: Sequence[float]) -> int:
    _check_out(cfg.out_path)
    problem = cfg.problem()
    meshes, _ = build_meshes(cfg, problem)
    rows = analysis.sweep_alpha(problem, meshes, grid, cfg.gamma, cfg.slope_threshold, cfg.picard())
    lines = ["alpha,total_iterations,status"]
    lines += [f"{_fmt(r.alpha)},{r.total_iterations},{r.status}" for r in rows]
    _write(cfg.out_path, lines)
    print(f"{len(rows)} samples, {sum(r.status == 'converged' for r in rows)} converged")
    return 0


def cmd_mesh(beta: float, h: float, out_path: str, experiment: str = "exp2") -> int:
    _check_out(out_path)
    problem = problems.EXPERIMENTS[experiment]()
    spec = meshmod.GradingSpec(((problem.corner, beta),), h)
    mesh = meshmod.grade_to(problem.initial_mesh(), spec)
    with open(out_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(meshmod.export_mesh(mesh))
    print(f"{mesh.n_triangles} triangles, {mesh.n_vertices} vertices, "
          f"kappa = {meshmod.check_grading(mesh, spec):.3f}")
    return 0


def _number(text: str) -> float:
    """Float or exact fraction such as ``1/30``."""
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _h_list(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values or any(not v > 0 for v in values):
        raise argparse.ArgumentTypeError("mesh sizes must be positive")
    return values


def _add_experiment_options(p: argparse.ArgumentParser, default_experiment: str, max_dofs: int) -> None:
    p.add_argument("--experiment", choices=sorted(problems.EXPERIMENTS), default=default_experiment)
    p.add_argument("--mesh", choices=("uniform", "graded"), help="mesh family (default per experiment)")
    p.add_argument("--beta", type=_number, help="grading exponent at the re-entrant corner")
    p.add_argument("--alpha", type=_number, help="damping parameter")
    p.add_argument("--gamma", type=int, help="budget factor in gamma*ceil(ln N)")
    levels = p.add_mutually_exclusive_group()
    levels.add_argument("--levels", type=int, help="number of meshes")
    levels.add_argument("--h-list", type=_h_list, help="comma-separated graded mesh sizes")
    p.add_argument("--slope-threshold", type=_number, default=-0.49)
    p.add_argument("--max-dofs", type=int, default=max_dofs,
                   help=f"drop meshes with more free dofs (0 = no cap, default {max_dofs})")
    p.add_argument("--log-base", type=_number, default=math.e, help="logarithm base of the budget")
    p.add_argument("--linear-solver", choices=("cg", "direct"))
    p.add_argument("--out", required=True, help="output CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="picardfem", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="convergence table over a mesh sequence")
    _add_experiment_options(p, "exp1", DESK_MAX_DOFS)
    p.add_argument("--prolongate", action="store_true", help="start each level from the previous solution")

    p = sub.add_parser("optimize-alpha", help="golden-section search for the damping parameter")
    _add_experiment_options(p, "exp1", OPTIMIZE_MAX_DOFS)
    p.add_argument("--target-err", type=_number, default=2e-2)
    p.add_argument("--x-tol", type=_number, default=1e-2, help="final bracket width")

    p = sub.add_parser("sweep-alpha", help="total iterations over a damping grid")
    _add_experiment_options(p, "exp3", DESK_MAX_DOFS)
    p.add_argument("--grid-lo", type=_number, default=0.6)
    p.add_argument("--grid-hi", type=_number, default=0.99)
    p.add_argument("--grid-step", type=_number, default=Fraction(1, 30))

    p = sub.add_parser("mesh", help="write a graded mesh")
    p.add_argument("--beta", type=_number, required=True)
    p.add_argument("--h", type=_number, required=True)
    p.add_argument("--experiment", choices=sorted(problems.EXPERIMENTS), default="exp2",
                   help="selects the boundary tags of the start mesh")
    p.add_argument("--out", required=True)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    d = EXPERIMENT_DEFAULTS[args.experiment]
    if args.command == "optimize-alpha":
        # golden-section studies use the smallest budget factor
        d = dict(d, gamma=1)
    pick = lambda value, key: d[key] if value is None else value  # noqa: E731
    default_solver = "direct" if args.command == "optimize-alpha" else "cg"
    return RunConfig(
        experiment=args.experiment,
        mesh_mode=pick(args.mesh, "mesh"),
        beta=float(pick(args.beta, "beta")),
        alpha=float(pick(args.alpha, "alpha")),
        gamma=int(pick(args.gamma, "gamma")),
        levels=args.levels,
        h_list=args.h_list,
        slope_threshold=float(args.slope_threshold),
        max_dofs=args.max_dofs or None,
        prolongate=getattr(args, "prolongate", False),
        log_base=float(args.log_base),
        linear_solver=args.linear_solver or default_solver,
        target_err=float(getattr(args, "target_err", 2e-2)),
        out_path=args.out,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "mesh":
            return cmd_mesh(args.beta, args.h, args.out, args.experiment)
        cfg = config_from_args(args)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "optimize-alpha":
            return cmd_optimize_alpha(cfg, args.x_tol)
        grid = analysis.alpha_grid(args.grid_lo, args.grid_hi, args.grid_step)
        return cmd_sweep_alpha(cfg, grid)
    except (CLIError, ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"picardfem: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
