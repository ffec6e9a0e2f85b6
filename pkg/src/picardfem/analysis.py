"""
Error measurement, convergence orders and the search for the damping parameter.

``h1_error`` measures ``||grad(u - U)||`` against a known exact gradient,
``eoc`` turns a table of ``(N, err)`` pairs into log-log slopes, and
``golden_section`` together with ``alpha_objective`` locates the damping
parameter that reaches a prescribed error in the fewest Picard steps.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import fem
from .mesh import Mesh
from .problems import ManufacturedProblem
from .solver import (DIVERGENCE_ERRORS, Discretization, PicardConfig, StopReason, iteration_budget,
                     linear_solver, multilevel_run, picard_step, total_iterations)

# 1/phi, the bracket shrink factor per golden-section step
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# cap on the error ratio folded into the sentinel objective
SENTINEL_RATIO_CAP = 1e6


@dataclass(frozen=True)
class ErrorReport:
    err_h1: float
    err_l2: float
    quad_order_used: int

    def __post_init__(self):
        for name in ("err_h1", "err_l2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v!r}")


@dataclass(frozen=True)
class AlphaSearchResult:
    alpha_opt: float
    objective_at_opt: float
    trace: Tuple[Tuple[float, float], ...]


def h1_error(mesh: Mesh, dofmap: fem.DofMap, U: np.ndarray, exact_grad_u: Callable,
             rule: Optional[fem.QuadRule] = None) -> float:
    """
    ``||grad u - grad U||_{L2}`` with ``U`` given by its free coefficients.

    The element gradient of ``U`` is constant, so the rule only has to
    integrate the exact gradient; the default is the degree-5 rule, whose
    points avoid the vertices and hence point singularities at corners.
    """
    rule = rule or fem.order5_rule()
    return fem.H1ErrorEvaluator(mesh, dofmap, exact_grad_u, rule)(U)


def l2_error(mesh: Mesh, dofmap: fem.DofMap, U: np.ndarray, exact_u: Callable,
             rule: Optional[fem.QuadRule] = None) -> float:
    """``||u - U||_{L2}``, with ``U`` interpolated linearly to the quadrature points."""
    rule = rule or fem.order5_rule()
    elements = fem.ElementData(mesh)
    pts = elements.quad_points(rule)
    exact = np.asarray(exact_u(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape[:2])
    fem._check_finite(exact, pts, "exact solution")
    Uh = dofmap.expand(U)[mesh.triangles] @ rule.points.T
    w = elements.areas[:, None] * rule.weights[None, :]
    return math.sqrt(float((w * (exact - Uh) ** 2).sum()))


def error_report(problem: ManufacturedProblem, mesh: Mesh, dofmap: fem.DofMap, U: np.ndarray,
                 rule: Optional[fem.QuadRule] = None) -> ErrorReport:
    rule = rule or fem.order5_rule()
    return ErrorReport(h1_error(mesh, dofmap, U, problem.exact_grad_u, rule),
                       l2_error(mesh, dofmap, U, problem.exact_u, rule), rule.degree)


def eoc(records: Sequence[Tuple[int, float]]) -> List[float]:
    """
    Slopes ``log(err_k / err_{k-1}) / log(N_k / N_{k-1})`` of consecutive rows.

    Raises
    ------
    ValueError
        If an error is not positive or ``N`` does not increase strictly.
    """
    rows = [(int(n), float(e)) for n, e in records]
    for n, e in rows:
        if not (e > 0.0 and math.isfinite(e)):
            raise ValueError(f"errors must be positive and finite, got {e!r} at N={n}")
        if n <= 0:
            raise ValueError(f"N must be positive, got {n}")
    slopes = []
    for (n0, e0), (n1, e1) in zip(rows[:-1], rows[1:]):
        if n1 <= n0:
            raise ValueError(f"N must increase strictly ({n0} -> {n1})")
        slopes.append(math.log(e1 / e0) / math.log(n1 / n0))
    return slopes


def golden_section(objective: Callable[[float], float], lo: float, hi: float,
                   x_tol: float) -> AlphaSearchResult:
    """
    Golden-section minimization of a scalar function on ``[lo, hi]``.

    The bracket shrinks by ``GOLDEN`` per probe until its width is at most
    ``x_tol``.  The midpoint of the final bracket is probed as well, and the
    result is the best probe of the whole trace, with the final midpoint
    winning ties.  For unimodal objectives this is the midpoint itself.
    """
    lo, hi = float(lo), float(hi)
    if not lo < hi:
        raise ValueError(f"empty bracket [{lo}, {hi}]")
    if not x_tol > 0:
        raise ValueError("x_tol must be positive")
    trace: List[Tuple[float, float]] = []

    def probe(x):
        x = min(max(x, lo), hi)
        v = float(objective(x))
        trace.append((x, v))
        return v

    a, b = lo, hi
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = probe(c), probe(d)
    while b - a > x_tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = probe(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = probe(d)
    mid = 0.5 * (a + b)
    fm = probe(mid)
    best_x, best_v = mid, fm
    for x, v in trace:
        if v < best_v:
            best_x, best_v = x, v
    return AlphaSearchResult(best_x, best_v, tuple(trace))


class AlphaObjective:
    """
    Number of Picard steps from ``U_0 = 0`` until ``err_h1 <= target_err``.

    The budget is ``gamma * ceil(ln N)``.  A run that exhausts it, or that
    blows up, scores ``budget + 1 + min(err / target_err, 1e6)`` with ``err``
    the last finite error, so that nearly successful runs rank ahead of
    hopeless ones.  Assembly happens once; the linear solver (and with
    ``cfg.linear_solver == "direct"`` its factorization) is shared by all
    evaluations.
    """

    def __init__(self, problem: ManufacturedProblem, mesh: Mesh, target_err: float, gamma: int,
                 cfg: Optional[PicardConfig] = None):
        if not target_err > 0:
            raise ValueError("target_err must be positive")
        self.cfg = cfg or PicardConfig()
        self.target_err = float(target_err)
        self.disc = Discretization(problem, mesh)
        self.budget = iteration_budget(self.disc.n_free, gamma, self.cfg.log_base)
        self._solve = None
        self.evaluations: List[Tuple[float, float]] = []

    def sentinel(self, err: float) -> float:
        ratio = err / self.target_err if math.isfinite(err) else SENTINEL_RATIO_CAP
        return self.budget + 1 + min(ratio, SENTINEL_RATIO_CAP)

    def __call__(self, alpha: float) -> float:
        value = self._evaluate(float(alpha))
        self.evaluations.append((float(alpha), value))
        return value

    def _evaluate(self, alpha: float) -> float:
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha={alpha} outside [0, 1]")
        d = self.disc
        U = np.zeros(d.n_free)
        err = d.h1_error(U)
        if err <= self.target_err:
            return 0.0
        if self._solve is None:
            self._solve = linear_solver(d.A, self.cfg)
        for n in range(1, self.budget + 1):
            try:
                U = picard_step(d.A, U, d.load, d.b_of, alpha, self.cfg, self._solve)
                new_err = d.h1_error(U)
            except DIVERGENCE_ERRORS:
                return self.sentinel(math.inf)
            if not math.isfinite(new_err):
                return self.sentinel(err)
            err = new_err
            if err <= self.target_err:
                return float(n)
        return self.sentinel(err)


def alpha_objective(problem: ManufacturedProblem, mesh: Mesh, target_err: float, gamma: int,
                    cfg: Optional[PicardConfig] = None) -> AlphaObjective:
    """Objective ``alpha -> steps to reach target_err``; see :class:`AlphaObjective`."""
    return AlphaObjective(problem, mesh, target_err, gamma, cfg)


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    total_iterations: int
    status: str  # "converged", "stalled" or "diverged"


def alpha_grid(lo: float, hi: float, step: float) -> List[float]:
    """``lo, lo + step, ...`` below ``hi``, with ``hi`` itself appended."""
    if not (lo <= hi and step > 0):
        raise ValueError("need lo <= hi and a positive step")
    n = int(math.floor((hi - lo) / step + 1e-9))
    grid = [lo + k * step for k in range(n + 1)]
    if hi - grid[-1] > 1e-9 * max(1.0, abs(hi)):
        grid.append(hi)
    return grid


def sweep_alpha(problem: ManufacturedProblem, meshes: Sequence[Mesh], alphas: Sequence[float],
                gamma: int, slope_threshold: float = -0.49,
                cfg: Optional[PicardConfig] = None) -> List[SweepRow]:
    """
    Total Picard steps over a mesh sequence for each damping parameter.

    A sample is ``"converged"`` when the finest level stops on the slope
    criterion, i.e. the optimal rate is recovered at the end of the sequence;
    coarse pre-asymptotic levels may use up their budgets.  When the finest
    level exhausts its budget (``"stalled"``) or the iteration blows up
    (``"diverged"``) the row records the sentinel ``sum of level budgets + 1``.
    """
    cfg = cfg or PicardConfig()
    discs = [Discretization(problem, m) for m in meshes]
    sentinel = sum(iteration_budget(d.n_free, gamma, cfg.log_base) for d in discs) + 1
    rows = []
    for alpha in alphas:
        run_cfg = dataclasses.replace(cfg, alpha=float(alpha), gamma=gamma)
        try:
            records = multilevel_run(problem, meshes, run_cfg, slope_threshold=slope_threshold,
                                     discretizations=discs)
        except DIVERGENCE_ERRORS:
            rows.append(SweepRow(float(alpha), sentinel, "diverged"))
            continue
        if len(records) == 1 or records[-1].stop_reason is StopReason.SLOPE_REACHED:
            rows.append(SweepRow(float(alpha), total_iterations(records), "converged"))
        else:
            rows.append(SweepRow(float(alpha), sentinel, "stalled"))
    return rows
