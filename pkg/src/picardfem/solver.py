"""
Linear and nonlinear solvers.

``picard_step`` performs one damped fixed-point (Zarantonello) update

    a(U_{n+1}, v) = (1 - alpha) a(U_n, v) + alpha (l(v) - b(U_n; v)),

reusing the same stiffness matrix in every step, and ``multilevel_run``
drives it over a sequence of meshes with a logarithmic iteration budget and
an error-slope stopping rule.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import fem
from .mesh import Mesh, prolongate
from .problems import ManufacturedProblem, NonlinearityOverflowError

logger = logging.getLogger(__name__)


class CGError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class IterationDiverged(RuntimeError):
    pass


# everything that signals a blown-up Picard run
DIVERGENCE_ERRORS = (IterationDiverged, NonlinearityOverflowError, fem.NonFiniteValueError, CGError)


def cg_solve(A, rhs: np.ndarray, rel_tol: float = 1e-10, max_iter: int = 10000,
             x0: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Jacobi-preconditioned conjugate gradients.

    Returns ``x`` with ``||A x - rhs|| <= rel_tol ||rhs||`` (Euclidean norms),
    checked on the true residual before returning.
    """
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"matrix shape {A.shape} does not match rhs length {n}")
    if not np.all(np.isfinite(rhs)):
        raise CGError("non-finite right-hand side", math.nan, 0)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = float(np.linalg.norm(rhs))
    if n == 0:
        return x
    if bnorm == 0.0:
        return np.zeros(n)
    tol = rel_tol * bnorm
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise CGError("matrix has a nonpositive diagonal entry", math.nan, 0)
    inv_diag = 1.0 / diag

    total = 0
    while True:
        # restart on the true residual so convergence is never claimed on drift
        r = rhs - A @ x
        rnorm = float(np.linalg.norm(r))
        if rnorm <= tol:
            return x
        if total >= max_iter:
            raise CGError("CG did not converge", rnorm / bnorm, total)
        z = inv_diag * r
        p = z.copy()
        rz = float(r @ z)
        while total < max_iter:
            Ap = A @ p
            curv = float(p @ Ap)
            if not math.isfinite(curv):
                raise CGError("non-finite value encountered", rnorm / bnorm, total)
            if curv <= 0.0:
                raise CGError("matrix is not positive definite", rnorm / bnorm, total)
            step = rz / curv
            x += step * p
            r -= step * Ap
            total += 1
            rnorm = float(np.linalg.norm(r))
            if rnorm <= tol:
                break
            z = inv_diag * r
            rz_new = float(r @ z)
            p = z + (rz_new / rz) * p
            rz = rz_new


@dataclass(frozen=True)
class PicardConfig:
    alpha: float = 0.8
    gamma: int = 4
    increment_tol: Optional[float] = None
    cg_rel_tol: float = 1e-10
    cg_max_iter: int = 20000
    log_base: float = math.e
    linear_solver: str = "cg"

    def __post_init__(self):
        if self.linear_solver not in ("cg", "direct"):
            raise ValueError("linear_solver must be 'cg' or 'direct'")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha={self.alpha} outside (0, 1]")
        if int(self.gamma) != self.gamma or self.gamma < 1:
            raise ValueError("gamma must be a positive integer")
        if self.increment_tol is not None and not self.increment_tol > 0:
            raise ValueError("increment_tol must be positive")
        if not (self.cg_rel_tol > 0 and self.cg_max_iter > 0):
            raise ValueError("CG tolerances must be positive")


class StopReason(enum.Enum):
    BUDGET = "budget"
    INCREMENT_TOL = "increment_tol"
    SLOPE_REACHED = "slope_reached"
    TARGET_REACHED = "target_reached"


@dataclass
class IterationResult:
    U: np.ndarray
    n_iters: int
    increment_history: List[float]
    measured_contraction: List[float]
    stop_reason: StopReason


def iteration_budget(N: int, gamma: int, log_base: float = math.e) -> int:
    """``gamma * ceil(log N)``, at least one step."""
    if N <= 1:
        return max(1, int(gamma))
    return max(1, int(gamma) * math.ceil(math.log(N) / math.log(log_base)))


def linear_solver(A, cfg: PicardConfig) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """
    Solver ``(rhs, x0) -> x`` for repeated systems with the fixed matrix ``A``.

    ``"cg"`` runs :func:`cg_solve` warm-started at ``x0``.  ``"direct"``
    factorizes ``A`` once and polishes each solution with CG if the residual
    check fails, so both honour ``cfg.cg_rel_tol``.
    """
    if cfg.linear_solver == "cg":
        return lambda rhs, x0: cg_solve(A, rhs, cfg.cg_rel_tol, cfg.cg_max_iter, x0=x0)
    from scipy.sparse.linalg import factorized

    factor = factorized(sparse_csc(A))

    def solve(rhs, x0):
        x = factor(rhs)
        if np.linalg.norm(A @ x - rhs) > cfg.cg_rel_tol * np.linalg.norm(rhs):
            x = cg_solve(A, rhs, cfg.cg_rel_tol, cfg.cg_max_iter, x0=x)
        return x

    return solve


def sparse_csc(A):
    return A.tocsc() if hasattr(A, "tocsc") else A


def picard_step(A, U_n: np.ndarray, load: np.ndarray, b_of: Callable, alpha: float,
                cfg: Optional[PicardConfig] = None, solve: Optional[Callable] = None) -> np.ndarray:
    """
    One damped fixed-point update.

    The linear system is solved by ``solve(rhs, x0)`` when given, else by
    :func:`cg_solve` warm-started at ``U_n``.
    """
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha={alpha} outside [0, 1]")
    cfg = cfg or PicardConfig()
    rhs = (1.0 - alpha) * (A @ U_n) + alpha * (load - b_of(U_n))
    if solve is not None:
        return solve(rhs, U_n)
    return cg_solve(A, rhs, cfg.cg_rel_tol, cfg.cg_max_iter, x0=U_n)


def picard_solve(A, load: np.ndarray, b_of: Callable, U0: np.ndarray, cfg: PicardConfig,
                 budget: int, callback: Optional[Callable[[int, np.ndarray], bool]] = None,
                 divergence_factor: float = 1e6, solve: Optional[Callable] = None) -> IterationResult:
    """
    Iterate :func:`picard_step` up to ``budget`` times.

    Increments are measured in the energy norm ``||grad(U_{n+1} - U_n)||``.
    ``callback(n, U_n)`` runs after every step; a true return value stops the
    iteration with ``StopReason.SLOPE_REACHED``.

    Raises :class:`IterationDiverged` when an increment exceeds
    ``divergence_factor`` times the larger of ``||grad U0||`` and the first
    increment.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    U = np.array(U0, dtype=float)
    solve = solve or linear_solver(A, cfg)
    scale = fem.energy_norm(A, U)
    increments: List[float] = []
    reason = StopReason.BUDGET
    n = 0
    while n < budget:
        U_next = picard_step(A, U, load, b_of, cfg.alpha, cfg, solve)
        inc = fem.energy_norm(A, U_next - U)
        U = U_next
        n += 1
        increments.append(inc)
        if not math.isfinite(inc):
            raise IterationDiverged(f"non-finite increment at step {n}")
        if n == 1:
            scale = max(scale, inc)
        if inc > divergence_factor * scale and scale > 0:
            raise IterationDiverged(f"iteration diverged: increment {inc:.3e} at step {n}")
        if callback is not None and callback(n, U):
            reason = StopReason.SLOPE_REACHED
            break
        if cfg.increment_tol is not None and inc <= cfg.increment_tol:
            reason = StopReason.INCREMENT_TOL
            break
    ratios = [increments[k + 1] / increments[k] if increments[k] > 0 else math.nan
              for k in range(len(increments) - 1)]
    return IterationResult(U, n, increments, ratios, reason)


class Discretization:
    """
    Everything needed to iterate one problem on one mesh.

    The stiffness matrix and load vector are assembled once with the
    midpoint rule; the H1 error uses ``error_rule``.
    """

    def __init__(self, problem: ManufacturedProblem, mesh: Mesh,
                 rule: Optional[fem.QuadRule] = None, error_rule: Optional[fem.QuadRule] = None):
        rule = rule or fem.midpoint_rule()
        error_rule = error_rule or fem.order5_rule()
        self.problem, self.mesh = problem, mesh
        self.dofmap = fem.build_dofmap(mesh)
        self.elements = fem.ElementData(mesh)
        self.A = fem.assemble_stiffness(mesh, self.dofmap, self.elements)
        self.load = fem.assemble_load(mesh, self.dofmap, problem.f, rule, self.elements)
        self.b_of = fem.SemilinearForm(mesh, self.dofmap, problem.nonlinearity.g, rule, self.elements)
        self.h1_error = fem.H1ErrorEvaluator(mesh, self.dofmap, problem.exact_grad_u, error_rule, self.elements)

    @property
    def n_free(self) -> int:
        return self.dofmap.n_free


@dataclass
class LevelRecord:
    level: int
    h: float
    N: int
    n_iters: int
    err_h1: float
    eoc: Optional[float]
    stop_reason: StopReason = StopReason.BUDGET
    error_history: List[float] = field(default_factory=list, repr=False)


def slope(err: float, prev_err: float, N: int, prev_N: int) -> float:
    return math.log(err / prev_err) / math.log(N / prev_N)


def multilevel_run(problem: ManufacturedProblem, mesh_seq: Sequence[Mesh], cfg: PicardConfig,
                   gamma: Optional[int] = None, slope_threshold: float = -0.49,
                   h_values: Optional[Sequence[float]] = None, prolongate_guess: bool = False,
                   discretizations: Optional[Sequence["Discretization"]] = None) -> List[LevelRecord]:
    """
    Solve on each mesh of a coarse-to-fine sequence.

    Each level starts from ``U0 = 0`` (or the prolongated previous solution)
    and iterates until the error slope against the previous level's final
    error drops below ``slope_threshold`` or the budget
    ``gamma * ceil(log N)`` is used up.  The first level only has the budget.
    Prebuilt ``discretizations`` of the meshes may be passed to skip assembly
    when the same sequence is run repeatedly.
    """
    if discretizations is not None and len(discretizations) != len(mesh_seq):
        raise ValueError("one discretization per mesh is required")
    gamma = cfg.gamma if gamma is None else gamma
    records: List[LevelRecord] = []
    prev_err = prev_N = None
    prev_mesh = prev_full = None
    for level, mesh in enumerate(mesh_seq):
        disc = Discretization(problem, mesh) if discretizations is None else discretizations[level]
        N = disc.n_free
        if prev_N is not None and N <= prev_N:
            raise ValueError(f"mesh sequence must have increasing dof counts (level {level}: {N} <= {prev_N})")
        budget = iteration_budget(N, gamma, cfg.log_base)
        if prolongate_guess and prev_mesh is not None:
            U0 = disc.dofmap.restrict(prolongate(prev_mesh, mesh, prev_full))
        else:
            U0 = np.zeros(N)
        errors: List[float] = []

        def reached(n, U, prev_err=prev_err, prev_N=prev_N, N=N):
            errors.append(disc.h1_error(U))
            if prev_err is None:
                return False
            return slope(errors[-1], prev_err, N, prev_N) < slope_threshold

        res = picard_solve(disc.A, disc.load, disc.b_of, U0, cfg, budget, callback=reached)
        err = errors[-1]
        eoc = None if prev_err is None else slope(err, prev_err, N, prev_N)
        h = float(h_values[level]) if h_values is not None else mesh.mesh_size()
        records.append(LevelRecord(level, h, N, res.n_iters, err, eoc, res.stop_reason, errors))
        logger.info("level %d: N=%d iterations=%d/%d err=%.4e eoc=%s", level, N, res.n_iters, budget, err,
                    "-" if eoc is None else f"{eoc:.3f}")
        prev_err, prev_N = err, N
        prev_mesh, prev_full = mesh, disc.dofmap.expand(res.U)
    return records


def total_iterations(records: Sequence[LevelRecord]) -> int:
    return sum(r.n_iters for r in records)
