"""
Semilinear elliptic problems ``-lap u + g(x, u) = f`` with P1 finite elements.

The package builds corner-graded triangulations by red-green-blue refinement
(:mod:`picardfem.mesh`), assembles the discrete forms (:mod:`picardfem.fem`),
solves the discrete nonlinear problem by a damped Picard iteration
(:mod:`picardfem.solver`) and measures errors and convergence orders against
manufactured solutions (:mod:`picardfem.problems`, :mod:`picardfem.analysis`).
"""

from .analysis import alpha_objective, eoc, golden_section, h1_error, sweep_alpha
from .fem import assemble_load, assemble_semilinear, assemble_stiffness, build_dofmap, midpoint_rule, order5_rule
from .mesh import GradingSpec, Mesh, check_grading, grade_to, l_shape_initial_mesh, rgb_refine, uniform_refine
from .problems import EXPERIMENTS, CornerKind, beta_min, experiment1, experiment2, experiment3
from .solver import PicardConfig, cg_solve, multilevel_run, picard_solve, picard_step

__version__ = "0.1.0"

__all__ = [
    "Mesh", "GradingSpec", "l_shape_initial_mesh", "rgb_refine", "uniform_refine", "grade_to", "check_grading",
    "build_dofmap", "assemble_stiffness", "assemble_load", "assemble_semilinear", "midpoint_rule", "order5_rule",
    "EXPERIMENTS", "CornerKind", "beta_min", "experiment1", "experiment2", "experiment3",
    "PicardConfig", "cg_solve", "picard_step", "picard_solve", "multilevel_run",
    "h1_error", "eoc", "golden_section", "alpha_objective", "sweep_alpha",
]
