"""
Reaction terms and the manufactured model problems on the L-shaped domain.

All pointwise callables take an ``(n, 2)`` array of points; nonlinearities
additionally take the ``n`` values of the solution at those points.  The
built-in reactions ignore the point argument.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import GradingSpec, Mesh, l_shape_initial_mesh

# largest admissible argument of exp before reporting overflow
EXP_ARG_LIMIT = 700.0


class NonlinearityOverflowError(ArithmeticError):
    def __init__(self, argument: float):
        super().__init__(f"exponential argument {argument!r} exceeds +-{EXP_ARG_LIMIT}")
        self.argument = argument


class SingularPointError(ValueError):
    pass


def _exp_checked(arg):
    arg = np.asarray(arg, dtype=float)
    big = np.abs(arg) > EXP_ARG_LIMIT
    if np.any(big):
        raise NonlinearityOverflowError(float(arg[big].flat[0]))
    return np.exp(arg)


@dataclass(frozen=True)
class Nonlinearity:
    """Reaction ``g(x, u)`` together with its derivative in ``u``."""

    g: Callable
    g_u: Callable
    label: str

    def __call__(self, points, u):
        return self.g(points, u)


def nl_exp() -> Nonlinearity:
    return Nonlinearity(lambda x, u: _exp_checked(u), lambda x, u: _exp_checked(u), "exp(u)")


def nl_cubic() -> Nonlinearity:
    return Nonlinearity(lambda x, u: np.asarray(u, dtype=float) ** 3,
                        lambda x, u: 3.0 * np.asarray(u, dtype=float) ** 2, "u^3")


def nl_exp_power(c: float, p: float) -> Nonlinearity:
    """``exp(c |u|^p u)``."""
    if not c > 0:
        raise ValueError("c must be positive")
    if not p >= 0:
        raise ValueError("p must be nonnegative")

    def g(x, u):
        u = np.asarray(u, dtype=float)
        return _exp_checked(c * np.abs(u) ** p * u)

    def g_u(x, u):
        u = np.asarray(u, dtype=float)
        a = np.abs(u) ** p
        return c * (p + 1.0) * a * _exp_checked(c * a * u)

    return Nonlinearity(g, g_u, f"exp({c:g}|u|^{p:g} u)")


def nl_exp_scaled(c: float) -> Nonlinearity:
    """``exp(c u)``."""
    if not c > 0:
        raise ValueError("c must be positive")
    return Nonlinearity(lambda x, u: _exp_checked(c * np.asarray(u, dtype=float)),
                        lambda x, u: c * _exp_checked(c * np.asarray(u, dtype=float)), f"exp({c:g}u)")


@dataclass(frozen=True)
class MonotonicityReport:
    min_pairwise: float  # min of (g(t1) - g(t2)) (t1 - t2)
    min_sign: float      # min of g(t) t

    @property
    def monotone(self) -> bool:
        return self.min_pairwise >= 0.0

    @property
    def sign_condition(self) -> bool:
        return self.min_sign >= 0.0


def check_monotone(n: Nonlinearity, sample_points, sample_values) -> MonotonicityReport:
    """
    Sample both monotonicity expressions; diagnostic only, nothing is enforced.
    """
    pts = np.asarray(sample_points, dtype=float).reshape(-1, 2)
    t = np.asarray(sample_values, dtype=float).ravel()
    min_pair, min_sign = math.inf, math.inf
    for x in pts:
        gv = np.asarray(n.g(np.repeat(x[None, :], len(t), axis=0), t), dtype=float)
        pair = (gv[:, None] - gv[None, :]) * (t[:, None] - t[None, :])
        min_pair = min(min_pair, float(pair.min()))
        min_sign = min(min_sign, float((gv * t).min()))
    return MonotonicityReport(min_pair, min_sign)


class CornerKind(enum.Enum):
    DIRICHLET_DIRICHLET = "DD"
    NEUMANN_NEUMANN = "NN"
    DIRICHLET_NEUMANN = "DN"


def beta_min(omega: float, kind: CornerKind) -> float:
    """
    Lower bound for admissible grading exponents at a corner of angle omega.

    Returns ``1 - min(1, pi/omega)`` for corners with equal boundary types and
    ``1 - min(1, pi/(2 omega))`` for mixed corners.
    """
    if not (0.0 < omega < 2.0 * math.pi):
        raise ValueError(f"interior angle {omega!r} outside (0, 2pi): polygon is degenerate")
    kind = CornerKind(kind)
    limit = 2.0 * omega if kind is CornerKind.DIRICHLET_NEUMANN else omega
    # (limit - pi)/limit == 1 - pi/limit, but rounds exactly at 3pi/2
    return max(0.0, (limit - math.pi) / limit)


class _RadialProduct:
    """
    ``u = r^s P(x, y)`` with a polynomial factor ``P``.

    Gradient and Laplacian follow from the product rule with
    ``grad r^s = s r^(s-2) (x, y)`` and ``lap r^s = s^2 r^(s-2)``.
    """

    def __init__(self, s, P, P_x, P_y, lap_P):
        self.s, self.P, self.P_x, self.P_y, self.lap_P = s, P, P_x, P_y, lap_P

    @staticmethod
    def _split(points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
        r2 = x * x + y * y
        if np.any(r2 == 0.0):
            raise SingularPointError("exact solution requested at the singular corner (0, 0)")
        return x, y, r2

    def value(self, points):
        x, y, r2 = self._split(points)
        return r2 ** (0.5 * self.s) * self.P(x, y)

    def grad(self, points):
        x, y, r2 = self._split(points)
        rs = r2 ** (0.5 * self.s)
        radial = self.s * rs / r2 * self.P(x, y)
        return np.stack([radial * x + rs * self.P_x(x, y), radial * y + rs * self.P_y(x, y)], axis=1)

    def laplacian(self, points):
        x, y, r2 = self._split(points)
        rs = r2 ** (0.5 * self.s)
        s = self.s
        return (rs / r2 * (s * s * self.P(x, y) + 2.0 * s * (x * self.P_x(x, y) + y * self.P_y(x, y)))
                + rs * self.lap_P(x, y))


@dataclass(frozen=True)
class ManufacturedProblem:
    """
    Model problem with known solution.

    ``f`` is ``-lap u + g(u)`` with the Laplacian coded in closed form
    (``laplacian_u``), so the exact solution solves the continuous problem.
    """

    label: str
    mesh_factory: Callable[[], Mesh]
    nonlinearity: Nonlinearity
    exact_u: Callable
    exact_grad_u: Callable
    laplacian_u: Callable
    beta: float = 0.0
    corner: tuple = (0.0, 0.0)

    def f(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return -self.laplacian_u(points) + self.nonlinearity.g(points, self.exact_u(points))

    def grading(self, h: float) -> GradingSpec:
        return GradingSpec(((self.corner, self.beta),), h)

    def initial_mesh(self) -> Mesh:
        return self.mesh_factory()


def _sin_product(points):
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    return np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])


def _sin_product_grad(points):
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    sx, sy = np.sin(np.pi * p[:, 0]), np.sin(np.pi * p[:, 1])
    cx, cy = np.cos(np.pi * p[:, 0]), np.cos(np.pi * p[:, 1])
    return np.pi * np.stack([cx * sy, sx * cy], axis=1)


def experiment1() -> ManufacturedProblem:
    """exp(u) reaction, u = sin(pi x) sin(pi y), homogeneous Dirichlet data."""
    return ManufacturedProblem(
        label="exp1",
        mesh_factory=l_shape_initial_mesh,
        nonlinearity=nl_exp(),
        exact_u=_sin_product,
        exact_grad_u=_sin_product_grad,
        laplacian_u=lambda p: -2.0 * np.pi ** 2 * _sin_product(p),
        beta=0.0,
    )


_EXP2 = _RadialProduct(
    -4.0 / 3.0,
    lambda x, y: 2.0 * x * y * (1 - x * x) * (1 - y * y),
    lambda x, y: 2.0 * y * (1 - y * y) * (1 - 3 * x * x),
    lambda x, y: 2.0 * x * (1 - x * x) * (1 - 3 * y * y),
    lambda x, y: -12.0 * x * y * (2 - x * x - y * y),
)

_EXP3 = _RadialProduct(
    -2.0 / 3.0,
    lambda x, y: y * (1 - x * x) * (1 - y * y),
    lambda x, y: -2.0 * x * y * (1 - y * y),
    lambda x, y: (1 - x * x) * (1 - 3 * y * y),
    lambda x, y: -2.0 * y * (1 - y * y) - 6.0 * y * (1 - x * x),
)


def experiment2() -> ManufacturedProblem:
    """Cubic reaction, corner singularity r^(2/3), homogeneous Dirichlet data."""
    return ManufacturedProblem(
        label="exp2",
        mesh_factory=l_shape_initial_mesh,
        nonlinearity=nl_cubic(),
        exact_u=_EXP2.value,
        exact_grad_u=_EXP2.grad,
        laplacian_u=_EXP2.laplacian,
        beta=0.4,
    )


def experiment3() -> ManufacturedProblem:
    """exp(4|u|^0.9 u) reaction, Neumann on {0}x(0,1), singularity r^(1/3)."""
    return ManufacturedProblem(
        label="exp3",
        mesh_factory=lambda: l_shape_initial_mesh(neumann=True),
        nonlinearity=nl_exp_power(4.0, 0.9),
        exact_u=_EXP3.value,
        exact_grad_u=_EXP3.grad,
        laplacian_u=_EXP3.laplacian,
        beta=0.7,
    )


EXPERIMENTS = {"exp1": experiment1, "exp2": experiment2, "exp3": experiment3}
