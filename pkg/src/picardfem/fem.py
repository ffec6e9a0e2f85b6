"""
P1 finite element machinery on a :class:`~picardfem.mesh.Mesh`.

Dirichlet vertices are eliminated from the system: a :class:`DofMap` numbers
the remaining (interior and Neumann) vertices ``0..N-1`` and all assembled
vectors and matrices live on those free dofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import sparse

from .mesh import Mesh


class DegenerateTriangleError(ValueError):
    pass


class NonFiniteValueError(ArithmeticError):
    """A callable returned NaN/Inf at a quadrature point."""

    def __init__(self, what: str, point, value):
        super().__init__(f"{what} is not finite ({value!r}) at point ({point[0]:.17g}, {point[1]:.17g})")
        self.point = tuple(point)
        self.value = value


@dataclass(frozen=True, eq=False)
class DofMap:
    """
    Vertex to free-dof numbering.

    ``free_index[v]`` is the dof of vertex ``v`` or ``-1`` if the vertex is
    fixed; ``fixed_values`` holds the prescribed nodal values (zero unless a
    non-homogeneous Dirichlet datum was requested).
    """

    free_index: np.ndarray
    fixed_values: np.ndarray

    @property
    def n_free(self) -> int:
        return int((self.free_index >= 0).sum())

    @property
    def free_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.free_index >= 0)

    def expand(self, U: np.ndarray) -> np.ndarray:
        """Nodal values on all vertices from free-dof coefficients."""
        U = np.asarray(U, dtype=float)
        if U.shape != (self.n_free,):
            raise ValueError(f"coefficient vector has shape {U.shape}, expected ({self.n_free},)")
        full = self.fixed_values.copy()
        full[self.free_vertices] = U
        return full

    def restrict(self, nodal: np.ndarray) -> np.ndarray:
        return np.asarray(nodal, dtype=float)[self.free_vertices]


def build_dofmap(mesh: Mesh, dirichlet_values: Optional[Callable] = None) -> DofMap:
    """
    Fix every vertex on a Dirichlet edge; number the rest consecutively.

    ``dirichlet_values``, a callable on ``(n, 2)`` point arrays, prescribes
    non-zero values at fixed vertices.  The solvers in this package only use
    homogeneous data; the hook exists for patch tests.
    """
    fixed = mesh.dirichlet_vertices()
    free_index = np.full(mesh.n_vertices, -1, dtype=np.int64)
    free_index[~fixed] = np.arange(int((~fixed).sum()))
    values = np.zeros(mesh.n_vertices)
    if dirichlet_values is not None:
        values[fixed] = np.asarray(dirichlet_values(mesh.vertices[fixed]), dtype=float)
    free_index.setflags(write=False)
    values.setflags(write=False)
    return DofMap(free_index, values)


@dataclass(frozen=True)
class QuadRule:
    """Triangle rule: barycentric points, weights summing to one."""

    points: np.ndarray
    weights: np.ndarray
    degree: int
    name: str = ""


def midpoint_rule() -> QuadRule:
    """Edge-midpoint rule, exact for quadratics."""
    pts = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
    return QuadRule(pts, np.full(3, 1.0 / 3.0), 2, "midpoint")


def order5_rule() -> QuadRule:
    """Seven-point rule of Radon type, exact for polynomials of degree 5."""
    s = math.sqrt(15.0)
    a1, a2 = (6.0 - s) / 21.0, (6.0 + s) / 21.0
    w1, w2 = (155.0 - s) / 1200.0, (155.0 + s) / 1200.0
    pts = [[1 / 3, 1 / 3, 1 / 3]]
    for a in (a1, a2):
        b = 1.0 - 2.0 * a
        pts += [[a, a, b], [a, b, a], [b, a, a]]
    w = [9.0 / 40.0] + [w1] * 3 + [w2] * 3
    return QuadRule(np.array(pts), np.array(w), 5, "order5")


def element_stiffness(p0, p1, p2) -> np.ndarray:
    """Exact P1 stiffness matrix of one triangle."""
    p = np.array([p0, p1, p2], dtype=float)
    d = p[[1, 2, 0]] - p[[2, 0, 1]]  # edge opposite vertex i
    area = 0.5 * ((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0]))
    if not area > 0:
        raise DegenerateTriangleError(f"triangle has nonpositive area {area!r}")
    return (d @ d.T) / (4.0 * area)


class ElementData:
    """
    Per-triangle geometry: areas and gradients of the barycentric coordinates.
    """

    def __init__(self, mesh: Mesh):
        p = mesh.vertices[mesh.triangles]
        two_area = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                    - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
        if np.any(two_area <= 0):
            bad = int(np.argmin(two_area))
            raise DegenerateTriangleError(f"triangle {bad} has nonpositive area {0.5 * two_area[bad]!r}")
        d = p[:, [1, 2, 0]] - p[:, [2, 0, 1]]
        # grad(lambda_i): edge p_{i+1} - p_{i+2} turned clockwise, over 2|T|
        self.grads = np.stack([d[:, :, 1], -d[:, :, 0]], axis=2) / two_area[:, None, None]
        self.areas = 0.5 * two_area
        self.mesh = mesh

    def quad_points(self, rule: QuadRule) -> np.ndarray:
        """(nt, nq, 2) physical quadrature points."""
        return np.einsum("qi,tic->tqc", rule.points, self.mesh.vertices[self.mesh.triangles])

    def gradient(self, nodal: np.ndarray) -> np.ndarray:
        """(nt, 2) constant gradient of a P1 function given by nodal values."""
        return np.einsum("ti,tic->tc", nodal[self.mesh.triangles], self.grads)


def _scatter(mesh: Mesh, dofmap: DofMap, local: np.ndarray) -> np.ndarray:
    nodal = np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)
    return dofmap.restrict(nodal)


def _check_finite(values, points, what):
    values = np.asarray(values)
    pts = points.reshape(-1, 2)
    per_point = values.reshape(len(pts), -1)  # vector values keep their components together
    bad = ~np.isfinite(per_point).all(axis=1)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise NonFiniteValueError(what, pts[k], per_point[k] if per_point.shape[1] > 1 else per_point[k, 0])


def _full_stiffness(mesh: Mesh, elements: ElementData):
    K = elements.areas[:, None, None] * np.einsum("tic,tjc->tij", elements.grads, elements.grads)
    rows = np.repeat(mesh.triangles, 3, axis=1)
    cols = np.tile(mesh.triangles, (1, 3))
    return rows.ravel(), cols.ravel(), K.ravel()


def assemble_stiffness(mesh: Mesh, dofmap: DofMap, elements: Optional[ElementData] = None) -> sparse.csr_matrix:
    """Stiffness matrix on the free dofs (scipy CSR)."""
    elements = elements or ElementData(mesh)
    r, c, v = _full_stiffness(mesh, elements)
    fr, fc = dofmap.free_index[r], dofmap.free_index[c]
    keep = (fr >= 0) & (fc >= 0)
    n = dofmap.n_free
    A = sparse.coo_matrix((v[keep], (fr[keep], fc[keep])), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def dirichlet_lifting(mesh: Mesh, dofmap: DofMap, elements: Optional[ElementData] = None) -> np.ndarray:
    """``a(u_D, phi_i)`` for the discrete extension ``u_D`` of the fixed values."""
    elements = elements or ElementData(mesh)
    r, c, v = _full_stiffness(mesh, elements)
    fr = dofmap.free_index[r]
    keep = (fr >= 0) & (dofmap.free_index[c] < 0)
    return np.bincount(fr[keep], weights=v[keep] * dofmap.fixed_values[c[keep]], minlength=dofmap.n_free)


def assemble_load(mesh: Mesh, dofmap: DofMap, f: Callable, rule: QuadRule,
                  elements: Optional[ElementData] = None) -> np.ndarray:
    """
    Load vector ``l(phi_i) = sum_T |T| sum_q w_q f(x_q) phi_i(x_q)``.

    ``f`` maps an ``(n, 2)`` point array to ``n`` values.
    """
    elements = elements or ElementData(mesh)
    pts = elements.quad_points(rule)
    vals = np.asarray(f(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape[:2])
    _check_finite(vals, pts, "source term")
    local = np.einsum("t,q,tq,qi->ti", elements.areas, rule.weights, vals, rule.points)
    return _scatter(mesh, dofmap, local)


class SemilinearForm:
    """
    The vector ``b(U; phi_i)`` as a function of the coefficients ``U``.

    Geometry and quadrature data are computed once, so repeated evaluation
    inside a fixed-point loop only costs the nonlinearity itself.
    """

    def __init__(self, mesh: Mesh, dofmap: DofMap, g, rule: QuadRule,
                 elements: Optional[ElementData] = None):
        elements = elements or ElementData(mesh)
        self.mesh, self.dofmap, self.g, self.rule = mesh, dofmap, g, rule
        self.points = elements.quad_points(rule)
        self._flat_points = self.points.reshape(-1, 2)
        self._weights = elements.areas[:, None] * rule.weights[None, :]

    def quad_values(self, U: np.ndarray) -> np.ndarray:
        """(nt, nq) values of the discrete function at the quadrature points."""
        full = self.dofmap.expand(U)
        return full[self.mesh.triangles] @ self.rule.points.T

    def __call__(self, U: np.ndarray) -> np.ndarray:
        uq = self.quad_values(U)
        gv = np.asarray(self.g(self._flat_points, uq.ravel()), dtype=float).reshape(uq.shape)
        _check_finite(gv, self.points, "nonlinearity")
        local = (self._weights * gv) @ self.rule.points
        return _scatter(self.mesh, self.dofmap, local)


def assemble_semilinear(mesh: Mesh, dofmap: DofMap, g, U: np.ndarray, rule: QuadRule) -> np.ndarray:
    """
    ``b(U; phi_i)`` with ``U`` interpolated linearly to the quadrature points.

    ``g`` is a callable ``g(points, values)`` or an object with a ``g``
    attribute of that form (e.g. a :class:`~picardfem.problems.Nonlinearity`).
    """
    return SemilinearForm(mesh, dofmap, getattr(g, "g", g), rule)(U)


def interpolate(mesh: Mesh, dofmap: DofMap, func: Callable) -> np.ndarray:
    """Free-dof coefficients of the nodal interpolant of ``func``."""
    return np.asarray(func(mesh.vertices[dofmap.free_vertices]), dtype=float)


def eval_h1_seminorm(mesh: Mesh, dofmap: DofMap, U: np.ndarray, elements: Optional[ElementData] = None) -> float:
    """``||grad U||_{L2}`` by summing constant element gradients."""
    elements = elements or ElementData(mesh)
    grad = elements.gradient(dofmap.expand(U))
    return math.sqrt(float(np.dot(elements.areas, (grad ** 2).sum(axis=1))))


def energy_norm(A, U: np.ndarray) -> float:
    return math.sqrt(max(float(U @ (A @ U)), 0.0))


class H1ErrorEvaluator:
    """
    ``||grad u - grad U||_{L2}`` for a fixed exact gradient.

    The exact gradient is sampled once at construction; each call only
    evaluates the element gradients of ``U``.
    """

    def __init__(self, mesh: Mesh, dofmap: DofMap, exact_grad: Callable, rule: QuadRule,
                 elements: Optional[ElementData] = None):
        self.elements = elements or ElementData(mesh)
        self.dofmap = dofmap
        pts = self.elements.quad_points(rule)
        grad = np.asarray(exact_grad(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape)
        _check_finite(grad, pts, "exact gradient")
        self.exact = grad
        self.weights = self.elements.areas[:, None] * rule.weights[None, :]

    def __call__(self, U: np.ndarray) -> float:
        g = self.elements.gradient(self.dofmap.expand(U))
        diff = self.exact - g[:, None, :]
        return math.sqrt(float((self.weights * (diff ** 2).sum(axis=2)).sum()))
