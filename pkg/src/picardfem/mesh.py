"""
Conforming triangulations of polygonal domains.

A :class:`Mesh` stores vertex coordinates, counterclockwise triangles and the
tagged boundary edges.  Meshes are never modified in place: every refinement
returns a new object.  Refinement follows the red-green-blue (RGB) scheme with
the longest edge of each triangle acting as its reference edge, which keeps
right isosceles triangles (such as the ones of the L-shaped start mesh) similar
to their ancestors under red, green and blue splits alike.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

# refinement_flags values
REGULAR = 0
GREEN = 1
BLUE = 2


class BoundaryTag(str, enum.Enum):
    DIRICHLET = "D"
    NEUMANN = "N"


class MeshError(ValueError):
    """Raised for invalid meshes and malformed refinement requests."""


class MeshFormatError(MeshError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class RefinementBudgetExceeded(RuntimeError):
    def __init__(self, max_rounds: int):
        super().__init__(f"grading did not terminate within max_rounds={max_rounds} refinement rounds")
        self.max_rounds = max_rounds


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Triangulation with tagged boundary.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counterclockwise
    boundary_edges : (nbe, 2) int array
    boundary_tags : (nbe,) array of ``"D"`` / ``"N"``
    refinement_flags : (nt,) int array
        ``REGULAR``, ``GREEN`` or ``BLUE`` closure status of each triangle.
    vertex_parents : (nv, 2) int array
        For a vertex created as an edge midpoint, the two endpoints of that
        edge; ``-1`` for vertices of the coarsest mesh.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    refinement_flags: Optional[np.ndarray] = None
    vertex_parents: Optional[np.ndarray] = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        be = np.asarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        tags = self.boundary_tags
        if not (isinstance(tags, np.ndarray) and tags.dtype.kind == "U"):
            tags = [getattr(s, "value", s) for s in tags]
        tags = np.asarray(tags, dtype="<U1").reshape(-1)
        if not np.isin(tags, ("D", "N")).all():
            raise MeshError("boundary tags must be 'D' or 'N'")
        if len(tags) != len(be):
            raise MeshError("boundary_tags and boundary_edges differ in length")
        if not np.all(np.isfinite(v)):
            raise MeshError("vertex coordinates must be finite")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError("triangle references a nonexistent vertex")
        flags = np.zeros(len(t), dtype=np.int8) if self.refinement_flags is None else self.refinement_flags
        parents = np.full((len(v), 2), -1, dtype=np.int64) if self.vertex_parents is None else self.vertex_parents
        if len(flags) != len(t) or len(parents) != len(v):
            raise MeshError("refinement bookkeeping does not match mesh size")
        object.__setattr__(self, "vertices", _frozen(v, float))
        object.__setattr__(self, "triangles", _frozen(t, np.int64))
        object.__setattr__(self, "boundary_edges", _frozen(be, np.int64))
        object.__setattr__(self, "boundary_tags", _frozen(tags, "<U1"))
        object.__setattr__(self, "refinement_flags", _frozen(flags, np.int8))
        object.__setattr__(self, "vertex_parents", _frozen(parents, np.int64).reshape(-1, 2))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def __repr__(self):
        return f"Mesh(nv={self.n_vertices}, nt={self.n_triangles}, nbe={len(self.boundary_edges)})"

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def diameters(self) -> np.ndarray:
        """Longest edge length of every triangle."""
        return np.sqrt(_edge_lengths_sq(self.vertices, self.triangles).max(axis=1))

    def barycenters(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def mesh_size(self) -> float:
        return float(self.diameters().max())

    def edges(self) -> np.ndarray:
        return edge_structure(self.triangles)[0]

    def dirichlet_vertices(self) -> np.ndarray:
        """Boolean mask of vertices lying on a Dirichlet-tagged edge."""
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_edges[self.boundary_tags == BoundaryTag.DIRICHLET.value].ravel()] = True
        return mask

    def boundary_vertices(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_edges.ravel()] = True
        return mask

    def min_angle(self) -> float:
        """Smallest interior angle over all triangles, in radians."""
        return float(triangle_angles(self).min())

    def validate(self, simply_connected: bool = True) -> None:
        """
        Check positivity, conformity and boundary consistency.

        Raises :class:`MeshError` describing the first violated invariant.
        """
        if self.n_triangles == 0:
            raise MeshError("mesh has no triangles")
        areas = self.signed_areas()
        if np.any(areas <= 0):
            raise MeshError(f"triangle {int(np.argmin(areas))} has nonpositive signed area")
        edges, tri_edges = edge_structure(self.triangles)
        counts = np.bincount(tri_edges.ravel(), minlength=len(edges))
        if np.any(counts > 2):
            raise MeshError("an edge is shared by more than two triangles")
        # oriented half-edges must not repeat, otherwise neighbours overlap
        half = self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        if len(np.unique(half[:, 0] * self.n_vertices + half[:, 1])) != len(half):
            raise MeshError("inconsistent triangle orientation across an interior edge")
        outer = edges[counts == 1]
        be = np.sort(self.boundary_edges, axis=1)
        if len(np.unique(be, axis=0)) != len(be):
            raise MeshError("duplicate boundary edge")
        if len(be) != len(outer) or not np.array_equal(_lexsorted(be), _lexsorted(outer)):
            raise MeshError("boundary_edges differ from the edges adjacent to exactly one triangle (hanging node?)")
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.triangles.ravel()] = True
        if not used.all():
            raise MeshError("mesh has vertices not used by any triangle")
        if simply_connected:
            euler = self.n_vertices - len(edges) + self.n_triangles + 1
            if euler != 2:
                raise MeshError(f"Euler characteristic V - E + (T + 1) = {euler}, expected 2")


def _lexsorted(a):
    return a[np.lexsort(a.T[::-1])]


def _edge_lengths_sq(vertices, triangles):
    p = vertices[triangles]
    d = p[:, [1, 2, 0]] - p
    return (d ** 2).sum(axis=2)


def triangle_angles(mesh: Mesh) -> np.ndarray:
    """(nt, 3) array of interior angles, angle k sitting at local vertex k."""
    p = mesh.vertices[mesh.triangles]
    a = p[:, [1, 2, 0]] - p
    b = p[:, [2, 0, 1]] - p
    cos = (a * b).sum(axis=2) / np.sqrt((a ** 2).sum(axis=2) * (b ** 2).sum(axis=2))
    return np.arccos(np.clip(cos, -1.0, 1.0))


def edge_structure(triangles: np.ndarray):
    """
    Unique edges of a triangulation.

    Returns
    -------
    edges : (ne, 2) int array
        Sorted vertex pairs, in lexicographic order.
    tri_edges : (nt, 3) int array
        Edge id of local edge ``k`` = ``(t[k], t[k+1 mod 3])``.
    """
    t = np.asarray(triangles, dtype=np.int64)
    a = t[:, [0, 1, 2]].ravel()
    b = t[:, [1, 2, 0]].ravel()
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    base = int(t.max()) + 1 if t.size else 1
    keys, inverse = np.unique(lo * base + hi, return_inverse=True)
    edges = np.stack([keys // base, keys % base], axis=1)
    return edges, inverse.reshape(-1, 3)


def l_shape_initial_mesh(neumann: bool = False) -> Mesh:
    """
    Twelve-triangle mesh of the L-shaped domain (-1,1)^2 minus [-1,0]x[0,1].

    Each of the three unit squares is split into four triangles around its
    center.  All boundary edges are Dirichlet unless ``neumann`` is set, in
    which case the segment {0} x (0,1) is tagged Neumann.
    """
    vertices = [(-1.0, -1.0), (0.0, -1.0), (1.0, -1.0), (-1.0, 0.0), (0.0, 0.0),
                (1.0, 0.0), (0.0, 1.0), (1.0, 1.0),
                (-0.5, -0.5), (0.5, -0.5), (0.5, 0.5)]
    squares = [(0, 1, 4, 3, 8), (1, 2, 5, 4, 9), (4, 5, 7, 6, 10)]
    triangles = []
    for ll, lr, ur, ul, c in squares:
        triangles += [(ll, lr, c), (lr, ur, c), (ur, ul, c), (ul, ll, c)]
    boundary = [(0, 1), (1, 2), (2, 5), (5, 7), (7, 6), (6, 4), (4, 3), (3, 0)]
    tags = ["D"] * len(boundary)
    if neumann:
        tags[boundary.index((6, 4))] = "N"
    return Mesh(vertices, triangles, boundary, tags)


def _orient_longest_first(vertices, triangles):
    """Rotate each row so that its longest edge becomes local edge 0."""
    lsq = _edge_lengths_sq(vertices, triangles)
    k = np.argmax(lsq, axis=1)
    idx = (k[:, None] + np.arange(3)[None, :]) % 3
    return np.take_along_axis(triangles, idx, axis=1)


def rgb_refine(mesh: Mesh, marked: Iterable[int]) -> Mesh:
    """
    Red-refine the marked triangles and close the mesh with green/blue splits.

    Every marked triangle gets all three edges bisected.  Marks then spread
    to reference (longest) edges until each triangle with a bisected edge also
    has its reference edge bisected, so only the patterns red (all edges),
    green (reference edge) and blue (reference plus one more) occur.
    """
    marked = np.unique(np.asarray(list(marked) if not isinstance(marked, np.ndarray) else marked, dtype=np.int64))
    nt = mesh.n_triangles
    if marked.size and (marked[0] < 0 or marked[-1] >= nt):
        bad = marked[(marked < 0) | (marked >= nt)]
        raise MeshError(f"malformed mark set: triangle index {int(bad[0])} outside 0..{nt - 1}")
    if marked.size == 0:
        return mesh

    verts = mesh.vertices
    tri = _orient_longest_first(verts, mesh.triangles)
    edges, tri_edges = edge_structure(tri)

    edge_marked = np.zeros(len(edges), dtype=bool)
    edge_marked[tri_edges[marked].ravel()] = True
    while True:
        has_mark = edge_marked[tri_edges].any(axis=1)
        need_ref = has_mark & ~edge_marked[tri_edges[:, 0]]
        if not need_ref.any():
            break
        edge_marked[tri_edges[need_ref, 0]] = True

    nv = mesh.n_vertices
    new_edges = np.flatnonzero(edge_marked)
    mid = np.full(len(edges), -1, dtype=np.int64)
    mid[new_edges] = nv + np.arange(len(new_edges))
    ends = edges[new_edges]
    new_vertices = np.vstack([verts, 0.5 * (verts[ends[:, 0]] + verts[ends[:, 1]])])
    new_parents = np.vstack([mesh.vertex_parents, ends])

    m = mid[tri_edges]
    code = (m[:, 0] >= 0) * 1 + (m[:, 1] >= 0) * 2 + (m[:, 2] >= 0) * 4
    if np.any((code != 0) & (code != 1) & (code != 3) & (code != 5) & (code != 7)):
        raise AssertionError("RGB closure produced an invalid split pattern")

    t0, t1, t2 = tri[:, 0], tri[:, 1], tri[:, 2]
    m0, m1, m2 = m[:, 0], m[:, 1], m[:, 2]
    children, parent, order, flags = [], [], [], []

    def emit(sel, kids, flag):
        for j, kid in enumerate(kids):
            children.append(np.stack(kid, axis=1)[sel])
            parent.append(np.flatnonzero(sel))
            order.append(np.full(int(sel.sum()), j))
            flags.append(np.full(int(sel.sum()), flag, dtype=np.int8) if flag is not None
                         else mesh.refinement_flags[sel])

    keep = code == 0
    children.append(mesh.triangles[keep])
    parent.append(np.flatnonzero(keep))
    order.append(np.zeros(int(keep.sum()), dtype=np.int64))
    flags.append(mesh.refinement_flags[keep])
    emit(code == 1, [(t0, m0, t2), (m0, t1, t2)], GREEN)
    emit(code == 3, [(t0, m0, t2), (m0, t1, m1), (m0, m1, t2)], BLUE)
    emit(code == 5, [(t0, m0, m2), (m0, t2, m2), (m0, t1, t2)], BLUE)
    emit(code == 7, [(t0, m0, m2), (m0, t1, m1), (m2, m1, t2), (m0, m1, m2)], REGULAR)

    parent = np.concatenate(parent)
    perm = np.lexsort((np.concatenate(order), parent))
    new_tri = np.concatenate(children)[perm]
    new_flags = np.concatenate(flags)[perm]

    be = mesh.boundary_edges
    be_ids = _lookup_edges(edges, be)
    be_mid = mid[be_ids]
    split = be_mid >= 0
    out_edges = np.empty((len(be) + int(split.sum()), 2), dtype=np.int64)
    out_tags = np.empty(len(out_edges), dtype="<U1")
    pos = np.arange(len(be)) + np.concatenate([[0], np.cumsum(split)[:-1]])
    out_edges[pos] = np.where(split[:, None], np.stack([be[:, 0], be_mid], axis=1), be)
    out_tags[pos] = mesh.boundary_tags
    out_edges[pos[split] + 1] = np.stack([be_mid[split], be[split, 1]], axis=1)
    out_tags[pos[split] + 1] = mesh.boundary_tags[split]

    return Mesh(new_vertices, new_tri, out_edges, out_tags, new_flags, new_parents)


def _lookup_edges(edges, pairs):
    """Edge ids of the given vertex pairs (either orientation)."""
    pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), axis=1)
    base = int(edges.max()) + 1 if len(edges) else 1
    keys = edges[:, 0] * base + edges[:, 1]
    q = pairs[:, 0] * base + pairs[:, 1]
    pos = np.searchsorted(keys, q)
    if np.any(pos >= len(keys)) or np.any(keys[np.minimum(pos, len(keys) - 1)] != q):
        raise MeshError("boundary edge is not an edge of the triangulation")
    return pos


def uniform_refine(mesh: Mesh) -> Mesh:
    """Red refinement of every triangle."""
    return rgb_refine(mesh, np.arange(mesh.n_triangles))


def uniform_refine_n(mesh: Mesh, k: int) -> Mesh:
    for _ in range(k):
        mesh = uniform_refine(mesh)
    return mesh


@dataclass(frozen=True)
class GradingSpec:
    """
    Corner weights for a graded mesh.

    ``corners`` holds ``((x, y), beta)`` pairs.  ``kappa`` is informational:
    refinement never uses it, :func:`check_grading` measures it.
    """

    corners: tuple
    h: float
    kappa: float = 1.0

    def __post_init__(self):
        corners = tuple((tuple(float(c) for c in p), float(b)) for p, b in self.corners)
        object.__setattr__(self, "corners", corners)
        for p, b in corners:
            if not (0.0 <= b < 1.0):
                raise ValueError(f"grading exponent {b} at corner {p} outside [0, 1)")
            if not all(math.isfinite(c) for c in p):
                raise ValueError("corner coordinates must be finite")
        if not self.kappa >= 1.0:
            raise ValueError("kappa must be >= 1")
        if not self.h > 0:
            raise ValueError("h must be positive")

    @property
    def corner_points(self) -> np.ndarray:
        return np.array([p for p, _ in self.corners], dtype=float).reshape(-1, 2)

    @property
    def betas(self) -> np.ndarray:
        return np.array([b for _, b in self.corners], dtype=float)

    def weight(self, points: np.ndarray) -> np.ndarray:
        """Product of corner distances raised to their exponents."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        phi = np.ones(len(points))
        for c, b in zip(self.corner_points, self.betas):
            if b != 0.0:
                phi *= np.hypot(points[:, 0] - c[0], points[:, 1] - c[1]) ** b
        return phi


def corner_contact(mesh: Mesh, corners: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """(nt, ncorners) boolean: corner lies in the closed triangle."""
    p = mesh.vertices[mesh.triangles]
    out = np.zeros((mesh.n_triangles, len(corners)), dtype=bool)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    for j, c in enumerate(corners):
        r = c[None, :] - p[:, 0]
        l1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
        l2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
        out[:, j] = (l1 >= -tol) & (l2 >= -tol) & (1.0 - l1 - l2 >= -tol)
    return out


def _grading_target(mesh: Mesh, spec: GradingSpec, h_t: np.ndarray) -> np.ndarray:
    bary = mesh.barycenters()
    corners, betas = spec.corner_points, spec.betas
    contact = corner_contact(mesh, corners)
    g = np.ones(mesh.n_triangles)
    for j, (c, b) in enumerate(zip(corners, betas)):
        if b == 0.0:
            continue
        dist = np.hypot(bary[:, 0] - c[0], bary[:, 1] - c[1])
        g *= np.where(contact[:, j], h_t, dist) ** b
    return g


def grade_to(mesh0: Mesh, spec: GradingSpec, max_rounds: int = 64) -> Mesh:
    """
    Refine until every triangle satisfies ``h_T <= spec.h * g_T``.

    ``g_T`` is the corner weight at the barycenter of ``T``; for a triangle
    touching corner ``c_j`` the factor for that corner is replaced by
    ``h_T ** beta_j``.
    """
    mesh = mesh0
    for _ in range(max_rounds):
        h_t = mesh.diameters()
        marked = np.flatnonzero(h_t > spec.h * _grading_target(mesh, spec, h_t))
        if marked.size == 0:
            return mesh
        mesh = rgb_refine(mesh, marked)
    h_t = mesh.diameters()
    if np.any(h_t > spec.h * _grading_target(mesh, spec, h_t)):
        raise RefinementBudgetExceeded(max_rounds)
    return mesh


def n_free_dofs(mesh: Mesh) -> int:
    """Number of vertices not on the Dirichlet boundary."""
    return int(mesh.n_vertices - mesh.dirichlet_vertices().sum())


def uniform_sequence(mesh0: Mesh, levels: int, max_dofs: Optional[int] = None) -> list:
    """
    ``mesh0`` and up to ``levels - 1`` uniform refinements of it.

    The sequence stops before the first mesh with more than ``max_dofs`` free
    vertices; the start mesh is always kept.
    """
    if levels < 1:
        raise ValueError("levels must be at least 1")
    meshes = [mesh0]
    while len(meshes) < levels:
        nxt = uniform_refine(meshes[-1])
        if max_dofs is not None and n_free_dofs(nxt) > max_dofs:
            break
        meshes.append(nxt)
    return meshes


def graded_sequence(mesh0: Mesh, corners: tuple, h_list, max_dofs: Optional[int] = None,
                    max_rounds: int = 64) -> list:
    """
    Nested graded meshes for a decreasing list of mesh sizes.

    Level ``k`` is obtained by grading level ``k - 1`` to ``h_list[k]``, so
    every mesh refines its predecessor.  The sequence stops before the first
    mesh with more than ``max_dofs`` free vertices, keeping at least one mesh.
    """
    h_list = [float(h) for h in h_list]
    if not h_list:
        raise ValueError("h_list is empty")
    if any(b >= a for a, b in zip(h_list[:-1], h_list[1:])):
        raise ValueError("h_list must be strictly decreasing")
    meshes = []
    prev = mesh0
    for h in h_list:
        mesh = grade_to(prev, GradingSpec(corners, h), max_rounds)
        if meshes and max_dofs is not None and n_free_dofs(mesh) > max_dofs:
            break
        meshes.append(mesh)
        prev = mesh
    return meshes


def check_grading(mesh: Mesh, spec: GradingSpec) -> float:
    """
    Smallest kappa for which the graded-mesh inequalities hold on ``mesh``.

    The global size is the mesh's own ``h = max h_T``.  Supremum and infimum
    of the corner weight over a triangle are replaced by its max and min over
    the triangle's vertices.
    """
    h_t = mesh.diameters()
    h = h_t.max()
    phi_v = spec.weight(mesh.vertices)[mesh.triangles]
    sup, inf = phi_v.max(axis=1), phi_v.min(axis=1)
    contact = corner_contact(mesh, spec.corner_points).any(axis=1) if len(spec.corners) else np.zeros(len(h_t), bool)
    ratio = h_t / h
    with np.errstate(divide="ignore"):
        q = ratio / sup
        kappa_corner = np.maximum(q, 1.0 / q)
        kappa_free = np.maximum(sup / ratio, ratio / inf)
    kappa = np.where(contact, kappa_corner, kappa_free)
    return float(max(1.0, kappa.max()))


def export_mesh(mesh: Mesh) -> str:
    lines = [f"{mesh.n_vertices} {mesh.n_triangles} {len(mesh.boundary_edges)}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    lines += [f"{i} {j} {t}" for (i, j), t in zip(mesh.boundary_edges, mesh.boundary_tags)]
    return "\n".join(lines) + "\n"


def import_mesh(text: str) -> Mesh:
    lines = text.splitlines()
    if not lines:
        raise MeshFormatError(1, "empty input")

    def fields(lineno, n):
        if lineno > len(lines):
            raise MeshFormatError(lineno, "unexpected end of input")
        parts = lines[lineno - 1].split()
        if len(parts) != n:
            raise MeshFormatError(lineno, f"expected {n} fields, got {len(parts)}")
        return parts

    try:
        nv, nt, nbe = (int(s) for s in fields(1, 3))
    except ValueError as exc:
        raise MeshFormatError(1, f"bad header: {exc}") from None
    if min(nv, nt, nbe) < 0:
        raise MeshFormatError(1, "negative count in header")

    lineno = 2
    vertices, triangles, edges, tags = [], [], [], []
    for _ in range(nv):
        parts = fields(lineno, 2)
        try:
            vertices.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise MeshFormatError(lineno, "vertex coordinates must be reals") from None
        lineno += 1
    for _ in range(nt):
        parts = fields(lineno, 3)
        try:
            tri = tuple(int(s) for s in parts)
        except ValueError:
            raise MeshFormatError(lineno, "triangle indices must be integers") from None
        if any(i < 0 or i >= nv for i in tri):
            raise MeshFormatError(lineno, "triangle index out of range")
        triangles.append(tri)
        lineno += 1
    for _ in range(nbe):
        parts = fields(lineno, 3)
        try:
            e = (int(parts[0]), int(parts[1]))
        except ValueError:
            raise MeshFormatError(lineno, "boundary edge indices must be integers") from None
        if parts[2] not in ("D", "N"):
            raise MeshFormatError(lineno, f"unknown boundary tag {parts[2]!r}")
        edges.append(e)
        tags.append(parts[2])
        lineno += 1
    if any(s.strip() for s in lines[lineno - 1:]):
        raise MeshFormatError(lineno, "trailing content after declared entries")
    return Mesh(np.array(vertices, dtype=float).reshape(-1, 2), np.array(triangles, dtype=np.int64).reshape(-1, 3),
                np.array(edges, dtype=np.int64).reshape(-1, 2), tags)


def prolongate(coarse: Mesh, fine: Mesh, values: np.ndarray) -> np.ndarray:
    """
    Carry nodal values of a P1 function to a mesh obtained by refinement.

    ``fine`` must descend from ``coarse`` through :func:`rgb_refine`, so the
    first ``coarse.n_vertices`` vertices coincide and every later vertex is
    the midpoint of two earlier ones.
    """
    n = coarse.n_vertices
    if fine.n_vertices < n or not np.array_equal(fine.vertices[:n], coarse.vertices):
        raise MeshError("fine mesh does not descend from the coarse mesh")
    out = np.zeros(fine.n_vertices)
    out[:n] = values
    parents = fine.vertex_parents
    done = np.zeros(fine.n_vertices, dtype=bool)
    done[:n] = True
    while not done.all():
        ready = ~done & done[parents[:, 0]] & done[parents[:, 1]]
        if not ready.any():
            raise MeshError("fine mesh does not descend from the coarse mesh")
        out[ready] = 0.5 * (out[parents[ready, 0]] + out[parents[ready, 1]])
        done |= ready
    return out
