import numpy as np
import pytest

from picardfem import mesh as M
from picardfem import problems as P


@pytest.fixture(scope="session")
def l_mesh():
    return M.l_shape_initial_mesh()


@pytest.fixture(scope="session")
def l_mesh_neumann():
    return M.l_shape_initial_mesh(neumann=True)


@pytest.fixture(scope="session")
def uniform_meshes(l_mesh):
    """Uniform refinements of the L-mesh up to 24321 free dofs."""
    return M.uniform_sequence(l_mesh, 7)


@pytest.fixture(scope="session")
def graded_04(l_mesh):
    return M.grade_to(l_mesh, M.GradingSpec((((0.0, 0.0), 0.4),), 0.035))


def unit_triangle_mesh(tag="D"):
    return M.Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]),
                  np.array([[0, 1], [1, 2], [2, 0]]), [tag] * 3)


def square_mesh(n, tag="D"):
    """Structured mesh of the unit square with ``n`` cells per side."""
    x = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(x, x, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    idx = lambda i, j: j * (n + 1) + i  # noqa: E731
    tris, edges = [], []
    for j in range(n):
        for i in range(n):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            tris += [(a, b, c), (a, c, d)]
    for i in range(n):
        edges += [(idx(i, 0), idx(i + 1, 0)), (idx(n, i), idx(n, i + 1)),
                  (idx(i + 1, n), idx(i, n)), (idx(0, i + 1), idx(0, i))]
    return M.Mesh(verts, np.array(tris), np.array(edges), [tag] * len(edges))
