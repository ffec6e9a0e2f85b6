import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from picardfem import fem
from picardfem import mesh as M
from picardfem import problems as P
from conftest import square_mesh, unit_triangle_mesh


def monomial_integral(i, j):
    """Exact integral of x^i y^j over the reference triangle (0,0),(1,0),(0,1)."""
    return math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)


def reference_quad(rule, fn):
    # reference vertices (0,0), (1,0), (0,1): x = l1, y = l2, area 1/2
    x, y = rule.points[:, 1], rule.points[:, 2]
    return 0.5 * float(rule.weights @ fn(x, y))


def dense_stiffness_oracle(mesh, dofmap):
    """Per-element loop into a dense matrix, then elimination of fixed rows/cols."""
    n = mesh.n_vertices
    K = np.zeros((n, n))
    for t in mesh.triangles:
        K[np.ix_(t, t)] += fem.element_stiffness(*mesh.vertices[t])
    free = dofmap.free_vertices
    return K[np.ix_(free, free)], K


# -- quadrature ---------------------------------------------------------------

@pytest.mark.parametrize("rule_fn, degree", [(fem.midpoint_rule, 2), (fem.order5_rule, 5)])
def test_quadrature_exactness(rule_fn, degree):
    rule = rule_fn()
    assert rule.degree == degree
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(rule.points.sum(axis=1), 1.0, atol=1e-15)
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            got = reference_quad(rule, lambda x, y: x ** i * y ** j)
            assert abs(got - monomial_integral(i, j)) <= 1e-14, (i, j)
    # the stated degree is sharp
    misses = [abs(reference_quad(rule, lambda x, y: x ** i * y ** (degree + 1 - i))
                  - monomial_integral(i, degree + 1 - i)) for i in range(degree + 2)]
    assert max(misses) > 1e-6


def test_midpoint_rule_x_squared():
    assert reference_quad(fem.midpoint_rule(), lambda x, y: x ** 2) == pytest.approx(1 / 12, abs=1e-16)


def test_order5_rule_x_fifth():
    assert abs(reference_quad(fem.order5_rule(), lambda x, y: x ** 5) - 1 / 42) <= 1e-14


def test_order5_points_avoid_vertices():
    assert fem.order5_rule().points.max() < 0.8


# -- element stiffness --------------------------------------------------------

def test_reference_element_stiffness():
    K = fem.element_stiffness((0, 0), (1, 0), (0, 1))
    np.testing.assert_allclose(K, 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]]), atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=6, max_size=6), st.floats(1e-2, 1e2))
def test_element_stiffness_properties(coords, s):
    p = np.array(coords).reshape(3, 2)
    two_area = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0])
    if abs(two_area) < 1e-2:
        return
    if two_area < 0:
        p = p[[0, 2, 1]]
    K = fem.element_stiffness(*p)
    scale = np.abs(K).max()
    np.testing.assert_allclose(K, K.T, atol=1e-14 * scale)
    np.testing.assert_allclose(K.sum(axis=1), 0.0, atol=1e-13 * scale)
    assert np.all(np.linalg.eigvalsh(K) > -1e-12 * scale)
    np.testing.assert_allclose(fem.element_stiffness(*(s * p)), K, rtol=1e-12, atol=1e-12 * scale)


@pytest.mark.parametrize("pts", [((0, 0), (1, 0), (2, 0)), ((0, 0), (0, 1), (1, 0))])
def test_element_stiffness_rejects_degenerate(pts):
    with pytest.raises(fem.DegenerateTriangleError):
        fem.element_stiffness(*pts)


# -- dof map ------------------------------------------------------------------

def test_dofmap_initial_meshes(l_mesh, l_mesh_neumann):
    assert fem.build_dofmap(l_mesh).n_free == 3
    assert fem.build_dofmap(l_mesh_neumann).n_free == 3


@pytest.mark.parametrize("neumann", [False, True])
def test_dofmap_matches_vertex_classification(neumann):
    mesh = M.uniform_refine_n(M.l_shape_initial_mesh(neumann=neumann), 2)
    dm = fem.build_dofmap(mesh)
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    eps = 1e-14
    on_boundary = ((np.abs(x + 1) < eps) | (np.abs(x - 1) < eps) | (np.abs(y + 1) < eps) | (np.abs(y - 1) < eps)
                   | ((np.abs(x) < eps) & (y >= -eps)) | ((np.abs(y) < eps) & (x <= eps)))
    if neumann:
        on_open_segment = (np.abs(x) < eps) & (y > eps) & (y < 1 - eps)
        expected_free = ~on_boundary | on_open_segment
    else:
        expected_free = ~on_boundary
    np.testing.assert_array_equal(dm.free_index >= 0, expected_free)
    np.testing.assert_array_equal(np.sort(dm.free_index[dm.free_index >= 0]), np.arange(dm.n_free))
    assert dm.n_free == (84 if neumann else 81)


def test_dofmap_expand_restrict_round_trip(l_mesh):
    dm = fem.build_dofmap(l_mesh)
    U = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(dm.restrict(dm.expand(U)), U)
    assert np.all(dm.expand(U)[dm.free_index < 0] == 0.0)
    with pytest.raises(ValueError):
        dm.expand(np.zeros(4))


# -- stiffness assembly -------------------------------------------------------

def test_stiffness_single_dirichlet_triangle_is_empty():
    mesh = unit_triangle_mesh()
    A = fem.assemble_stiffness(mesh, fem.build_dofmap(mesh))
    assert A.shape == (0, 0)


@pytest.mark.parametrize("make", [
    lambda: M.l_shape_initial_mesh(),
    lambda: M.uniform_refine(M.l_shape_initial_mesh(neumann=True)),
    lambda: M.rgb_refine(M.uniform_refine(M.l_shape_initial_mesh()), [0, 5, 17]),
    lambda: square_mesh(5, "N"),
])
def test_stiffness_matches_dense_oracle(make):
    mesh = make()
    assert mesh.n_triangles <= 100
    dm = fem.build_dofmap(mesh)
    A = fem.assemble_stiffness(mesh, dm).toarray()
    oracle, full = dense_stiffness_oracle(mesh, dm)
    scale = np.abs(oracle).max()
    assert np.abs(A - oracle).max() <= 1e-13 * scale
    # A applied to the interpolant of x equals a(x, phi_i) summed element by element
    xs = mesh.vertices[:, 0]
    a_x = np.zeros(mesh.n_vertices)
    for t in mesh.triangles:
        a_x[t] += fem.element_stiffness(*mesh.vertices[t]) @ xs[t]
    got = A @ dm.restrict(xs) + full[np.ix_(dm.free_vertices, np.flatnonzero(dm.free_index < 0))] @ xs[dm.free_index < 0]
    np.testing.assert_allclose(got, a_x[dm.free_vertices], atol=1e-13 * scale)


def test_stiffness_symmetric_positive_definite(graded_04):
    dm = fem.build_dofmap(graded_04)
    A = fem.assemble_stiffness(graded_04, dm)
    assert abs(A - A.T).max() <= 1e-14 * abs(A).max()
    assert np.all(A.diagonal() > 0)


def test_lifting_matches_dense_oracle():
    mesh = M.uniform_refine(M.l_shape_initial_mesh())
    u = lambda p: 1.0 + p[:, 0] ** 2 - p[:, 1]  # noqa: E731
    dm = fem.build_dofmap(mesh, u)
    _, full = dense_stiffness_oracle(mesh, dm)
    fixed = np.flatnonzero(dm.free_index < 0)
    expected = full[np.ix_(dm.free_vertices, fixed)] @ u(mesh.vertices[fixed])
    np.testing.assert_allclose(fem.dirichlet_lifting(mesh, dm), expected, atol=1e-14)


# -- load and semilinear form -------------------------------------------------

def test_load_of_zero(l_mesh):
    dm = fem.build_dofmap(l_mesh)
    np.testing.assert_array_equal(fem.assemble_load(l_mesh, dm, lambda p: np.zeros(len(p)), fem.midpoint_rule()),
                                  np.zeros(3))


def test_load_of_one_on_initial_mesh(l_mesh):
    dm = fem.build_dofmap(l_mesh)
    load = fem.assemble_load(l_mesh, dm, lambda p: np.ones(len(p)), fem.midpoint_rule())
    # each center touches four triangles of area 1/4
    np.testing.assert_allclose(load, 4 * 0.25 / 3, rtol=1e-15)


@pytest.mark.parametrize("rule_fn", [fem.midpoint_rule, fem.order5_rule])
def test_load_exact_for_linear_sources(graded_04, rule_fn):
    mesh = graded_04
    dm = fem.build_dofmap(mesh)
    f = lambda p: 3.0 - 2.0 * p[:, 0] + 0.5 * p[:, 1]  # noqa: E731
    load = fem.assemble_load(mesh, dm, f, rule_fn())
    # int_T lambda_i lambda_j = |T| (1 + delta_ij) / 12
    mass = (np.ones((3, 3)) + np.eye(3)) / 12.0
    fv = f(mesh.vertices)
    exact = np.zeros(mesh.n_vertices)
    np.add.at(exact, mesh.triangles, mesh.signed_areas()[:, None] * (fv[mesh.triangles] @ mass))
    np.testing.assert_allclose(load, exact[dm.free_vertices], atol=1e-14)


def test_load_rejects_non_finite_source(l_mesh):
    dm = fem.build_dofmap(l_mesh)
    f = lambda p: np.where(p[:, 0] > 0.7, np.nan, 1.0)  # noqa: E731
    with pytest.raises(fem.NonFiniteValueError) as info:
        fem.assemble_load(l_mesh, dm, f, fem.midpoint_rule())
    assert info.value.point[0] > 0.7


def test_semilinear_of_zero_reaction(l_mesh):
    dm = fem.build_dofmap(l_mesh)
    b = fem.assemble_semilinear(l_mesh, dm, lambda p, u: np.zeros_like(u), np.ones(3), fem.midpoint_rule())
    np.testing.assert_array_equal(b, np.zeros(3))


def test_semilinear_exp_at_zero_is_unit_load(graded_04):
    dm = fem.build_dofmap(graded_04)
    rule = fem.midpoint_rule()
    b = fem.assemble_semilinear(graded_04, dm, P.nl_exp(), np.zeros(dm.n_free), rule)
    np.testing.assert_array_equal(b, fem.assemble_load(graded_04, dm, lambda p: np.ones(len(p)), rule))


def test_semilinear_cubic_matches_element_loop():
    mesh = M.uniform_refine(M.l_shape_initial_mesh(neumann=True))
    dm = fem.build_dofmap(mesh)
    rule = fem.midpoint_rule()
    U = dm.restrict(0.3 + mesh.vertices[:, 0] - 2 * mesh.vertices[:, 1])
    full = dm.expand(U)
    oracle = np.zeros(mesh.n_vertices)
    for t, area in zip(mesh.triangles, mesh.signed_areas()):
        for lam, w in zip(rule.points, rule.weights):
            u_q = lam @ full[t]
            oracle[t] += area * w * u_q ** 3 * lam
    b = fem.assemble_semilinear(mesh, dm, P.nl_cubic(), U, rule)
    np.testing.assert_allclose(b, oracle[dm.free_vertices], atol=1e-14)


def test_semilinear_overflow_is_reported(l_mesh):
    dm = fem.build_dofmap(l_mesh)
    with pytest.raises(P.NonlinearityOverflowError) as info:
        fem.assemble_semilinear(l_mesh, dm, P.nl_exp(), np.full(3, 2000.0), fem.midpoint_rule())
    assert info.value.argument > 700


# -- patch test ---------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), c=st.floats(-2, 2),
       reaction=st.sampled_from(["exp", "cubic", "exp_power", "exp_scaled"]),
       refinements=st.integers(0, 2), rule=st.sampled_from(["midpoint", "order5"]))
def test_patch_test_linear_solutions(a, b, c, reaction, refinements, rule):
    nl = {"exp": P.nl_exp(), "cubic": P.nl_cubic(), "exp_power": P.nl_exp_power(0.5, 0.9),
          "exp_scaled": P.nl_exp_scaled(0.5)}[reaction]
    rule = fem.midpoint_rule() if rule == "midpoint" else fem.order5_rule()
    mesh = M.uniform_refine_n(M.l_shape_initial_mesh(), refinements)
    u_lin = lambda p: a * p[:, 0] + b * p[:, 1] + c  # noqa: E731
    dm = fem.build_dofmap(mesh, u_lin)
    A = fem.assemble_stiffness(mesh, dm)
    load = fem.assemble_load(mesh, dm, lambda p: nl.g(p, u_lin(p)), rule)
    U = fem.interpolate(mesh, dm, u_lin)
    residual = A @ U + fem.dirichlet_lifting(mesh, dm) + fem.assemble_semilinear(mesh, dm, nl, U, rule) - load
    assert np.abs(residual).max() <= 1e-10


# -- norms --------------------------------------------------------------------

def test_h1_seminorm_of_zero(l_mesh):
    assert fem.eval_h1_seminorm(l_mesh, fem.build_dofmap(l_mesh), np.zeros(3)) == 0.0


def test_h1_seminorm_of_x_on_unit_square():
    mesh = square_mesh(4, "N")
    dm = fem.build_dofmap(mesh)
    assert dm.n_free == mesh.n_vertices
    U = fem.interpolate(mesh, dm, lambda p: p[:, 0])
    assert fem.eval_h1_seminorm(mesh, dm, U) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_h1_seminorm_equals_energy_norm(graded_04, seed):
    dm = fem.build_dofmap(graded_04)
    A = fem.assemble_stiffness(graded_04, dm)
    U = np.random.default_rng(seed).standard_normal(dm.n_free)
    assert fem.eval_h1_seminorm(graded_04, dm, U) == pytest.approx(fem.energy_norm(A, U), rel=1e-13)
