import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from picardfem import problems as P

BUILTINS = {
    "exp": P.nl_exp(),
    "cubic": P.nl_cubic(),
    "exp_power": P.nl_exp_power(4.0, 0.9),
    "exp_scaled": P.nl_exp_scaled(4.0),
}


def random_interior_points(n, seed=0):
    """Points of the open L-shape, kept away from the corner singularity."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        p = rng.uniform(-0.98, 0.98, size=2)
        if (p[0] < 0.02 and p[1] > -0.02) or np.hypot(*p) < 0.05:
            continue
        pts.append(p)
    return np.array(pts)


def fd_laplacian(u, pts, step=1e-4):
    ex, ey = np.array([step, 0.0]), np.array([0.0, step])
    return (u(pts + ex) + u(pts - ex) + u(pts + ey) + u(pts - ey) - 4.0 * u(pts)) / step ** 2


def boundary_samples(n_per_segment=21):
    t = np.linspace(0.0, 1.0, n_per_segment)
    segs = [((-1, -1), (1, -1)), ((1, -1), (1, 1)), ((1, 1), (0, 1)), ((0, 1), (0, 0)),
            ((0, 0), (-1, 0)), ((-1, 0), (-1, -1))]
    pts = []
    for (a, b) in segs:
        a, b = np.array(a, float), np.array(b, float)
        pts.append(a + t[:, None] * (b - a))
    pts = np.concatenate(pts)
    return pts[np.hypot(pts[:, 0], pts[:, 1]) > 0]


# -- nonlinearities -----------------------------------------------------------

def test_cubic_values():
    n = P.nl_cubic()
    assert n.g(None, 2.0) == 8.0
    assert n.g_u(None, 2.0) == 12.0


def test_exp_power_at_zero():
    n = P.nl_exp_power(4.0, 0.9)
    assert n.g(None, 0.0) == 1.0
    assert n.g_u(None, 0.0) == 0.0


def test_exp_derivative_finite_difference():
    n, x, h = P.nl_exp(), 1.3, 1e-6
    fd = (n.g(None, x + h) - n.g(None, x - h)) / (2 * h)
    assert fd == pytest.approx(n.g_u(None, x), rel=1e-7)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_derivatives_match_finite_differences(name):
    n = BUILTINS[name]
    mags = np.logspace(-3, math.log10(5.0), 40)
    xi = np.concatenate([-mags[::-1], mags])
    if name in ("exp_power", "exp_scaled"):
        xi = xi[np.abs(4.0 * np.abs(xi) ** (0.9 if name == "exp_power" else 0.0) * xi) < 600]
    h = 1e-6 * np.maximum(1.0, np.abs(xi))
    fd = (n.g(None, xi + h) - n.g(None, xi - h)) / (2 * h)
    np.testing.assert_allclose(fd, n.g_u(None, xi), rtol=1e-6, atol=1e-9)


def test_constructor_validation():
    with pytest.raises(ValueError):
        P.nl_exp_power(0.0, 1.0)
    with pytest.raises(ValueError):
        P.nl_exp_power(1.0, -0.5)
    with pytest.raises(ValueError):
        P.nl_exp_scaled(-1.0)


def test_exp_overflow_raises_with_argument():
    with pytest.raises(P.NonlinearityOverflowError) as info:
        P.nl_exp_scaled(4.0).g(None, np.array([0.0, 200.0]))
    assert info.value.argument == 800.0


def test_monotonicity_report_cubic():
    grid = np.linspace(-5, 5, 41)
    rep = P.check_monotone(P.nl_cubic(), [(0.1, -0.2)], grid)
    assert rep.min_pairwise >= 0 and rep.min_sign >= 0
    assert rep.monotone and rep.sign_condition


def test_monotonicity_report_exp_violates_sign_condition():
    grid = np.linspace(-5, 5, 41)
    rep = P.check_monotone(P.nl_exp(), [(0.1, -0.2), (0.5, 0.5)], grid)
    assert rep.min_pairwise >= 0
    assert rep.min_sign < 0
    assert rep.min_sign == pytest.approx(-math.exp(-1.0), abs=1e-12)  # t e^t is minimal at t = -1


def test_monotonicity_report_zero_reaction():
    zero = P.Nonlinearity(lambda x, u: np.zeros_like(np.asarray(u, float)),
                          lambda x, u: np.zeros_like(np.asarray(u, float)), "0")
    rep = P.check_monotone(zero, [(0.0, -0.5)], np.linspace(-5, 5, 11))
    assert rep.min_pairwise == 0.0 and rep.min_sign == 0.0


# -- corner exponents ---------------------------------------------------------

def test_beta_min_reentrant_corner_exact():
    assert P.beta_min(3 * math.pi / 2, P.CornerKind.DIRICHLET_DIRICHLET) == 1 / 3
    assert P.beta_min(3 * math.pi / 2, P.CornerKind.NEUMANN_NEUMANN) == 1 / 3
    assert P.beta_min(3 * math.pi / 2, P.CornerKind.DIRICHLET_NEUMANN) == 2 / 3


def test_beta_min_convex_corner():
    assert P.beta_min(math.pi / 2, P.CornerKind.DIRICHLET_DIRICHLET) == 0.0
    assert P.beta_min(math.pi / 2, "DN") == 0.0


@pytest.mark.parametrize("omega", [0.0, -1.0, 2 * math.pi, 7.0])
def test_beta_min_rejects_degenerate_angles(omega):
    with pytest.raises(ValueError):
        P.beta_min(omega, P.CornerKind.DIRICHLET_DIRICHLET)


@given(st.floats(1e-3, 2 * math.pi - 1e-3), st.floats(1e-3, 2 * math.pi - 1e-3))
def test_beta_min_monotone_in_angle(w1, w2):
    lo, hi = sorted((w1, w2))
    for kind in P.CornerKind:
        assert 0.0 <= P.beta_min(lo, kind) <= P.beta_min(hi, kind) < 1.0
    dd = P.beta_min(lo, P.CornerKind.DIRICHLET_DIRICHLET)
    assert (dd == 0.0) == (lo <= math.pi)


# -- manufactured problems ----------------------------------------------------

def test_experiment1_source_at_center():
    p = P.experiment1()
    assert p.f(np.array([[0.5, 0.5]]))[0] == pytest.approx(2 * math.pi ** 2 + math.e, rel=1e-14)


@pytest.mark.parametrize("make", [P.experiment1, P.experiment2, P.experiment3])
def test_exact_solution_vanishes_on_dirichlet_boundary(make):
    p = make()
    pts = boundary_samples()
    if p.label == "exp3":
        pts = pts[~((pts[:, 0] == 0.0) & (pts[:, 1] > 0.0))]
    assert len(pts) >= 100
    assert np.abs(p.exact_u(pts)).max() <= 1e-12


def test_experiment3_neumann_condition():
    p = P.experiment3()
    step = 1e-5
    for y in (0.1, 0.5, 0.9):
        dudx = (p.exact_u(np.array([[step, y]])) - p.exact_u(np.array([[-step, y]]))) / (2 * step)
        assert abs(dudx[0]) <= 1e-6
        assert abs(p.exact_grad_u(np.array([[0.0, y]]))[0, 0]) <= 1e-14


@pytest.mark.parametrize("make", [P.experiment1, P.experiment2, P.experiment3])
def test_gradient_matches_finite_differences(make):
    p = make()
    pts = random_interior_points(200, seed=1)
    h = 1e-6
    fd = np.stack([(p.exact_u(pts + [h, 0]) - p.exact_u(pts - [h, 0])) / (2 * h),
                   (p.exact_u(pts + [0, h]) - p.exact_u(pts - [0, h])) / (2 * h)], axis=1)
    np.testing.assert_allclose(p.exact_grad_u(pts), fd, rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("make", [P.experiment1, P.experiment2, P.experiment3])
def test_source_term_consistency(make):
    p = make()
    pts = random_interior_points(1000, seed=2)
    lap = p.laplacian_u(pts)
    fd = fd_laplacian(p.exact_u, pts)
    np.testing.assert_allclose(lap, fd, rtol=1e-4, atol=1e-3 * np.abs(lap).max())
    residual = -lap + p.nonlinearity.g(pts, p.exact_u(pts)) - p.f(pts)
    scale = np.maximum(np.abs(p.f(pts)), 1.0)
    assert np.max(np.abs(residual) / scale) <= 1e-8


def test_singular_corner_is_refused():
    for make in (P.experiment2, P.experiment3):
        with pytest.raises(P.SingularPointError):
            make().exact_u(np.array([[0.0, 0.0]]))


def test_default_grading():
    assert P.experiment1().beta == 0.0
    spec = P.experiment2().grading(0.035)
    assert spec.corners == (((0.0, 0.0), 0.4),) and spec.h == 0.035
    assert P.experiment3().grading(0.1).betas[0] == 0.7
    assert P.experiment3().beta > P.beta_min(3 * math.pi / 2, P.CornerKind.DIRICHLET_NEUMANN)
    assert P.experiment2().beta > P.beta_min(3 * math.pi / 2, P.CornerKind.DIRICHLET_DIRICHLET)


def test_experiment_meshes():
    assert set(P.experiment3().initial_mesh().boundary_tags) == {"D", "N"}
    assert set(P.experiment1().initial_mesh().boundary_tags) == {"D"}
