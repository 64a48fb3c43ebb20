import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from knaster.geometry import cube_to_simplex
from knaster.labeling import NOT_CLOSER
from knaster.oracle import barycentric_grid
from knaster.solver import DomainViolation, SolverConfig, initialize, solve
from knaster.transform import (ZeroProblem, cube_problem, estimate_c, rescale_and_relabel,
                               simplex_samples, to_fixed_point, wrap_cube)
from knaster.problems import builtin


def shifted(a):
    a = np.asarray(a, dtype=float)
    return ZeroProblem(lambda x: x - a, len(a), known_zeros=[a])


def test_zero_problem_validation():
    with pytest.raises(ValueError):
        ZeroProblem(lambda x: x, 2, damping=1.0)
    with pytest.raises(ValueError):
        ZeroProblem(lambda x: x, 2, c=[1.0, 0.0])
    with pytest.raises(ValueError):
        to_fixed_point(ZeroProblem(lambda x: x, 2))


def test_zero_map_gives_identity():
    zp = ZeroProblem(lambda x: np.zeros(2), 2, c=[1.0, 1.0])
    F = to_fixed_point(zp)
    assert np.array_equal(F([0.3, 0.4]), [0.3, 0.4])


def test_origin_is_always_fixed():
    F = to_fixed_point(ZeroProblem(lambda x: np.array([5.0, -3.0]), 2, c=[30.0, 30.0]))
    assert np.array_equal(F(np.zeros(2)), np.zeros(2))


def test_estimate_c_constant_and_deterministic():
    zp = ZeroProblem(lambda x: np.array([2.0, -0.5]), 2)
    assert np.allclose(estimate_c(zp, 16, seed=1), [1.05 * 4.0, 1.05 * 0.25])
    g = shifted([0.3, 0.2])
    assert np.array_equal(estimate_c(g, 500, seed=3), estimate_c(g, 500, seed=3))
    zero = ZeroProblem(lambda x: np.zeros(2), 2)
    assert np.array_equal(estimate_c(zero, 10), [1.0, 1.0])


def test_estimate_c_near_analytic_max():
    # G = x - a: max of (x_i - a_i)^2 over the triangle is at a corner
    a = np.array([0.3, 0.2])
    exact = np.array([max(a[0], 1 - a[0]) ** 2, max(a[1], 1 - a[1]) ** 2])
    c = estimate_c(shifted(a), 10_000, seed=0)
    assert np.all(np.abs(c / 1.05 - exact) <= 0.1 * exact)
    assert np.all(c >= exact)


def test_simplex_samples_inside():
    pts = simplex_samples(3, 200, seed=0)
    assert pts.shape == (204, 3)
    assert np.all(pts >= 0) and np.all(pts.sum(axis=1) <= 1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_transformed_map_shrinks_into_simplex(d, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d))
    b = rng.normal(size=d)
    zp = ZeroProblem(lambda x: A @ x + b, d)
    zp.c = estimate_c(zp, 256, seed=seed % 1000)
    F = to_fixed_point(zp)
    xs = rng.dirichlet(np.ones(d + 1), size=200)[:, 1:]
    for x in xs:
        y = F(x)
        if np.all(zp.U(zp.G(x)) <= zp.c):
            assert np.all(y >= -1e-15) and np.all(y <= x + 1e-15)


def test_fixed_set_on_grid():
    # fixed iff every coordinate is 0 or has G_i = 0
    a = np.array([0.3, 0.2])
    zp = shifted(a)
    zp.c = estimate_c(zp, 1000, seed=0)
    F = to_fixed_point(zp)
    _, pts = barycentric_grid(2, 100)
    res = np.abs(F.evaluate_many(pts) - pts).max(axis=1)
    on_set = np.all((np.abs(pts) < 1e-12) | (np.abs(pts - a) < 1e-12), axis=1)
    assert np.all(res[on_set] < 1e-10)
    assert np.all(res[~on_set] > 1e-6)
    fixed = {tuple(np.round(p, 6)) for p in pts[on_set]}
    assert {(0.0, 0.0), (0.3, 0.2), (0.3, 0.0), (0.0, 0.2)} <= fixed
    assert len(fixed) == 4


def test_solver_reaches_tagged_origin():
    zp = shifted([0.3, 0.2])
    zp.c = estimate_c(zp, 1024, seed=0)
    res = solve(to_fixed_point(zp), SolverConfig(max_steps=30))
    assert res.best.tags == ("spurious: origin",)


def test_rescale_without_new_evaluations():
    calls = []

    def G(x):
        calls.append(1)
        return x - np.array([0.3, 0.2])

    zp = ZeroProblem(G, 2)
    zp.c = estimate_c(zp, 200)
    F = to_fixed_point(zp)
    mesh = initialize(F, SolverConfig(initial_refinement=2))
    before = len(calls)
    c0 = zp.c.copy()
    assert rescale_and_relabel(mesh, F, c0) == 0
    masks = list(mesh.label_masks)
    assert rescale_and_relabel(mesh, F, 2 * c0) == 0
    assert mesh.label_masks == masks
    assert len(calls) == before
    v = 4
    gap = mesh.lam_x[v][1:] - mesh.lam_fx[v][1:]
    rescale_and_relabel(mesh, F, c0)
    assert np.allclose(mesh.lam_x[v][1:] - mesh.lam_fx[v][1:], 2 * gap)
    with pytest.raises(ValueError):
        rescale_and_relabel(mesh, F, [-1.0, 1.0])


def test_rescale_can_drop_sperner_status():
    from knaster import labeling as lab
    zp = ZeroProblem(lambda x: x - np.array([0.3, 0.2]), 2)
    zp.c = estimate_c(zp, 200)
    F = to_fixed_point(zp)
    mesh = initialize(F, SolverConfig(initial_refinement=2, labeling=lab.MAX_GAIN))
    old = lab.sperner_cells(mesh)
    # a larger maximum found for U_2 shrinks the second gain
    changed = rescale_and_relabel(mesh, F, zp.c * [1.0, 10.0], strategy=lab.MAX_GAIN)
    assert changed > 0
    new = lab.sperner_cells(mesh)
    assert set(old) - set(new)


def test_wrap_cube_identity_and_constant():
    ident = wrap_cube(lambda x: x, 2)
    assert np.allclose(ident([0.2, 0.3]), [0.2, 0.3])
    c = np.array([0.4, 0.2])
    const = wrap_cube(lambda x: c, 2)
    assert np.allclose(const([0.1, 0.1]), cube_to_simplex(c))


def test_wrap_cube_preserves_fixed_points():
    A = np.array([[0.3, 0.1], [0.2, 0.4]])
    b = np.array([0.2, 0.1])
    x_star = np.linalg.solve(np.eye(2) - A, b)
    W = wrap_cube(lambda x: A @ x + b, 2, known_fixed_points=[x_star])
    y = cube_to_simplex(x_star)
    assert np.allclose(W(y), y, atol=1e-12)
    assert np.allclose(W.known_fixed_points[0], y)


def test_cube_half_converges_to_origin():
    res = solve(cube_problem(builtin("half", 2)), SolverConfig(max_steps=12))
    assert np.allclose(res.best.point, 0)


def test_wrap_cube_domain_violation():
    W = wrap_cube(lambda x: x + 0.6, 2)
    with pytest.raises(DomainViolation, match="cube"):
        W(np.array([0.5, 0.5]))
