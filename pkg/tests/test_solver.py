import numpy as np
import pytest

from sigmacurv import solver as sv
from sigmacurv.errors import ConeViolationError, DomainError, NonConvergenceError, RHSPositivityError
from sigmacurv.geometry import RadialGraph, build_grid, ellipsoid, shape_data, sphere
from sigmacurv.symfun import sigma_batch


def test_residual_examples():
    np.testing.assert_allclose(sv.residual(sphere(build_grid(3, 12), 2.0), sv.constant_rhs(0.75)), 0, atol=1e-9)
    np.testing.assert_allclose(sv.residual(sphere(build_grid(2, 12), 1.0), sv.constant_rhs(2.0), k=1), 0, atol=1e-9)
    np.testing.assert_allclose(sv.residual(sphere(build_grid(3, 12), 2.0), sv.constant_rhs(1.0)), -0.25, atol=1e-9)


def test_residual_matches_eigenvalue_route():
    g = ellipsoid(build_grid(3, 12), (1, 1.1, 1.2, 1.3))
    rhs = sv.axis_perturbed_rhs(0.75, 0.05, 3)
    sd = shape_data(g)
    direct = sigma_batch(sd.kappa, 2) - rhs(sd.X, sd.nu)
    np.testing.assert_allclose(sv.residual(g, rhs), direct, atol=1e-12)


def test_rhs_positivity():
    with pytest.raises(RHSPositivityError):
        sv.constant_rhs(0.0)
    with pytest.raises(RHSPositivityError):
        sv.axis_perturbed_rhs(0.1, 0.2, 3)
    bad = sv.PrescribedRHS(lambda X, nu: nu[..., 0])
    with pytest.raises(RHSPositivityError, match="node"):
        sv.residual(sphere(build_grid(2, 8), 1.0), bad)


def test_rhs_gradients_analytic_vs_differences():
    rhs = sv.axis_perturbed_rhs(0.75, 0.05, 3)
    plain = sv.PrescribedRHS(rhs.evaluator)
    sd = shape_data(ellipsoid(build_grid(3, 8), (1, 1.1, 1.2, 1.3)))
    for a, b in zip(rhs.gradients(sd.X, sd.nu), plain.gradients(sd.X, sd.nu)):
        np.testing.assert_allclose(a, b, atol=1e-7)


def test_parse_rhs():
    assert sv.parse_rhs("constant:0.75", 3).params == {"value": 0.75}
    p = sv.parse_rhs("axis-perturbed:0.75,0.05", 3)
    assert p.params["r0"] == pytest.approx(2.0) and p.params["power"] == 3.0
    for bad in ("constant", "constant:a", "wiggle:1", "axis-perturbed:1"):
        with pytest.raises(DomainError):
            sv.parse_rhs(bad, 3)


def test_round_radius():
    assert sv.round_radius(0.75, 3, 2) == pytest.approx(2.0)
    assert sv.round_radius(2.0, 2, 1) == pytest.approx(1.0)


# -- jacobian ----------------------------------------------------------------------


def test_jacobian_methods_agree_with_dense_columns():
    grid = build_grid(2, 8)
    rng = np.random.default_rng(0)
    rho = 1.0 + 0.02 * rng.standard_normal(grid.size)
    rhs = sv.axis_perturbed_rhs(2.0, 0.1, 2, k=1)
    Jjet = sv.jacobian(grid, rho, rhs, 1).toarray()
    r0 = sv.residual(RadialGraph(grid, rho), rhs, k=1)
    dense = np.empty_like(Jjet)
    for j in range(grid.size):
        h = 1e-7
        e = np.zeros(grid.size)
        e[j] = h
        dense[:, j] = (sv.residual(RadialGraph(grid, rho + e), rhs, k=1) - r0) / h
    scale = np.abs(dense).max()
    assert np.abs(Jjet - dense).max() <= 1e-5 * scale
    Jcol = sv.jacobian(grid, rho, rhs, 1, method="columns").toarray()
    assert np.abs(Jcol - dense).max() <= 1e-6 * scale


@pytest.mark.parametrize("n", [2, 3])
def test_jacobian_directional_consistency(n):
    grid = build_grid(n, 10)
    rng = np.random.default_rng(n)
    rho = 1.5 + 0.01 * rng.standard_normal(grid.size)
    rhs = sv.constant_rhs(1.0)
    k = n - 1
    J = sv.jacobian(grid, rho, rhs, k)
    d = rng.standard_normal(grid.size)
    t = 1e-5
    diff = (sv.residual(RadialGraph(grid, rho + t * d), rhs, k) - sv.residual(RadialGraph(grid, rho), rhs, k)) / t
    ratio = np.linalg.norm(diff) / np.linalg.norm(J @ d)
    assert abs(ratio - 1) < 0.1
    assert np.linalg.norm(diff - J @ d) < 0.1 * np.linalg.norm(J @ d)


def test_unknown_jacobian_method():
    grid = build_grid(2, 8)
    with pytest.raises(DomainError):
        sv.jacobian(grid, np.ones(grid.size), sv.constant_rhs(2.0), 1, method="secant")


# -- solve -------------------------------------------------------------------------


@pytest.mark.parametrize("start", [0.5, 0.8, 2.0])
def test_round_solution_n2(start):
    res = sv.solve(sv.constant_rhs(2.0), sphere(build_grid(2, 16), start), sv.SolveOptions(tol=1e-10))
    assert np.abs(res.graph.rho - 1.0).max() <= 1e-6
    assert res.admissible and res.residual_max <= 1e-10


@pytest.mark.parametrize("start", [1.0, 4.0])
def test_round_solution_n3(start):
    res = sv.solve(sv.constant_rhs(0.75), sphere(build_grid(3, 12), start))
    assert np.abs(res.graph.rho - 2.0).max() <= 1e-6
    rep = sv.curvature_report(res)
    assert rep["kappa_max"] == pytest.approx(0.5, abs=1e-8)
    assert rep["sup_X"] == pytest.approx(2.0, abs=1e-8)
    assert rep["inf_f"] == 0.75


def test_inadmissible_initial_graph_is_rejected():
    grid = build_grid(3, 12)
    dented = RadialGraph.from_function(grid, lambda z: 1 - 0.5 * z[:, 3] ** 2)
    with pytest.raises(ConeViolationError):
        sv.solve(sv.constant_rhs(0.75), dented)


def test_bad_options():
    with pytest.raises(DomainError):
        sv.solve(sv.constant_rhs(0.75), sphere(build_grid(3, 8), 2.0), sv.SolveOptions(tol=0))
    with pytest.raises(DomainError):
        sv.solve(sv.constant_rhs(0.75), sphere(build_grid(3, 8), 2.0), sv.SolveOptions(k=3))


def test_non_convergence_carries_best_iterate():
    with pytest.raises(NonConvergenceError) as info:
        sv.solve(sv.constant_rhs(0.75), sphere(build_grid(3, 8), 1.0), sv.SolveOptions(max_iter=1, tol=1e-12))
    assert isinstance(info.value.best, RadialGraph)
    assert len(info.value.history) == 2 and info.value.history[1] < info.value.history[0]


def test_perturbed_solve_small_grid():
    grid = build_grid(3, 12)
    rhs = sv.axis_perturbed_rhs(0.75, 0.05, 3)
    res = sv.solve(rhs, sphere(grid, 2.0))
    assert res.admissible and res.residual_max <= 1e-8
    again = np.abs(sv.residual(res.graph, rhs)).max()
    assert abs(again - res.residual_max) <= 1e-12
    assert np.ptp(res.graph.rho) > 1e-3
    assert all(b < a for a, b in zip(res.history, res.history[1:]))


def test_homotopy_reaches_same_solution():
    grid = build_grid(3, 8)
    rhs = sv.axis_perturbed_rhs(0.75, 0.05, 3)
    a = sv.solve(rhs, sphere(grid, 2.0), sv.SolveOptions(tol=1e-10))
    b = sv.solve(rhs, sphere(grid, 2.0), sv.SolveOptions(tol=1e-10, homotopy_steps=3))
    assert np.abs(a.graph.rho - b.graph.rho).max() < 1e-8


def test_kappa_max_grows_with_amplitude():
    grid = build_grid(3, 12)
    kmax = [sv.solve(sv.axis_perturbed_rhs(0.75, amp, 3), sphere(grid, 2.0)).kappa_max for amp in (0.0, 0.02, 0.05)]
    assert kmax[0] <= kmax[1] <= kmax[2]


def test_refinement_rows():
    res = sv.solve(sv.constant_rhs(2.0), sphere(build_grid(2, 12), 1.2))
    rows = sv.refinement_rows([res])
    assert rows[0]["resolution"] == 12 and rows[0]["kappa_max"] == pytest.approx(1.0)
    d = res.to_dict()
    assert d["admissible"] and d["k"] == 1
