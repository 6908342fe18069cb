import numpy as np
import pytest

from sigmacurv.errors import DomainError
from sigmacurv.geometry import (
    RadialGraph,
    ShapeData,
    area_weights,
    build_grid,
    curvature_sigmas,
    ellipsoid,
    ellipsoid_curvatures,
    embed,
    principal_frame_derivatives,
    read_graph_csv,
    shape_data,
    sphere,
    support_identity_residual,
    write_graph_csv,
)
from sigmacurv.symfun import sigma_batch


def test_grid_validation():
    with pytest.raises(DomainError):
        build_grid(4, 16)
    with pytest.raises(DomainError):
        build_grid(2, 6)
    with pytest.raises(DomainError):
        build_grid(2, 17)


@pytest.mark.parametrize("n", [2, 3])
def test_embedding_is_unit_and_derivatives_match(n):
    grid = build_grid(n, 8)
    np.testing.assert_allclose(np.linalg.norm(grid.z, axis=1), 1, atol=1e-15)
    h = 1e-6
    for a in range(n):
        step = np.zeros(n)
        step[a] = h
        fd = (embed(grid.angles + step) - embed(grid.angles - step)) / (2 * h)
        np.testing.assert_allclose(grid.dz[:, a], fd, atol=1e-8)
        for b in range(n):
            stepb = np.zeros(n)
            stepb[b] = h
            fd2 = (embed(grid.angles + step, tuple(int(c == b) for c in range(n))) - embed(grid.angles - step, tuple(int(c == b) for c in range(n)))) / (2 * h)
            np.testing.assert_allclose(grid.ddz[:, a, b], fd2, atol=1e-8)


def test_embedding_n2_matches_usual_chart():
    t, p = 0.3, 1.1
    np.testing.assert_allclose(embed(np.array([t, p])), [np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)])


@pytest.mark.parametrize("n", [2, 3])
def test_pole_reflection_is_an_isometry(n):
    grid = build_grid(n, 12)
    for off in grid.stencil_offsets():
        nb = grid.neighbor(off)
        d = np.linalg.norm(grid.z[nb] - grid.z, axis=1)
        assert d.max() < 2.1 * np.max(grid.steps) * np.sqrt(2)


@pytest.mark.parametrize("n", [2, 3])
def test_differences_converge_at_second_order(n):
    c = np.arange(1, n + 2, dtype=float)
    errs = []
    for N in (16, 32):
        grid = build_grid(n, N)
        f = grid.z @ c
        errs.append(np.abs(grid.gradient(f) - grid.dz @ c).max())
    assert errs[1] < errs[0] / 3.5


@pytest.mark.parametrize("n,r", [(2, 1.0), (2, 2.5), (3, 2.0), (3, 0.7)])
def test_round_sphere_exact(n, r):
    sd = shape_data(sphere(build_grid(n, 12), r))
    assert np.abs(sd.kappa - 1 / r).max() <= 1e-9
    assert np.abs(sd.u - r).max() <= 1e-9
    np.testing.assert_allclose(np.linalg.norm(sd.nu, axis=1), 1, atol=1e-14)
    assert support_identity_residual(sd).support_max < 1e-9


@pytest.mark.parametrize("n", [2, 3])
def test_fast_sigmas_match_eigenvalues(n):
    grid = build_grid(n, 12)
    axes = np.linspace(1.0, 1.4, n + 1)
    g = ellipsoid(grid, axes)
    sd = shape_data(g)
    X, nu, e = curvature_sigmas(grid, g.rho, n)
    for j in range(n + 1):
        np.testing.assert_allclose(e[:, j], sigma_batch(sd.kappa, j), rtol=1e-10, atol=1e-12)
    np.testing.assert_array_equal(X, sd.X)


def test_ellipsoid_curvature_oracle_on_known_points():
    axes = (1.0, 1.0, 1.3)
    k = ellipsoid_curvatures(np.array([[0, 0, 1.3], [1.0, 0, 0]]), axes)
    np.testing.assert_allclose(k[0], [1.3, 1.3])
    np.testing.assert_allclose(k[1], [1.0, 1 / 1.69])


@pytest.mark.parametrize("n,axes", [(2, (1.0, 1.2, 1.4)), (3, (1.0, 1.1, 1.2, 1.3))])
def test_ellipsoid_curvatures_converge(n, axes):
    errs = []
    for N in (12, 24):
        sd = shape_data(ellipsoid(build_grid(n, N), axes))
        errs.append(np.abs(sd.kappa - ellipsoid_curvatures(sd.X, axes)).max())
    assert errs[1] < errs[0] / 2.5


def test_identities_converge_on_ellipsoid():
    sup, cod = [], []
    for N in (16, 32):
        sd = shape_data(ellipsoid(build_grid(2, N), (1, 1, 1.3)))
        r = support_identity_residual(sd)
        sup.append(r.support_max)
        cod.append(r.codazzi_max)
    assert sup[1] < sup[0] / 2.5
    assert cod[1] < cod[0] / 1.5


def test_frame_is_orthonormal_principal_basis():
    sd = shape_data(ellipsoid(build_grid(2, 16), (1, 1.2, 1.4)))
    gram = np.einsum("pac,pbc->pab", sd.frame, sd.frame)
    np.testing.assert_allclose(gram, np.broadcast_to(np.eye(2), gram.shape), atol=1e-12)
    np.testing.assert_allclose(np.einsum("pac,pc->pa", sd.frame, sd.nu), 0, atol=1e-12)
    Sv = np.einsum("pxy,pay->pax", sd.shape_op, sd.frame)
    np.testing.assert_allclose(Sv, sd.kappa[:, :, None] * sd.frame, atol=1e-10)


def test_principal_derivatives_match_kappa_gradient():
    """Where kappa_1 is simple, h_{11c} is the derivative of kappa_1 along e_c."""
    gaps = []
    for N in (16, 32):
        sd = shape_data(ellipsoid(build_grid(2, N), (1, 1.2, 1.4)))
        hd = principal_frame_derivatives(sd)
        dk1 = sd.grid.gradient(sd.kappa[:, 0])
        along = np.einsum("pk,pka->pa", dk1, sd.frame_coeffs)
        sel = ((sd.kappa[:, 0] - sd.kappa[:, 1]) > 0.1) & (np.abs(np.cos(sd.grid.angles[:, 0])) < 0.8)
        gaps.append(np.abs(hd[sel, 0, 0, :] - along[sel]).max())
    assert gaps[1] < gaps[0] / 2


def test_area_of_sphere():
    for n, total in [(2, 4 * np.pi), (3, 2 * np.pi**2)]:
        sd = shape_data(sphere(build_grid(n, 32), 1.0))
        assert area_weights(sd).sum() == pytest.approx(total, rel=5e-3)


def test_off_center_sphere_converges_away_from_poles():
    errs = []
    for N in (16, 32):
        grid = build_grid(2, N)
        sd = shape_data(sphere(grid, 1.0, (0.3, 0, 0)))
        band = np.abs(np.cos(grid.angles[:, 0])) < np.cos(np.pi / 6)
        errs.append(np.abs(sd.kappa - 1)[band].max())
    assert errs[1] < errs[0] / 3


def test_radial_graph_validation():
    grid = build_grid(2, 8)
    with pytest.raises(DomainError):
        RadialGraph(grid, np.zeros(grid.size))
    with pytest.raises(DomainError):
        RadialGraph(grid, np.ones(3))
    with pytest.raises(DomainError):
        sphere(grid, 1.0, (2.0, 0, 0))
    with pytest.raises(DomainError):
        ellipsoid(grid, (1, 1))


def test_synthetic_shape():
    sd = ShapeData.synthetic([-3, 7, 7])
    np.testing.assert_array_equal(sd.kappa, [[7, 7, -3]])
    assert sd.u[0] == 1.0 and sd.grid is None


def test_graph_csv_roundtrip(tmp_path):
    grid = build_grid(2, 8)
    g = ellipsoid(grid, (1, 1.1, 1.2))
    write_graph_csv(tmp_path / "g.csv", g)
    back = read_graph_csv(tmp_path / "g.csv")
    assert back.grid.n == 2 and back.grid.resolution == 8
    np.testing.assert_array_equal(back.rho, g.rho)
    assert RadialGraph.from_function(grid, lambda z: 1 + 0.1 * z[:, 0]).rho.min() > 0
