import numpy as np
import pytest

from afblood import ConfigError
from afblood.analysis import prepare
from afblood.fe_basis import interpolate_cell
from afblood.mesh import build_mesh, ghost_view, initialize, project_field, write_snapshot
from afblood.scenarios import builtin_scenarios, get_scenario

DEGREES = (2, 3, 4)


@pytest.mark.parametrize("a, b, N, dx", [(0.0, 1.0, 4, 0.25), (0.0, 0.16, 50, 0.0032), (0.0, 0.16, 100, 0.0016)])
def test_mesh_spacing(a, b, N, dx):
    mesh = build_mesh(a, b, N)
    assert mesh.dx == pytest.approx(dx, rel=1e-14)
    assert mesh.interfaces()[-1] == pytest.approx(b, rel=1e-14)
    np.testing.assert_allclose(np.diff(mesh.centers()), dx, rtol=1e-12)


@pytest.mark.parametrize("N", (0, -3, 3, 2.5))
def test_mesh_rejects_bad_cell_counts(N):
    with pytest.raises(ConfigError):
        build_mesh(0.0, 1.0, N)


def test_mesh_rejects_bad_domain_and_mode():
    with pytest.raises(ConfigError):
        build_mesh(1.0, 1.0, 10)
    with pytest.raises(ConfigError):
        build_mesh(0.0, 1.0, 10, bc="reflective")


@pytest.mark.parametrize("r", DEGREES)
def test_constant_data_projects_to_constant_cells(r):
    cfg = get_scenario("example1").with_(r=r, N=10)
    model = cfg.build_model()
    mesh = build_mesh(0.0, 1.0, 10, "periodic")
    state, _ = initialize(mesh, r, model, lambda x: np.full_like(x, 2.0), lambda x: np.full_like(x, 0.5))
    for ell in range(r - 1):
        expected = 0.0 if ell % 2 else 1.0
        np.testing.assert_allclose(state.moments[0, :, ell], 2.0 * expected, atol=1e-14)
        np.testing.assert_allclose(state.moments[1, :, ell], 0.5 * expected, atol=1e-14)
    np.testing.assert_allclose(state.points[0], 2.0)
    np.testing.assert_allclose(state.points[1], 0.25)


@pytest.mark.parametrize("r", DEGREES)
def test_projection_error_order(r):
    f = lambda x: 1.0 + 0.3 * np.sin(2 * np.pi * x)
    errs = []
    for N in (10, 20):
        mesh = build_mesh(0.0, 1.0, N, "periodic")
        pts, mom = project_field(mesh, r, f)
        err = 0.0
        xi = np.linspace(-0.5, 0.5, 11)
        for j in range(N):
            dofs = np.concatenate(([pts[j], pts[j + 1]], mom[j]))
            x = mesh.centers()[j] + mesh.dx * xi
            err = max(err, np.abs(interpolate_cell(r, dofs, xi) - f(x)).max())
        errs.append(err)
    assert np.log2(errs[0] / errs[1]) >= r + 1 - 0.3


def test_periodic_ghosts_wrap():
    setup = prepare(get_scenario("example1").with_(N=8))
    st = setup.state
    mom, pt = ghost_view(setup.mesh, st, "left")
    np.testing.assert_array_equal(mom, st.moments[:, -1, :])
    np.testing.assert_array_equal(pt, st.points[:, -2])
    mom, pt = ghost_view(setup.mesh, st, "right")
    np.testing.assert_array_equal(mom, st.moments[:, 0, :])
    np.testing.assert_array_equal(pt, st.points[:, 1])
    np.testing.assert_array_equal(st.points[:, 0], st.points[:, -1])


def test_extrapolation_ghosts_are_constant():
    setup = prepare(get_scenario("example4-aneurysm-s0.5").with_(N=10, r=4))
    st = setup.state
    mom, pt = ghost_view(setup.mesh, st, "right")
    np.testing.assert_array_equal(mom[:, 0], st.moments[:, -1, 0])
    np.testing.assert_array_equal(mom[:, 1], 0.0)
    np.testing.assert_array_equal(mom[:, 2], st.moments[:, -1, 0])
    np.testing.assert_array_equal(pt, st.points[:, -1])


@pytest.mark.parametrize("name", sorted(builtin_scenarios()))
def test_projected_parameters_are_positive(name):
    setup = prepare(get_scenario(name).with_(r=4, N=20))
    nv = setup.disc.params.node_values
    for o in (2, 3, 4):
        assert np.all(nv[o - 2, 0, :, : o + 1] > 0)
        assert np.all(nv[o - 2, 1, :, : o + 1] > 0)
    assert np.all(setup.disc.params.points[:2] > 0)


def test_write_snapshot(tmp_path):
    setup = prepare(get_scenario("example1").with_(N=8))
    cells, pts = write_snapshot(tmp_path / "snap", setup.mesh, setup.state)
    rows = cells.read_text().splitlines()
    assert rows[0] == "x_center,A_avg,Q_avg"
    assert len(rows) == 9
    data = np.loadtxt(pts, delimiter=",", skiprows=1)
    assert data.shape == (9, 3)
    np.testing.assert_array_equal(data[:, 1], setup.state.points[0])
