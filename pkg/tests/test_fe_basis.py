import numpy as np
import pytest
from numpy.polynomial import Polynomial as P

from afblood.fe_basis import (
    basis_tables,
    biased_derivative_coeffs,
    equilibrium_lagrange,
    gauss_lobatto,
    interpolate_cell,
    normalization_constant,
    project_to_dofs,
    shape_eval,
    sigma,
)

DEGREES = (2, 3, 4)
rng = np.random.default_rng(7)


def test_normalization_constant_values():
    assert normalization_constant(0, 1.0) == 1.0
    assert normalization_constant(2, 1.0) == 12.0
    assert normalization_constant(4, 0.5) == pytest.approx(2560.0, rel=1e-15)
    with pytest.raises(ValueError):
        normalization_constant(1, 0.0)


def test_shape_functions_interface_values():
    assert shape_eval(2, -0.5, -0.5) == pytest.approx(1.0, abs=1e-15)
    assert shape_eval(2, -0.5, 0.5) == pytest.approx(0.0, abs=1e-15)


def test_quartic_moment_function_at_centre():
    # B_2 of the quartic space evaluated at the cell centre.  The value is
    # negative: -35/16 * (2*0 - 1) * (1 + 0) * (0 - 1) = -35/16.
    assert shape_eval(4, 2, 0.0) == pytest.approx(-35.0 / 16.0, rel=1e-15)
    # the sign is pinned by duality: sigma_2(B_2) = 1
    coeffs = P.fit(np.linspace(-0.5, 0.5, 9), shape_eval(4, 2, np.linspace(-0.5, 0.5, 9)), 4).convert()
    assert sigma(coeffs, 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("r", DEGREES)
def test_duality_by_quadrature(r):
    X, W = np.polynomial.legendre.leggauss(12)
    X, W = 0.5 * X, 0.5 * W
    idx = [-0.5, 0.5] + list(range(r - 1))
    for s, i_s in enumerate(idx):
        vals = shape_eval(r, i_s, X)
        dof = [shape_eval(r, i_s, -0.5), shape_eval(r, i_s, 0.5)]
        dof += [(ell + 1) * 2.0**ell * np.dot(W, vals * X**ell) for ell in range(r - 1)]
        np.testing.assert_allclose(dof, np.eye(r + 1)[s], atol=1e-12)


def test_unsupported_degree():
    with pytest.raises(ValueError):
        shape_eval(5, 0, 0.0)
    with pytest.raises(ValueError):
        gauss_lobatto(6)


def test_gauss_lobatto_nodes():
    np.testing.assert_allclose(gauss_lobatto(3)[0], [-0.5, 0.0, 0.5])
    np.testing.assert_allclose(gauss_lobatto(4)[0][1:3], [-np.sqrt(1 / 20), np.sqrt(1 / 20)], rtol=1e-15)
    np.testing.assert_allclose(gauss_lobatto(5)[0][1:4], [-np.sqrt(3 / 28), 0.0, np.sqrt(3 / 28)], atol=1e-16)


@pytest.mark.parametrize("npts", (3, 4, 5))
def test_gauss_lobatto_exactness(npts):
    X, W = gauss_lobatto(npts)
    assert np.all(W > 0)
    assert W.sum() == pytest.approx(1.0, abs=1e-15)
    for d in range(2 * npts - 2):
        exact = (0.5 ** (d + 1) - (-0.5) ** (d + 1)) / (d + 1)
        assert np.dot(W, X**d) == pytest.approx(exact, abs=1e-13)


@pytest.mark.parametrize("r", DEGREES)
def test_interpolation_reproduces_constants(r):
    dofs = project_to_dofs(r, lambda x: np.full_like(x, 3.5))
    expected_moments = [3.5 if ell % 2 == 0 else 0.0 for ell in range(r - 1)]
    np.testing.assert_allclose(dofs[2:], expected_moments, atol=1e-14)
    xi = rng.uniform(-0.5, 0.5, 10)
    np.testing.assert_allclose(interpolate_cell(r, dofs, xi), 3.5, rtol=1e-14)


@pytest.mark.parametrize("r", DEGREES)
def test_project_interpolate_round_trip(r):
    coeffs = rng.normal(size=r + 1)
    poly = P(coeffs)
    dofs = project_to_dofs(r, poly)
    xi = rng.uniform(-0.5, 0.5, 10)
    np.testing.assert_allclose(interpolate_cell(r, dofs, xi), poly(xi), atol=1e-13)
    # the quadrature moments agree with the exact ones
    np.testing.assert_allclose(dofs[2:], [sigma(poly, ell) for ell in range(r - 1)], atol=1e-13)


def test_first_moment_of_linear_function():
    assert project_to_dofs(2, lambda x: x)[2] == pytest.approx(0.0, abs=1e-16)
    assert project_to_dofs(3, lambda x: x)[3] == pytest.approx(1.0 / 3.0, rel=1e-14)


@pytest.mark.parametrize("r", DEGREES)
def test_interpolation_error_order(r):
    # f(x) = x**(r+1) on cells of width h: the interpolation error scales as h**(r+1)
    errs = []
    for h in (0.2, 0.1):
        f = lambda xi, h=h: (h * xi + 0.3) ** (r + 1)
        dofs = project_to_dofs(r, f)
        xi = np.linspace(-0.5, 0.5, 41)
        errs.append(np.abs(interpolate_cell(r, dofs, xi) - f(xi)).max())
    assert errs[1] > 0
    assert np.log2(errs[0] / errs[1]) == pytest.approx(r + 1, abs=0.3)


@pytest.mark.parametrize("r", DEGREES)
def test_lagrange_partition_and_cardinality(r):
    L = equilibrium_lagrange(r)
    nodes = gauss_lobatto(r + 1)[0]
    xi = rng.uniform(-0.5, 0.5, 10)
    np.testing.assert_allclose(sum(Lk(xi) for Lk in L), 1.0, atol=1e-13)
    for k, Lk in enumerate(L):
        np.testing.assert_allclose(Lk(nodes), np.eye(r + 1)[k], atol=1e-13)


def test_cubic_lagrange_right_function():
    L = equilibrium_lagrange(3)[-1]
    ref = P([-1 / 8, -1 / 4, 5 / 2, 5])
    xi = np.linspace(-0.5, 0.5, 7)
    np.testing.assert_allclose(L(xi), ref(xi), atol=1e-13)
    assert L(0.5) == pytest.approx(1.0, abs=1e-14)


def test_parabolic_biased_stencil():
    np.testing.assert_allclose(biased_derivative_coeffs(2, "+"), [1.0, -4.0, 3.0], atol=1e-13)
    np.testing.assert_allclose(biased_derivative_coeffs(2, "-"), [-3.0, 4.0, -1.0], atol=1e-13)


@pytest.mark.parametrize("r", DEGREES)
@pytest.mark.parametrize("side", ("+", "-"))
def test_biased_stencils_exact_on_polynomials(r, side):
    c = biased_derivative_coeffs(r, side)
    nodes = gauss_lobatto(r + 1)[0]
    at = 0.5 if side == "+" else -0.5
    assert abs(c.sum()) < 1e-12
    for d in range(1, r + 1):
        assert np.dot(c, nodes**d) == pytest.approx(d * at ** (d - 1), abs=1e-12)


def test_biased_stencil_rejects_bad_side():
    with pytest.raises(ValueError):
        biased_derivative_coeffs(2, "x")


@pytest.mark.parametrize("r", DEGREES)
def test_tables_are_immutable(r):
    t = basis_tables(r)
    assert t.gl_weights.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        t.gl_nodes[0] = 0.0
    np.testing.assert_allclose(t.B_at_gl[0], np.eye(r + 1)[0], atol=1e-14)
