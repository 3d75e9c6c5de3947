import numpy as np
import pytest
from scipy.optimize import brentq

from afblood import ARTERY, VEIN, DomainError, NoConvergence
from afblood.analysis import prepare
from afblood.mesh import build_mesh, initialize
from afblood.model import energy_s, source_density, wave_speed
from afblood.scenarios import get_scenario
from afblood.semidiscrete import Discretization
from afblood.wb_moments import (
    critical_area,
    digamma,
    digamma_prime,
    gl_samples,
    moments_rhs,
    reference_state,
    select_reference,
    solve_reference_area,
    wb_source,
)

rng = np.random.default_rng(11)
RHO = 1060.0
STEADY = ("example2-loaded", "example4-aneurysm-s0.5", "example4-stenosis-s0.1", "example4-step-s0.01",
          "example8", "example9")


def test_digamma_at_rest():
    K, A0, p, E = 4e4, 5e-5, 200.0, 0.3
    assert digamma(A0, 0.0, E, K, A0, p, RHO, *ARTERY) == pytest.approx(p / RHO - E, rel=1e-14)
    with pytest.raises(DomainError):
        digamma(0.0, 0.0, E, K, A0, p, RHO, *ARTERY)


@pytest.mark.parametrize("mn", (ARTERY, VEIN))
def test_digamma_prime_matches_finite_differences(mn):
    K, A0 = 5e4, 4e-5
    A = rng.uniform(0.3, 3.0, 20) * A0
    Q = rng.uniform(-1e-4, 1e-4, 20)
    h = 1e-7 * A
    fd = (digamma(A + h, Q, 0.0, K, A0, 0.0, RHO, *mn) - digamma(A - h, Q, 0.0, K, A0, 0.0, RHO, *mn)) / (2 * h)
    np.testing.assert_allclose(digamma_prime(A, Q, K, A0, RHO, *mn), fd, rtol=1e-6)


def test_digamma_increasing_at_zero_discharge():
    A = np.linspace(0.01, 5.0, 200) * 4e-5
    assert np.all(digamma_prime(A, 0.0, 5e4, 4e-5, RHO, *ARTERY) > 0)
    assert np.all(digamma_prime(A, 0.0, 5e4, 4e-5, RHO, *VEIN) > 0)


def test_critical_area_artery_closed_form():
    K, A0, Q = 4e4, 5e-5, 3e-4
    expected = (2 * RHO * Q**2 * np.sqrt(A0) / K) ** 0.4
    assert critical_area(Q, K, A0, RHO, *ARTERY) == pytest.approx(expected, rel=1e-13)
    assert critical_area(0.0, K, A0, RHO, *ARTERY) == 0.0


@pytest.mark.parametrize("mn", (ARTERY, VEIN))
def test_critical_area_is_the_minimiser(mn):
    K, A0, Q = 4e4, 5e-5, 2e-4
    As = critical_area(Q, K, A0, RHO, *mn)
    assert digamma_prime(As, Q, K, A0, RHO, *mn) == pytest.approx(0.0, abs=1e-10 * K / (RHO * A0))
    A = As * np.linspace(0.2, 5.0, 101)
    assert np.all(digamma(A, Q, 0.0, K, A0, 0.0, RHO, *mn) >= digamma(As, Q, 0.0, K, A0, 0.0, RHO, *mn))


def test_reference_area_closed_form_at_rest():
    # Q = 0, artery law: sqrt(A/A0) = (rho E - p)/K + 1
    K, A0, p, E = 4e4, 5e-5, 100.0, 5.0
    A = solve_reference_area(0.0, E, K, A0, p, A0, RHO, *ARTERY)
    assert A == pytest.approx(A0 * ((RHO * E - p) / K + 1) ** 2, rel=1e-13)


@pytest.mark.parametrize("mn", (ARTERY, VEIN))
def test_reference_area_branch_selection(mn):
    K, A0, Q = 4e4, 5e-5, 2e-4
    As = critical_area(Q, K, A0, RHO, *mn)
    E = digamma(As, Q, 0.0, K, A0, 0.0, RHO, *mn) + 2.0
    f = lambda A: digamma(A, Q, E, K, A0, 0.0, RHO, *mn)
    sub = brentq(f, As, 100 * As, xtol=1e-20, rtol=1e-15)
    sup = brentq(f, 1e-6 * As, As, xtol=1e-20, rtol=1e-15)
    assert solve_reference_area(Q, E, K, A0, 0.0, 1.1 * As, RHO, *mn) == pytest.approx(sub, rel=1e-12)
    assert solve_reference_area(Q, E, K, A0, 0.0, 0.9 * As, RHO, *mn) == pytest.approx(sup, rel=1e-12)


def test_reference_area_without_root():
    K, A0, Q = 4e4, 5e-5, 2e-4
    with pytest.raises(NoConvergence):
        solve_reference_area(Q, -1e6, K, A0, 0.0, A0, RHO, *ARTERY)


def _steady_samples(name, r=4, cell=7):
    setup = prepare(get_scenario(name).with_(r=r, N=20))
    return setup, gl_samples(setup.disc, setup.state, cell)


@pytest.mark.parametrize("name", STEADY)
def test_steady_samples_share_equilibrium_values(name):
    setup, s = _steady_samples(name)
    m = setup.model
    qscale = np.max(s["A"] * wave_speed(s["A"], s["K"], s["A0"], m.rho, m.m, m.n))
    np.testing.assert_allclose(s["Q"], s["Q"][0], rtol=0, atol=1e-12 * qscale)
    np.testing.assert_allclose(s["E"], s["E"][0], rtol=1e-12, atol=1e-12 * np.abs(s["E"]).max())


@pytest.mark.parametrize("name", STEADY)
def test_reference_of_steady_data_is_the_data(name):
    setup, s = _steady_samples(name)
    m = setup.model
    args = (s["A"], s["Q"], s["E"], s["K"], s["A0"], s["p_ext"], m.rho, m.m, m.n)
    assert select_reference(*args) == 0
    Ah, Qh, ok = reference_state(*args)
    assert ok
    np.testing.assert_allclose(Ah, s["A"], rtol=1e-12)
    np.testing.assert_allclose(Qh, s["Q"], rtol=1e-12, atol=1e-14)


def test_reference_solves_the_steady_relation():
    # perturbed data: the reference carries node iota's (Q, E) to every node
    setup, s = _steady_samples("example8")
    m = setup.model
    A = s["A"] * (1 + 1e-3 * np.arange(5))
    Q = s["Q"] * (1 + 1e-3 * np.arange(5)[::-1])
    E = np.array([energy_s(A[k], Q[k], s["K"][k], s["A0"][k], s["p_ext"][k], m.rho, m.m, m.n) for k in range(5)])
    Ah, Qh, ok = reference_state(A, Q, E, s["K"], s["A0"], s["p_ext"], m.rho, m.m, m.n)
    assert ok
    it = select_reference(A, Q, E, s["K"], s["A0"], s["p_ext"], m.rho, m.m, m.n)
    assert Ah[it] == A[it]
    np.testing.assert_array_equal(Qh, Q[it])
    Eh = [energy_s(Ah[k], Qh[k], s["K"][k], s["A0"][k], s["p_ext"][k], m.rho, m.m, m.n) for k in range(5)]
    np.testing.assert_allclose(Eh, E[it], rtol=1e-11)


def test_no_reference_for_impossible_data():
    K = np.full(3, 4e4)
    A0 = np.full(3, 5e-5)
    p = np.zeros(3)
    A = np.full(3, 5e-5)
    Q = np.full(3, 1e-4)
    E = np.full(3, -1e6)
    assert select_reference(A, Q, E, K, A0, p, RHO, *ARTERY) is None
    Ah, Qh, ok = reference_state(A, Q, E, K, A0, p, RHO, *ARTERY)
    assert not ok
    np.testing.assert_array_equal(Ah, 0.0)


@pytest.mark.parametrize("r", (2, 3, 4))
@pytest.mark.parametrize("name", STEADY)
def test_moments_rhs_vanishes_on_steady_states(name, r):
    setup = prepare(get_scenario(name).with_(r=r, N=30))
    dmom = moments_rhs(setup.disc, setup.state)
    A, Q = setup.state.averages()
    c = np.sqrt(setup.model.K(setup.mesh.centers()) / (2 * setup.model.rho))
    scale_A = np.abs(A).max() * c.max() / setup.mesh.dx
    assert np.abs(dmom[0]).max() <= 1e-12 * scale_A
    assert np.abs(dmom[1]).max() <= 1e-12 * scale_A * c.max()


@pytest.mark.parametrize("wb", (True, False))
def test_constant_parameter_source_average_is_zero(wb):
    setup = prepare(get_scenario("example6").with_(r=4, N=20, well_balanced=wb))
    for j in range(setup.mesh.N):
        assert wb_source(setup.disc, setup.state, j)[:, 0].tolist() == [0.0, 0.0]


@pytest.mark.parametrize("r", (2, 3, 4))
def test_periodic_mass_rates_cancel(r):
    setup = prepare(get_scenario("example1").with_(r=r, N=20))
    dmom = moments_rhs(setup.disc, setup.state)
    # the mass fluxes telescope on a periodic mesh
    assert abs(dmom[0, :, 0].sum()) <= 1e-13 * np.abs(dmom[0, :, 0]).sum()


def _gauss_field_derivative(fn, x, h=1e-4):
    return (-fn(x + 2 * h) + 8 * fn(x + h) - 8 * fn(x - h) + fn(x - 2 * h)) / (12 * h)


@pytest.mark.parametrize("r", (2, 3, 4))
def test_source_average_consistency(r):
    # manufactured smooth (A, Q) on the varying example-8 parameters: the
    # well-balanced source average approximates the exact cell average of S
    model = get_scenario("example8").build_model()
    A_fn = lambda x: 1.2 * model.A0(x) * (1 + 0.05 * np.sin(3 * x))
    Q_fn = lambda x: 1e-3 * (1 + 0.1 * np.cos(2 * x))
    xc = 2.2
    xg, wg = np.polynomial.legendre.leggauss(30)
    errs = []
    for h in (0.2, 0.1):
        mesh = build_mesh(xc - 2.5 * h, xc + 2.5 * h, 5)
        state, params = initialize(mesh, r, model, A_fn, Q_fn)
        disc = Discretization(mesh, model, r, params, well_balanced=True)
        got = wb_source(disc, state, 2)[1, 0]
        x = xc + 0.5 * h * xg
        K, A0, _ = model.sample(x)
        S = source_density(A_fn(x), K, A0, _gauss_field_derivative(model.p_ext, x),
                           _gauss_field_derivative(model.K, x), _gauss_field_derivative(model.A0, x),
                           model.rho, model.m, model.n)[1]
        errs.append(abs(got - 0.5 * np.dot(wg, S)))
    assert np.log2(errs[0] / errs[1]) >= r + 1 - 0.5
