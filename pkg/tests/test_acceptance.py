"""Acceptance suite: one group of tests per acceptance criterion.

Every check records its outcome with the ``acceptance`` fixture; the
terminal summary prints one PASS/FAIL line per criterion.  Rows that are
known not to reach a criterion are marked as strict expected failures, so
they still run and the suite notices if they start passing.
"""

import time
from functools import lru_cache

import numpy as np
import pytest
from numpy.polynomial import Polynomial as P

from afblood import ARTERY, VEIN
from afblood.analysis import (
    activation_distances,
    convergence_study,
    perturbation_metrics,
    prepare,
    reference_averages,
    relative_errors,
    riemann_problem,
    run_scenario,
    shock_positions,
)
from afblood.fe_basis import (
    biased_derivative_coeffs,
    equilibrium_lagrange,
    gauss_lobatto,
    interpolate_cell,
    project_to_dofs,
    shape_eval,
)
from afblood.model import wave_speed
from afblood.point_update import jacobian_sign
from afblood.scenarios import builtin_scenarios, get_scenario, spec
from afblood.semidiscrete import cell_samples, evaluate_rhs
from afblood.stepper import advance_to
from afblood.wb_moments import critical_area, digamma, digamma_prime, solve_reference_area, wb_source

DEGREES = (2, 3, 4)
STEADY = sorted(n for n, c in builtin_scenarios().items() if c.reference == "steady" and c.perturbation is None)
RIEMANN = ("example6", "example7-rarefactions", "example7-shocks")

WB_RTOL = 1e-12
CONTRAST = 1e3
EPS = np.finfo(float).eps


@lru_cache(maxsize=None)
def _run(name, r, well_balanced=True, N=None):
    cfg = get_scenario(name).with_(r=r, well_balanced=well_balanced)
    if N is not None:
        cfg = cfg.with_(N=N)
    return run_scenario(cfg)


def _max_speed(setup):
    x = setup.mesh.interfaces()
    K, A0, _ = setup.model.sample(x)
    A, u = setup.state.points
    return float(np.max(np.abs(u) + wave_speed(A, K, A0, setup.model.rho, setup.model.m, setup.model.n)))


# ---------------------------------------------------------------------------
# 1. spatial convergence on Example 1
# ---------------------------------------------------------------------------

C1_RUNTIME = {}


@pytest.mark.parametrize("r", DEGREES)
def test_c1_convergence_rates(r, acceptance):
    t0 = time.perf_counter()
    table = convergence_study(get_scenario("example1").with_(r=r), [40, 80, 160, 320, 640])
    elapsed = time.perf_counter() - t0
    print("\n" + table.format())
    target = (r + 1) - 0.4
    rates = np.concatenate([table.rates_A, table.rates_Q])
    finite = rates[np.isfinite(rates)]
    ok = finite.size > 0 and np.all(finite >= target) and sum(table.activations) == 0
    acceptance(1, ok, f"order {r + 1}: rates A {np.round(table.rates_A, 2).tolist()} "
                      f"Q {np.round(table.rates_Q, 2).tolist()} target {target:.1f} ({elapsed:.0f} s)")
    C1_RUNTIME[r] = elapsed
    assert finite.size > 0
    assert np.all(finite >= target)


def test_c1_total_runtime(acceptance):
    if set(C1_RUNTIME) != set(DEGREES):
        pytest.skip("needs all convergence studies in the same session")
    total = sum(C1_RUNTIME.values())
    acceptance(1, total <= 300.0, f"total runtime {total:.0f} s within 5 min")
    assert total <= 300.0


# ---------------------------------------------------------------------------
# 2. well-balanced preservation and the WB/NWB contrast
# ---------------------------------------------------------------------------

def _relative(name, r, wb):
    res = _run(name, r, wb)
    cfg = res.setup.config
    scale = float(np.abs(reference_averages(res.setup, res.final.t)[0]).max())
    return relative_errors(res.summary, scale, cfg.x_right - cfg.x_left)


@pytest.mark.parametrize("r", DEGREES)
@pytest.mark.parametrize("name", STEADY)
def test_c2_well_balanced_runs(name, r, acceptance):
    rel = _relative(name, r, True)
    ok = max(rel) <= WB_RTOL
    acceptance(2, ok, f"{name} order {r + 1} WB relative L1 {rel[0]:.2e} Linf {rel[1]:.2e}")
    assert ok


# rows where the NWB error itself sits at rounding level: exact on the unloaded
# rest state at r = 2, and fifth-order accurate on the smooth stenosis and
# example 8 parameter fields at r = 4 (see the decisions ledger)
NWB_CONTRAST_XFAIL = {("example2-unloaded", 2), ("example4-stenosis-s0.5", 4), ("example4-stenosis-s0.1", 4),
                      ("example4-stenosis-s0.01", 4), ("example8", 4)}


def _contrast_params():
    out = []
    for name in STEADY:
        for r in DEGREES:
            marks = ()
            if (name, r) in NWB_CONTRAST_XFAIL:
                marks = pytest.mark.xfail(strict=True, reason="NWB error at rounding level for this row")
            out.append(pytest.param(name, r, marks=marks, id=f"{name}-{r}"))
    return out


@pytest.mark.parametrize("name, r", _contrast_params())
def test_c2_nwb_contrast(name, r, acceptance):
    wb = _relative(name, r, True)
    nwb = _relative(name, r, False)
    floor = [CONTRAST * max(v, EPS) for v in wb]
    ok = nwb[0] >= floor[0] and nwb[1] >= floor[1]
    acceptance(2, ok, f"{name} order {r + 1} NWB relative L1 {nwb[0]:.2e} Linf {nwb[1]:.2e} "
                      f"need >= {floor[0]:.1e} / {floor[1]:.1e}")
    assert ok


# ---------------------------------------------------------------------------
# 3. semi-discrete steady silence
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("r", DEGREES)
@pytest.mark.parametrize("name", STEADY)
def test_c3_steady_rhs_vanishes(name, r, acceptance):
    setup = prepare(get_scenario(name).with_(r=r))
    dmom, dpts = evaluate_rhs(setup.disc, setup.state)
    c = _max_speed(setup)
    A = float(setup.state.points[0].max())
    t_ref = setup.mesh.dx / c  # rates are compared over one cell-crossing time
    rel = max(np.abs(dmom[0]).max() * t_ref / A, np.abs(dmom[1]).max() * t_ref / (A * c),
              np.abs(dpts[0]).max() * t_ref / A, np.abs(dpts[1]).max() * t_ref / c)
    ok = rel <= WB_RTOL
    acceptance(3, ok, f"{name} order {r + 1}: relative rhs {rel:.2e}")
    assert ok


# ---------------------------------------------------------------------------
# 4. exact conservation
# ---------------------------------------------------------------------------

def _constant_parameter_example1(r):
    # mean of the example-1 rest area 0.5 cos^2 + 5
    return get_scenario("example1").with_(r=r, A0=spec("constant", value=5.25))


@pytest.mark.parametrize("r", DEGREES)
def test_c4_conservation(r, acceptance):
    cfg = _constant_parameter_example1(r)
    setup = prepare(cfg)
    dx = setup.mesh.dx
    final, log = advance_to(setup.disc, setup.state, cfg.t_end)
    m0 = dx * setup.state.moments[:, :, 0].sum(axis=1)
    m1 = dx * final.moments[:, :, 0].sum(axis=1)
    drift = np.abs(m1 - m0) / np.abs(m0)
    ok = np.all(drift <= 1e-12) and log.steps > 0
    acceptance(4, ok, f"order {r + 1}: relative drift mass {drift[0]:.1e} momentum {drift[1]:.1e}")
    src = np.array([wb_source(setup.disc, final, j)[:, 0] for j in range(setup.mesh.N)])
    acceptance(4, np.all(src == 0.0), f"order {r + 1}: max |l=0 source| {np.abs(src).max():.1e}")
    assert ok
    assert np.all(src == 0.0)


@pytest.mark.parametrize("r", DEGREES)
def test_c4_mass_with_varying_parameters(r, acceptance):
    setup = prepare(get_scenario("example1").with_(r=r))
    final, _ = advance_to(setup.disc, setup.state, setup.config.t_end)
    m0 = setup.state.moments[0, :, 0].sum()
    drift = abs(final.moments[0, :, 0].sum() - m0) / abs(m0)
    acceptance(4, drift <= 1e-12, f"order {r + 1}: example 1 mass drift {drift:.1e}")
    assert drift <= 1e-12


# ---------------------------------------------------------------------------
# 5. perturbation capture
# ---------------------------------------------------------------------------

PERTURBED = {"example3": (0.0008, 0.0016), "example5-s0.5": (0.0025,), "example5-s0.1": (0.0025,),
             "example5-s0.01": (0.0025,)}
# non well-balanced rows whose background noise stays below the bound (see the ledger)
NWB_NOISE_XFAIL = {("example3", 2, 0.0008), ("example3", 2, 0.0016), ("example3", 3, 0.0016),
                   ("example3", 4, 0.0008), ("example3", 4, 0.0016), ("example5-s0.01", 2, 0.0025)}


def _metrics(name, r, wb, t):
    m = perturbation_metrics(_run(name, r, wb), t)
    assert m.both_humps_inside and m.noise_cells > 0, "evaluation time without a clean outside region"
    return m


def _perturbed_params(wb):
    out = []
    for name, times in PERTURBED.items():
        for r in DEGREES:
            for t in times:
                marks = ()
                if not wb and (name, r, t) in NWB_NOISE_XFAIL:
                    marks = pytest.mark.xfail(strict=True, reason="NWB background noise below 10% of the hump")
                out.append(pytest.param(name, r, t, marks=marks, id=f"{name}-{r}-{t:g}"))
    return out


@pytest.mark.parametrize("name, r, t", _perturbed_params(True))
def test_c5_well_balanced_humps(name, r, t, acceptance):
    m = _metrics(name, r, True, t)
    total = sum(m.humps)
    amp_ok = 0.5 * m.initial_amplitude <= total <= 2.0 * m.initial_amplitude
    noise_ok = m.noise <= 0.1 * m.signal
    acceptance(5, amp_ok and noise_ok,
               f"{name} order {r + 1} t={t:g} WB: humps {m.humps[0]:.2e}+{m.humps[1]:.2e} "
               f"vs initial {m.initial_amplitude:.2e}, noise/signal {m.noise / m.signal:.3f}")
    assert amp_ok
    assert noise_ok


@pytest.mark.parametrize("name, r, t", _perturbed_params(False))
def test_c5_nwb_artifacts(name, r, t, acceptance):
    m = _metrics(name, r, False, t)
    ok = m.noise > 0.1 * m.signal
    acceptance(5, ok, f"{name} order {r + 1} t={t:g} NWB: noise/signal {m.noise / m.signal:.3f} (need > 0.1)")
    assert ok


# ---------------------------------------------------------------------------
# 6. Riemann problems
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("r", DEGREES)
@pytest.mark.parametrize("name", RIEMANN)
def test_c6_riemann(name, r, acceptance):
    errors = []
    for N in (50, 100):
        res = _run(name, r, True, N)
        setup = res.setup
        sol, x0 = riemann_problem(setup.config, setup.model)
        t = res.final.t
        A = res.final.moments[0, :, 0]
        errors.append(res.summary["L1_A"])
        dx = setup.mesh.dx
        for exact, measured in shock_positions(sol, x0, t, setup.mesh.centers(), A):
            ok = abs(measured - exact) <= 2 * dx
            acceptance(6, ok, f"{name} order {r + 1} N={N}: shock at {measured:.5f}, exact {exact:.5f}")
            assert ok
        nodes = np.array([cell_samples(setup.disc, res.final, j)["A"] for j in range(setup.mesh.N)])
        positive = np.all(A > 0) and np.all(nodes > 0) and np.all(res.final.points[0] > 0)
        acceptance(6, positive, f"{name} order {r + 1} N={N}: positive areas")
        assert positive
        dist = activation_distances(res.log, setup.mesh, sol, x0)
        far = float(dist.max()) if dist.size else 0.0
        acceptance(6, far <= 5.0, f"{name} order {r + 1} N={N}: farthest activation {far:.2f} cells")
        assert far <= 5.0
    mono = errors[1] < errors[0]
    acceptance(6, mono, f"{name} order {r + 1}: L1 errors {errors[0]:.2e} -> {errors[1]:.2e}")
    assert mono


# ---------------------------------------------------------------------------
# 7. basis, quadrature, Jacobian and Newton property suite
# ---------------------------------------------------------------------------

def _property_suite():
    rng = np.random.default_rng(1)
    X, W = np.polynomial.legendre.leggauss(12)
    X, W = 0.5 * X, 0.5 * W
    for r in DEGREES:
        idx = [-0.5, 0.5] + list(range(r - 1))
        for s, i_s in enumerate(idx):
            vals = shape_eval(r, i_s, X)
            dof = [shape_eval(r, i_s, -0.5), shape_eval(r, i_s, 0.5)]
            dof += [(ell + 1) * 2.0**ell * np.dot(W, vals * X**ell) for ell in range(r - 1)]
            np.testing.assert_allclose(dof, np.eye(r + 1)[s], atol=1e-12)
        poly = P(rng.normal(size=r + 1))
        xi = rng.uniform(-0.5, 0.5, 10)
        np.testing.assert_allclose(interpolate_cell(r, project_to_dofs(r, poly), xi), poly(xi), atol=1e-12)
        L = equilibrium_lagrange(r)
        np.testing.assert_allclose(sum(Lk(xi) for Lk in L), 1.0, atol=1e-13)
        nodes = gauss_lobatto(r + 1)[0]
        for side, at in (("+", 0.5), ("-", -0.5)):
            c = biased_derivative_coeffs(r, side)
            for d in range(1, r + 1):
                assert abs(np.dot(c, nodes**d) - d * at ** (d - 1)) < 1e-12
    K, A0, rho = 4e4, 5e-5, 1060.0
    for mn in (ARTERY, VEIN):
        A = rng.uniform(0.3, 3.0, 1000) * A0
        u = rng.uniform(-2.0, 2.0, 1000) * wave_speed(A, K, A0, rho, *mn)
        for a, v in zip(A, u):
            Jp, Jm = jacobian_sign(a, v, K, A0, rho, *mn)
            np.testing.assert_allclose(Jp + Jm, np.eye(2), atol=1e-14)
            s = (np.abs(Jp).max() + 1.0) ** 2
            np.testing.assert_allclose(Jp @ Jm, 0.0, atol=1e-13 * s)
            np.testing.assert_allclose(Jp @ Jp, Jp, atol=1e-13 * s)
    for E in (0.5, 5.0, 20.0):
        for p in (0.0, 300.0):
            root = solve_reference_area(0.0, E, K, A0, p, A0, rho, *ARTERY)
            assert abs(root / (A0 * ((rho * E - p) / K + 1) ** 2) - 1) < 1e-13
    for Q in (1e-5, 1e-4, 3e-4):
        As = critical_area(Q, K, A0, rho, *ARTERY)
        assert abs(As / (2 * rho * Q**2 * np.sqrt(A0) / K) ** 0.4 - 1) < 1e-13
        grid = As * np.linspace(0.1, 10.0, 400)
        f = digamma(grid, Q, 0.0, K, A0, 0.0, rho, *ARTERY)
        assert np.all(f >= digamma(As, Q, 0.0, K, A0, 0.0, rho, *ARTERY))
        d = digamma_prime(grid, Q, K, A0, rho, *ARTERY)
        assert np.all(np.sign(d) == np.sign(grid - As))


def test_c7_property_suite(acceptance):
    t0 = time.perf_counter()
    _property_suite()
    elapsed = time.perf_counter() - t0
    acceptance(7, elapsed <= 30.0, f"property suite in {elapsed:.1f} s")
    assert elapsed <= 30.0


# ---------------------------------------------------------------------------
# 8. efficiency smoke check
# ---------------------------------------------------------------------------

TARGET = 1e-6


def _updates_at_target(r, meshes, reference):
    """Cell updates (steps x cells) needed for the target L1 error, by log-log interpolation."""
    cfg = get_scenario("example1")
    pts = []
    for N in meshes:
        setup = prepare(cfg.with_(r=r, N=N))
        st, log = advance_to(setup.disc, setup.state, cfg.t_end)
        f = reference.size // N
        err = np.abs(st.moments[0, :, 0] - reference.reshape(N, f).mean(axis=1)).sum() * setup.mesh.dx
        pts.append((err, log.steps * N))
    for (e0, w0), (e1, w1) in zip(pts[:-1], pts[1:]):
        if e0 >= TARGET >= e1:
            s = np.log(TARGET / e0) / np.log(e1 / e0)
            return float(np.exp(np.log(w0) + s * np.log(w1 / w0))), pts
    return np.inf, pts


def test_c8_efficiency(acceptance):
    cfg = get_scenario("example1").with_(r=3, N=640)
    setup = prepare(cfg)
    ref, _ = advance_to(setup.disc, setup.state, cfg.t_end)
    reference = ref.moments[0, :, 0]
    w2, p2 = _updates_at_target(2, (80, 160, 320, 640), reference)
    w4, p4 = _updates_at_target(4, (20, 40, 80, 160), reference)
    ok = np.isfinite(w4) and w4 < w2
    acceptance(8, ok, f"cell updates for L1 error {TARGET:g}: order 3 {w2:.3g}, order 5 {w4:.3g}")
    assert np.isfinite(w2)
    assert ok
