"""Scenario runs, error norms, convergence studies and signal metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import ConfigError
from .exact import RiemannSolution, exact_riemann_artery
from .mesh import Mesh, SolutionState, build_mesh, initialize, write_snapshot
from .model import ModelParams, wave_speed
from .scenarios import ScenarioConfig
from .semidiscrete import Discretization
from .stepper import RunLog, advance_to

SUMMARY_FIELDS = ("name", "order", "N", "L1_A", "Linf_A", "L1_Q", "Linf_Q", "steps", "fallback_activations")


def error_norms(mu, nu, dx):
    """Discrete ``L1`` and ``Linf`` distances of two vectors of cell values.

    Parameters
    ----------
    mu, nu : array_like
        Cell values of equal length.
    dx : float
        Cell width.

    Returns
    -------
    (float, float)
        ``dx * sum |mu - nu|`` and ``max |mu - nu|``.

    Raises
    ------
    ConfigError
        If the lengths differ.
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise ConfigError(f"length mismatch: {mu.shape} vs {nu.shape}")
    d = np.abs(mu - nu)
    if d.size == 0:
        return 0.0, 0.0
    return float(dx * d.sum()), float(d.max())


# ---------------------------------------------------------------------------
# set-up helpers
# ---------------------------------------------------------------------------

@dataclass
class Setup:
    """Everything needed to advance a scenario."""

    config: ScenarioConfig
    model: ModelParams
    mesh: Mesh
    disc: Discretization
    state: SolutionState


def prepare(config: ScenarioConfig) -> Setup:
    """Build model, mesh, projected initial state and discretization."""
    model = config.build_model()
    A, Q = config.initial_data(model)
    mesh = build_mesh(config.x_left, config.x_right, config.N, config.bc)
    state, params = initialize(mesh, config.r, model, A, Q)
    disc = Discretization(mesh, model, config.r, params, well_balanced=config.well_balanced)
    return Setup(config, model, mesh, disc, state)


def riemann_problem(config: ScenarioConfig, model: Optional[ModelParams] = None):
    """Exact solution and discontinuity location of a Riemann scenario.

    Returns
    -------
    (RiemannSolution, float)
    """
    init = config.initial
    if init.kind != "fields":
        raise ConfigError("a Riemann reference needs piecewise field initial data")
    jumps = [s.kwargs()["x0"] for s in (init.A, init.Q) if s.shape == "piecewise"]
    if not jumps or any(j != jumps[0] for j in jumps):
        raise ConfigError("a Riemann reference needs one common jump location")
    if (config.m, config.n) != (0.5, 0.0):
        raise ConfigError("the exact Riemann solver covers the artery law only")
    model = model or config.build_model()
    x0 = jumps[0]
    A_fn, Q_fn = config.initial_data(model)
    eps = 1e-9 * (config.x_right - config.x_left)
    xs = np.array([x0 - eps, x0 + eps])
    A, Q = A_fn(xs), Q_fn(xs)
    K, A0 = model.sample(xs)[:2]
    if K[0] != K[1] or A0[0] != A0[1]:
        raise ConfigError("the exact Riemann solver needs constant parameters")
    sol = exact_riemann_artery((A[0], Q[0] / A[0]), (A[1], Q[1] / A[1]), K[0], A0[0], config.rho)
    return sol, x0


def reference_averages(setup: Setup, t: float):
    """Reference cell averages ``(A, Q)`` at time ``t``, or ``None``.

    ``steady`` references are the projected unperturbed initial data;
    ``exact_riemann`` references are exact cell averages.
    """
    cfg = setup.config
    if cfg.reference == "none":
        return None
    if cfg.reference == "steady":
        A, Q = cfg.background(setup.model)
        st, _ = initialize(setup.mesh, cfg.r, setup.model, A, Q)
        return st.moments[0, :, 0].copy(), st.moments[1, :, 0].copy()
    sol, x0 = riemann_problem(cfg, setup.model)
    if t <= 0.0:
        return setup.state.moments[0, :, 0].copy(), setup.state.moments[1, :, 0].copy()
    return sol.cell_averages(setup.mesh.interfaces(), t, x0)


# ---------------------------------------------------------------------------
# scenario runs
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    """Outcome of :func:`run_scenario`.

    Attributes
    ----------
    setup : Setup
    final : SolutionState
    snapshots : dict
        Snapshot time to state.
    log : RunLog
    summary : dict
        Keys of :data:`SUMMARY_FIELDS`; error entries are ``nan`` without a
        reference.
    files : list of Path
        Files written.
    """

    setup: Setup
    final: SolutionState
    snapshots: Dict[float, SolutionState]
    log: RunLog
    summary: dict
    files: List[Path] = field(default_factory=list)

    @property
    def config(self):
        return self.setup.config


def _fmt_time(t):
    return f"{t:.6g}".replace(".", "p")


def run_scenario(config: ScenarioConfig, out_dir=None, *, use_mood=True) -> RunResult:
    """Run one scenario.

    Parameters
    ----------
    config : ScenarioConfig
    out_dir : path-like, optional
        When given, snapshot CSVs, the run log and a one-row summary CSV are
        written there.
    use_mood : bool
        Forwarded to :func:`afblood.stepper.advance_to`.

    Returns
    -------
    RunResult

    Raises
    ------
    ConfigError
        On invalid configurations.
    SolverFailure, NonPositiveArea
        On solver breakdown (the message carries the time).
    """
    setup = prepare(config)
    times = sorted({float(t) for t in config.outputs if 0.0 <= t <= config.t_end} | {float(config.t_end)})
    state = setup.state
    log = RunLog()
    snaps = {}
    for t in times:
        state, part = advance_to(setup.disc, state, t, cfl=config.cfl, use_mood=use_mood)
        log = log.extend(part)
        snaps[t] = state
    summary = summarize(setup, state, log)
    files = []
    if out_dir is not None:
        out = Path(out_dir)
        tag = f"{config.name}_r{config.r}_N{config.N}" + ("" if config.well_balanced else "_nwb")
        for t, st in snaps.items():
            files.extend(write_snapshot(out / f"{tag}_t{_fmt_time(t)}", setup.mesh, st))
        log_path = out / f"{tag}_log.csv"
        log.write_csv(log_path)
        files.append(log_path)
        files.append(write_summary(out / f"{tag}_summary.csv", [summary]))
    return RunResult(setup, state, snaps, log, summary, files)


def summarize(setup: Setup, state: SolutionState, log: RunLog) -> dict:
    """Summary row of a finished run."""
    cfg = setup.config
    ref = reference_averages(setup, state.t)
    dx = setup.mesh.dx
    if ref is None:
        errs = (math.nan,) * 4
    else:
        errs = error_norms(state.moments[0, :, 0], ref[0], dx) + error_norms(state.moments[1, :, 0], ref[1], dx)
    return dict(name=cfg.name, order=cfg.order, N=cfg.N, L1_A=errs[0], Linf_A=errs[1], L1_Q=errs[2],
                Linf_Q=errs[3], steps=log.steps, fallback_activations=log.activations)


def write_summary(path, rows: Sequence[dict]):
    """Write summary rows as CSV (floats in ``repr`` form)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_FIELDS)
        for row in rows:
            w.writerow([repr(row[k]) if isinstance(row[k], float) else row[k] for k in SUMMARY_FIELDS])
    return path


def relative_errors(summary: dict, scale: float, length: float):
    """Errors in ``A`` relative to the solution scale.

    ``L1`` is divided by ``length * scale`` and ``Linf`` by ``scale``.
    """
    return summary["L1_A"] / (length * scale), summary["Linf_A"] / scale


# ---------------------------------------------------------------------------
# convergence studies
# ---------------------------------------------------------------------------

SATURATION = 1e-14


@dataclass
class ConvergenceTable:
    """Runge-type convergence table.

    ``errors[k]`` is the ``L1`` distance between the solutions on
    ``meshes[k]`` and ``meshes[k+1]`` (averaged onto the coarse cells);
    ``rates[k]`` compares ``errors[k]`` and ``errors[k+1]``.  A rate is
    ``nan`` when the finer error sits at rounding level (saturated).
    """

    order: int
    meshes: List[int]
    errors_A: np.ndarray
    errors_Q: np.ndarray
    rates_A: np.ndarray
    rates_Q: np.ndarray
    activations: List[int]

    def format(self):
        lines = [f"order {self.order}", f"{'N':>6} {'L1 err A':>12} {'rate':>6} {'L1 err Q':>12} {'rate':>6}"]
        for k in range(len(self.errors_A)):
            ra = "" if k == 0 else _rate_text(self.rates_A[k - 1])
            rq = "" if k == 0 else _rate_text(self.rates_Q[k - 1])
            lines.append(f"{self.meshes[k]:>6} {self.errors_A[k]:12.3e} {ra:>6} {self.errors_Q[k]:12.3e} {rq:>6}")
        return "\n".join(lines)


def _rate_text(r):
    return "sat" if not np.isfinite(r) else f"{r:.2f}"


def _rates(err, scale):
    out = np.full(len(err) - 1, np.nan)
    for k in range(len(err) - 1):
        if err[k + 1] > SATURATION * scale and err[k] > 0:
            out[k] = math.log2(err[k] / err[k + 1])
    return out


def convergence_study(config: ScenarioConfig, meshes: Sequence[int], *, use_mood=True) -> ConvergenceTable:
    """Runge-type convergence study on nested meshes.

    The time step follows ``dt ~ dx**((r+1)/3)`` so that the third-order
    time integration does not mask the spatial order.

    Parameters
    ----------
    config : ScenarioConfig
        Template; ``N`` is replaced by each mesh size.
    meshes : sequence of int
        At least three sizes, each twice the previous one.  Errors are
        reported for all but the finest mesh.

    Raises
    ------
    ConfigError
        For fewer than three meshes or non-nested sizes.
    """
    meshes = [int(n) for n in meshes]
    if len(meshes) < 3:
        raise ConfigError("a convergence study needs at least three meshes")
    if any(b != 2 * a for a, b in zip(meshes[:-1], meshes[1:])):
        raise ConfigError(f"meshes must double: {meshes}")
    r = config.r
    expo = (r + 1) / 3.0 - 1.0
    sols = []
    acts = []
    for N in meshes:
        setup = prepare(config.with_(N=N))
        factor = (N / meshes[0]) ** (-expo)
        st, log = advance_to(setup.disc, setup.state, config.t_end, cfl=config.cfl, dt_factor=factor,
                             use_mood=use_mood)
        sols.append((setup.mesh.dx, st.moments[:, :, 0].copy()))
        acts.append(log.activations)
    eA = np.zeros(len(meshes) - 1)
    eQ = np.zeros(len(meshes) - 1)
    for k in range(len(meshes) - 1):
        dx, coarse = sols[k]
        fine = sols[k + 1][1].reshape(2, -1, 2).mean(axis=-1)
        eA[k] = error_norms(coarse[0], fine[0], dx)[0]
        eQ[k] = error_norms(coarse[1], fine[1], dx)[0]
    length = config.x_right - config.x_left
    sA = length * np.abs(sols[0][1][0]).max()
    sQ = length * max(np.abs(sols[0][1][1]).max(), 1e-300)
    return ConvergenceTable(r + 1, meshes, eA, eQ, _rates(eA, sA), _rates(eQ, sQ), acts[:-1])


# ---------------------------------------------------------------------------
# Riemann and perturbation diagnostics
# ---------------------------------------------------------------------------

def shock_position(x, A, A_behind, A_ahead, near):
    """Position of a shock in cell data.

    The shock is located where ``A`` crosses ``(A_behind + A_ahead) / 2``
    (linear interpolation between cell centres); among several crossings
    the one closest to ``near`` is returned.
    """
    x = np.asarray(x, dtype=float)
    A = np.asarray(A, dtype=float)
    level = 0.5 * (A_behind + A_ahead)
    s = A - level
    idx = np.flatnonzero(s[:-1] * s[1:] <= 0.0)
    if idx.size == 0:
        return math.nan
    cands = []
    for i in idx:
        if s[i] == s[i + 1]:
            cands.append(x[i])
        else:
            cands.append(x[i] + (x[i + 1] - x[i]) * s[i] / (s[i] - s[i + 1]))
    cands = np.array(cands)
    return float(cands[np.argmin(np.abs(cands - near))])


def shock_positions(sol: RiemannSolution, x0, t, x, A):
    """Pairs ``(exact, measured)`` for every shock of ``sol`` at time ``t``."""
    out = []
    (l0, _), (_, r1) = sol.wave_speeds()
    if sol.waves[0] == "shock":
        xs = x0 + l0 * t
        out.append((xs, shock_position(x, A, sol.A_star, sol.left[0], xs)))
    if sol.waves[1] == "shock":
        xs = x0 + r1 * t
        out.append((xs, shock_position(x, A, sol.A_star, sol.right[0], xs)))
    return out


def activation_distances(log: RunLog, mesh: Mesh, sol: RiemannSolution, x0):
    """Distance, in cells, from every limiter event to the nearest wave edge."""
    if log.events.shape[0] == 0:
        return np.zeros(0)
    steps = log.events[:, 0]
    cells = log.events[:, 1]
    t = log.t[steps]
    t_prev = t - log.dt[steps]
    xc = mesh.centers()[cells]
    speeds = np.asarray(sol.discontinuities())
    best = np.full(len(cells), np.inf)
    for s in speeds:
        # the wave edge moves during the step; take the nearer end
        for tt in (t_prev, t):
            best = np.minimum(best, np.abs(xc - (x0 + s * tt)))
    return best / mesh.dx


def wave_supports(setup: Setup, t, pad_cells=2.0):
    """Intervals reachable at time ``t`` by waves leaving the perturbation support.

    The initial support is moved with the extreme background speeds
    ``u - c`` and ``u + c`` and padded by ``pad_cells`` cells on each side.
    """
    cfg = setup.config
    if cfg.perturbation is None:
        raise ConfigError("the scenario has no perturbation")
    a, b = cfg.perturbation.support()
    A, Q = cfg.background(setup.model)
    xs = np.linspace(cfg.x_left, cfg.x_right, 1001)
    Av = A(xs)
    Qv = Q(xs)
    K, A0 = setup.model.sample(xs)[:2]
    c = wave_speed(Av, K, A0, cfg.rho, cfg.m, cfg.n)
    u = Qv / Av
    pad = pad_cells * setup.mesh.dx
    out = []
    for lam in (u - c, u + c):
        out.append((a + t * lam.min() - pad, b + t * lam.max() + pad))
    return out


@dataclass
class PerturbationMetrics:
    """Signal and noise of a perturbation run at one time.

    Attributes
    ----------
    t : float
    initial_amplitude : float
        ``max |A - A_eq|`` of the projected initial data.
    humps : tuple of float
        ``max |A - A_eq|`` inside the left- and right-moving supports
        (``0.0`` once a support has left the domain).
    noise : float
        ``max |A - A_eq|`` outside the domain of influence, the interval
        spanned by both supports.  Anything there violates causality.
    noise_cells : int
        Number of cells outside the domain of influence.
    """

    t: float
    initial_amplitude: float
    humps: tuple
    noise: float
    noise_cells: int

    @property
    def signal(self):
        return max(self.humps)

    @property
    def both_humps_inside(self):
        return min(self.humps) > 0.0


def perturbation_metrics(result: RunResult, t) -> PerturbationMetrics:
    """Hump amplitudes and background noise of a perturbed run."""
    setup = result.setup
    A, Q = setup.config.background(setup.model)
    eq = initialize(setup.mesh, setup.config.r, setup.model, A, Q)[0].moments[0, :, 0]
    x = setup.mesh.centers()
    d0 = np.abs(setup.state.moments[0, :, 0] - eq)
    d = np.abs(result.snapshots[t].moments[0, :, 0] - eq)
    (l0, l1), (r0, r1) = wave_supports(setup, t)
    humps = []
    for lo, hi in ((l0, l1), (r0, r1)):
        mk = (x >= lo) & (x <= hi)
        humps.append(float(d[mk].max()) if mk.any() else 0.0)
    outside = (x < l0) | (x > r1)
    noise = float(d[outside].max()) if outside.any() else 0.0
    return PerturbationMetrics(float(t), float(d0.max()), tuple(humps), noise, int(outside.sum()))
