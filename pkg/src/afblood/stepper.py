"""CFL-adaptive SSP-RK3 time integration wrapped in the a-posteriori limiter.

The whole stepping loop is compiled: each step computes ``dt`` from the
current state, runs a three-stage Shu-Osher SSP-RK3 step with every cell at
the base degree, checks the candidate, lowers the degree of troubled cells
and repeats from the same initial state.  If a candidate is still
inadmissible after the cascade is exhausted, ``dt`` is halved and the step
redone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .errors import NonPositiveArea, SolverFailure
from .mesh import SolutionState
from .model import sound_s
from .semidiscrete import Discretization, eval_cell_at, make_workspace, rhs_kernel
from .stabilization import (cascade_degrees, cell_equilibrium, detect_kernel, point_equilibrium,
                            slave_moments)

#: CFL numbers per base degree ``r`` (scheme orders 3, 4, 5).
CFL = {2: 0.4, 3: 0.2, 4: 0.1}
MAX_HALVINGS = 30
EVENT_CAPACITY = 2_000_000


def compute_dt(max_speed, dx, r, t, t_end, cfl=None):
    """``dt = CFL dx / max_speed`` clipped so that ``t + dt <= t_end``."""
    c = CFL[r] if cfl is None else cfl
    dt = c * dx / max(max_speed, 1e-14)
    return min(dt, t_end - t)


@njit(cache=True)
def max_speed_kernel(mom, pts, ipar, npar, cpar, tabs, cfg, icfg, wsI):
    """Largest ``|u| + c`` over interfaces, cell averages and base GL nodes."""
    rho = cfg[0]
    m = cfg[1]
    n = cfg[2]
    N = icfg[0]
    r = icfg[1]
    smax = 0.0
    for i in range(N + 1):
        A = pts[0, i]
        wsI[0, i] = A
        wsI[1, i] = A * pts[1, i]
        s = abs(pts[1, i]) + sound_s(A, ipar[0, i], ipar[1, i], rho, m, n)
        if s > smax:
            smax = s
    for j in range(N):
        A = mom[0, j, 0]
        s = abs(mom[1, j, 0] / A) + sound_s(A, cpar[0, j], cpar[1, j], rho, m, n)
        if s > smax:
            smax = s
        for k in range(1, r):
            a = eval_cell_at(0, j, r, r, k, mom, wsI, tabs)
            if a > 0.0:
                q = eval_cell_at(1, j, r, r, k, mom, wsI, tabs)
                s = abs(q / a) + sound_s(a, npar[r - 2, 0, j, k], npar[r - 2, 1, j, k], rho, m, n)
                if s > smax:
                    smax = s
    return smax


@njit(cache=True)
def rk3_kernel(mom0, pts0, dt, deg, ipar, npar, cpar, tabs, cfg, icfg,
               m1, p1, m2, p2, mout, pout, dmom, dpts, bad, ws):
    """One SSP-RK3 step; returns the number of positivity failures at a stage."""
    N = icfg[0]
    r = icfg[1]
    nd = r - 1
    # stage 1
    nb = rhs_kernel(mom0, pts0, deg, ipar, npar, cpar, tabs, cfg, icfg, dmom, dpts, bad, ws)
    if nb > 0:
        return nb
    for c in range(2):
        for j in range(N):
            for ell in range(nd):
                m1[c, j, ell] = mom0[c, j, ell] + dt * dmom[c, j, ell]
        for i in range(N + 1):
            p1[c, i] = pts0[c, i] + dt * dpts[c, i]
    slave_moments(m1, p1, deg, r, tabs, N)
    # stage 2, written as u0 + (u1 - u0 + dt L(u1)) / 4 so that L = 0 returns u0 exactly
    nb = rhs_kernel(m1, p1, deg, ipar, npar, cpar, tabs, cfg, icfg, dmom, dpts, bad, ws)
    if nb > 0:
        return nb
    for c in range(2):
        for j in range(N):
            for ell in range(nd):
                m2[c, j, ell] = mom0[c, j, ell] + 0.25 * (m1[c, j, ell] - mom0[c, j, ell] + dt * dmom[c, j, ell])
        for i in range(N + 1):
            p2[c, i] = pts0[c, i] + 0.25 * (p1[c, i] - pts0[c, i] + dt * dpts[c, i])
    slave_moments(m2, p2, deg, r, tabs, N)
    # stage 3: u0 + 2/3 (u2 - u0 + dt L(u2))
    nb = rhs_kernel(m2, p2, deg, ipar, npar, cpar, tabs, cfg, icfg, dmom, dpts, bad, ws)
    if nb > 0:
        return nb
    tt = 2.0 / 3.0
    for c in range(2):
        for j in range(N):
            for ell in range(nd):
                mout[c, j, ell] = mom0[c, j, ell] + tt * (m2[c, j, ell] - mom0[c, j, ell] + dt * dmom[c, j, ell])
        for i in range(N + 1):
            pout[c, i] = pts0[c, i] + tt * (p2[c, i] - pts0[c, i] + dt * dpts[c, i])
    slave_moments(mout, pout, deg, r, tabs, N)
    return 0


@njit(cache=True)
def advance_kernel(mom, pts, t, t_end, max_steps, cfl, dt_factor, casc, use_mood,
                   ipar, npar, cpar, tabs, cfg, icfg,
                   log_t, log_dt, log_ntr, log_minord, ev_step, ev_cell, ev_order, counters):
    """Advance ``(mom, pts)`` in place from ``t`` to ``t_end``.

    ``counters`` holds ``[steps, events, halvings, status]`` on entry and is
    updated on exit; ``status`` is 1 when the time step collapsed, 2 when the
    step budget was used up and 3 when the event buffer is full.  Returns the
    final time.
    """
    rho = cfg[0]
    m = cfg[1]
    n = cfg[2]
    dx = cfg[3]
    N = icfg[0]
    r = icfg[1]
    nd = r - 1
    depth = casc.shape[0] - 1
    ws = (np.zeros((4, N + 1)), np.zeros((3, N, 5)), np.zeros((2, N + 1)),
          np.zeros((8, 5)), np.zeros(5, dtype=np.bool_), np.zeros(8), np.zeros((2, 1, 1)))
    m1 = np.empty_like(mom)
    m2 = np.empty_like(mom)
    mc = np.empty_like(mom)
    p1 = np.empty_like(pts)
    p2 = np.empty_like(pts)
    pc = np.empty_like(pts)
    dmom = np.empty_like(mom)
    dpts = np.empty_like(pts)
    bad = np.zeros(N, dtype=np.int64)
    troubled = np.zeros(N, dtype=np.int64)
    deg = np.empty(N, dtype=np.int64)
    prevQ = np.empty(N)
    prevE = np.empty(N)
    prevPQ = np.empty(N + 1)
    prevPE = np.empty(N + 1)
    wsI = np.zeros((4, N + 1))
    steps = counters[0]
    nev = counters[1]
    halvings = counters[2]
    counters[3] = 0
    cap_ev = ev_step.shape[0]
    while t_end - t > 1e-14 * max(abs(t_end), 1.0):
        if steps >= max_steps:
            counters[3] = 2
            break
        if nev + N > cap_ev:
            counters[3] = 3
            break
        smax = max_speed_kernel(mom, pts, ipar, npar, cpar, tabs, cfg, icfg, wsI)
        if smax < 1e-14:
            smax = 1e-14
        dt = dt_factor * cfl * dx / smax
        if dt > t_end - t:
            dt = t_end - t
        cell_equilibrium(mom, cpar, N, rho, m, n, prevQ, prevE)
        point_equilibrium(pts, ipar, N + 1, rho, m, n, prevPQ, prevPE)
        accepted = False
        nh = 0
        while not accepted:
            for j in range(N):
                deg[j] = r
            rerun = 0
            while True:
                nb = rk3_kernel(mom, pts, dt, deg, ipar, npar, cpar, tabs, cfg, icfg,
                                m1, p1, m2, p2, mc, pc, dmom, dpts, bad, ws)
                ninad = 0
                if nb > 0:
                    for j in range(N):
                        troubled[j] = 2 if bad[j] else 0
                        if bad[j]:
                            ninad += 1
                else:
                    ninad = detect_kernel(mc, pc, deg, prevQ, prevE, prevPQ, prevPE, ipar, cpar,
                                          tabs, cfg, icfg, troubled, wsI)
                if not use_mood:
                    if ninad > 0:
                        break
                    accepted = True
                    break
                ndrop = 0
                if rerun < depth:
                    target = casc[rerun + 1]
                    for j in range(N):
                        if troubled[j] > 0 and deg[j] > 0:
                            nxt = 0
                            for q in range(depth):
                                if casc[q] == deg[j]:
                                    nxt = casc[q + 1]
                            if nxt > target:
                                nxt = target
                            deg[j] = nxt
                            ndrop += 1
                if ndrop == 0:
                    if ninad == 0:
                        accepted = True
                    break
                rerun += 1
            if not accepted:
                nh += 1
                halvings += 1
                if nh > MAX_HALVINGS:
                    counters[3] = 1
                    break
                dt *= 0.5
        if counters[3] != 0:
            break
        for c in range(2):
            for j in range(N):
                for ell in range(nd):
                    mom[c, j, ell] = mc[c, j, ell]
            for i in range(N + 1):
                pts[c, i] = pc[c, i]
        t += dt
        ntr = 0
        minord = r
        for j in range(N):
            if deg[j] < r:
                ntr += 1
                if deg[j] < minord:
                    minord = deg[j]
                if nev < cap_ev:
                    ev_step[nev] = steps
                    ev_cell[nev] = j
                    ev_order[nev] = deg[j] + 1 if deg[j] > 0 else 1
                    nev += 1
        if steps < log_t.shape[0]:
            log_t[steps] = t
            log_dt[steps] = dt
            log_ntr[steps] = ntr
            log_minord[steps] = minord + 1 if minord > 0 else 1
        steps += 1
    counters[0] = steps
    counters[1] = nev
    counters[2] = halvings
    return t


@dataclass
class RunLog:
    """Per-step diagnostics of a run.

    Attributes
    ----------
    t, dt : ndarray
        Time after each accepted step and the step size used.
    n_troubled : ndarray
        Number of cells below the base order in each accepted step.
    min_order : ndarray
        Lowest scheme order used in each step.
    events : ndarray, shape (n, 3)
        ``(step, cell, order)`` for every cell computed below the base order.
    halvings : int
        Number of time-step halvings.
    """

    t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dt: np.ndarray = field(default_factory=lambda: np.zeros(0))
    n_troubled: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    min_order: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    events: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))
    halvings: int = 0

    @property
    def steps(self):
        return len(self.t)

    @property
    def activations(self):
        """Total number of (step, cell) pairs computed below the base order."""
        return int(self.n_troubled.sum())

    def extend(self, other: "RunLog"):
        off = self.steps
        ev = other.events.copy()
        ev[:, 0] += off
        return RunLog(np.concatenate([self.t, other.t]), np.concatenate([self.dt, other.dt]),
                      np.concatenate([self.n_troubled, other.n_troubled]),
                      np.concatenate([self.min_order, other.min_order]),
                      np.concatenate([self.events, ev]), self.halvings + other.halvings)

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "t", "n_troubled", "min_order"])
            for k in range(self.steps):
                w.writerow([k + 1, repr(float(self.t[k])), int(self.n_troubled[k]), int(self.min_order[k])])


def advance_to(disc: Discretization, state: SolutionState, t_end: float, *, cfl=None,
               dt_factor=1.0, max_steps=10_000_000, use_mood=True):
    """Integrate ``state`` up to ``t_end``.

    Parameters
    ----------
    disc : Discretization
    state : SolutionState
        Initial state; not modified.
    t_end : float
        Final time.
    cfl : float, optional
        Overrides the default CFL number of the base degree.
    dt_factor : float
        Extra factor applied to every CFL step (used by convergence studies).
    max_steps : int
        Step cap.
    use_mood : bool
        Disable to run the pure high-order scheme (any inadmissible
        candidate then aborts the run).

    Returns
    -------
    (SolutionState, RunLog)
    """
    if t_end < state.t:
        raise ValueError("t_end lies before the current time")
    mom = state.moments.copy()
    pts = state.points.copy()
    N, r = disc.N, disc.r
    cfl = CFL[r] if cfl is None else float(cfl)
    est = 1024
    p = disc.params
    log_t = np.zeros(est)
    log_dt = np.zeros(est)
    log_ntr = np.zeros(est, dtype=np.int64)
    log_min = np.zeros(est, dtype=np.int64)
    ev_step = np.zeros(1024, dtype=np.int64)
    ev_cell = np.zeros(1024, dtype=np.int64)
    ev_ord = np.zeros(1024, dtype=np.int64)
    casc = cascade_degrees(r)
    t = float(state.t)
    total = RunLog()
    while True:
        counters = np.zeros(4, dtype=np.int64)
        budget = min(len(log_t), max_steps - total.steps)
        t = advance_kernel(mom, pts, t, float(t_end), budget, cfl, float(dt_factor), casc, bool(use_mood),
                           p.points, p.node_values, p.cell_values, disc.tabs, disc.cfg, disc.icfg,
                           log_t, log_dt, log_ntr, log_min, ev_step, ev_cell, ev_ord, counters)
        steps, nev, halv, status = (int(v) for v in counters)
        chunk = RunLog(log_t[:steps].copy(), log_dt[:steps].copy(), log_ntr[:steps].copy(),
                       log_min[:steps].copy(), np.stack([ev_step[:nev], ev_cell[:nev], ev_ord[:nev]], axis=1), halv)
        total = total.extend(chunk)
        if status == 1:
            raise SolverFailure(f"time step collapsed at t={t:.6g}")
        if status == 2 and total.steps >= max_steps:
            raise SolverFailure(f"step cap of {max_steps} exceeded at t={t:.6g}")
        if status == 0:
            break
        if len(log_t) < 65536:
            log_t = np.zeros(len(log_t) * 4)
            log_dt = np.zeros(len(log_t))
            log_ntr = np.zeros(len(log_t), dtype=np.int64)
            log_min = np.zeros(len(log_t), dtype=np.int64)
        if status == 3 and len(ev_step) < EVENT_CAPACITY:
            # recorded events are kept in ``total``; only the buffer is resized
            size = min(EVENT_CAPACITY, 8 * len(ev_step))
            ev_step = np.zeros(size, dtype=np.int64)
            ev_cell = np.zeros(size, dtype=np.int64)
            ev_ord = np.zeros(size, dtype=np.int64)
    if not np.all(np.isfinite(mom)) or not np.all(pts[0] > 0):
        raise NonPositiveArea("final state is not admissible")
    return SolutionState(mom, pts, t), total


def max_wave_speed(disc: Discretization, state: SolutionState):
    """Largest ``|u| + c`` over interfaces, cell averages and base GL nodes."""
    p = disc.params
    return float(max_speed_kernel(state.moments, state.points, p.points, p.node_values, p.cell_values,
                                  disc.tabs, disc.cfg, disc.icfg, np.zeros((2, disc.N + 1))))


def stable_dt(disc: Discretization, state: SolutionState, t_end=np.inf, cfl=None):
    """CFL time step of ``state`` clipped at ``t_end``."""
    return compute_dt(max_wave_speed(disc, state), disc.mesh.dx, disc.r, state.t, t_end, cfl)


def ssp_rk3_step(disc: Discretization, state: SolutionState, dt, deg=None):
    """One SSP-RK3 step honouring the per-cell degrees ``deg``.

    Returns
    -------
    SolutionState
        The candidate state at ``t + dt``.

    Raises
    ------
    NonPositiveArea
        If a stage produces a non-positive area; the flagged cells are
        reported in the exception.
    """
    N, r = disc.N, disc.r
    if deg is None:
        deg = disc.base_degrees()
    p = disc.params
    mom, pts = state.moments, state.points
    bufs = [np.empty_like(mom), np.empty_like(pts), np.empty_like(mom), np.empty_like(pts),
            np.empty_like(mom), np.empty_like(pts), np.empty_like(mom), np.empty_like(pts)]
    bad = np.zeros(N, dtype=np.int64)
    nb = rk3_kernel(mom, pts, float(dt), np.asarray(deg, dtype=np.int64), p.points, p.node_values,
                    p.cell_values, disc.tabs, disc.cfg, disc.icfg, *bufs, bad, make_workspace(N))
    if nb:
        cells = np.flatnonzero(bad)
        raise NonPositiveArea(f"non-positive area at a stage in cells {cells.tolist()}", cell=int(cells[0]))
    return SolutionState(bufs[4], bufs[5], state.t + dt)
