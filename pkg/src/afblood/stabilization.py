"""A-posteriori order reduction (MOOD) with a first-order Lax-Friedrichs fallback.

A candidate time step is computed with every cell at the base degree.  Cells
failing the admissibility checks are recomputed from the same initial state
at the next lower level of the cascade ``r+1 -> ... -> 3 -> 1`` (scheme
orders), and the whole step is redone until the candidate passes or the
troubled cells reach first order.

Detection criteria, per cell:

* NaN or infinite degrees of freedom;
* non-positive area at a GL node, an interface or in the cell average;
* a relaxed discrete maximum principle on the cell values of the
  equilibrium variables ``Q`` and ``E``: the candidate must stay within the
  range of the previous-step values of the cell and its two neighbours and
  the candidate values of the two neighbours, widened by
  ``max(1e-4 * local range, 1e-2 * global range, (dx/L)**2 * scale)``.
  The scale is ``max(A c)`` for ``Q`` and ``max(c**2)`` for ``E``, so the
  threshold does not depend on the unit system.  A violation is excused as a
  smooth extremum when the second difference of the candidate keeps its
  sign over the cell and its neighbours.
* the same relaxed maximum principle on the interface point values of ``Q``
  and ``E`` (neighbouring points instead of neighbouring cells); a violating
  point flags both adjacent cells.  Point values can develop oscillations
  that the cell averages do not show yet, for instance next to a jump of the
  vessel parameters.

Using ``(Q, E)`` rather than ``(A, Q)`` keeps the detector silent on steady
states, where both are constant.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .model import energy_s, sound_s
from .semidiscrete import Discretization, _call_rhs, eval_cell_at
from .mesh import SolutionState

DMP_RELAX = 1e-4
DMP_GLOBAL = 1e-2


def cascade(r):
    """Scheme orders of the cascade for base degree ``r``, highest first."""
    return [o + 1 for o in range(r, 1, -1)] + [1]


def cascade_degrees(r):
    """Internal cell degrees of the cascade (``0`` denotes first order)."""
    return np.array(list(range(r, 1, -1)) + [0], dtype=np.int64)


def scheme_order(deg):
    """Scheme order of a cell degree (``deg + 1``, or 1 for the fallback)."""
    deg = np.asarray(deg)
    return np.where(deg > 0, deg + 1, 1)


@njit(cache=True)
def slave_moments(mom, pts, deg, r, tabs, N):
    """Reset the moments that a reduced-degree cell does not evolve."""
    proj = tabs[8]
    sig1 = tabs[9]
    for j in range(N):
        d = deg[j]
        if d == r:
            continue
        if d == 0:
            for c in range(2):
                for ell in range(1, r - 1):
                    mom[c, j, ell] = mom[c, j, 0] * sig1[ell]
            continue
        for c in range(2):
            if c == 0:
                fL = pts[0, j]
                fR = pts[0, j + 1]
            else:
                fL = pts[0, j] * pts[1, j]
                fR = pts[0, j + 1] * pts[1, j + 1]
            for ell in range(d - 1, r - 1):
                v = fL * sig1[ell] + proj[d - 2, ell, 1] * (fR - fL)
                for s in range(d - 1):
                    v += proj[d - 2, ell, 2 + s] * (mom[c, j, s] - fL * sig1[s])
                mom[c, j, ell] = v


@njit(cache=True)
def cell_equilibrium(mom, cpar, N, rho, m, n, outQ, outE):
    """Cell values of ``Q`` and ``E`` from the cell averages."""
    for j in range(N):
        A = mom[0, j, 0]
        Q = mom[1, j, 0]
        outQ[j] = Q
        outE[j] = energy_s(A, Q, cpar[0, j], cpar[1, j], cpar[2, j], rho, m, n)


@njit(cache=True)
def point_equilibrium(pts, ipar, M, rho, m, n, outQ, outE):
    """Interface values of ``Q`` and ``E`` from the point values."""
    for i in range(M):
        A = pts[0, i]
        Q = A * pts[1, i]
        outQ[i] = Q
        if A > 0.0:
            outE[i] = energy_s(A, Q, ipar[0, i], ipar[1, i], ipar[2, i], rho, m, n)
        else:
            outE[i] = np.nan


@njit(cache=True)
def _curvature(v, j, N, periodic):
    """Second difference of ``v`` at cell ``j`` (constant extension at boundaries)."""
    jm = j - 1
    jp = j + 1
    if periodic:
        jm = (jm + N) % N
        jp = jp % N
    else:
        jm = max(jm, 0)
        jp = min(jp, N - 1)
    return v[jp] - 2.0 * v[j] + v[jm]


@njit(cache=True)
def _dmp_violation(prev, cand, j, N, periodic, floor):
    """Relaxed maximum-principle test with a smooth-extremum exemption."""
    lo = prev[j]
    hi = prev[j]
    for s in (-1, 1):
        jj = j + s
        if periodic:
            jj = (jj + N) % N
        elif jj < 0 or jj >= N:
            continue
        lo = min(lo, prev[jj])
        hi = max(hi, prev[jj])
        if np.isfinite(cand[jj]):
            lo = min(lo, cand[jj])
            hi = max(hi, cand[jj])
    delta = max(DMP_RELAX * (hi - lo), floor)
    v = cand[j]
    if lo - delta <= v <= hi + delta:
        return False
    # smooth extremum: the curvature keeps its sign over the cell and its neighbours
    xmin = np.inf
    xmax = -np.inf
    for s in (-1, 0, 1):
        jj = j + s
        if periodic:
            jj = (jj + N) % N
        elif jj < 0 or jj >= N:
            continue
        x = _curvature(cand, jj, N, periodic)
        if not np.isfinite(x):
            return True
        xmin = min(xmin, x)
        xmax = max(xmax, x)
    return not (xmin * xmax > 0.0)


@njit(cache=True)
def detect_kernel(mom, pts, deg, prevQ, prevE, prevPQ, prevPE, ipar, cpar, tabs, cfg, icfg,
                  troubled, wsI):
    """Flag troubled cells of a candidate state.

    ``prevQ``/``prevE`` hold the previous cell values and ``prevPQ``/``prevPE``
    the previous interface values of the equilibrium variables.

    ``troubled[j]`` is 2 for inadmissible cells (NaN or non-positive area), 1
    for discrete-maximum-principle violations and 0 otherwise.  Returns the
    number of inadmissible cells.  ``wsI`` is a ``(4, N+1)`` work array.
    """
    rho = cfg[0]
    m = cfg[1]
    n = cfg[2]
    N = icfg[0]
    r = icfg[1]
    periodic = icfg[2] == 1
    ninad = 0
    for i in range(N + 1):
        wsI[0, i] = pts[0, i]
        wsI[1, i] = pts[0, i] * pts[1, i]
    candQ = wsI[2]
    candE = wsI[3]
    for j in range(N):
        troubled[j] = 0
        ok = True
        for c in range(2):
            for ell in range(r - 1):
                if not np.isfinite(mom[c, j, ell]):
                    ok = False
            for i in (j, j + 1):
                if not np.isfinite(pts[c, i]):
                    ok = False
        if ok:
            if not (mom[0, j, 0] > 0.0 and pts[0, j] > 0.0 and pts[0, j + 1] > 0.0):
                ok = False
        if ok and deg[j] >= 2:
            d = deg[j]
            for k in range(1, d):
                if not (eval_cell_at(0, j, d, d, k, mom, wsI, tabs) > 0.0):
                    ok = False
                    break
        if not ok:
            troubled[j] = 2
            ninad += 1
            candQ[j] = np.nan
            candE[j] = np.nan
            continue
        A = mom[0, j, 0]
        Q = mom[1, j, 0]
        candQ[j] = Q
        candE[j] = energy_s(A, Q, cpar[0, j], cpar[1, j], cpar[2, j], rho, m, n)
    # natural scales: A c for the discharge, c**2 for the energy
    sQ = 0.0
    sE = 0.0
    for j in range(N):
        A = mom[0, j, 0]
        if troubled[j] == 2:
            continue
        c = sound_s(A, cpar[0, j], cpar[1, j], rho, m, n)
        sQ = max(sQ, A * c)
        sE = max(sE, c * c)
    h2 = (1.0 / N) ** 2
    floorQ = max(h2 * sQ, DMP_GLOBAL * (prevQ.max() - prevQ.min()))
    floorE = max(h2 * sE, DMP_GLOBAL * (prevE.max() - prevE.min()))
    for j in range(N):
        if troubled[j] == 2 or deg[j] == 0:
            continue
        if (_dmp_violation(prevQ, candQ, j, N, periodic, floorQ)
                or _dmp_violation(prevE, candE, j, N, periodic, floorE)):
            troubled[j] = 1
    # interface values; a periodic mesh stores its first point twice
    M = N if periodic else N + 1
    candPQ = np.empty(M)
    candPE = np.empty(M)
    point_equilibrium(pts, ipar, M, rho, m, n, candPQ, candPE)
    for i in range(M):
        if not (np.isfinite(candPQ[i]) and np.isfinite(candPE[i])):
            continue
        if (_dmp_violation(prevPQ, candPQ, i, M, periodic, floorQ)
                or _dmp_violation(prevPE, candPE, i, M, periodic, floorE)):
            for jj in (i - 1, i):
                if periodic:
                    jj = (jj + N) % N
                elif jj < 0 or jj >= N:
                    continue
                if troubled[jj] == 0 and deg[jj] > 0:
                    troubled[jj] = 1
    return ninad


def detect_troubled(disc: Discretization, candidate: SolutionState, previous: SolutionState, deg=None):
    """Indices of troubled cells of ``candidate`` relative to ``previous``."""
    N = disc.N
    if deg is None:
        deg = disc.base_degrees()
    p = disc.params
    rho, m, n = disc.model.rho, disc.model.m, disc.model.n
    prevQ = np.empty(N)
    prevE = np.empty(N)
    cell_equilibrium(previous.moments, p.cell_values, N, rho, m, n, prevQ, prevE)
    prevPQ = np.empty(N + 1)
    prevPE = np.empty(N + 1)
    point_equilibrium(previous.points, p.points, N + 1, rho, m, n, prevPQ, prevPE)
    troubled = np.zeros(N, dtype=np.int64)
    detect_kernel(candidate.moments, candidate.points, deg, prevQ, prevE, prevPQ, prevPE,
                  p.points, p.cell_values,
                  disc.tabs, disc.cfg, disc.icfg, troubled, np.zeros((4, N + 1)))
    return np.flatnonzero(troubled)


def llf_step(disc: Discretization, state: SolutionState, dt, cells):
    """One forward-Euler step with the first-order fallback in ``cells``.

    Other cells use the base high-order update.  The fallback cells' higher
    moments are reset to those of their new average.
    """
    deg = disc.base_degrees()
    deg[np.asarray(cells, dtype=np.int64)] = 0
    dmom, dpts, bad, nbad = _call_rhs(disc, state, deg)
    if nbad:
        from .errors import NonPositiveArea
        raise NonPositiveArea("non-positive area in fallback step", cell=int(np.flatnonzero(bad)[0]))
    out = SolutionState(state.moments + dt * dmom, state.points + dt * dpts, state.t + dt)
    slave_moments(out.moments, out.points, deg, disc.r, disc.tabs, disc.N)
    return out
