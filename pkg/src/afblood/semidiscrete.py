"""Joint semi-discrete right-hand side of the moment and point-value equations.

Every cell carries a degree ``deg[j]``: the base degree ``r``, a reduced
degree ``2 <= d < r`` chosen by the a-posteriori limiter, or ``0`` for the
first-order local Lax-Friedrichs fallback.  A reduced cell keeps its
interface values and moments ``0..d-2``; its remaining moments are slaved to
the degree-``d`` polynomial after every stage (see :mod:`afblood.stabilization`).
Interfaces use the smaller degree of their two neighbours.

The compiled kernel :func:`rhs_kernel` evaluates both updates in one pass so
that they share a single set of equilibrium samples.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .fe_basis import MAXP, packed_tables
from .mesh import Mesh, ParameterData, SolutionState
from .model import ModelParams, energy_s, flux2_s, sound_s, source2_s
from .point_update import jacobian_sign_s
from .wb_moments import reference_state_s


class Discretization:
    """Everything the compiled kernels need besides the evolving state.

    Parameters
    ----------
    mesh : Mesh
    model : ModelParams
    r : int
        Base polynomial degree (2, 3 or 4); the scheme order is ``r + 1``.
    params : ParameterData
        Projected parameter fields.
    well_balanced : bool
        When false the local reference steady state is replaced by zero.
    """

    def __init__(self, mesh: Mesh, model: ModelParams, r: int, params: ParameterData,
                 well_balanced: bool = True):
        self.mesh = mesh
        self.model = model
        self.r = int(r)
        self.params = params
        self.well_balanced = bool(well_balanced)
        self.tabs = packed_tables(self.r)
        self.cfg = np.array([model.rho, model.m, model.n, mesh.dx])
        self.icfg = np.array([mesh.N, self.r, int(mesh.periodic), int(self.well_balanced)], dtype=np.int64)

    @property
    def N(self):
        return self.mesh.N

    def base_degrees(self):
        return np.full(self.N, self.r, dtype=np.int64)

    def workspace(self, source=False):
        return make_workspace(self.N, source)


def make_workspace(N, source=False):
    """Scratch arrays of :func:`rhs_kernel`.

    With ``source`` the last entry has room for the assembled source moments
    of every cell; otherwise it is a placeholder and they are not computed.
    """
    src = np.zeros((2, N, MAXP)) if source else np.zeros((2, 1, 1))
    return (np.zeros((4, N + 1)), np.zeros((3, N, MAXP)), np.zeros((2, N + 1)),
            np.zeros((8, MAXP)), np.zeros(MAXP, dtype=np.bool_), np.zeros(8), src)


@njit(cache=True)
def _neighbors(i, N, periodic):
    """Left and right cells of interface ``i``; ``-1`` marks a missing cell."""
    if periodic:
        jl = i - 1 if i > 0 else N - 1
        jr = i if i < N else 0
        return jl, jr
    jl = i - 1
    jr = i if i < N else -1
    return jl, jr


@njit(cache=True)
def eval_cell_at(c, j, dsrc, dq, k, mom, wsI, tabs):
    """Channel ``c`` (0: A, 1: Q) of cell ``j`` (degree ``dsrc``) at node ``k`` of the degree-``dq`` rule."""
    Bx = tabs[2]
    sig1 = tabs[9]
    fL = wsI[c, j]
    fR = wsI[c, j + 1]
    if k == 0:
        return fL
    if k == dq:
        return fR
    v = fL + Bx[dsrc - 2, dq - 2, k, 1] * (fR - fL)
    for ell in range(dsrc - 1):
        v += Bx[dsrc - 2, dq - 2, k, 2 + ell] * (mom[c, j, ell] - fL * sig1[ell])
    return v


@njit(cache=True)
def rhs_kernel(mom, pts, deg, ipar, npar, cpar, tabs, cfg, icfg, dmom, dpts, bad, ws):
    """Evaluate ``d/dt`` of moments and point values.

    Returns the number of positivity failures found; in that case ``bad``
    flags the affected cells and the derivatives are not computed.  When the
    source buffer of ``ws`` spans all cells it receives the source moments,
    i.e. everything in ``dmom`` except the interface flux terms.
    """
    rho = cfg[0]
    m = cfg[1]
    n = cfg[2]
    dx = cfg[3]
    N = icfg[0]
    r = icfg[1]
    periodic = icfg[2] == 1
    wb = icfg[3] == 1
    Wd = tabs[4]
    Ws = tabs[5]
    dplus = tabs[6]
    dminus = tabs[7]
    wsI, wsN, Fl, tmp, snapped, J, src = ws
    want_src = src.shape[1] == N
    nd = r - 1
    nI = N if periodic else N + 1
    nbad = 0
    for j in range(N):
        bad[j] = 0

    # interface samples
    for i in range(nI):
        A = pts[0, i]
        if not (A > 0.0) or not np.isfinite(pts[1, i]):
            jl, jr = _neighbors(i, N, periodic)
            if jl >= 0:
                bad[jl] = 1
            if jr >= 0:
                bad[jr] = 1
            nbad += 1
            continue
        Q = A * pts[1, i]
        wsI[0, i] = A
        wsI[1, i] = Q
        wsI[2, i] = energy_s(A, Q, ipar[0, i], ipar[1, i], ipar[2, i], rho, m, n)
        wsI[3, i] = flux2_s(A, Q, ipar[0, i], ipar[1, i], rho, m, n)
    if periodic:
        for c in range(4):
            wsI[c, N] = wsI[c, 0]

    # cell samples at the GL nodes of each cell's own degree
    for j in range(N):
        d = deg[j]
        if d == 0:
            if not (mom[0, j, 0] > 0.0) or not np.isfinite(mom[1, j, 0]):
                bad[j] = 1
                nbad += 1
            continue
        for k in range(d + 1):
            a = eval_cell_at(0, j, d, d, k, mom, wsI, tabs)
            q = eval_cell_at(1, j, d, d, k, mom, wsI, tabs)
            if not (a > 0.0) or not np.isfinite(q):
                bad[j] = 1
                nbad += 1
                break
            wsN[0, j, k] = a
            wsN[1, j, k] = q
            if k == 0:
                wsN[2, j, k] = wsI[2, j]
            elif k == d:
                wsN[2, j, k] = wsI[2, j + 1]
            else:
                wsN[2, j, k] = energy_s(a, q, npar[d - 2, 0, j, k], npar[d - 2, 1, j, k],
                                        npar[d - 2, 2, j, k], rho, m, n)
    if nbad > 0:
        return nbad

    # first-order fluxes where an interface touches a fallback cell
    for i in range(nI):
        jl, jr = _neighbors(i, N, periodic)
        if jl < 0:
            jl = jr
        if jr < 0:
            jr = jl
        if min(deg[jl], deg[jr]) > 0:
            continue
        AL = mom[0, jl, 0]
        QL = mom[1, jl, 0]
        AR = mom[0, jr, 0]
        QR = mom[1, jr, 0]
        F2L = flux2_s(AL, QL, cpar[0, jl], cpar[1, jl], rho, m, n)
        F2R = flux2_s(AR, QR, cpar[0, jr], cpar[1, jr], rho, m, n)
        sL = abs(QL / AL) + sound_s(AL, cpar[0, jl], cpar[1, jl], rho, m, n)
        sR = abs(QR / AR) + sound_s(AR, cpar[0, jr], cpar[1, jr], rho, m, n)
        alpha = sL if sL > sR else sR
        Fl[0, i] = 0.5 * (QL + QR) - 0.5 * alpha * (AR - AL)
        Fl[1, i] = 0.5 * (F2L + F2R) - 0.5 * alpha * (QR - QL)
    if periodic:
        Fl[0, N] = Fl[0, 0]
        Fl[1, N] = Fl[1, 0]

    # moment equations
    Ah = tmp[0]
    Qh = tmp[1]
    dF1 = tmp[2]
    dF2 = tmp[3]
    dS = tmp[4]
    Kk = tmp[5]
    A0k = tmp[6]
    pk = tmp[7]
    for j in range(N):
        for ell in range(nd):
            dmom[0, j, ell] = 0.0
            dmom[1, j, ell] = 0.0
        d = deg[j]
        if periodic:
            dl = deg[j - 1] if j > 0 else deg[N - 1]
            dr = deg[j + 1] if j < N - 1 else deg[0]
        else:
            dl = deg[j - 1] if j > 0 else d
            dr = deg[j + 1] if j < N - 1 else d
        if d == 0:
            A = mom[0, j, 0]
            s2 = source2_s(A, cpar[0, j], cpar[1, j], cpar[3, j], cpar[4, j], cpar[5, j], rho, m, n)
            dmom[0, j, 0] = -(Fl[0, j + 1] - Fl[0, j]) / dx
            dmom[1, j, 0] = -(Fl[1, j + 1] - Fl[1, j]) / dx + s2
            if want_src:
                src[0, j, 0] = 0.0
                src[1, j, 0] = s2
            continue
        npts = d + 1
        for k in range(npts):
            Kk[k] = npar[d - 2, 0, j, k]
            A0k[k] = npar[d - 2, 1, j, k]
            pk[k] = npar[d - 2, 2, j, k]
        exists = False
        if wb:
            exists = reference_state_s(npts, wsN[0, j], wsN[1, j], wsN[2, j], Kk, A0k, pk,
                                       rho, m, n, Ah, Qh, snapped)
        for k in range(npts):
            a = wsN[0, j, k]
            q = wsN[1, j, k]
            if exists and snapped[k]:
                dF1[k] = 0.0
                dF2[k] = 0.0
                dS[k] = 0.0
                continue
            Kx = npar[d - 2, 3, j, k]
            A0x = npar[d - 2, 4, j, k]
            px = npar[d - 2, 5, j, k]
            if k == 0:
                f2 = wsI[3, j]
            elif k == d:
                f2 = wsI[3, j + 1]
            else:
                f2 = flux2_s(a, q, Kk[k], A0k[k], rho, m, n)
            s2 = source2_s(a, Kk[k], A0k[k], Kx, A0x, px, rho, m, n)
            if exists:
                ah = Ah[k]
                qh = Qh[k]
                dF1[k] = q - qh
                dF2[k] = f2 - flux2_s(ah, qh, Kk[k], A0k[k], rho, m, n)
                dS[k] = s2 - source2_s(ah, Kk[k], A0k[k], Kx, A0x, px, rho, m, n)
            else:
                dF1[k] = q
                dF2[k] = f2
                dS[k] = s2
        # face terms: F - F_hat at both cell ends
        gL1 = dF1[0]
        gL2 = dF2[0]
        gR1 = dF1[d]
        gR2 = dF2[d]
        if min(dl, d) == 0:
            fh1 = 0.0
            fh2 = 0.0
            if exists:
                fh1 = Qh[0]
                fh2 = flux2_s(Ah[0], Qh[0], Kk[0], A0k[0], rho, m, n)
            gL1 = Fl[0, j] - fh1
            gL2 = Fl[1, j] - fh2
        if min(dr, d) == 0:
            fh1 = 0.0
            fh2 = 0.0
            if exists:
                fh1 = Qh[d]
                fh2 = flux2_s(Ah[d], Qh[d], Kk[d], A0k[d], rho, m, n)
            gR1 = Fl[0, j + 1] - fh1
            gR2 = Fl[1, j + 1] - fh2
        if want_src:
            # reference fluxes at the faces; they belong to the source part
            hL1 = 0.0
            hL2 = 0.0
            hR1 = 0.0
            hR2 = 0.0
            if exists:
                hL1 = Qh[0]
                hL2 = flux2_s(Ah[0], Qh[0], Kk[0], A0k[0], rho, m, n)
                hR1 = Qh[d]
                hR2 = flux2_s(Ah[d], Qh[d], Kk[d], A0k[d], rho, m, n)
        for ell in range(d - 1):
            sgn = 1.0 if ell % 2 == 0 else -1.0
            v1 = -(ell + 1) * (gR1 - sgn * gL1)
            v2 = -(ell + 1) * (gR2 - sgn * gL2)
            s = 0.0
            for k in range(npts):
                v1 += Wd[d - 2, ell, k] * dF1[k]
                v2 += Wd[d - 2, ell, k] * dF2[k]
                s += Ws[d - 2, ell, k] * dS[k]
            dmom[0, j, ell] = v1 / dx
            dmom[1, j, ell] = v2 / dx + s
            if want_src:
                w1 = (ell + 1) * (hR1 - sgn * hL1)
                w2 = (ell + 1) * (hR2 - sgn * hL2)
                for k in range(npts):
                    w1 += Wd[d - 2, ell, k] * dF1[k]
                    w2 += Wd[d - 2, ell, k] * dF2[k]
                src[0, j, ell] = w1 / dx
                src[1, j, ell] = w2 / dx + s

    # point values
    for i in range(nI):
        jl, jr = _neighbors(i, N, periodic)
        if jl < 0:
            di = deg[jr]
        elif jr < 0:
            di = deg[jl]
        else:
            di = min(deg[jl], deg[jr])
        Qi = wsI[1, i]
        Ei = wsI[2, i]
        dpQ = 0.0
        dpE = 0.0
        dmQ = 0.0
        dmE = 0.0
        if di == 0:
            if jl >= 0:
                il = i - 1 if i > 0 else N - 1
                dpQ = (Qi - wsI[1, il]) / dx
                dpE = (Ei - wsI[2, il]) / dx
            if jr >= 0:
                ir = i + 1
                dmQ = (wsI[1, ir] - Qi) / dx
                dmE = (wsI[2, ir] - Ei) / dx
        else:
            if jl >= 0:
                dsrc = deg[jl]
                for k in range(di):
                    if dsrc == di:
                        q = wsN[1, jl, k]
                        e = wsN[2, jl, k]
                    elif k == 0:
                        q = wsI[1, jl]
                        e = wsI[2, jl]
                    else:
                        a = eval_cell_at(0, jl, dsrc, di, k, mom, wsI, tabs)
                        q = eval_cell_at(1, jl, dsrc, di, k, mom, wsI, tabs)
                        e = energy_s(a, q, npar[di - 2, 0, jl, k], npar[di - 2, 1, jl, k],
                                     npar[di - 2, 2, jl, k], rho, m, n)
                    dpQ += dplus[di - 2, k] * (q - Qi)
                    dpE += dplus[di - 2, k] * (e - Ei)
                dpQ /= dx
                dpE /= dx
            if jr >= 0:
                dsrc = deg[jr]
                for k in range(1, di + 1):
                    if dsrc == di:
                        q = wsN[1, jr, k]
                        e = wsN[2, jr, k]
                    elif k == di:
                        q = wsI[1, jr + 1]
                        e = wsI[2, jr + 1]
                    else:
                        a = eval_cell_at(0, jr, dsrc, di, k, mom, wsI, tabs)
                        q = eval_cell_at(1, jr, dsrc, di, k, mom, wsI, tabs)
                        e = energy_s(a, q, npar[di - 2, 0, jr, k], npar[di - 2, 1, jr, k],
                                     npar[di - 2, 2, jr, k], rho, m, n)
                    dmQ += dminus[di - 2, k] * (q - Qi)
                    dmE += dminus[di - 2, k] * (e - Ei)
                dmQ /= dx
                dmE /= dx
        jacobian_sign_s(pts[0, i], pts[1, i], ipar[0, i], ipar[1, i], rho, m, n, J)
        dpts[0, i] = -(J[0] * dpQ + J[1] * dpE + J[4] * dmQ + J[5] * dmE)
        dpts[1, i] = -(J[2] * dpQ + J[3] * dpE + J[6] * dmQ + J[7] * dmE)
    if periodic:
        dpts[0, N] = dpts[0, 0]
        dpts[1, N] = dpts[1, 0]
    return 0


def _call_rhs(disc: Discretization, state: SolutionState, deg=None, ws=None):
    N, r = disc.N, disc.r
    if deg is None:
        deg = disc.base_degrees()
    if ws is None:
        ws = disc.workspace()
    dmom = np.zeros((2, N, r - 1))
    dpts = np.zeros((2, N + 1))
    bad = np.zeros(N, dtype=np.int64)
    p = disc.params
    nbad = rhs_kernel(state.moments, state.points, deg, p.points, p.node_values, p.cell_values,
                      disc.tabs, disc.cfg, disc.icfg, dmom, dpts, bad, ws)
    return dmom, dpts, bad, nbad


def evaluate_rhs(disc: Discretization, state: SolutionState, deg=None):
    """Derivatives ``(dmoments, dpoints)`` of a state.

    Raises
    ------
    NonPositiveArea
        If the area is not positive at some node or interface.
    """
    from .errors import NonPositiveArea
    dmom, dpts, bad, nbad = _call_rhs(disc, state, deg)
    if nbad:
        cells = np.flatnonzero(bad)
        raise NonPositiveArea(f"non-positive area in cells {cells.tolist()}", cell=int(cells[0]))
    return dmom, dpts


def cell_samples(disc: Discretization, state: SolutionState, cell: int):
    """GL-node samples of one cell at the base degree (see :func:`afblood.wb_moments.gl_samples`)."""
    r = disc.r
    m = state.moments
    A = np.empty(r + 1)
    Q = np.empty(r + 1)
    wsI = np.zeros((2, 2))
    wsI[0] = state.points[0, cell:cell + 2]
    wsI[1] = state.points[0, cell:cell + 2] * state.points[1, cell:cell + 2]
    loc = m[:, cell:cell + 1, :]
    for k in range(r + 1):
        A[k] = eval_cell_at(0, 0, r, r, k, loc, wsI, disc.tabs)
        Q[k] = eval_cell_at(1, 0, r, r, k, loc, wsI, disc.tabs)
    nv = disc.params.node_values[r - 2, :, cell, : r + 1]
    rho, mm, nn = disc.model.rho, disc.model.m, disc.model.n
    E = np.array([energy_s(A[k], Q[k], nv[0, k], nv[1, k], nv[2, k], rho, mm, nn) for k in range(r + 1)])
    return {"A": A, "Q": Q, "K": nv[0].copy(), "A0": nv[1].copy(), "p_ext": nv[2].copy(), "E": E}


def cell_source(disc: Discretization, state: SolutionState, cell: int):
    """Well-balanced source moments of one cell, shape ``(2, r-1)``.

    These are the terms of the moment equation besides the interface fluxes,
    ``dU^(l)/dt = -(l+1)/dx (F_R - (-1)^l F_L) + source``, as assembled by
    :func:`rhs_kernel` (reference fluxes at the faces, volume flux
    differences and the source quadrature).

    Raises
    ------
    NonPositiveArea
        If the area is not positive at some node or interface.
    """
    from .errors import NonPositiveArea
    ws = disc.workspace(source=True)
    _, _, bad, nbad = _call_rhs(disc, state, None, ws)
    if nbad:
        cells = np.flatnonzero(bad)
        raise NonPositiveArea(f"non-positive area in cells {cells.tolist()}", cell=int(cells[0]))
    return ws[6][:, cell, : disc.r - 1].copy()
