"""Well-balanced moment update: local reference steady states and source quadrature.

Inside each cell the solver samples ``(A, Q)`` and the equilibrium variable
``E`` at the Gauss-Lobatto nodes, picks a node ``iota`` whose pair
``(Q_iota, E_iota)`` admits a steady solution at every other node, and solves

    digamma(A) = Q^2/(2 A^2) + (K/rho) (a^m - a^n) + p_ext/rho - E = 0

for the reference areas ``A_hat_k``.  Subtracting the flux and source of this
reference inside the moment equations makes discrete steady states exact
fixed points of the scheme.

The compiled kernels here are called from :mod:`afblood.semidiscrete`; the
public functions wrap them for single-cell use and testing.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import DomainError, NoConvergence
from .model import dphi_s, phi_s, pw_s, sound_s

#: Relative tolerance under which a node sample is treated as already steady.
SNAP_RTOL = 1e-12
#: Relative residual accepted by the reference-area Newton solve.
SOLVE_RTOL = 1e-13
MAX_NEWTON = 100


# ---------------------------------------------------------------------------
# scalar kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def digamma_s(A, Q, E, K, A0, p, rho, m, n):
    return Q * Q / (2.0 * A * A) + (K * phi_s(A / A0, m, n) + p) / rho - E


@njit(cache=True)
def digamma_prime_s(A, Q, K, A0, rho, m, n):
    return -Q * Q / (A * A * A) + K / (rho * A0) * dphi_s(A / A0, m, n)


@njit(cache=True)
def digamma_scale_s(A, Q, E, K, A0, p, rho, m, n):
    """Magnitude of the terms of ``digamma``; rounding errors scale with it."""
    a = A / A0
    mm = m if m > 1.0 else 1.0
    nn = -n if -n > 1.0 else 1.0
    return Q * Q / (2.0 * A * A) + K / rho * (mm * pw_s(a, m) + nn * pw_s(a, n)) + abs(p) / rho + abs(E)


@njit(cache=True)
def critical_area_s(Q, K, A0, rho, m, n):
    """Minimiser of ``digamma`` (``0`` when ``Q = 0``)."""
    if Q == 0.0:
        return 0.0
    tau = rho * Q * Q / (K * A0 * A0)
    if n == 0.0:
        return A0 * (tau / m) ** (1.0 / (m + 2.0))
    # h(a) = m a^(m+2) - n a^(n+2) is increasing; solve h(a) = tau in log a
    hi = min((tau / m) ** (1.0 / (m + 2.0)), (tau / -n) ** (1.0 / (n + 2.0)))
    g = tau / (m - n)
    lo = min(g ** (1.0 / (n + 2.0)), g ** (1.0 / (m + 2.0)))
    slo = math.log(lo)
    shi = math.log(hi)
    s = shi
    ltau = math.log(tau)
    for _ in range(200):
        a = math.exp(s)
        t1 = m * a ** (m + 2.0)
        t2 = -n * a ** (n + 2.0)
        h = t1 + t2
        H = math.log(h) - ltau
        if H > 0.0:
            shi = s
        else:
            slo = s
        dH = ((m + 2.0) * t1 + (n + 2.0) * t2) / h
        snew = s - H / dH
        if not (slo < snew < shi):
            snew = 0.5 * (slo + shi)
        if abs(snew - s) <= 1e-15 * max(1.0, abs(s)) or shi - slo <= 1e-15 * max(1.0, abs(s)):
            s = snew
            break
        s = snew
    return A0 * math.exp(s)


@njit(cache=True)
def digamma_at_critical_s(Astar, Q, E, K, A0, p, rho, m, n):
    """``digamma(A*)`` including the ``Q = 0`` limit ``A* -> 0``."""
    if Astar == 0.0:
        if n == 0.0:
            return (-K + p) / rho - E
        return -np.inf
    return digamma_s(Astar, Q, E, K, A0, p, rho, m, n)


@njit(cache=True)
def solve_reference_area_s(Q, E, K, A0, p, seed, rho, m, n):
    """Root of ``digamma`` on the side of ``A*`` containing ``seed``.

    Returns
    -------
    (root, ok) : (float, bool)
    """
    Astar = critical_area_s(Q, K, A0, rho, m, n)
    sub = Q == 0.0 or seed >= Astar
    if sub:
        lo = Astar
        hi = seed if seed > Astar else (Astar if Astar > 0.0 else A0)
        if hi <= 0.0:
            hi = A0
        while digamma_s(hi, Q, E, K, A0, p, rho, m, n) < 0.0:
            lo = hi
            hi *= 2.0
            if hi > 1e300:
                return 0.0, False
    else:
        hi = Astar
        lo = seed if seed > 0.0 else 0.5 * Astar
        while digamma_s(lo, Q, E, K, A0, p, rho, m, n) < 0.0:
            hi = lo
            lo *= 0.5
            if lo < 1e-300:
                return 0.0, False
    x = seed
    if not (lo <= x <= hi):
        x = 0.5 * (lo + hi) if lo > 0.0 else 0.5 * hi
    if x <= 0.0:
        x = 0.5 * hi
    best = x
    bestf = np.inf
    for _ in range(MAX_NEWTON):
        f = digamma_s(x, Q, E, K, A0, p, rho, m, n)
        af = abs(f)
        if af < bestf:
            bestf = af
            best = x
        if f == 0.0:
            break
        # bracket update: digamma increases on the subcritical side
        if (f > 0.0) == sub:
            hi = x
        else:
            lo = x
        d = digamma_prime_s(x, Q, K, A0, rho, m, n)
        xn = x - f / d if d != 0.0 else -1.0
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 2.2e-16 * x:
            f2 = digamma_s(xn, Q, E, K, A0, p, rho, m, n)
            if abs(f2) < bestf:
                bestf = abs(f2)
                best = xn
            break
        x = xn
    scale = digamma_scale_s(best, Q, E, K, A0, p, rho, m, n)
    return best, bestf <= 1e-11 * scale


@njit(cache=True)
def select_reference_s(npts, A, Q, E, K, A0, p, rho, m, n):
    """First node ``iota`` whose ``(Q, E)`` admits a steady root at all other nodes.

    Returns ``-1`` if no node qualifies.
    """
    for it in range(npts):
        ok = True
        for k in range(npts):
            if k == it:
                continue
            As = critical_area_s(Q[it], K[k], A0[k], rho, m, n)
            if digamma_at_critical_s(As, Q[it], E[it], K[k], A0[k], p[k], rho, m, n) > 0.0:
                ok = False
                break
        if ok:
            return it
    return -1


@njit(cache=True)
def reference_state_s(npts, A, Q, E, K, A0, p, rho, m, n, Ah, Qh, snapped):
    """Fill the reference ``(Ah, Qh)`` at ``npts`` nodes.

    ``snapped[k]`` is set when ``(Ah_k, Qh_k) = (A_k, Q_k)`` exactly, in which
    case the flux and source differences at node ``k`` vanish.

    Returns
    -------
    bool
        ``True`` if a reference exists.
    """
    # fast path: every node already steady with respect to node 0
    all_steady = True
    for k in range(npts):
        if not _is_steady(A[k], Q[k], Q[0], E[0], K[k], A0[k], p[k], rho, m, n):
            all_steady = False
            break
    if all_steady:
        for k in range(npts):
            Ah[k] = A[k]
            Qh[k] = Q[k]
            snapped[k] = True
        return True
    it = select_reference_s(npts, A, Q, E, K, A0, p, rho, m, n)
    if it < 0:
        for k in range(npts):
            Ah[k] = 0.0
            Qh[k] = 0.0
            snapped[k] = False
        return False
    Qi = Q[it]
    Ei = E[it]
    Ah[it] = A[it]
    Qh[it] = Qi
    snapped[it] = True
    for k in range(npts):
        if k == it:
            continue
        Qh[k] = Qi
        snapped[k] = False
        # nodes whose parameters coincide with an already solved node share its root
        done = False
        for kk in range(npts):
            if kk == k or not (kk == it or kk < k):
                continue
            if K[kk] == K[k] and A0[kk] == A0[k] and p[kk] == p[k]:
                As = critical_area_s(Qi, K[k], A0[k], rho, m, n)
                if (A[k] >= As) == (Ah[kk] >= As):
                    Ah[k] = Ah[kk]
                    done = True
                    break
        if done:
            continue
        if _is_steady(A[k], Q[k], Qi, Ei, K[k], A0[k], p[k], rho, m, n):
            Ah[k] = A[k]
            Qh[k] = Q[k]
            snapped[k] = True
            continue
        root, ok = solve_reference_area_s(Qi, Ei, K[k], A0[k], p[k], A[k], rho, m, n)
        if not ok:
            for kk in range(npts):
                Ah[kk] = 0.0
                Qh[kk] = 0.0
                snapped[kk] = False
            return False
        Ah[k] = root
    return True


@njit(cache=True)
def _is_steady(A, Q, Qi, Ei, K, A0, p, rho, m, n):
    # discharges are compared on the scale A c so that Q ~ 0 is not judged relatively
    qscale = abs(Q) + abs(Qi) + A * sound_s(A, K, A0, rho, m, n)
    if abs(Q - Qi) > SNAP_RTOL * qscale:
        return False
    f = digamma_s(A, Qi, Ei, K, A0, p, rho, m, n)
    return abs(f) <= SNAP_RTOL * digamma_scale_s(A, Qi, Ei, K, A0, p, rho, m, n)


# ---------------------------------------------------------------------------
# public wrappers
# ---------------------------------------------------------------------------

def digamma(A, Q, E, K, A0, p_ext, rho, m, n):
    """Steady-state residual ``digamma(A)`` for the pair ``(Q, E)``."""
    A = np.asarray(A, dtype=float)
    if np.any(~(A > 0)):
        raise DomainError("digamma needs A > 0")
    a = A / A0
    phi = a**m - (a**n if n != 0 else 1.0)
    return Q * Q / (2 * A * A) + (K * phi + p_ext) / rho - E


def digamma_prime(A, Q, K, A0, rho, m, n):
    """Derivative of :func:`digamma` with respect to ``A``."""
    A = np.asarray(A, dtype=float)
    if np.any(~(A > 0)):
        raise DomainError("digamma_prime needs A > 0")
    a = A / A0
    dphi = m * a ** (m - 1) - (n * a ** (n - 1) if n != 0 else 0.0)
    return -Q * Q / A**3 + K / (rho * A0) * dphi


def critical_area(Q, K, A0, rho, m, n):
    """Area ``A*`` at which ``digamma`` attains its minimum."""
    return float(critical_area_s(float(Q), float(K), float(A0), float(rho), float(m), float(n)))


def solve_reference_area(Q, E, K, A0, p_ext, seed, rho, m, n):
    """Reference area at one node, on the branch of ``A*`` that contains ``seed``.

    Raises
    ------
    NoConvergence
        If no root is found to tolerance.
    """
    root, ok = solve_reference_area_s(float(Q), float(E), float(K), float(A0), float(p_ext),
                                      float(seed), float(rho), float(m), float(n))
    if not ok:
        raise NoConvergence("reference area solve failed")
    return root


def select_reference(A, Q, E, K, A0, p_ext, rho, m, n):
    """Index of the reference node, or ``None`` if no node qualifies."""
    arrs = [np.ascontiguousarray(v, dtype=float) for v in (A, Q, E, K, A0, p_ext)]
    it = select_reference_s(len(arrs[0]), *arrs, float(rho), float(m), float(n))
    return None if it < 0 else int(it)


def reference_state(A, Q, E, K, A0, p_ext, rho, m, n):
    """Reference steady state ``(A_hat, Q_hat, exists)`` at a cell's GL nodes."""
    arrs = [np.ascontiguousarray(v, dtype=float) for v in (A, Q, E, K, A0, p_ext)]
    npts = len(arrs[0])
    Ah = np.zeros(npts)
    Qh = np.zeros(npts)
    snapped = np.zeros(npts, dtype=np.bool_)
    ok = reference_state_s(npts, *arrs, float(rho), float(m), float(n), Ah, Qh, snapped)
    return Ah, Qh, bool(ok)


def gl_samples(disc, state, cell):
    """Samples at the GL nodes of one cell at the base degree.

    Returns
    -------
    dict
        Keys ``A, Q, K, A0, p_ext, E`` with arrays of length ``r + 1``.
    """
    from .semidiscrete import cell_samples
    return cell_samples(disc, state, cell)


def moments_rhs(disc, state):
    """Time derivatives of all moments, shape ``(2, N, r-1)``."""
    from .semidiscrete import evaluate_rhs
    return evaluate_rhs(disc, state)[0]


def wb_source(disc, state, cell):
    """Well-balanced source moments ``F^(l) + S^(l)`` of one cell, shape (2, r-1)."""
    from .semidiscrete import cell_source
    return cell_source(disc, state, cell)
