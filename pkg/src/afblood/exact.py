"""Independent reference solutions: steady profiles and the exact artery Riemann solver.

The Riemann solver covers the constant-parameter law ``p = K (sqrt(A/A0) - 1)``
(``m = 1/2``, ``n = 0``).  For this law

* the wave speed is ``c = c0 (A/A0)**(1/4)`` with ``c0 = sqrt(K / (2 rho))``;
* the Riemann invariants across rarefactions are ``u -+ 4 c``;
* the momentum flux is ``Q**2/A + P(A)`` with ``P = K A0 / (3 rho) (A/A0)**1.5``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NoConvergence
from .model import ModelParams
from .wb_moments import critical_area, solve_reference_area


def steady_profile(Q_s, E_s, model: ModelParams, x, seed=None):
    """Subcritical steady area profile with discharge ``Q_s`` and energy ``E_s``.

    Parameters
    ----------
    Q_s, E_s : float
        Constant equilibrium values.
    model : ModelParams
        Supplies ``K``, ``A0`` and ``p_ext`` at the samples.
    x : array_like
        Sample locations.
    seed : array_like, optional
        Newton seeds.  Defaults to ``A0(x)``, clipped to the subcritical side.

    Returns
    -------
    numpy.ndarray
        Areas at ``x``.

    Raises
    ------
    NoConvergence
        If no subcritical root exists at some sample.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    K, A0, p = model.sample(x)[:3]
    seeds = A0 if seed is None else np.broadcast_to(np.asarray(seed, dtype=float), x.shape)
    out = np.empty_like(x)
    for i in range(x.size):
        Astar = critical_area(Q_s, K[i], A0[i], model.rho, model.m, model.n)
        s = max(seeds[i], 2.0 * Astar)
        try:
            out[i] = solve_reference_area(Q_s, E_s, K[i], A0[i], p[i], s,
                                          model.rho, model.m, model.n)
        except NoConvergence as exc:
            raise NoConvergence(f"no subcritical steady area at x={x[i]:.6g}") from exc
    return out


@dataclass(frozen=True)
class RiemannSolution:
    """Self-similar solution of an artery Riemann problem.

    Attributes
    ----------
    left, right : tuple of float
        ``(A, u)`` of the initial states.
    A_star, u_star : float
        Middle state.
    waves : tuple of str
        ``"shock"`` or ``"rarefaction"`` for the left and right waves.
    K, A0, rho : float
        Constant parameters.
    """

    left: tuple
    right: tuple
    A_star: float
    u_star: float
    waves: tuple
    K: float
    A0: float
    rho: float

    @property
    def c0(self):
        return np.sqrt(self.K / (2.0 * self.rho))

    def sound(self, A):
        return self.c0 * (np.asarray(A) / self.A0) ** 0.25

    def area_from_sound(self, c):
        return self.A0 * (c / self.c0) ** 4

    def wave_speeds(self):
        """Speeds bounding each wave: ``[(head, tail) left, (tail, head) right]``.

        A shock has equal entries.
        """
        AL, uL = self.left
        AR, uR = self.right
        cs = self.sound(self.A_star)
        if self.waves[0] == "shock":
            s = shock_speed(AL, uL, self.A_star, self.u_star)
            lw = (s, s)
        else:
            lw = (uL - self.sound(AL), self.u_star - cs)
        if self.waves[1] == "shock":
            s = shock_speed(AR, uR, self.A_star, self.u_star)
            rw = (s, s)
        else:
            rw = (self.u_star + cs, uR + self.sound(AR))
        return lw, rw

    def discontinuities(self):
        """Speeds of all points where the solution or its derivative jumps."""
        (a, b), (c, d) = self.wave_speeds()
        return sorted(set((a, b, c, d)))

    def sample(self, xi):
        """``(A, u)`` at similarity coordinates ``xi = (x - x0) / t``."""
        xi = np.asarray(xi, dtype=float)
        AL, uL = self.left
        AR, uR = self.right
        A = np.empty_like(xi)
        u = np.empty_like(xi)
        (l0, l1), (r0, r1) = self.wave_speeds()
        cL = self.sound(AL)
        cR = self.sound(AR)
        for idx, z in np.ndenumerate(xi):
            if z < l0:
                a, v = AL, uL
            elif z < l1:
                c = (uL + 4.0 * cL - z) / 5.0
                a, v = self.area_from_sound(c), z + c
            elif z <= r0:
                a, v = self.A_star, self.u_star
            elif z < r1:
                c = (z - uR + 4.0 * cR) / 5.0
                a, v = self.area_from_sound(c), z - c
            else:
                a, v = AR, uR
            A[idx] = a
            u[idx] = v
        return A, u

    def evaluate(self, x, t, x0=0.0):
        """``(A, Q)`` at positions ``x`` and time ``t > 0``."""
        A, u = self.sample((np.asarray(x, dtype=float) - x0) / t)
        return A, A * u

    def cell_averages(self, edges, t, x0=0.0, nquad=8):
        """Exact cell averages of ``(A, Q)`` over cells with the given edges.

        Cells are split at every wave edge so that Gauss-Legendre quadrature
        acts on smooth pieces only.
        """
        edges = np.asarray(edges, dtype=float)
        xq, wq = np.polynomial.legendre.leggauss(nquad)
        cuts = np.array([x0 + s * t for s in self.discontinuities()])
        N = edges.size - 1
        avgA = np.empty(N)
        avgQ = np.empty(N)
        for j in range(N):
            a, b = edges[j], edges[j + 1]
            pts = np.concatenate(([a], cuts[(cuts > a) & (cuts < b)], [b]))
            sA = 0.0
            sQ = 0.0
            for lo, hi in zip(pts[:-1], pts[1:]):
                xs = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xq
                Av, Qv = self.evaluate(xs, t, x0)
                sA += 0.5 * (hi - lo) * np.dot(wq, Av)
                sQ += 0.5 * (hi - lo) * np.dot(wq, Qv)
            avgA[j] = sA / (b - a)
            avgQ[j] = sQ / (b - a)
        return avgA, avgQ


def momentum_pressure(A, K, A0, rho):
    """Pressure part ``K A0 / (3 rho) (A/A0)**1.5`` of the momentum flux."""
    return K * A0 / (3.0 * rho) * (A / A0) ** 1.5


def shock_speed(AK, uK, As, us):
    """Rankine-Hugoniot speed from mass conservation."""
    if As == AK:
        return uK
    return (As * us - AK * uK) / (As - AK)


def _wave_curve(As, AK, K, A0, rho):
    """Velocity jump ``f_K(A*)`` of the wave linking state ``K`` to area ``A*``."""
    c0 = np.sqrt(K / (2.0 * rho))
    if As <= AK:
        return 4.0 * c0 * ((As / A0) ** 0.25 - (AK / A0) ** 0.25)
    dP = momentum_pressure(As, K, A0, rho) - momentum_pressure(AK, K, A0, rho)
    return np.sqrt(dP * (As - AK) / (As * AK))


def exact_riemann_artery(left, right, K, A0, rho):
    """Solve the artery Riemann problem with left/right states ``(A, u)``.

    Parameters
    ----------
    left, right : tuple of float
        Primitive states ``(A, u)``, areas positive.
    K, A0, rho : float
        Constant stiffness, rest area and density.

    Returns
    -------
    RiemannSolution

    Raises
    ------
    DomainError
        If the data generate a vacuum (``A* -> 0``).
    NoConvergence
        If the middle-state solve fails.
    """
    AL, uL = map(float, left)
    AR, uR = map(float, right)
    if not (AL > 0 and AR > 0):
        raise DomainError("Riemann states need positive area")
    c0 = np.sqrt(K / (2.0 * rho))
    cL = c0 * (AL / A0) ** 0.25
    cR = c0 * (AR / A0) ** 0.25
    if uR - uL >= 4.0 * (cL + cR):
        raise DomainError("Riemann data generate a vacuum")

    def g(As):
        return _wave_curve(As, AL, K, A0, rho) + _wave_curve(As, AR, K, A0, rho) + uR - uL

    if AL == AR and uL == uR:
        As = AL
    else:
        lo = 1e-14 * min(AL, AR)
        hi = max(AL, AR)
        while g(hi) < 0.0:
            hi *= 2.0
            if hi > 1e12 * max(AL, AR):
                raise NoConvergence("no bracket for the middle area")
        try:
            As = brentq(g, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
        except (RuntimeError, ValueError) as exc:
            raise NoConvergence("middle-state solve failed") from exc
    us = 0.5 * (uL + uR) + 0.5 * (_wave_curve(As, AR, K, A0, rho) - _wave_curve(As, AL, K, A0, rho))
    waves = ("shock" if As > AL else "rarefaction", "shock" if As > AR else "rarefaction")
    return RiemannSolution((AL, uL), (AR, uR), As, us, waves, float(K), float(A0), float(rho))
