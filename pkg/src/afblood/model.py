"""Tube law, flux, source and eigen-structure of the 1-D blood-flow system.

The system evolves the cross-sectional area ``A`` and the flow ``Q = A u``::

    A_t + Q_x = 0
    Q_t + (Q^2/A + (K A0/rho) Phi~(A/A0))_x
        = -(A0/rho) Phi(A/A0) K_x + (K/rho) Phi~(A/A0) (A0)_x - (A/rho) (p_ext)_x

with the transmural pressure law ``p - p_ext = K phi(A/A0)`` and
``phi(a) = a**m - a**n``.  Two families of functions live here:

* vectorised numpy functions forming the public API, which validate their
  input and raise :class:`~afblood.errors.DomainError`;
* scalar ``numba`` kernels (suffix ``_s``) used inside the compiled solver
  loops.  They perform no validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .errors import DomainError, NonPositiveArea

FieldFn = Callable[[np.ndarray], np.ndarray]

#: Tube-law exponents ``(m, n)`` commonly used for arteries.
ARTERY = (0.5, 0.0)
#: Tube-law exponents ``(m, n)`` commonly used for collapsible veins.
VEIN = (10.0, -1.5)


@dataclass(frozen=True)
class ModelParams:
    """Fluid density, tube-law exponents and the three parameter fields.

    Parameters
    ----------
    rho : float
        Blood density in kg/m^3.
    m, n : float
        Tube-law exponents with ``m > 0`` and ``-2 < n <= 0``.
    K, A0, p_ext : callable
        Vectorised functions of ``x`` returning the stiffness coefficient
        [Pa], the unloaded area [m^2] and the external pressure [Pa].
    """

    rho: float
    m: float
    n: float
    K: FieldFn
    A0: FieldFn
    p_ext: FieldFn

    def __post_init__(self):
        if not self.rho > 0:
            raise DomainError(f"density must be positive, got {self.rho}")
        if not self.m > 0:
            raise DomainError(f"exponent m must be positive, got {self.m}")
        if not -2.0 < self.n <= 0.0:
            raise DomainError(f"exponent n must lie in (-2, 0], got {self.n}")

    def sample(self, x):
        """Evaluate ``(K, A0, p_ext)`` at ``x`` and check positivity."""
        x = np.asarray(x, dtype=float)
        K = np.broadcast_to(np.asarray(self.K(x), dtype=float), x.shape).copy()
        A0 = np.broadcast_to(np.asarray(self.A0(x), dtype=float), x.shape).copy()
        p = np.broadcast_to(np.asarray(self.p_ext(x), dtype=float), x.shape).copy()
        if np.any(~(K > 0)) or np.any(~(A0 > 0)):
            raise DomainError("K and A0 must be positive wherever they are sampled")
        return K, A0, p


# ---------------------------------------------------------------------------
# numpy API
# ---------------------------------------------------------------------------

def _power(a, e):
    # a**0 is taken as 1 even at a = 0 (continuous limit of the artery law)
    if e == 0:
        return np.ones_like(a)
    return a**e


def _check_ratio(a, n):
    a = np.asarray(a, dtype=float)
    if np.any(np.isnan(a)) or np.any(a < 0):
        raise DomainError("area ratio must be non-negative")
    if n < 0 and np.any(a == 0):
        raise DomainError("area ratio must be positive when n < 0")
    return a


def transmural_phi(a, m, n):
    """Return ``phi(a) = a**m - a**n``."""
    a = _check_ratio(a, n)
    return _power(a, m) - _power(a, n)


def transmural_phi_prime(a, m, n):
    """Return ``phi'(a) = m a**(m-1) - n a**(n-1)``."""
    a = _check_ratio(a, n)
    out = m * _power(a, m - 1)
    if n != 0:
        out = out - n * _power(a, n - 1)
    return out


def big_phi(a, m, n):
    """Return ``Phi(a) = a**(m+1)/(m+1) - a**(n+1)/(n+1)``."""
    a = _check_ratio(a, n)
    return _power(a, m + 1) / (m + 1) - _power(a, n + 1) / (n + 1)


def big_phi_tilde(a, m, n):
    """Return ``Phi~(a) = m a**(m+1)/(m+1) - n a**(n+1)/(n+1)``."""
    a = _check_ratio(a, n)
    out = m * _power(a, m + 1) / (m + 1)
    if n != 0:
        out = out - n * _power(a, n + 1) / (n + 1)
    return out


def _check_area(A):
    A = np.asarray(A, dtype=float)
    if np.any(~(A > 0)):
        raise NonPositiveArea("cross-sectional area must be positive")
    return A


def flux(A, Q, K, A0, rho, m, n):
    """Physical flux ``(Q, Q^2/A + (K A0/rho) Phi~(A/A0))``.

    Returns
    -------
    tuple of ndarray
        Mass and momentum flux components.
    """
    A = _check_area(A)
    Q = np.asarray(Q, dtype=float)
    return Q * np.ones_like(A), Q * Q / A + K * A0 / rho * big_phi_tilde(A / A0, m, n)


def source_density(A, K, A0, p_ext_x, K_x, A0_x, rho, m, n):
    """Geometric source term; the mass component is identically zero.

    Parameters
    ----------
    A : array_like
        Cross-sectional area.
    K, A0 : array_like
        Parameter values at the same points.
    p_ext_x, K_x, A0_x : array_like
        Spatial derivatives of the external pressure, stiffness and
        unloaded area.
    """
    A = _check_area(A)
    a = A / A0
    s2 = (-(A0 / rho) * big_phi(a, m, n) * K_x
          + (K / rho) * big_phi_tilde(a, m, n) * A0_x
          - (A / rho) * p_ext_x)
    return np.zeros_like(s2), s2


def equilibrium_vars(A, u, K, A0, p_ext, rho, m, n):
    """Equilibrium variables ``Q = A u`` and ``E = u^2/2 + (K phi + p_ext)/rho``."""
    A = _check_area(A)
    u = np.asarray(u, dtype=float)
    E = 0.5 * u * u + (K * transmural_phi(A / A0, m, n) + p_ext) / rho
    return A * u, E


def wave_speed(A, K, A0, rho, m, n):
    """Characteristic speed ``c = sqrt((K/rho) a phi'(a))`` with ``a = A/A0``."""
    A = _check_area(A)
    a = A / A0
    rad = K / rho * a * transmural_phi_prime(a, m, n)
    if np.any(~(rad > 0)):
        raise DomainError("non-positive wave-speed radicand: system not hyperbolic")
    return np.sqrt(rad)


def eigenvalues(A, u, K, A0, rho, m, n):
    """Characteristic speeds ``(u - c, u + c)``."""
    c = wave_speed(A, K, A0, rho, m, n)
    return u - c, u + c


def cons_to_prim(A, Q):
    """Map ``(A, Q)`` to ``(A, u)``."""
    A = _check_area(A)
    return A, np.asarray(Q, dtype=float) / A


def prim_to_cons(A, u):
    """Map ``(A, u)`` to ``(A, Q)``."""
    A = _check_area(A)
    return A, A * np.asarray(u, dtype=float)


# ---------------------------------------------------------------------------
# scalar kernels for compiled loops
# ---------------------------------------------------------------------------

@njit(cache=True)
def pw_s(a, e):
    """``a**e`` with fast paths for the exponents of the artery law."""
    if e == 0.0:
        return 1.0
    if e == 0.5:
        return math.sqrt(a)
    if e == 1.0:
        return a
    if e == 1.5:
        return a * math.sqrt(a)
    if e == 2.0:
        return a * a
    if e == 2.5:
        return a * a * math.sqrt(a)
    if e == -0.5:
        return 1.0 / math.sqrt(a)
    if e == -1.0:
        return 1.0 / a
    return a**e


@njit(cache=True)
def phi_s(a, m, n):
    return pw_s(a, m) - pw_s(a, n)


@njit(cache=True)
def dphi_s(a, m, n):
    if n == 0.0:
        return m * pw_s(a, m - 1.0)
    return m * pw_s(a, m - 1.0) - n * pw_s(a, n - 1.0)


@njit(cache=True)
def bigphi_s(a, m, n):
    return pw_s(a, m + 1.0) / (m + 1.0) - pw_s(a, n + 1.0) / (n + 1.0)


@njit(cache=True)
def bigphit_s(a, m, n):
    if n == 0.0:
        return m * pw_s(a, m + 1.0) / (m + 1.0)
    return m * pw_s(a, m + 1.0) / (m + 1.0) - n * pw_s(a, n + 1.0) / (n + 1.0)


@njit(cache=True)
def flux2_s(A, Q, K, A0, rho, m, n):
    """Momentum flux component."""
    return Q * Q / A + K * A0 / rho * bigphit_s(A / A0, m, n)


@njit(cache=True)
def source2_s(A, K, A0, Kx, A0x, px, rho, m, n):
    """Momentum source component."""
    a = A / A0
    s = 0.0
    if Kx != 0.0:
        s -= A0 / rho * bigphi_s(a, m, n) * Kx
    if A0x != 0.0:
        s += K / rho * bigphit_s(a, m, n) * A0x
    if px != 0.0:
        s -= A / rho * px
    return s


@njit(cache=True)
def energy_s(A, Q, K, A0, p, rho, m, n):
    """Equilibrium variable ``E`` from conservative ``(A, Q)``."""
    u = Q / A
    return 0.5 * u * u + (K * phi_s(A / A0, m, n) + p) / rho


@njit(cache=True)
def sound_s(A, K, A0, rho, m, n):
    a = A / A0
    return math.sqrt(K / rho * a * dphi_s(a, m, n))
