"""Upwind evolution of the interface point values ``V = (A, u)``.

The primitive system reads ``V_t + E_x = 0`` with equilibrium variables
``E = (Q, E)``.  At each interface the derivative ``E_x`` is approximated by
one-sided differences of the equilibrium interpolants of the two adjacent
cells and split with the sign of the Jacobian ``dE/dV``::

    dV/dt = -(J^+ delta^+ E + J^- delta^- E),

where ``delta^+`` comes from the left cell and ``delta^-`` from the right one.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import DomainError, NonPositiveArea
from .model import dphi_s, sound_s


@njit(cache=True)
def sign_weights_s(lam):
    """``lambda^+ / lambda`` with the symmetric value 1/2 at ``lambda = 0``."""
    if lam > 0.0:
        return 1.0
    if lam < 0.0:
        return 0.0
    return 0.5


@njit(cache=True)
def jacobian_sign_s(A, u, K, A0, rho, m, n, out):
    """Fill ``out[0:4]`` with ``J^+`` and ``out[4:8]`` with ``J^-`` (row major)."""
    c = sound_s(A, K, A0, rho, m, n)
    s = A / c
    p1 = sign_weights_s(u - c)
    p2 = sign_weights_s(u + c)
    q1 = 1.0 - p1
    q2 = 1.0 - p2
    out[0] = 0.5 * (p1 + p2)
    out[1] = 0.5 * s * (p2 - p1)
    out[2] = 0.5 * (p2 - p1) / s
    out[3] = out[0]
    out[4] = 0.5 * (q1 + q2)
    out[5] = 0.5 * s * (q2 - q1)
    out[6] = 0.5 * (q2 - q1) / s
    out[7] = out[4]


def eigenvector_matrix(A, K, A0, rho, m, n):
    """Columns are the right eigenvectors of ``dE/dV`` for ``u - c`` and ``u + c``."""
    a = A / A0
    s = np.sqrt(rho * A * A0 / (K * (m * a ** (m - 1) - (n * a ** (n - 1) if n != 0 else 0.0))))
    return np.array([[-s, s], [1.0, 1.0]])


def jacobian_sign(A, u, K, A0, rho, m, n):
    """Sign-split Jacobians ``(J_plus, J_minus)`` at a primitive state.

    Computed as ``Y diag(lambda_i^+/lambda_i) Y^-1`` with eigenvalues
    ``u -+ c`` and the eigenvector matrix ``Y`` of
    :func:`eigenvector_matrix`; ``lambda^+/lambda`` is 1/2 at ``lambda = 0``.
    """
    if not A > 0:
        raise NonPositiveArea("jacobian_sign needs A > 0")
    a = A / A0
    if not dphi_s(a, float(m), float(n)) > 0:
        raise DomainError("non-positive wave-speed radicand")
    out = np.empty(8)
    jacobian_sign_s(float(A), float(u), float(K), float(A0), float(rho), float(m), float(n), out)
    return out[:4].reshape(2, 2), out[4:].reshape(2, 2)


def point_rhs(disc, state):
    """Time derivatives of all interface values ``(A, u)``, shape ``(2, N+1)``."""
    from .semidiscrete import evaluate_rhs
    return evaluate_rhs(disc, state)[1]
