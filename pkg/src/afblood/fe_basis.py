"""Polynomial machinery on the reference cell ``xi in [-1/2, 1/2]``.

A degree-``r`` cell polynomial is described by ``r + 1`` degrees of freedom:
its values at the two cell interfaces and its first ``r - 1`` normalised
moments::

    sigma_l(v) = (l + 1) 2**l  int_{-1/2}^{1/2} v(xi) xi**l dxi,

which equals ``C_l int_cell v(x) (x - x_j)**l dx`` with
``C_l = (l + 1) 2**l / dx**(l + 1)``.  The shape functions ``B_s`` are dual
to these functionals.  Degree-of-freedom vectors are ordered
``[left interface, right interface, moment 0, ..., moment r-2]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import sqrt

import numpy as np
from numpy.polynomial import Polynomial as P

SUPPORTED_DEGREES = (2, 3, 4)

_xi = P([0.0, 1.0])


def _check_degree(r):
    if r not in SUPPORTED_DEGREES:
        raise ValueError(f"unsupported polynomial degree r={r}; expected one of {SUPPORTED_DEGREES}")


def normalization_constant(ell, dx):
    """Moment normalisation ``C_l = (l + 1) 2**l / dx**(l + 1)``."""
    if ell < 0 or dx <= 0:
        raise ValueError("need ell >= 0 and dx > 0")
    return (ell + 1) * 2.0**ell / dx ** (ell + 1)


def _closed_form_shapes(r):
    """Closed-form shape functions, ordered ``[L, R, B_0, ..., B_{r-2}]``."""
    x = _xi
    if r == 2:
        return [
            0.25 * (2 * x - 1) * (1 + 6 * x),
            0.25 * (1 + 2 * x) * (6 * x - 1),
            -1.5 * (2 * x - 1) * (1 + 2 * x),
        ]
    if r == 3:
        return [
            -0.25 * (2 * x - 1) * (-1 + 4 * x + 20 * x**2),
            0.25 * (1 + 2 * x) * (-1 - 4 * x + 20 * x**2),
            -1.5 * (2 * x - 1) * (1 + 2 * x),
            -7.5 * x * (2 * x - 1) * (1 + 2 * x),
        ]
    return [
        (2 * x - 1) * (-3 - 30 * x + 60 * x**2 + 280 * x**3) / 16,
        (1 + 2 * x) * (3 - 30 * x - 60 * x**2 + 280 * x**3) / 16,
        15.0 / 16 * (2 * x - 1) * (1 + 2 * x) * (-3 + 28 * x**2),
        -7.5 * x * (2 * x - 1) * (1 + 2 * x),
        -35.0 / 16 * (2 * x - 1) * (1 + 2 * x) * (20 * x**2 - 1),
    ]


def _dof_position(r, index):
    if index == -0.5:
        return 0
    if index == 0.5:
        return 1
    if float(index).is_integer() and 0 <= int(index) <= r - 2:
        return 2 + int(index)
    raise ValueError(f"shape index {index!r} invalid for r={r}")


def shape_eval(r, index, xi):
    """Evaluate a shape function of degree ``r`` at reference points.

    Parameters
    ----------
    r : int
        Polynomial degree, 2, 3 or 4.
    index : float or int
        ``-0.5`` or ``0.5`` for the interface functions, ``0..r-2`` for the
        moment functions.
    xi : array_like
        Reference coordinates.
    """
    _check_degree(r)
    return _closed_form_shapes(r)[_dof_position(r, index)](np.asarray(xi, dtype=float))


def gauss_lobatto(npts):
    """Gauss-Lobatto nodes and weights on ``[-1/2, 1/2]`` (weights sum to 1)."""
    if npts == 3:
        return np.array([-0.5, 0.0, 0.5]), np.array([1 / 6, 2 / 3, 1 / 6])
    if npts == 4:
        s = sqrt(1 / 20)
        return np.array([-0.5, -s, s, 0.5]), np.array([1 / 12, 5 / 12, 5 / 12, 1 / 12])
    if npts == 5:
        s = sqrt(3 / 28)
        return (np.array([-0.5, -s, 0.0, s, 0.5]),
                np.array([1 / 20, 49 / 180, 16 / 45, 49 / 180, 1 / 20]))
    raise ValueError(f"unsupported Gauss-Lobatto point count {npts}; expected 3, 4 or 5")


def sigma(poly, ell):
    """Exact normalised moment of a polynomial in ``xi``."""
    antideriv = (poly * _xi**ell).integ()
    return (ell + 1) * 2.0**ell * (antideriv(0.5) - antideriv(-0.5))


def lagrange_basis(nodes):
    """Lagrange cardinal polynomials for the given nodes."""
    out = []
    for k, xk in enumerate(nodes):
        poly = P([1.0])
        for i, xi in enumerate(nodes):
            if i != k:
                poly = poly * P([-xi, 1.0]) / (xk - xi)
        out.append(poly)
    return out


def equilibrium_lagrange(r):
    """Lagrange interpolants of the equilibrium variables at the GL nodes."""
    _check_degree(r)
    return lagrange_basis(gauss_lobatto(r + 1)[0])


def biased_derivative_coeffs(r, side):
    """Coefficients of the one-sided derivative of the equilibrium interpolant.

    ``side='+'`` differentiates the interpolant of the cell to the left of an
    interface at its right end (``xi = 1/2``); ``side='-'`` differentiates the
    cell to the right at its left end.  Multiply by ``1/dx`` when applying.
    """
    _check_degree(r)
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    at = 0.5 if side == "+" else -0.5
    return np.array([L.deriv()(at) for L in equilibrium_lagrange(r)])


def interpolate_cell(r, dofs, xi):
    """Evaluate the cell polynomial described by ``dofs`` at ``xi``."""
    _check_degree(r)
    dofs = np.asarray(dofs, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return sum(d * B(xi) for d, B in zip(dofs, _closed_form_shapes(r)))


def project_to_dofs(r, f):
    """Degrees of freedom of a function of ``xi`` via Gauss-Lobatto quadrature.

    The interface values are ``f(-1/2)`` and ``f(1/2)``; the moments use the
    ``(r + 1)``-point Gauss-Lobatto rule.
    """
    _check_degree(r)
    X, W = gauss_lobatto(r + 1)
    fk = np.asarray(f(X), dtype=float)
    ell = np.arange(r - 1)
    mom = (ell + 1) * 2.0**ell * ((W * fk)[None, :] * X[None, :] ** ell[:, None]).sum(axis=1)
    return np.concatenate([[fk[0], fk[-1]], mom])


@dataclass(frozen=True)
class BasisTables:
    """Precomputed tables for one polynomial degree ``r``.

    Attributes
    ----------
    r : int
        Polynomial degree.
    gl_nodes, gl_weights : ndarray
        ``r + 1`` Gauss-Lobatto nodes and weights on the reference cell.
    B_at_gl : ndarray, shape (r+1, r+1)
        ``B_at_gl[k, s]`` is shape function ``s`` at node ``k``.
    dB_at_gl : ndarray, shape (r+1, r+1)
        ``d/dxi`` of the shape functions at the nodes.
    b_at_faces : ndarray, shape (r-1, 2)
        ``(xi**l)`` at ``xi = -1/2`` and ``xi = 1/2`` scaled by ``(l+1) 2**l``,
        i.e. ``dx * C_l b_l(-+dx/2)``.
    db_at_gl : ndarray, shape (r-1, r+1)
        ``dx * C_l * d/dx b_l`` at the nodes, times the GL weights.
    b_at_gl : ndarray, shape (r-1, r+1)
        ``C_l b_l`` at the nodes times the GL weights.
    lagrange_deriv : ndarray, shape (2, r+1)
        One-sided derivative coefficients, row 0 for side ``+``, row 1 for ``-``.
    """

    r: int
    gl_nodes: np.ndarray = field(repr=False)
    gl_weights: np.ndarray = field(repr=False)
    B_at_gl: np.ndarray = field(repr=False)
    dB_at_gl: np.ndarray = field(repr=False)
    b_at_faces: np.ndarray = field(repr=False)
    db_at_gl: np.ndarray = field(repr=False)
    b_at_gl: np.ndarray = field(repr=False)
    lagrange_deriv: np.ndarray = field(repr=False)

    def C(self, ell, dx):
        return normalization_constant(ell, dx)


@lru_cache(maxsize=None)
def basis_tables(r):
    """Build (and cache) the :class:`BasisTables` of degree ``r``."""
    _check_degree(r)
    X, W = gauss_lobatto(r + 1)
    shapes = _closed_form_shapes(r)
    B = np.array([[s(x) for s in shapes] for x in X])
    dB = np.array([[s.deriv()(x) for s in shapes] for x in X])
    ell = np.arange(r - 1)
    scale = (ell + 1) * 2.0**ell
    faces = np.stack([scale * (-0.5) ** ell, scale * 0.5**ell], axis=1)
    with np.errstate(divide="ignore"):
        dmono = np.where(ell[:, None] > 0, ell[:, None] * X[None, :] ** np.maximum(ell - 1, 0)[:, None], 0.0)
    db = scale[:, None] * dmono * W[None, :]
    bq = scale[:, None] * X[None, :] ** ell[:, None] * W[None, :]
    lag = np.stack([biased_derivative_coeffs(r, "+"), biased_derivative_coeffs(r, "-")])
    tabs = BasisTables(r, X, W, B, dB, faces, db, bq, lag)
    for a in (X, W, B, dB, faces, db, bq, lag):
        a.setflags(write=False)
    return tabs


def _self_test(r):
    """Check the GL rule and the duality of the closed-form shape functions."""
    X, W = gauss_lobatto(r + 1)
    for d in range(2 * (r + 1) - 2):
        exact = (0.5 ** (d + 1) - (-0.5) ** (d + 1)) / (d + 1)
        if abs(np.dot(W, X**d) - exact) > 1e-13:
            raise AssertionError(f"Gauss-Lobatto rule with {r + 1} points fails on degree {d}")
    shapes = _closed_form_shapes(r)
    for s, B in enumerate(shapes):
        vals = [B(-0.5), B(0.5)] + [sigma(B, ell) for ell in range(r - 1)]
        if np.max(np.abs(np.array(vals) - np.eye(r + 1)[s])) > 1e-13:
            raise AssertionError(f"shape function {s} of degree {r} is not dual to the DoFs")


for _r in SUPPORTED_DEGREES:
    _self_test(_r)


# ---------------------------------------------------------------------------
# packed tables for the compiled solver
# ---------------------------------------------------------------------------

MAXP = 5  # maximal number of GL nodes


@lru_cache(maxsize=None)
def packed_tables(r):
    """Tables for all degrees ``2..r`` in fixed-size arrays for compiled loops.

    Index ``o - 2`` selects degree ``o``.  Returns a tuple

    ``(X, W, Bx, dB, Wd, Ws, dplus, dminus, proj, sig1)``

    where ``Bx[o-2, q-2, k, s]`` evaluates the degree-``o`` shape function
    ``s`` at node ``k`` of the degree-``q`` rule, ``proj[o-2, l, s]`` is the
    moment ``sigma_l`` of degree-``o`` shape function ``s`` for all moments of
    the degree-``r`` layout, and ``sig1[l]`` is ``sigma_l(1)``.
    """
    _check_degree(r)
    nd = r - 1
    X = np.zeros((3, MAXP))
    W = np.zeros((3, MAXP))
    Bx = np.zeros((3, 3, MAXP, MAXP))
    dB = np.zeros((3, MAXP, MAXP))
    Wd = np.zeros((3, 3, MAXP))
    Ws = np.zeros((3, 3, MAXP))
    dplus = np.zeros((3, MAXP))
    dminus = np.zeros((3, MAXP))
    proj = np.zeros((3, 3, MAXP))
    for o in range(2, r + 1):
        t = basis_tables(o)
        X[o - 2, : o + 1] = t.gl_nodes
        W[o - 2, : o + 1] = t.gl_weights
        shapes = _closed_form_shapes(o)
        for q in range(2, r + 1):
            Xq = gauss_lobatto(q + 1)[0]
            for k, x in enumerate(Xq):
                for s, B in enumerate(shapes):
                    Bx[o - 2, q - 2, k, s] = B(x)
        dB[o - 2, : o + 1, : o + 1] = t.dB_at_gl
        Wd[o - 2, : o - 1, : o + 1] = t.db_at_gl
        Ws[o - 2, : o - 1, : o + 1] = t.b_at_gl
        dplus[o - 2, : o + 1] = t.lagrange_deriv[0]
        dminus[o - 2, : o + 1] = t.lagrange_deriv[1]
        for ell in range(nd):
            for s, B in enumerate(shapes):
                proj[o - 2, ell, s] = sigma(B, ell)
    sig1 = np.array([1.0 if ell % 2 == 0 else 0.0 for ell in range(3)])
    return (X, W, Bx, dB, Wd, Ws, dplus, dminus, proj, sig1)
