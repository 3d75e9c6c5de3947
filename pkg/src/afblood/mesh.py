"""Uniform mesh, degree-of-freedom layout, parameter projection and boundaries.

The discrete unknown consists of

* ``moments[c, j, l]``: moment ``l = 0..r-2`` of channel ``c`` (0: A, 1: Q)
  in cell ``j``;
* ``points[c, i]``: primitive point values (0: A, 1: u) at interface
  ``i = 0..N``.  With periodic boundaries ``points[:, N]`` duplicates
  ``points[:, 0]``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError, NonPositiveArea
from .fe_basis import MAXP, _closed_form_shapes, basis_tables, gauss_lobatto
from .model import ModelParams

BC_MODES = ("periodic", "extrapolation")


@dataclass(frozen=True)
class Mesh:
    """Uniform partition of ``[x_left, x_right]`` into ``N`` cells."""

    x_left: float
    x_right: float
    N: int
    bc: str = "extrapolation"

    def __post_init__(self):
        if self.N < 4:
            raise ConfigError(f"need at least 4 cells, got N={self.N}")
        if not self.x_right > self.x_left:
            raise ConfigError("empty domain")
        if self.bc not in BC_MODES:
            raise ConfigError(f"unknown boundary mode {self.bc!r}")

    @property
    def dx(self):
        return (self.x_right - self.x_left) / self.N

    @property
    def periodic(self):
        return self.bc == "periodic"

    def interfaces(self):
        return self.x_left + self.dx * np.arange(self.N + 1)

    def centers(self):
        return self.x_left + self.dx * (np.arange(self.N) + 0.5)

    def nodes(self, r):
        """Physical coordinates of the ``r + 1`` GL nodes of every cell, shape (N, r+1)."""
        X, _ = gauss_lobatto(r + 1)
        return self.centers()[:, None] + self.dx * X[None, :]


def build_mesh(x_left, x_right, N, bc="extrapolation"):
    """Construct a :class:`Mesh`; ``N`` must be a positive integer."""
    if int(N) != N or N <= 0:
        raise ConfigError(f"cell count must be a positive integer, got {N}")
    return Mesh(float(x_left), float(x_right), int(N), bc)


@dataclass
class SolutionState:
    """Moments of ``(A, Q)`` and interface values of ``(A, u)`` at time ``t``."""

    moments: np.ndarray
    points: np.ndarray
    t: float = 0.0

    @property
    def r(self):
        return self.moments.shape[2] + 1

    @property
    def N(self):
        return self.moments.shape[1]

    def copy(self):
        return SolutionState(self.moments.copy(), self.points.copy(), self.t)

    def averages(self):
        """Cell averages ``(A, Q)``, i.e. the zeroth moments."""
        return self.moments[0, :, 0].copy(), self.moments[1, :, 0].copy()


@dataclass
class ParameterData:
    """Projected ``K``, ``A0``, ``p_ext`` in the solution layout plus derived tables.

    Attributes
    ----------
    moments : ndarray, shape (3, N, r-1)
    points : ndarray, shape (3, N+1)
    node_values : ndarray, shape (3, 6, N, MAXP)
        For each degree ``o`` (index ``o - 2``) the values of
        ``K, A0, p_ext`` and of their ``x``-derivatives at the degree-``o``
        GL nodes, from the degree-``o`` projection of the fields.
    cell_values : ndarray, shape (6, N)
        Cell averages of the fields and their derivatives at the cell
        centre, used by the first-order fallback.
    """

    moments: np.ndarray
    points: np.ndarray
    node_values: np.ndarray = field(repr=False)
    cell_values: np.ndarray = field(repr=False)


def _moments_from_nodes(fk, r, ref):
    """Moments ``0..r-2`` from nodal values via the ``(r+1)``-point GL rule.

    The reference value ``ref`` (broadcast over cells) is subtracted before
    the quadrature and re-added through ``sigma_l(1)``, so constant data are
    reproduced bit for bit.
    """
    X, W = gauss_lobatto(r + 1)
    out = np.empty(fk.shape[:-1] + (r - 1,))
    dev = fk - ref[..., None]
    for ell in range(r - 1):
        s1 = 1.0 if ell % 2 == 0 else 0.0
        out[..., ell] = ref * s1 + (ell + 1) * 2.0**ell * (dev * (W * X**ell)).sum(axis=-1)
    return out


def project_field(mesh, r, f):
    """Interface values and moments of a scalar field ``f(x)``.

    Returns
    -------
    points : ndarray, shape (N+1,)
    moments : ndarray, shape (N, r-1)
    """
    xi = mesh.interfaces()
    pts = np.broadcast_to(np.asarray(f(xi), dtype=float), xi.shape).copy()
    xn = mesh.nodes(r)
    fk = np.broadcast_to(np.asarray(f(xn), dtype=float), xn.shape).copy()
    fk[:, 0] = pts[:-1]
    fk[:, -1] = pts[1:]
    return pts, _moments_from_nodes(fk, r, pts[:-1])


def _reconstruct(pts, mom, o, X, deriv=False):
    """Evaluate the degree-``o`` polynomial of every cell at reference points ``X``.

    Uses the offset form ``f_L + sum_s B_s (d_s - f_L sigma_s(1))``.
    """
    shapes = _closed_form_shapes(o)
    if deriv:
        shapes = [s.deriv() for s in shapes]
    fL, fR = pts[:-1], pts[1:]
    out = np.zeros((len(fL), len(X)))
    if not deriv:
        out += fL[:, None]
    out += np.outer(fR - fL, shapes[1](X))
    for ell in range(o - 1):
        s1 = 1.0 if ell % 2 == 0 else 0.0
        out += np.outer(mom[:, ell] - fL * s1, shapes[2 + ell](X))
    return out


def project_parameters(mesh, r, model: ModelParams):
    """Project ``K``, ``A0`` and ``p_ext`` and build the derived node tables."""
    N, dx = mesh.N, mesh.dx
    fields = (model.K, model.A0, model.p_ext)
    points = np.empty((3, N + 1))
    moments = np.empty((3, N, r - 1))
    node_values = np.zeros((3, 6, N, MAXP))
    cell_values = np.zeros((6, N))
    for c, f in enumerate(fields):
        points[c], moments[c] = project_field(mesh, r, f)
        for o in range(2, r + 1):
            pts_o, mom_o = project_field(mesh, o, f)
            X, _ = gauss_lobatto(o + 1)
            vals = _reconstruct(pts_o, mom_o, o, X)
            vals[:, 0] = pts_o[:-1]
            vals[:, -1] = pts_o[1:]
            node_values[o - 2, c, :, : o + 1] = vals
            node_values[o - 2, 3 + c, :, : o + 1] = _reconstruct(pts_o, mom_o, o, X, deriv=True) / dx
        cell_values[c] = moments[c, :, 0]
        cell_values[3 + c] = _reconstruct(points[c], moments[c], r, np.array([0.0]), deriv=True)[:, 0] / dx
    for o in range(2, r + 1):
        if np.any(~(node_values[o - 2, :2, :, : o + 1] > 0)):
            raise DomainError("projected K or A0 is not positive at some Gauss-Lobatto node")
    if np.any(~(cell_values[:2] > 0)):
        raise DomainError("projected K or A0 has a non-positive cell average")
    return ParameterData(moments, points, node_values, cell_values)


def initialize(mesh, r, model: ModelParams, A_fn: Callable, Q_fn: Callable):
    """Project initial data given as closures of the conservative variables.

    Interface values are set to the exact primitive values ``(A, Q/A)``;
    moments come from the GL quadrature of the conservative data.

    Returns
    -------
    state : SolutionState
    params : ParameterData
    """
    basis_tables(r)
    params = project_parameters(mesh, r, model)
    xi = mesh.interfaces()
    xn = mesh.nodes(r)
    A_i = np.broadcast_to(np.asarray(A_fn(xi), dtype=float), xi.shape).copy()
    Q_i = np.broadcast_to(np.asarray(Q_fn(xi), dtype=float), xi.shape).copy()
    A_k = np.broadcast_to(np.asarray(A_fn(xn), dtype=float), xn.shape).copy()
    Q_k = np.broadcast_to(np.asarray(Q_fn(xn), dtype=float), xn.shape).copy()
    if np.any(~(A_i > 0)) or np.any(~(A_k > 0)):
        raise NonPositiveArea("initial area must be positive at every sample")
    A_k[:, 0], A_k[:, -1] = A_i[:-1], A_i[1:]
    Q_k[:, 0], Q_k[:, -1] = Q_i[:-1], Q_i[1:]
    moments = np.stack([_moments_from_nodes(A_k, r, A_i[:-1]), _moments_from_nodes(Q_k, r, Q_i[:-1])])
    points = np.stack([A_i, Q_i / A_i])
    if mesh.periodic:
        points[:, -1] = points[:, 0]
    return SolutionState(moments, points, 0.0), params


def ghost_view(mesh, state, side):
    """Ghost cell data beyond one boundary.

    Parameters
    ----------
    side : {'left', 'right'}

    Returns
    -------
    moments : ndarray, shape (2, r-1)
        Moments of the ghost cell.
    point : ndarray, shape (2,)
        Primitive value at the ghost's outer interface.

    Notes
    -----
    Periodic meshes wrap around.  With extrapolation the ghost is the
    constant equal to the nearest interior average (even moments copy it,
    odd moments vanish) and the ghost interface repeats the boundary
    interface value.
    """
    N, r = state.N, state.r
    inner = 0 if side == "left" else N - 1
    if mesh.periodic:
        j = N - 1 if side == "left" else 0
        i = N - 1 if side == "left" else 1
        return state.moments[:, j, :].copy(), state.points[:, i].copy()
    sig1 = np.array([1.0 if ell % 2 == 0 else 0.0 for ell in range(r - 1)])
    mom = state.moments[:, inner, 0][:, None] * sig1[None, :]
    i = 0 if side == "left" else N
    return mom, state.points[:, i].copy()


def write_snapshot(path_prefix, mesh, state):
    """Write ``<prefix>_cells.csv`` (cell averages) and ``<prefix>_points.csv``."""
    prefix = Path(path_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    cells = prefix.with_name(prefix.name + "_cells.csv")
    pts = prefix.with_name(prefix.name + "_points.csv")
    with open(cells, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_center", "A_avg", "Q_avg"])
        for x, a, q in zip(mesh.centers(), state.moments[0, :, 0], state.moments[1, :, 0]):
            w.writerow([repr(float(x)), repr(float(a)), repr(float(q))])
    with open(pts, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "A_point", "u_point"])
        for x, a, u in zip(mesh.interfaces(), state.points[0], state.points[1]):
            w.writerow([repr(float(x)), repr(float(a)), repr(float(u))])
    return cells, pts
