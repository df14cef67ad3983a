"""Regularized delta kernels and their tensor-product samples on the grid.

A kernel is an even function ``phi`` with compact support; the 1D delta is
``delta_h(x) = phi(x / h) / h`` and the 2D delta is the product of two 1D
deltas.  The default kernel is the smoothed three-point function of
Yang, Zhang, Li & Shu (J. Comput. Phys. 2009), i.e. the three-point kernel
of Roma et al. convolved with a unit box.  It is C1 and satisfies the
zeroth and first discrete moment conditions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import GridSpec

_S3 = np.sqrt(3.0)


def _smoothed_three_point(r):
    r = np.abs(np.asarray(r, dtype=float))
    out = np.zeros_like(r)
    a = r <= 1.0
    b = (r > 1.0) & (r < 2.0)
    ra, rb = r[a], r[b]
    out[a] = (
        17.0 / 48.0 + _S3 * np.pi / 108.0 + ra / 4.0 - ra**2 / 4.0
        + (1.0 - 2.0 * ra) / 16.0 * np.sqrt(np.maximum(-12.0 * ra**2 + 12.0 * ra + 1.0, 0.0))
        - _S3 / 12.0 * np.arcsin(_S3 / 2.0 * (2.0 * ra - 1.0))
    )
    out[b] = (
        55.0 / 48.0 - _S3 * np.pi / 108.0 - 13.0 * rb / 12.0 + rb**2 / 4.0
        + (2.0 * rb - 3.0) / 48.0 * np.sqrt(np.maximum(-12.0 * rb**2 + 36.0 * rb - 23.0, 0.0))
        + _S3 / 36.0 * np.arcsin(_S3 / 2.0 * (2.0 * rb - 3.0))
    )
    return out


def _roma_three_point(r):
    r = np.abs(np.asarray(r, dtype=float))
    out = np.zeros_like(r)
    a = r <= 0.5
    b = (r > 0.5) & (r < 1.5)
    out[a] = (1.0 + np.sqrt(1.0 - 3.0 * r[a] ** 2)) / 3.0
    out[b] = (5.0 - 3.0 * r[b] - np.sqrt(np.maximum(1.0 - 3.0 * (1.0 - r[b]) ** 2, 0.0))) / 6.0
    return out


def _peskin_four_point(r):
    r = np.abs(np.asarray(r, dtype=float))
    out = np.zeros_like(r)
    a = r <= 1.0
    b = (r > 1.0) & (r < 2.0)
    out[a] = (3.0 - 2.0 * r[a] + np.sqrt(1.0 + 4.0 * r[a] - 4.0 * r[a] ** 2)) / 8.0
    out[b] = (5.0 - 2.0 * r[b] - np.sqrt(np.maximum(-7.0 + 12.0 * r[b] - 4.0 * r[b] ** 2, 0.0))) / 8.0
    return out


@dataclass(frozen=True)
class Kernel:
    name: str
    support_radius: float
    phi: Callable[[np.ndarray], np.ndarray]
    smoothness: str

    def __call__(self, r):
        return self.phi(r)


SMOOTHED_THREE_POINT = Kernel("smoothed3", 2.0, _smoothed_three_point, "C1")
ROMA_THREE_POINT = Kernel("roma3", 1.5, _roma_three_point, "C0")
PESKIN_FOUR_POINT = Kernel("peskin4", 2.0, _peskin_four_point, "C1")
DEFAULT_KERNEL = SMOOTHED_THREE_POINT

KERNELS = {k.name: k for k in (SMOOTHED_THREE_POINT, ROMA_THREE_POINT, PESKIN_FOUR_POINT)}


def get_kernel(name_or_kernel) -> Kernel:
    if isinstance(name_or_kernel, Kernel):
        return name_or_kernel
    try:
        return KERNELS[name_or_kernel]
    except KeyError:
        raise ValueError(f"unknown kernel {name_or_kernel!r}; choose from {sorted(KERNELS)}") from None


def eval_kernel(k: Kernel, r):
    """phi(r); scalar in, scalar out."""
    out = k.phi(np.atleast_1d(r))
    return float(out[0]) if np.ndim(r) == 0 else out


def moment_residual(k: Kernel, m: int, r: float) -> float:
    """|sum_i (r+i)^m phi(r+i) - [m == 0]| over all integer shifts i."""
    if m not in (0, 1, 2):
        raise ValueError("moment order must be 0, 1 or 2")
    reach = int(np.ceil(k.support_radius)) + 1
    pts = r + np.arange(-reach, reach + 1)
    total = float(np.sum(pts**m * k.phi(pts)))
    return abs(total - (1.0 if m == 0 else 0.0))


class ClippedSupportError(ValueError):
    """A marker's kernel support reaches past the grid."""


def weights_1d(k: Kernel, first: float, h: float, n: int, xs: np.ndarray):
    """1D delta weights for many points on a uniform line of ``n`` positions.

    Positions are ``first + i*h``.  Returns ``(start, w)`` where ``w[l, m]``
    is ``delta_h`` at index ``start[l] + m``.  Raises if any nonzero weight
    falls outside ``0..n-1``.
    """
    xs = np.asarray(xs, dtype=float)
    width = 2 * int(np.ceil(k.support_radius)) + 2
    u = (xs - first) / h
    start = np.floor(u - k.support_radius).astype(int)
    idx = start[:, None] + np.arange(width)[None, :]
    w = k.phi(u[:, None] - idx) / h
    bad = (w != 0.0) & ((idx < 0) | (idx >= n))
    if np.any(bad):
        raise ClippedSupportError("kernel support extends past the grid; move markers inward")
    return start, w


@dataclass(frozen=True)
class DdfSample:
    """Delta values of one marker on one space, stored as a small dense block."""

    space: str
    i0: int
    j0: int
    values: np.ndarray

    def to_array(self, grid: GridSpec) -> np.ndarray:
        out = np.zeros(grid.shape(self.space))
        ni, nj = self.values.shape
        ii = np.arange(self.i0, self.i0 + ni)
        jj = np.arange(self.j0, self.j0 + nj)
        oki = (ii >= 0) & (ii < out.shape[0])
        okj = (jj >= 0) & (jj < out.shape[1])
        out[np.ix_(ii[oki], jj[okj])] = self.values[np.ix_(oki, okj)]
        return out


def _line(grid: GridSpec, space: str, axis: int):
    face_type = {("C", 0): False, ("C", 1): False, ("Fx", 0): True, ("Fx", 1): False,
                 ("Fy", 0): False, ("Fy", 1): True, ("N", 0): True, ("N", 1): True}[(space, axis)]
    h = grid.dx if axis == 0 else grid.dy
    n = (grid.nx if axis == 0 else grid.ny) + (1 if face_type else 0)
    first = grid.origin[axis] + (0.0 if face_type else 0.5 * h)
    return first, h, n


def check_interior(k: Kernel, grid: GridSpec, points: np.ndarray) -> None:
    """Raise unless every point is at least one support radius inside the box."""
    pts = np.atleast_2d(points)
    x0, x1, y0, y1 = grid.extent
    rx, ry = k.support_radius * grid.dx, k.support_radius * grid.dy
    ok = (pts[:, 0] - x0 >= rx) & (x1 - pts[:, 0] >= rx) & (pts[:, 1] - y0 >= ry) & (y1 - pts[:, 1] >= ry)
    if not np.all(ok):
        raise ClippedSupportError("marker within one kernel support of the outer boundary")


def sample_ddf(k: Kernel, grid: GridSpec, space: str, point) -> DdfSample:
    """d(i, j) = delta_dx(x - X) delta_dy(y - Y) at the points of ``space``."""
    point = np.asarray(point, dtype=float)
    check_interior(k, grid, point[None, :])
    fx, hx, nx = _line(grid, space, 0)
    fy, hy, ny = _line(grid, space, 1)
    sx, wx = weights_1d(k, fx, hx, nx, point[:1])
    sy, wy = weights_1d(k, fy, hy, ny, point[1:])
    return DdfSample(space, int(sx[0]), int(sy[0]), np.outer(wx[0], wy[0]))
