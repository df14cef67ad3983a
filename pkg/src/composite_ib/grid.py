"""Staggered 2D Cartesian grid and typed field containers.

Layout (``nx`` by ``ny`` cells, lower-left corner ``origin``)::

    cell centers  C  : (nx,   ny)    at origin + ((i+1/2)dx, (j+1/2)dy)
    x-faces       Fx : (nx+1, ny)    at origin + (i dx,      (j+1/2)dy)
    y-faces       Fy : (nx,   ny+1)  at origin + ((i+1/2)dx, j dy)
    nodes         N  : (nx+1, ny+1)  at origin + (i dx,      j dy)

Face and node arrays include the points on the box boundary, so x-face
``k`` is the left face of cell ``k`` (equivalently the right face of cell
``k-1``).  Tensor fields store the diagonal components at cell centers and
the off-diagonal components at nodes.

Arrays are indexed ``[i, j]`` with ``i`` along x.  Flattening for matrix
assembly uses Fortran order so that ``i`` runs fastest.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

MIN_CELLS = 4


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    dx: float
    dy: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if int(self.nx) < MIN_CELLS or int(self.ny) < MIN_CELLS:
            raise ValueError(f"grid needs at least {MIN_CELLS} cells per direction, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("cell spacings must be positive")

    # shapes -------------------------------------------------------------
    @property
    def shape_c(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def shape_fx(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny)

    @property
    def shape_fy(self) -> tuple[int, int]:
        return (self.nx, self.ny + 1)

    @property
    def shape_n(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny + 1)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def n_faces(self) -> int:
        return (self.nx + 1) * self.ny + self.nx * (self.ny + 1)

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy

    @property
    def extent(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        return (x0, x0 + self.nx * self.dx, y0, y0 + self.ny * self.dy)

    # 1D coordinates -----------------------------------------------------
    def xc(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.nx) + 0.5) * self.dx

    def yc(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.ny) + 0.5) * self.dy

    def xf(self) -> np.ndarray:
        return self.origin[0] + np.arange(self.nx + 1) * self.dx

    def yf(self) -> np.ndarray:
        return self.origin[1] + np.arange(self.ny + 1) * self.dy

    # 2D coordinates per space ---------------------------------------------
    def coords(self, space: str) -> tuple[np.ndarray, np.ndarray]:
        """Physical coordinates of every point of ``space`` in {C, Fx, Fy, N}."""
        axes = {
            "C": (self.xc(), self.yc()),
            "Fx": (self.xf(), self.yc()),
            "Fy": (self.xc(), self.yf()),
            "N": (self.xf(), self.yf()),
        }
        if space not in axes:
            raise ValueError(f"unknown space {space!r}")
        x, y = axes[space]
        return np.meshgrid(x, y, indexing="ij")

    def shape(self, space: str) -> tuple[int, int]:
        return {"C": self.shape_c, "Fx": self.shape_fx, "Fy": self.shape_fy, "N": self.shape_n}[space]


def make_grid(nx: int, ny: int, dx: float, dy: float, origin=(0.0, 0.0)) -> GridSpec:
    """Build a grid; ``origin`` is the lower-left corner of the cell block."""
    return GridSpec(int(nx), int(ny), float(dx), float(dy), (float(origin[0]), float(origin[1])))


def square_grid(half_width: float, n: int) -> GridSpec:
    """``n`` x ``n`` cells covering ``[-half_width, half_width]^2``."""
    h = 2.0 * half_width / n
    return make_grid(n, n, h, h, (-half_width, -half_width))


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

Scalar = Union[int, float, np.floating]


class _Field:
    """Shared arithmetic for the field containers."""

    space: str = ""
    _names: tuple[str, ...] = ()

    @property
    def components(self) -> tuple[np.ndarray, ...]:
        return tuple(getattr(self, k) for k in self._names)

    def _replace(self, comps):
        return type(self)(*comps, grid=self.grid)

    def _binary(self, other, fn):
        if isinstance(other, _Field):
            if type(other) is not type(self) or other.grid != self.grid:
                raise ValueError(f"space mismatch: {self.space} vs {other.space}")
            return self._replace([fn(a, b) for a, b in zip(self.components, other.components)])
        if np.isscalar(other):
            return self._replace([fn(a, other) for a in self.components])
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __neg__(self):
        return self._replace([-a for a in self.components])

    def flat(self) -> np.ndarray:
        """Concatenate components, each flattened with ``i`` fastest."""
        return np.concatenate([c.ravel(order="F") for c in self.components])

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(c))) if c.size else 0.0 for c in self.components)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(c)) for c in self.components)

    def map(self, fn: Callable[[np.ndarray], np.ndarray]):
        return self._replace([fn(c) for c in self.components])


@dataclass(frozen=True, eq=False)
class CellField(_Field):
    values: np.ndarray
    grid: GridSpec
    space = "C"
    _names = ("values",)

    def __post_init__(self):
        _check_shape(self.values, self.grid.shape_c, "cell")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "CellField":
        return cls(np.zeros(grid.shape_c), grid=grid)

    @classmethod
    def from_flat(cls, grid: GridSpec, vec: np.ndarray) -> "CellField":
        return cls(np.reshape(vec, grid.shape_c, order="F"), grid=grid)

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "CellField":
        x, y = grid.coords("C")
        return cls(np.asarray(fn(x, y), dtype=float) + np.zeros(grid.shape_c), grid=grid)


@dataclass(frozen=True, eq=False)
class FaceField(_Field):
    x: np.ndarray
    y: np.ndarray
    grid: GridSpec
    space = "F"
    _names = ("x", "y")

    def __post_init__(self):
        _check_shape(self.x, self.grid.shape_fx, "x-face")
        _check_shape(self.y, self.grid.shape_fy, "y-face")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "FaceField":
        return cls(np.zeros(grid.shape_fx), np.zeros(grid.shape_fy), grid=grid)

    @classmethod
    def from_flat(cls, grid: GridSpec, vec: np.ndarray) -> "FaceField":
        nfx = (grid.nx + 1) * grid.ny
        return cls(
            np.reshape(vec[:nfx], grid.shape_fx, order="F"),
            np.reshape(vec[nfx:], grid.shape_fy, order="F"),
            grid=grid,
        )

    @classmethod
    def from_function(cls, grid: GridSpec, fx, fy) -> "FaceField":
        xa, ya = grid.coords("Fx")
        xb, yb = grid.coords("Fy")
        return cls(
            np.asarray(fx(xa, ya), dtype=float) + np.zeros(grid.shape_fx),
            np.asarray(fy(xb, yb), dtype=float) + np.zeros(grid.shape_fy),
            grid=grid,
        )


@dataclass(frozen=True, eq=False)
class NodeField(_Field):
    values: np.ndarray
    grid: GridSpec
    space = "N"
    _names = ("values",)

    def __post_init__(self):
        _check_shape(self.values, self.grid.shape_n, "node")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "NodeField":
        return cls(np.zeros(grid.shape_n), grid=grid)

    @classmethod
    def from_flat(cls, grid: GridSpec, vec: np.ndarray) -> "NodeField":
        return cls(np.reshape(vec, grid.shape_n, order="F"), grid=grid)


@dataclass(frozen=True, eq=False)
class TensorField(_Field):
    xx: np.ndarray
    xy: np.ndarray
    yx: np.ndarray
    yy: np.ndarray
    grid: GridSpec
    space = "D"
    _names = ("xx", "xy", "yx", "yy")

    def __post_init__(self):
        g = self.grid
        _check_shape(self.xx, g.shape_c, "tensor (1,1)")
        _check_shape(self.xy, g.shape_n, "tensor (1,2)")
        _check_shape(self.yx, g.shape_n, "tensor (2,1)")
        _check_shape(self.yy, g.shape_c, "tensor (2,2)")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "TensorField":
        return cls(np.zeros(grid.shape_c), np.zeros(grid.shape_n), np.zeros(grid.shape_n),
                   np.zeros(grid.shape_c), grid=grid)

    @classmethod
    def from_flat(cls, grid: GridSpec, vec: np.ndarray) -> "TensorField":
        nc, nn = grid.n_cells, grid.n_nodes
        parts = np.split(vec, [nc, nc + nn, nc + 2 * nn])
        return cls(
            np.reshape(parts[0], grid.shape_c, order="F"),
            np.reshape(parts[1], grid.shape_n, order="F"),
            np.reshape(parts[2], grid.shape_n, order="F"),
            np.reshape(parts[3], grid.shape_c, order="F"),
            grid=grid,
        )

    def transpose(self) -> "TensorField":
        return TensorField(self.xx, self.yx, self.xy, self.yy, grid=self.grid)


Field = Union[CellField, FaceField, NodeField, TensorField]


def _check_shape(arr, shape, what):
    if np.shape(arr) != tuple(shape):
        raise ValueError(f"{what} array has shape {np.shape(arr)}, expected {tuple(shape)}")


def elementwise(op: str, a: Field, b) -> Field:
    """Pointwise ``add``, ``sub``, ``mul`` (the element-wise product) or ``scale``."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        if not isinstance(b, _Field):
            raise ValueError("mul needs two fields; use scale for scalars")
        return a * b
    if op == "scale":
        if isinstance(b, _Field):
            raise ValueError("scale needs a scalar")
        return a * b
    raise ValueError(f"unknown op {op!r}")
