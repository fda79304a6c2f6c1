"""Sampled fields on a uniform 1-D grid and sequences on a lattice window.

Everything here is an immutable value: arrays handed to :class:`Field` and
:class:`Seq` are copied and frozen. The norms use the composite trapezoid
rule, which for the smooth, rapidly decaying integrands that appear in this
package is far more accurate than its nominal second order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CarrierMismatch, GridMismatch, GridTooSmall, InvalidState, WindowMismatch

__all__ = [
    "Grid1D",
    "Field",
    "LatticeWindow",
    "Seq",
    "diff_x",
    "l2_norm",
    "h1_norm",
    "l2_seq",
    "sup_norm",
    "cumulative_integral",
    "midpoints",
]


def _frozen(values, n: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise InvalidState(f"{what}: expected {n} samples, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidState(f"{what}: non-finite sample")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``x_i = x0 + i*dx`` for ``0 <= i < n``."""

    x0: float
    dx: float
    n: int

    def __post_init__(self):
        if not (self.dx > 0 and np.isfinite(self.dx) and np.isfinite(self.x0)):
            raise InvalidState(f"grid spacing must be positive and finite, got dx={self.dx}")
        if int(self.n) != self.n or self.n < 2:
            raise InvalidState(f"grid needs n >= 2 samples, got {self.n}")

    @classmethod
    def symmetric(cls, half_width: float, dx: float) -> "Grid1D":
        """Grid on ``[-half_width, half_width]`` (rounded to whole cells)."""
        m = int(round(half_width / dx))
        return cls(-m * dx, dx, 2 * m + 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = self.x0 + self.dx * np.arange(self.n)
        x.flags.writeable = False
        return x

    def index_of(self, xv: float) -> int:
        """Index of the sample nearest to ``xv`` (clipped into the grid)."""
        return int(np.clip(round((xv - self.x0) / self.dx), 0, self.n - 1))

    def field(self, values) -> "Field":
        return Field(self, values)


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a function on a :class:`Grid1D`.

    Supports ``+``, ``-``, unary minus and scalar ``*`` between fields on the
    same grid, and converts to an ndarray through ``np.asarray``.
    """

    grid: Grid1D
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen(self.samples, self.grid.n, "Field"))

    def __array__(self, dtype=None, copy=None):
        return self.samples if dtype is None else self.samples.astype(dtype)

    def __len__(self):
        return self.grid.n

    def _check(self, other: "Field"):
        if other.grid != self.grid:
            raise GridMismatch("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            other = other.samples
        return Field(self.grid, self.samples + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            other = other.samples
        return Field(self.grid, self.samples - other)

    def __mul__(self, c):
        if isinstance(c, Field):
            self._check(c)
            c = c.samples
        return Field(self.grid, self.samples * c)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.samples)

    def allclose(self, other: "Field", atol: float) -> bool:
        self._check(other)
        return bool(np.max(np.abs(self.samples - other.samples)) <= atol)


@dataclass(frozen=True)
class LatticeWindow:
    """The lattice sites ``j0, j0+1, ..., j0+n-1``."""

    j0: int
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidState(f"lattice window needs n >= 2 sites, got {self.n}")

    @classmethod
    def centered(cls, half_width: int) -> "LatticeWindow":
        return cls(-half_width, 2 * half_width + 1)

    @cached_property
    def sites(self) -> np.ndarray:
        j = np.arange(self.j0, self.j0 + self.n)
        j.flags.writeable = False
        return j

    def index_of(self, j: int) -> int:
        return int(np.clip(j - self.j0, 0, self.n - 1))

    def shifted(self, k: int) -> "LatticeWindow":
        return LatticeWindow(self.j0 + k, self.n)


@dataclass(frozen=True, eq=False)
class Seq:
    """Real values indexed by the sites of a :class:`LatticeWindow`."""

    window: LatticeWindow
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.window.n, "Seq"))

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.window.n

    def _check(self, other: "Seq"):
        if other.window != self.window:
            raise WindowMismatch("sequences live on different windows")

    def __add__(self, other):
        if isinstance(other, Seq):
            self._check(other)
            other = other.values
        return Seq(self.window, self.values + other)

    def __sub__(self, other):
        if isinstance(other, Seq):
            self._check(other)
            other = other.values
        return Seq(self.window, self.values - other)

    def __mul__(self, c):
        if isinstance(c, Seq):
            self._check(c)
            c = c.values
        return Seq(self.window, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return Seq(self.window, -self.values)


# --------------------------------------------------------------------------
# discrete calculus

_CENTERED = {
    1: np.array([-1 / 2, 0.0, 1 / 2]),
    2: np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12]),
    3: np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60]),
    4: np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280]),
}


def _diff_array(f: np.ndarray, dx: float, order: int = 2) -> np.ndarray:
    n = f.shape[0]
    if n < 3:
        raise GridTooSmall(f"differentiation needs at least 3 samples, got {n}")
    if order not in (2, 4, 6, 8):
        raise ValueError(f"order must be one of 2, 4, 6, 8, got {order}")
    out = np.empty(n)
    out[0] = (f[1] - f[0]) / dx
    out[-1] = (f[-1] - f[-2]) / dx
    # highest-order centered stencil that fits at each distance from the ends
    for m in range(1, order // 2 + 1):
        w = _CENTERED[m]
        if m < order // 2:
            idx = np.array([m, n - 1 - m]) if n - 1 - m > m else np.array([m])
            idx = idx[idx < n - m]
            for i in idx:
                out[i] = np.dot(w, f[i - m : i + m + 1]) / dx
        else:
            if n - 2 * m <= 0:
                continue
            acc = np.zeros(n - 2 * m)
            for k in range(2 * m + 1):
                if w[k] != 0.0:
                    acc += w[k] * f[k : n - 2 * m + k]
            out[m : n - m] = acc / dx
    return out


def diff_x(f: Field, order: int = 2) -> Field:
    """Derivative of ``f`` by centered differences.

    ``order=2`` is the plain 3-point stencil; higher even orders use wider
    centered stencils in the interior and shrink toward the ends. The two
    endpoint samples always use the 2-point one-sided difference.
    """
    return Field(f.grid, _diff_array(f.samples, f.grid.dx, order))


def l2_norm(f: Field) -> float:
    s = f.samples
    return float(np.sqrt(np.trapezoid(s * s, dx=f.grid.dx)))


def h1_norm(f: Field, order: int = 2) -> float:
    d = _diff_array(f.samples, f.grid.dx, order)
    return float(np.sqrt(l2_norm(f) ** 2 + np.trapezoid(d * d, dx=f.grid.dx)))


def l2_seq(s: Seq) -> float:
    return float(np.linalg.norm(s.values))


def sup_norm(c) -> float:
    arr = np.asarray(c)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


def pair_carriers(a, b):
    """Return the common carrier (Grid1D or LatticeWindow) of two containers."""
    ca = a.grid if isinstance(a, Field) else a.window
    cb = b.grid if isinstance(b, Field) else b.window
    if type(a) is not type(b) or ca != cb:
        raise CarrierMismatch("containers do not share a grid/window")
    return ca


# --------------------------------------------------------------------------
# high-order helpers used by the ODE sweeps and integrating factors

_CELL6 = np.array([11.0, -93.0, 802.0, 802.0, -93.0, 11.0]) / 1440.0
_CELL4 = np.array([-1.0, 13.0, 13.0, -1.0]) / 24.0
_MID6 = np.array([3.0, -25.0, 150.0, 150.0, -25.0, 3.0]) / 256.0
_MID4 = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0


def _stencil_cells(f: np.ndarray, w6: np.ndarray, w4: np.ndarray) -> np.ndarray:
    """Apply a cell-centred stencil to every cell ``[i, i+1]``.

    Uses the 6-point stencil where it fits, 4-point one cell from the ends
    and the 2-point average on the outermost cells.
    """
    n = f.shape[0]
    out = 0.5 * (f[:-1] + f[1:])
    if n >= 4:
        acc = sum(w4[k] * f[k : n - 3 + k] for k in range(4))
        out[1 : n - 2] = acc
    if n >= 6:
        acc = sum(w6[k] * f[k : n - 5 + k] for k in range(6))
        out[2 : n - 3] = acc
    return out


def midpoints(f: np.ndarray) -> np.ndarray:
    """Values at the cell midpoints ``x_i + dx/2`` (6th order interior)."""
    return _stencil_cells(np.asarray(f, dtype=float), _MID6, _MID4)


def cell_integrals(f: np.ndarray, dx: float) -> np.ndarray:
    """Integrals of ``f`` over each cell ``[x_i, x_{i+1}]``."""
    return dx * _stencil_cells(np.asarray(f, dtype=float), _CELL6, _CELL4)


def cumulative_integral(f: np.ndarray, dx: float, anchor: int) -> np.ndarray:
    """``I[i] = int_{x_anchor}^{x_i} f`` with 6th-order cell quadrature."""
    c = cell_integrals(f, dx)
    out = np.concatenate([[0.0], np.cumsum(c)])
    return out - out[anchor]
