"""Uniform phase-space grids and sampled scalar/vector fields.

Arrays are indexed ``values[i, j]`` with ``i`` running along x and ``j``
along p.  Grids with a symmetric box are built so that negation symmetry
of the axes is exact in floating point and the origin is a grid node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import RectBivariateSpline


class GridError(ValueError):
    """Invalid grid geometry, a stencil that does not fit, or an
    out-of-box evaluation point."""


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    # center + offset form: exactly antisymmetric when lo == -hi
    h = (hi - lo) / (n - 1)
    c = 0.5 * (lo + hi)
    return c + (np.arange(n) - (n - 1) / 2) * h


@dataclass(frozen=True)
class PhaseGrid:
    x_min: float
    x_max: float
    p_min: float
    p_max: float
    n_x: int
    n_p: int

    def __post_init__(self):
        for n in (self.n_x, self.n_p):
            if n < 33 or n % 2 == 0:
                raise GridError(f"axis size must be odd and >= 33, got {n}")
        if not (self.x_max > self.x_min and self.p_max > self.p_min):
            raise GridError("grid box must have positive extent")

    @classmethod
    def symmetric(cls, half_width: float, n: int = 257) -> "PhaseGrid":
        return cls(-half_width, half_width, -half_width, half_width, n, n)

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def hp(self) -> float:
        return (self.p_max - self.p_min) / (self.n_p - 1)

    @property
    def x(self) -> np.ndarray:
        return _axis(self.x_min, self.x_max, self.n_x)

    @property
    def p(self) -> np.ndarray:
        return _axis(self.p_min, self.p_max, self.n_p)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.p, indexing="ij")

    @property
    def is_square(self) -> bool:
        return (
            self.n_x == self.n_p
            and np.isclose(self.hx, self.hp)
            and np.isclose(self.x_min, self.p_min)
            and np.isclose(self.x_max, self.p_max)
        )

    def contains(self, x, p) -> bool:
        return bool(
            np.all((x >= self.x_min) & (x <= self.x_max))
            and np.all((p >= self.p_min) & (p <= self.p_max))
        )

    def refine(self) -> "PhaseGrid":
        """Same box with halved spacing (node count 2n-1, stays odd)."""
        return PhaseGrid(self.x_min, self.x_max, self.p_min, self.p_max,
                         2 * self.n_x - 1, 2 * self.n_p - 1)


def default_grid(amplitude_scale: float, hbar: float = 1.0, n: int = 257) -> PhaseGrid:
    """Symmetric box sized for a state of given phase-space amplitude.

    Half-width max(6, 2*scale + 4)*sqrt(hbar); for a coherent state pass
    |alpha|, for squeezed vacuum exp(zeta), for Fock |n> sqrt(n).
    """
    half = max(6.0, 2.0 * amplitude_scale + 4.0) * np.sqrt(hbar)
    return PhaseGrid.symmetric(half, n)


@dataclass
class ScalarField:
    grid: PhaseGrid
    values: np.ndarray
    label: str = ""
    warnings: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_x, self.grid.n_p):
            raise GridError(
                f"field shape {self.values.shape} does not match grid "
                f"({self.grid.n_x}, {self.grid.n_p})"
            )
        self.values.setflags(write=False)


@dataclass
class VectorField:
    grid: PhaseGrid
    fx: np.ndarray
    fp: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.fx = np.asarray(self.fx, dtype=float)
        self.fp = np.asarray(self.fp, dtype=float)
        shape = (self.grid.n_x, self.grid.n_p)
        if self.fx.shape != shape or self.fp.shape != shape:
            raise GridError("vector components do not match grid shape")
        self.fx.setflags(write=False)
        self.fp.setflags(write=False)

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.fx, self.fp)


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def fd_weights(offsets: Sequence[float], order: int) -> np.ndarray:
    """Finite-difference weights at node offsets for a derivative order.

    Fornberg's recursive algorithm; expansion point 0, offsets in units
    of the grid spacing.  Exact on polynomials of degree < len(offsets).
    """
    x = np.asarray(offsets, dtype=float)
    n = len(x)
    if order >= n:
        raise GridError(f"need more than {order} nodes for derivative order {order}")
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0]
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def _central_npoints(order: int, acc: int) -> int:
    # smallest odd count P with symmetric accuracy 2*floor((P-order+1)/2) >= acc
    p = order + 1
    while p % 2 == 0 or 2 * ((p - order + 1) // 2) < acc:
        p += 1
    return p


def _axis_derivative(values: np.ndarray, h: float, order: int, axis: int,
                     acc: int = 8) -> np.ndarray:
    """Apply a 1D finite-difference derivative along one axis.

    Central stencils of the requested accuracy in the interior, one-sided
    stencils of matching accuracy at the edges.
    """
    if order == 0:
        return values.copy()
    n = values.shape[axis]
    p_int = _central_npoints(order, acc)
    p_edge = order + acc
    if n < max(p_int, p_edge):
        raise GridError(f"axis of {n} nodes too small for stencil of {max(p_int, p_edge)}")
    a = np.moveaxis(values, axis, 0)
    out = np.empty_like(a)

    half = p_int // 2
    w_int = fd_weights(np.arange(-half, half + 1), order) / h**order
    core = np.zeros_like(a[half:n - half])
    for k, w in enumerate(w_int):
        if w != 0.0:
            core += w * a[k:n - p_int + 1 + k]
    out[half:n - half] = core

    # shifted one-sided stencils for the first/last `half` rows
    for i in range(half):
        w = fd_weights(np.arange(p_edge) - i, order) / h**order
        out[i] = np.tensordot(w, a[:p_edge], axes=(0, 0))
        w = fd_weights(-(np.arange(p_edge)) + i, order) / h**order
        out[n - 1 - i] = np.tensordot(w, a[n - p_edge:][::-1], axes=(0, 0))
    return np.moveaxis(out, 0, axis)


def differentiate_array(grid: PhaseGrid, values: np.ndarray, dx_order: int,
                        dp_order: int, acc: int = 8) -> np.ndarray:
    if dx_order + dp_order > 3:
        raise GridError("combined derivative order above 3 is not supported")
    out = values
    if dx_order:
        out = _axis_derivative(out, grid.hx, dx_order, axis=0, acc=acc)
    if dp_order:
        out = _axis_derivative(out, grid.hp, dp_order, axis=1, acc=acc)
    return out


def differentiate(fld: ScalarField, dx_order: int, dp_order: int,
                  acc: int = 8) -> ScalarField:
    """Mixed partial derivative of a sampled field, default 8th order."""
    vals = differentiate_array(fld.grid, fld.values, dx_order, dp_order, acc)
    return ScalarField(fld.grid, vals, label=f"d{dx_order}x_d{dp_order}p_{fld.label}")


def laplacian(fld: ScalarField, acc: int = 8) -> ScalarField:
    vals = (differentiate_array(fld.grid, fld.values, 2, 0, acc)
            + differentiate_array(fld.grid, fld.values, 0, 2, acc))
    return ScalarField(fld.grid, vals, label=f"lap_{fld.label}")


def radial_derivative(fld: ScalarField, acc: int = 8) -> ScalarField:
    """(x d/dx + p d/dp)/r of a field; the origin node is set to 0.

    For smooth fields the combination is removable at r = 0 by symmetry.
    """
    X, P = fld.grid.mesh()
    r = np.hypot(X, P)
    num = (X * differentiate_array(fld.grid, fld.values, 1, 0, acc)
           + P * differentiate_array(fld.grid, fld.values, 0, 1, acc))
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.where(r > 0, num / np.where(r > 0, r, 1.0), 0.0)
    return ScalarField(fld.grid, vals, label=f"dr_{fld.label}")


# ---------------------------------------------------------------------------
# interpolation and quadrature
# ---------------------------------------------------------------------------

def interpolator(fld: ScalarField) -> RectBivariateSpline:
    return RectBivariateSpline(fld.grid.x, fld.grid.p, fld.values, kx=3, ky=3, s=0)


def interpolate(fld: ScalarField, x, p):
    """Bicubic-spline evaluation at points inside the grid box."""
    if not fld.grid.contains(x, p):
        raise GridError("interpolation point outside grid box")
    spl = interpolator(fld)
    out = spl.ev(x, p)
    return float(out) if np.isscalar(x) and np.isscalar(p) else out


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def integrate(fld: ScalarField) -> float:
    """Trapezoidal integral over the grid box, deterministic summation."""
    wx = _trapezoid_weights(fld.grid.n_x, fld.grid.hx)
    wp = _trapezoid_weights(fld.grid.n_p, fld.grid.hp)
    return float(np.sum(fld.values * (wx[:, None] * wp[None, :])))
