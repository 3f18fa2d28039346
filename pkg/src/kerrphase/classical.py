"""Exact classical evolution under the Kerr flow and classical shear measures.

The classical velocity field rotates each circle of radius r rigidly,
clockwise, with angular speed 1 + L2 r^2, so densities evolve by exact
pullback along characteristics; no PDE stepping is ever needed (or could
resolve the fine spirals this flow produces).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import (PhaseGrid, ScalarField, differentiate_array, integrate,
                     interpolator, radial_derivative)
from .states import KerrParams, StateError


def _require_unit_oscillator(params: KerrParams) -> None:
    if params.mass != 1.0 or params.spring != 1.0:
        raise StateError("classical Kerr flow formulas require M = k = 1")


@dataclass
class ClassicalDensity:
    """Initial phase-space density: a closed-form Gaussian or a field snapshot."""

    params: KerrParams
    center: tuple[float, float] | None = None
    sigma2: tuple[float, float] | None = None
    snapshot: ScalarField | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        _require_unit_oscillator(self.params)
        if (self.snapshot is None) == (self.center is None):
            raise StateError("provide either a Gaussian (center, sigma2) or a snapshot")
        if self.center is not None and self.sigma2 is None:
            h = self.params.hbar
            self.sigma2 = (h / 2.0, h / 2.0)

    @classmethod
    def gaussian(cls, x0: float, p0: float, params: KerrParams,
                 sigma2: tuple[float, float] | None = None) -> "ClassicalDensity":
        return cls(params=params, center=(x0, p0), sigma2=sigma2)

    @classmethod
    def twin_of_coherent(cls, alpha: complex, params: KerrParams) -> "ClassicalDensity":
        """Gaussian matching the coherent state's Wigner function at t = 0:
        center (sqrt2 Re a, sqrt2 Im a), variance hbar/2 per quadrature."""
        a = complex(alpha)
        s = np.sqrt(2.0)
        return cls.gaussian(s * a.real, s * a.imag, params)

    @classmethod
    def from_field(cls, snapshot: ScalarField, params: KerrParams) -> "ClassicalDensity":
        return cls(params=params, snapshot=snapshot)

    def initial_values(self, x, p):
        if self.center is not None:
            (x0, p0), (sx, sp) = self.center, self.sigma2
            norm = 1.0 / (2.0 * np.pi * np.sqrt(sx * sp))
            return norm * np.exp(-((x - x0) ** 2) / (2 * sx) - ((p - p0) ** 2) / (2 * sp))
        spl = interpolator(self.snapshot)
        g = self.snapshot.grid
        inside = ((x >= g.x_min) & (x <= g.x_max) & (p >= g.p_min) & (p <= g.p_max))
        vals = np.where(inside, spl.ev(np.clip(x, g.x_min, g.x_max),
                                       np.clip(p, g.p_min, g.p_max)), 0.0)
        return vals


def classical_velocity(x, p, params: KerrParams):
    """v = (p, -x)(1 + L2 r^2): clockwise rotation, faster on outer shells."""
    _require_unit_oscillator(params)
    omega = 1.0 + params.lambda2_p * (np.asarray(x) ** 2 + np.asarray(p) ** 2)
    return np.asarray(p) * omega, -np.asarray(x) * omega


def liouville_pullback(rho0: ClassicalDensity, t: float, grid: PhaseGrid) -> ScalarField:
    """Exact solution rho(r, theta, t) = rho0(r, theta + (1 + L2 r^2) t)."""
    L2 = rho0.params.lambda2_p
    X, P = grid.mesh()
    r = np.hypot(X, P)
    theta = np.arctan2(P, X) + (1.0 + L2 * r * r) * t
    vals = rho0.initial_values(r * np.cos(theta), r * np.sin(theta))
    return ScalarField(grid, vals, label="rho", meta={"t": t})


def classical_shear(r, params: KerrParams):
    """s(r) = 8 L2 r: radial derivative of the negative curl of v.

    Positive for hard potentials (clockwise shear), zero for harmonic,
    negative for soft potentials.
    """
    _require_unit_oscillator(params)
    return 8.0 * params.lambda2_p * np.asarray(r, dtype=float)


def classical_shear_measure(rho: ScalarField, params: KerrParams,
                            acc: int = 8) -> float:
    """Density-weighted average of d_r(-curl j) with j = rho v.

    Mirrors the quantum shear-polarization construction; for an offset
    Gaussian this grows without bound as shear wraps the density into
    ever finer filaments, in contrast to the quantum measure.
    """
    _require_unit_oscillator(params)
    g = rho.grid
    X, P = g.mesh()
    vx, vp = classical_velocity(X, P, params)
    jx = rho.values * vx
    jp = rho.values * vp
    neg_curl = (differentiate_array(g, jx, 0, 1, acc)
                - differentiate_array(g, jp, 1, 0, acc))
    dr = radial_derivative(ScalarField(g, neg_curl, label="neg_curl_j"), acc)
    weighted = ScalarField(g, rho.values * dr.values, label="classical_pi")
    return integrate(weighted)
