"""Analysis instruments: ring traces, ring conservation, vorticity of the
quantum current, local and global shear polarization, revival detection,
negativity and spectral content.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .current import current_general, divergence
from .fields import (GridError, PhaseGrid, ScalarField, VectorField,
                     differentiate_array, integrate, interpolator,
                     radial_derivative)
from .states import KerrParams, StateVector, density_matrix, evolve, recurrence_time
from .wigner import wigner_grid


class ApproximationInvalid(ValueError):
    """Ring-velocity approximation requested where W is too close to zero."""


@dataclass
class RingTrace:
    """W sampled on the circle of given radius at angles 2 pi k / n_theta.

    When a co-rotating angle is subtracted, values[k] = W(r, theta_k - angle),
    so features transported by the classical flow stay at fixed index.
    """

    radius: float
    thetas: np.ndarray
    values: np.ndarray
    t: float | None = None
    corotating_angle: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.thetas.size < 64:
            raise ValueError("ring traces need at least 64 angular samples")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("ring trace has non-finite samples")


@dataclass
class ShearSeries:
    """Time series of the global shear polarization Pi(t)."""

    times: np.ndarray
    pi_values: np.ndarray
    smoothed: np.ndarray
    window: int
    params: KerrParams
    events: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if len(self.smoothed) != len(self.times):
            raise ValueError("smoothed series length mismatch")


@dataclass(frozen=True)
class RevivalEvent:
    time: float
    kind: str  # "recurrence" | "fractional-revival"
    score: float
    fraction: tuple[int, int]  # (p, q): nearest p/q of the recurrence time


def _max_ring_radius(grid: PhaseGrid) -> float:
    return min(grid.x_max, -grid.x_min, grid.p_max, -grid.p_min)


def ring_trace(W: ScalarField, r: float, n_theta: int = 512,
               subtract_classical_phase: float | None = None,
               t: float | None = None) -> RingTrace:
    """Bicubic samples of W on a centered circle.

    subtract_classical_phase is the rotation angle (1 + L2 r^2) t of the
    classical flow; passing it yields the co-rotating-frame view used to
    expose quantum speedup or lag.
    """
    if r < 0 or r > _max_ring_radius(W.grid):
        raise GridError(f"circle of radius {r} exits the grid box")
    thetas = 2.0 * np.pi * np.arange(n_theta) / n_theta
    lab = thetas if subtract_classical_phase is None else thetas - subtract_classical_phase
    spl = interpolator(W)
    vals = spl.ev(r * np.cos(lab), r * np.sin(lab))
    return RingTrace(r, thetas, np.asarray(vals, dtype=float), t=t,
                     corotating_angle=subtract_classical_phase)


def ring_probability(W: ScalarField, r: float, n_theta: int = 512) -> float:
    """Loop integral of W over the circle by the periodic trapezoid rule,
    which is spectrally accurate for smooth periodic integrands."""
    tr = ring_trace(W, r, n_theta)
    return float(2.0 * np.pi * np.sum(tr.values) / n_theta)


def _trig_eval(coeffs: np.ndarray, theta: float) -> float:
    n = coeffs.size
    k = np.fft.fftfreq(n, d=1.0 / n)  # integer wavenumbers
    return float(np.sum(coeffs * np.exp(1j * k * theta)).real / n)


def ring_velocity_approx(W: ScalarField, r: float, theta: float,
                         params: KerrParams, n_theta: int = 512,
                         floor_frac: float = 1e-6) -> float:
    """Single-ring angular speed w(r,theta) = r[1 + L2(r^2 - hbar^2/(4 r^2) W''/W)].

    W'' is the second angular derivative, evaluated spectrally from the ring
    trace.  Raises ApproximationInvalid near zeros of W where the neglected
    ring cross-talk makes the formula meaningless.
    """
    params.require_matched("ring velocity approximation")
    if params.mass != 1.0 or params.spring != 1.0:
        raise ValueError("ring velocity approximation requires M = k = 1")
    tr = ring_trace(W, r, n_theta)
    coeffs = np.fft.fft(tr.values)
    k = np.fft.fftfreq(n_theta, d=1.0 / n_theta)
    w_here = _trig_eval(coeffs, theta)
    floor = floor_frac * float(np.max(np.abs(tr.values)))
    if abs(w_here) < floor:
        raise ApproximationInvalid(
            f"|W| = {abs(w_here):.3e} below floor {floor:.3e}; "
            "approximation invalid near zero"
        )
    d2 = _trig_eval(coeffs * (-(k ** 2)), theta)
    L2, hbar = params.lambda2_p, params.hbar
    return r * (1.0 + L2 * (r * r - hbar**2 / (4.0 * r * r) * d2 / w_here))


def vorticity(j_quantum: VectorField, acc: int = 8) -> ScalarField:
    """delta = -curl J_Q = d_p J_Q_x - d_x J_Q_p."""
    vals = (differentiate_array(j_quantum.grid, j_quantum.fx, 0, 1, acc)
            - differentiate_array(j_quantum.grid, j_quantum.fp, 1, 0, acc))
    return ScalarField(j_quantum.grid, vals, label="delta")


def shear_polarization_local(W: ScalarField, delta: ScalarField,
                             acc: int = 8) -> ScalarField:
    """pi = W * d_r delta, the local weighted shear polarization."""
    if W.grid != delta.grid:
        raise GridError("W and delta must share a grid")
    dr = radial_derivative(delta, acc)
    return ScalarField(W.grid, W.values * dr.values, label="pi")


def shear_polarization(W: ScalarField, delta: ScalarField,
                       acc: int = 8) -> float:
    """Pi = integral of pi over the grid (deterministic trapezoid)."""
    return integrate(shear_polarization_local(W, delta, acc))


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; the window shrinks symmetrically at edges."""
    if window < 1 or window % 2 == 0:
        raise ValueError("smoothing window must be odd and positive")
    n = values.size
    half = window // 2
    out = np.empty(n)
    for i in range(n):
        h = min(half, i, n - 1 - i)
        out[i] = np.mean(values[i - h: i + h + 1])
    return out


def pi_of_state(state: StateVector, params: KerrParams, grid: PhaseGrid,
                sigma: float = 0.0, acc: int = 8) -> float:
    W = wigner_grid(density_matrix(state), grid, params.hbar)
    bundle = current_general(W, params, sigma, acc)
    delta = vorticity(bundle.quantum, acc)
    return shear_polarization(W, delta, acc)


def pi_series(state0: StateVector, params: KerrParams, times,
              grid: PhaseGrid, sigma: float = 0.0, smooth_window: int = 5,
              n_workers: int | None = None, acc: int = 8) -> ShearSeries:
    """Pi at each time through the evolve -> Wigner -> current -> vorticity
    chain.  Time points are independent; they may be computed by a thread
    pool, and are always assembled in time order, so results do not depend
    on the worker count."""
    t_arr = np.asarray(list(times), dtype=float)

    def one(t: float) -> float:
        return pi_of_state(evolve(state0, t, params), params, grid, sigma, acc)

    if n_workers is not None and n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            vals = np.array(list(pool.map(one, t_arr)))
    else:
        vals = np.array([one(t) for t in t_arr])
    smoothed = moving_average(vals, smooth_window)
    return ShearSeries(t_arr, vals, smoothed, smooth_window, params,
                       meta={"sigma": sigma, "grid_n": (grid.n_x, grid.n_p)})


def rolling_median(values: np.ndarray, window: int) -> np.ndarray:
    n = values.size
    half = max(window // 2, 1)
    out = np.empty(n)
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        out[i] = np.median(values[lo:hi])
    return out


def series_deviation(series: ShearSeries, baseline_window: int) -> np.ndarray:
    """Deviation of smoothed Pi from its local median baseline."""
    return series.smoothed - rolling_median(series.smoothed, baseline_window)


def detect_special_states(series: ShearSeries, baseline_window: int = 25) -> list:
    """Local extrema of |deviation| above 3x its median absolute deviation.

    Events are annotated with the nearest fraction p/q (q <= 8) of the
    recurrence time; q = 1 marks a full recurrence, anything else a
    fractional revival.  Scale-covariant: rescaling Pi rescales scores but
    leaves the ranked event set unchanged.
    """
    n = series.times.size
    if n < 3 * baseline_window:
        raise ValueError(
            f"series of {n} samples too short for baseline window {baseline_window}"
        )
    d = series_deviation(series, baseline_window)
    mad = float(np.median(np.abs(d - np.median(d))))
    threshold = 3.0 * mad
    t_rec = recurrence_time(series.params)

    events = []
    a = np.abs(d)
    for i in range(n):
        left = a[i - 1] if i > 0 else -np.inf
        right = a[i + 1] if i < n - 1 else -np.inf
        if a[i] >= left and a[i] >= right and a[i] > threshold:
            if events and events[-1][0] == i - 1 and a[i] == a[i - 1]:
                continue  # plateau: keep the first sample
            events.append((i, a[i]))
    out = []
    for i, score in events:
        t = float(series.times[i])
        frac = Fraction(t / t_rec).limit_denominator(8)
        kind = "recurrence" if frac.denominator == 1 and frac.numerator >= 1 \
            else "fractional-revival"
        out.append(RevivalEvent(t, kind, float(score),
                                (frac.numerator, frac.denominator)))
    out.sort(key=lambda e: (-e.score, e.time))
    return out


def negativity(W: ScalarField) -> tuple[float, float]:
    """(min over the grid, integral of the negative part)."""
    neg = np.maximum(-W.values, 0.0)
    return float(np.min(W.values)), integrate(ScalarField(W.grid, neg, label="negpart"))


@dataclass
class SpectralSummary:
    k_bins: np.ndarray          # bin centers, cycles per phase-space unit
    power: np.ndarray           # radially binned power
    centroid: float             # power-weighted mean radial wavenumber
    high_freq_fraction: float   # power fraction above the cutoff
    cutoff: float


def spectral_content(W: ScalarField, k_cutoff: float = 4.0) -> SpectralSummary:
    """Radial power spectrum of W over the square grid.

    Wavenumbers are in cycles per phase-space unit (fftfreq convention);
    the centroid tracks the finest structure scale the state has formed.
    """
    g = W.grid
    if not g.is_square:
        raise GridError("spectral content requires a square grid")
    n = g.n_x
    power = np.abs(np.fft.fft2(W.values)) ** 2
    freq = np.fft.fftfreq(n, d=g.hx)
    k = np.hypot(freq[:, None], freq[None, :])
    total = float(np.sum(power))
    centroid = float(np.sum(k * power) / total)
    hf = float(np.sum(power[k > k_cutoff]) / total)
    k_max = float(np.max(k))
    n_bins = n // 2
    edges = np.linspace(0.0, k_max * (1 + 1e-12), n_bins + 1)
    idx = np.digitize(k.ravel(), edges) - 1
    binned = np.bincount(idx, weights=power.ravel(), minlength=n_bins)[:n_bins]
    centers = 0.5 * (edges[:-1] + edges[1:])
    return SpectralSummary(centers, binned, centroid, hf, k_cutoff)
