"""Wigner current fields, their classical/quantum split, and the
velocity-field (Lagrange) decomposition.

Two independent assemblies of the current are provided: the general
component formulas valid for arbitrary (M, k) and independent position /
momentum nonlinearities (including the divergence-free sigma-family of
ambiguous cross terms), and the compact polar form valid for M = k = 1
with matched nonlinearities.  They must agree at sigma = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .fields import (GridError, PhaseGrid, ScalarField, VectorField,
                     differentiate_array, integrate)
from .states import KerrParams, StateVector, density_matrix
from .wigner import wigner_grid


@dataclass
class CurrentBundle:
    total: VectorField
    classical: VectorField
    quantum: VectorField
    sigma: float
    params: KerrParams

    def __post_init__(self):
        scale = max(float(np.max(self.total.magnitude())), 1.0)
        split = max(
            float(np.max(np.abs(self.total.fx - self.classical.fx - self.quantum.fx))),
            float(np.max(np.abs(self.total.fp - self.classical.fp - self.quantum.fp))),
        )
        if split > 1e-12 * scale:
            raise ValueError(f"classical/quantum split violates J = j + J_Q by {split:.3e}")


@dataclass
class VelocityField:
    """w = J/W where |W| exceeds the mask threshold.

    singular_cells lists dual-cell indices (i, j), between nodes, where W
    changes sign across either cell edge; div_w is computed through the
    identity div w = (div J - w . grad W)/W, so its blow-up near the
    singular set is reported as data rather than failing.
    """

    w: VectorField
    mask: np.ndarray
    singular_cells: list
    div_w: ScalarField
    threshold: float
    stats: dict = field(default_factory=dict)


@dataclass
class LagrangeTerms:
    convective: ScalarField
    expansion: ScalarField
    total_derivative: ScalarField
    total_derivative_kerr: ScalarField
    discrepancy: ScalarField


def current_general(W: ScalarField, params: KerrParams, sigma: float = 0.0,
                    acc: int = 8) -> CurrentBundle:
    """Current components for general (M, k, L2, l2) and interpolation sigma.

    Curly-bracket (classical) terms become the classical part j = W v; the
    hbar^2 terms, plus the divergence-free sigma additions, form the quantum
    part.  sigma must lie in [0, 1]; sigma = 0 is the physical choice that
    preserves the system's circular symmetry.
    """
    if not 0.0 <= sigma <= 1.0:
        raise ValueError("sigma must lie in [0, 1]")
    g = W.grid
    X, P = g.mesh()
    Wv = W.values
    M, k, hbar = params.mass, params.spring, params.hbar
    L2 = params.lambda2_p
    l2 = params.lambda2_x
    cross = params.cross_nonlinearity()

    wxx = differentiate_array(g, Wv, 2, 0, acc)
    wpp = differentiate_array(g, Wv, 0, 2, acc)

    vx = (L2 / M**2) * P**3 + (cross * k / M) * X**2 * P + P / M
    vp = -((l2 * k**2) * X**3 + (cross * k / M) * X * P**2 + k * X)
    jx = vx * Wv
    jp = vp * Wv

    qx = hbar**2 * (-(L2 / (4 * M**2)) * P * wxx - (cross * k / (4 * M)) * P * wpp)
    qp = hbar**2 * ((l2 * k**2 / 4) * X * wpp + (cross * k / (4 * M)) * X * wxx)
    if sigma != 0.0:
        wxp = differentiate_array(g, Wv, 1, 1, acc)
        coef = sigma * cross * hbar**2 * k / (4 * M)
        qx = qx + coef * (X * wxp + P * wpp)
        qp = qp - coef * (X * wxx + P * wxp)

    classical = VectorField(g, jx, jp, label="j")
    quantum = VectorField(g, qx, qp, label="J_Q")
    total = VectorField(g, jx + qx, jp + qp, label="J")
    return CurrentBundle(total, classical, quantum, sigma, params)


def current_polar(W: ScalarField, params: KerrParams, acc: int = 8) -> CurrentBundle:
    """Compact assembly J = (p, -x)[1 + L2 (r^2 - hbar^2/4 Lap)] W.

    Valid for M = k = 1 with matched nonlinearities; cross-validates the
    general assembly at sigma = 0.
    """
    if params.mass != 1.0 or params.spring != 1.0:
        raise ValueError("polar current form requires M = k = 1")
    params.require_matched("polar current form")
    g = W.grid
    X, P = g.mesh()
    Wv = W.values
    L2, hbar = params.lambda2_p, params.hbar
    lap = (differentiate_array(g, Wv, 2, 0, acc)
           + differentiate_array(g, Wv, 0, 2, acc))
    f_cl = (1.0 + L2 * (X**2 + P**2)) * Wv
    f_q = -(L2 * hbar**2 / 4.0) * lap
    classical = VectorField(g, P * f_cl, -X * f_cl, label="j")
    quantum = VectorField(g, P * f_q, -X * f_q, label="J_Q")
    total = VectorField(g, P * (f_cl + f_q), -X * (f_cl + f_q), label="J")
    return CurrentBundle(total, classical, quantum, 0.0, params)


def divergence(J: VectorField, acc: int = 8) -> ScalarField:
    vals = (differentiate_array(J.grid, J.fx, 1, 0, acc)
            + differentiate_array(J.grid, J.fp, 0, 1, acc))
    return ScalarField(J.grid, vals, label=f"div_{J.label}")


def continuity_residual(state: StateVector, t: float, grid: PhaseGrid,
                        params: KerrParams, dt: float = 1e-4,
                        sigma: float = 0.0, acc: int = 8) -> ScalarField:
    """Field of dW/dt + div J, with the time derivative from exact evolution.

    dW/dt is the central difference [W(t+dt) - W(t-dt)]/(2 dt); the result's
    meta records max |residual| and max |div J| for relative reporting.
    """
    from .states import evolve

    W_mid = wigner_grid(density_matrix(evolve(state, t, params)), grid, params.hbar)
    W_plus = wigner_grid(density_matrix(evolve(state, t + dt, params)), grid, params.hbar)
    W_minus = wigner_grid(density_matrix(evolve(state, t - dt, params)), grid, params.hbar)
    dwdt = (W_plus.values - W_minus.values) / (2.0 * dt)
    div = divergence(current_general(W_mid, params, sigma, acc).total, acc)
    res = dwdt + div.values
    out = ScalarField(grid, res, label="continuity_residual")
    out.meta.update({
        "t": t, "dt": dt,
        "max_abs_residual": float(np.max(np.abs(res))),
        "max_abs_div": float(np.max(np.abs(div.values))),
    })
    return out


def velocity_field(bundle: CurrentBundle, W: ScalarField,
                   w_threshold: float | None = None, acc: int = 8) -> VelocityField:
    """Singular quantum velocity w = J/W on the masked region.

    Zeros of W are unavoidable once negativities form, so the singular set
    is reported as data; statistics of |div w| document its unboundedness
    as the mask threshold is lowered.
    """
    Wv = W.values
    w_max = float(np.max(np.abs(Wv)))
    thr = 1e-6 * w_max if w_threshold is None else float(w_threshold)
    if thr <= 0:
        raise ValueError("w_threshold must be positive")
    mask = np.abs(Wv) > thr
    with np.errstate(divide="ignore", invalid="ignore"):
        wx = np.where(mask, bundle.total.fx / Wv, np.nan)
        wp = np.where(mask, bundle.total.fp / Wv, np.nan)
    g = W.grid

    sign = np.sign(Wv)
    flip_x = (sign[1:, :] * sign[:-1, :]) < 0
    flip_p = (sign[:, 1:] * sign[:, :-1]) < 0
    cells = set()
    for i, j in zip(*np.nonzero(flip_x)):
        cells.add((int(i), int(j)))
    for i, j in zip(*np.nonzero(flip_p)):
        cells.add((int(i), int(j)))
    singular_cells = sorted(cells)

    div_j = divergence(bundle.total, acc).values
    grad_x = differentiate_array(g, Wv, 1, 0, acc)
    grad_p = differentiate_array(g, Wv, 0, 1, acc)
    with np.errstate(divide="ignore", invalid="ignore"):
        div_w_vals = np.where(mask, (div_j - (wx * grad_x + wp * grad_p)) / Wv, np.nan)
    div_w = ScalarField(g, np.where(mask, div_w_vals, np.nan), label="div_w")

    masked_abs = np.abs(div_w_vals[mask])
    stats = {
        "threshold": thr,
        "n_masked": int(np.count_nonzero(mask)),
        "n_singular_cells": len(singular_cells),
        "max_abs_div_w": float(np.max(masked_abs)) if masked_abs.size else float("nan"),
        "p99_abs_div_w": float(np.percentile(masked_abs, 99)) if masked_abs.size else float("nan"),
    }
    return VelocityField(VectorField(g, wx, wp, label="w"), mask,
                         singular_cells, div_w, thr, stats)


def lagrange_terms(W: ScalarField, vel: VelocityField,
                   params: KerrParams, acc: int = 8) -> LagrangeTerms:
    """Convective and expansion terms of the continuity equation, and the
    total derivative dW/dt computed two ways.

    Route (a) is -W div w from the current assembly; route (b) is the
    closed Kerr form -(L2 hbar^2/4) W d_theta(Lap W / W), with d_theta
    taken as x d_p - p d_x and the quotient expanded so only smooth fields
    are differentiated.  Their mismatch is returned as a field.
    """
    params.require_matched("closed Kerr total derivative")
    if params.mass != 1.0 or params.spring != 1.0:
        raise ValueError("closed Kerr form requires M = k = 1")
    g = W.grid
    X, P = g.mesh()
    Wv = W.values
    mask = vel.mask
    nan = np.nan

    grad_x = differentiate_array(g, Wv, 1, 0, acc)
    grad_p = differentiate_array(g, Wv, 0, 1, acc)
    convective = np.where(mask, vel.w.fx * grad_x + vel.w.fp * grad_p, nan)
    expansion = np.where(mask, Wv * vel.div_w.values, nan)
    total = -expansion

    lap = (differentiate_array(g, Wv, 2, 0, acc)
           + differentiate_array(g, Wv, 0, 2, acc))
    theta_lap = (X * differentiate_array(g, lap, 0, 1, acc)
                 - P * differentiate_array(g, lap, 1, 0, acc))
    theta_w = X * grad_p - P * grad_x
    coef = params.lambda2_p * params.hbar**2 / 4.0
    with np.errstate(divide="ignore", invalid="ignore"):
        kerr = np.where(mask, -coef * (theta_lap - (lap / Wv) * theta_w), nan)

    return LagrangeTerms(
        ScalarField(g, convective, label="convective"),
        ScalarField(g, expansion, label="expansion"),
        ScalarField(g, total, label="dW_dt"),
        ScalarField(g, kerr, label="dW_dt_kerr"),
        ScalarField(g, total - kerr, label="dW_dt_discrepancy"),
    )


@dataclass
class StagnationReport:
    points: list          # centroids of compact clusters: isolated zeros of J
    lines: list           # centroid + cell extent of elongated clusters
    degenerate: bool
    n_flagged_cells: int


def _isolation_score(J: VectorField) -> np.ndarray:
    """Nondegeneracy score of a zero per dual cell.

    |det grad J| at the cell center, normalized by neighborhood-maximum
    gradient norms of the two components.  An isolated zero (rotation
    center or saddle) scores O(1); along a stagnation line the Jacobian is
    rank deficient and the score collapses.
    """
    hx, hp = J.grid.hx, J.grid.hp

    def grads(a: np.ndarray):
        gx = (a[1:, :-1] + a[1:, 1:] - a[:-1, :-1] - a[:-1, 1:]) / (2 * hx)
        gp = (a[:-1, 1:] + a[1:, 1:] - a[:-1, :-1] - a[1:, :-1]) / (2 * hp)
        return gx, gp

    ax, apv = grads(J.fx)
    bx, bp = grads(J.fp)
    det = np.abs(ax * bp - apv * bx)
    gx_max = ndimage.maximum_filter(np.hypot(ax, apv), size=5)
    gp_max = ndimage.maximum_filter(np.hypot(bx, bp), size=5)
    norm = gx_max * gp_max
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(norm > 0, det / np.where(norm > 0, norm, 1.0), 0.0)


def stagnation_points(J: VectorField, tol: float = 1e-9,
                      min_isolation: float = 0.12) -> StagnationReport:
    """Zeros of the current, split into isolated points and stagnation lines.

    A cell is flagged when both components change sign across it or all
    four node magnitudes fall below tol * max|J|.  Flagged cells with a
    nondegenerate Jacobian hold isolated zeros (stagnation points); the
    rest trace lines of stagnation, e.g. the current-inversion boundary
    along zeros of W.  Clusters reaching the box boundary are the state's
    decay tail and are discarded.  A zero field flags everything and is
    marked degenerate.
    """
    g = J.grid
    mag = J.magnitude()
    peak = float(np.max(mag))

    def cell_flip(a: np.ndarray) -> np.ndarray:
        corners = np.stack([a[:-1, :-1], a[1:, :-1], a[:-1, 1:], a[1:, 1:]])
        zero = np.all(corners == 0.0, axis=0)
        return (corners.min(axis=0) <= 0) & (corners.max(axis=0) >= 0) & ~zero

    if peak == 0.0:
        flagged = np.ones((g.n_x - 1, g.n_p - 1), dtype=bool)
        flips = np.zeros_like(flagged)
    else:
        flips = cell_flip(J.fx) & cell_flip(J.fp)
        small = mag < tol * peak
        flagged = flips | (small[:-1, :-1] & small[1:, :-1]
                           & small[:-1, 1:] & small[1:, 1:])

    n_flagged = int(np.count_nonzero(flagged))
    degenerate = n_flagged > 0.5 * flagged.size
    xc = 0.5 * (g.x[:-1] + g.x[1:])
    pc = 0.5 * (g.p[:-1] + g.p[1:])

    if degenerate:
        point_cells = np.zeros_like(flagged)
    else:
        # sign flips below the noise floor carry no direction information
        cell_mag = np.maximum(
            np.maximum(mag[:-1, :-1], mag[1:, :-1]),
            np.maximum(mag[:-1, 1:], mag[1:, 1:]),
        )
        candidates = flips & (cell_mag > 1e-9 * peak)
        point_cells = candidates & (_isolation_score(J) > min_isolation)
    line_cells = flagged & ~point_cells

    def clusters(cells: np.ndarray, drop_edge: bool):
        labels, n = ndimage.label(cells, structure=np.ones((3, 3), dtype=int))
        out = []
        for lab in range(1, n + 1):
            ii, jj = np.nonzero(labels == lab)
            touches = (ii.min() == 0 or jj.min() == 0
                       or ii.max() == cells.shape[0] - 1
                       or jj.max() == cells.shape[1] - 1)
            if touches and drop_edge:
                continue
            centroid = (float(np.mean(xc[ii])), float(np.mean(pc[jj])))
            extent = int(max(ii.max() - ii.min(), jj.max() - jj.min()) + 1)
            out.append((centroid, extent, int(ii.size)))
        return out

    points = sorted(c for c, _, _ in clusters(point_cells, drop_edge=not degenerate))
    lines = sorted(
        ({"centroid": c, "extent_cells": e, "n_cells": n}
         for c, e, n in clusters(line_cells, drop_edge=not degenerate)),
        key=lambda d: d["centroid"],
    )
    return StagnationReport(points, lines, degenerate, n_flagged)


def tangentiality_stat(J: VectorField) -> float:
    """max |x Jx + p Jp| over the grid, normalized by max |J|."""
    X, P = J.grid.mesh()
    radial = np.abs(X * J.fx + P * J.fp)
    peak = float(np.max(J.magnitude()))
    if peak == 0.0:
        return 0.0
    return float(np.max(radial)) / peak


def sigma_difference_divergence(W: ScalarField, params: KerrParams,
                                sigma_a: float, sigma_b: float,
                                acc: int = 8) -> float:
    """max |div(J^(sa) - J^(sb))|; the sigma family is divergence-free."""
    ja = current_general(W, params, sigma_a, acc).total
    jb = current_general(W, params, sigma_b, acc).total
    diff = VectorField(W.grid, ja.fx - jb.fx, ja.fp - jb.fp, label="J_sigma_diff")
    return float(np.max(np.abs(divergence(diff, acc).values)))
