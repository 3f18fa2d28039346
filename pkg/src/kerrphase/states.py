"""Fock-basis quantum states of the Kerr oscillator and their exact evolution.

The oscillator Hamiltonian is the harmonic part plus its own square scaled
by a nonlinearity: H = h0 + L2 * h0^2 with h0 = p^2/(2M) + k x^2/2.  Harmonic
eigenfunctions diagonalize it, so time evolution is a pure phase rotation of
the Fock amplitudes and is exact at machine precision.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson


class StateError(ValueError):
    """Invalid state construction or an operation precondition violation."""


class TruncationError(StateError):
    """Fock cutoff too small; carries the offending tail mass."""

    def __init__(self, message: str, tail_mass: float, cutoff: int, tol: float):
        super().__init__(message)
        self.tail_mass = tail_mass
        self.cutoff = cutoff
        self.tol = tol


@dataclass(frozen=True)
class KerrParams:
    """System constants.  lambda2_p holds the momentum-branch nonlinearity
    (may be negative for soft potentials), lambda2_x the position branch;
    they default equal, which is the physical Kerr oscillator."""

    mass: float = 1.0
    spring: float = 1.0
    hbar: float = 1.0
    lambda2_p: float = 0.0
    lambda2_x: float | None = None

    def __post_init__(self):
        if self.mass <= 0 or self.spring <= 0 or self.hbar <= 0:
            raise StateError("mass, spring and hbar must be positive")
        if self.lambda2_x is None:
            object.__setattr__(self, "lambda2_x", self.lambda2_p)

    @property
    def omega(self) -> float:
        return sqrt(self.spring / self.mass)

    @property
    def matched(self) -> bool:
        return self.lambda2_x == self.lambda2_p

    def require_matched(self, what: str) -> None:
        if not self.matched:
            raise StateError(
                f"{what} requires equal nonlinearities, "
                f"got lambda2_p={self.lambda2_p}, lambda2_x={self.lambda2_x}"
            )

    def cross_nonlinearity(self) -> float:
        """Signed product of the two nonlinearity roots.

        Negative squares stand for formally imaginary roots, so the product
        is real only when both squares share a sign.
        """
        a, b = self.lambda2_p, self.lambda2_x
        if a == b:
            return a
        if a * b < 0:
            raise StateError("nonlinearities of opposite sign give a complex cross term")
        s = -1.0 if (a < 0 or b < 0) else 1.0
        return s * sqrt(abs(a) * abs(b))


_HARD_CAP = 512


@dataclass
class StateVector:
    """Normalized Fock-basis amplitudes c_0..c_N.

    tail_mass records the truncation quality: the ideal-state mass at and
    beyond slot N-3 (simply the beyond-cutoff mass when N < 4).
    """

    amplitudes: np.ndarray
    tail_mass: float = 0.0
    tol: float = 1e-12
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.ndim != 1 or self.amplitudes.size == 0:
            raise StateError("amplitudes must be a nonempty 1D array")
        n = self.norm()
        if abs(n - 1.0) > 1e-12:
            raise StateError(f"state norm {n} deviates from 1 beyond 1e-12")
        self.amplitudes.setflags(write=False)

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size - 1

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def mean_photon(self) -> float:
        n = np.arange(self.amplitudes.size)
        return float(np.sum(n * np.abs(self.amplitudes) ** 2))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass
class DensityMatrix:
    """Hermitian, unit-trace matrix in the Fock basis."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StateError("density matrix must be square")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise StateError("density matrix not Hermitian within 1e-12")
        if abs(np.trace(m).real - 1.0) > 1e-12 or abs(np.trace(m).imag) > 1e-12:
            raise StateError("density matrix trace deviates from 1 beyond 1e-12")

    @property
    def cutoff(self) -> int:
        return self.matrix.shape[0] - 1


def _tail_slot(cutoff: int) -> int:
    """First index counted as tail; the last 4 kept slots count when N >= 4."""
    return cutoff - 3 if cutoff >= 4 else cutoff + 1


def coherent_tail(alpha: complex, cutoff: int) -> float:
    """Ideal coherent-state mass in the tail slots (Poisson survival)."""
    k = _tail_slot(cutoff)
    return float(poisson.sf(k - 1, abs(alpha) ** 2)) if k > 0 else 1.0


def squeezed_tail(zeta: float, cutoff: int) -> float:
    k = _tail_slot(cutoff)
    probs = _squeezed_even_probs(zeta, max(2 * (k + 200), 400))
    return float(np.sum(probs[k:]))


def _squeezed_even_probs(zeta: float, n_max: int) -> np.ndarray:
    """|c_n|^2 of the squeezed vacuum, zero at odd n, up to n_max."""
    out = np.zeros(n_max + 1)
    t2 = np.tanh(zeta) ** 2
    val = 1.0 / np.cosh(zeta)  # |c_0|^2
    m = 0
    while 2 * m <= n_max:
        out[2 * m] = val
        # ratio |c_{2m+2}|^2 / |c_{2m}|^2 = tanh^2 * (2m+1)/(2m+2)
        val *= t2 * (2 * m + 1) / (2 * m + 2)
        m += 1
    return out


def coherent_state(alpha: complex, cutoff: int | None = None,
                   tol: float = 1e-12) -> StateVector:
    """Coherent state |alpha>: c_n = exp(-|a|^2/2) a^n / sqrt(n!).

    Refuses cutoffs whose ideal tail mass is not below tol; amplitudes are
    renormalized after truncation.
    """
    if cutoff is None:
        cutoff = auto_cutoff("coherent", alpha=alpha, tol=tol)
    tail = coherent_tail(alpha, cutoff)
    if tail >= tol:
        raise TruncationError(
            f"coherent cutoff {cutoff} leaves tail mass {tail:.3e} >= {tol:.1e}",
            tail, cutoff, tol,
        )
    n = np.arange(cutoff + 1)
    a = complex(alpha)
    if a == 0:
        c = np.zeros(cutoff + 1, dtype=complex)
        c[0] = 1.0
    else:
        log_mag = -abs(a) ** 2 / 2 + n * np.log(abs(a)) - 0.5 * gammaln(n + 1)
        c = np.exp(log_mag) * np.exp(1j * n * np.angle(a))
    c = c / np.sqrt(np.sum(np.abs(c) ** 2))
    return StateVector(c, tail_mass=tail, tol=tol,
                       meta={"kind": "coherent", "alpha": a})


def squeezed_vacuum(zeta: float, cutoff: int | None = None,
                    tol: float = 1e-12) -> StateVector:
    """Squeezed vacuum with real squeezing parameter.

    Convention: zeta > 0 squeezes position, so the position wavefunction is
    the vacuum Gaussian with variance scaled by exp(-2 zeta).  Amplitudes
    c_{2m} = (-tanh z)^m sqrt((2m)!) / (2^m m!) / sqrt(cosh z); odd slots
    vanish by parity.
    """
    if cutoff is None:
        cutoff = auto_cutoff("squeezed", zeta=zeta, tol=tol)
    tail = squeezed_tail(zeta, cutoff)
    if tail >= tol:
        raise TruncationError(
            f"squeezed cutoff {cutoff} leaves tail mass {tail:.3e} >= {tol:.1e}",
            tail, cutoff, tol,
        )
    c = np.zeros(cutoff + 1, dtype=complex)
    t = np.tanh(zeta)
    m_max = cutoff // 2
    m = np.arange(m_max + 1)
    log_mag = (m * np.log(abs(t)) if t != 0 else np.where(m == 0, 0.0, -np.inf)) \
        + 0.5 * gammaln(2 * m + 1) - m * np.log(2.0) - gammaln(m + 1) \
        - 0.5 * np.log(np.cosh(zeta))
    sign = np.where(m % 2 == 0, 1.0, -np.sign(t))
    with np.errstate(over="ignore"):
        c[2 * m] = sign * np.exp(log_mag)
    c = c / np.sqrt(np.sum(np.abs(c) ** 2))
    return StateVector(c, tail_mass=tail, tol=tol,
                       meta={"kind": "squeezed", "zeta": float(zeta)})


def fock_superposition(terms, cutoff: int | None = None) -> StateVector:
    """Normalized superposition from (n, amplitude) pairs."""
    terms = list(terms)
    if not terms:
        raise StateError("empty superposition")
    n_max = max(int(n) for n, _ in terms)
    if any(int(n) < 0 for n, _ in terms):
        raise StateError("Fock indices must be nonnegative")
    if cutoff is None:
        cutoff = n_max
    if n_max > cutoff:
        raise StateError(f"term index {n_max} exceeds cutoff {cutoff}")
    c = np.zeros(cutoff + 1, dtype=complex)
    for n, a in terms:
        c[int(n)] += complex(a)
    nrm = np.sqrt(np.sum(np.abs(c) ** 2))
    if nrm == 0:
        raise StateError("superposition has zero norm")
    c = c / nrm
    probs = np.abs(c) ** 2
    tail = float(np.sum(probs[_tail_slot(cutoff):])) if cutoff >= 4 else 0.0
    return StateVector(c, tail_mass=tail,
                       meta={"kind": "fock_superposition",
                             "terms": [(int(n), complex(a)) for n, a in terms]})


def fock_state(n: int, cutoff: int | None = None) -> StateVector:
    return fock_superposition([(n, 1.0)], cutoff=cutoff)


def auto_cutoff(kind: str, *, alpha: complex = 0.0, zeta: float = 0.0,
                terms=None, tol: float = 1e-12, cap: int = _HARD_CAP) -> int:
    """Smallest cutoff whose tail mass is below tol, by doubling then bisection."""
    if not 0.0 < tol < 1.0:
        raise StateError("tol must lie in (0, 1)")
    if kind == "fock_superposition":
        if not terms:
            raise StateError("empty superposition")
        return max(int(n) for n, _ in terms)
    if kind == "coherent":
        tail = lambda n: coherent_tail(alpha, n)  # noqa: E731
    elif kind == "squeezed":
        tail = lambda n: squeezed_tail(zeta, n)  # noqa: E731
    else:
        raise StateError(f"unknown state kind {kind!r}")
    if tail(0) < tol:
        return 0
    hi = 8
    while tail(hi) >= tol:
        hi *= 2
        if hi > cap:
            raise TruncationError(
                f"no cutoff below hard cap {cap} reaches tail < {tol:.1e}",
                tail(cap), cap, tol,
            )
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail(mid) < tol:
            hi = mid
        else:
            lo = mid
    return hi


def kerr_energy(n: int, params: KerrParams) -> float:
    """Eigenenergy hbar*omega*[(n+1/2) + L2*(n+1/2)^2]."""
    params.require_matched("eigenbasis energies")
    nu = n + 0.5
    return params.hbar * params.omega * (nu + params.lambda2_p * nu * nu)


def recurrence_time(params: KerrParams) -> float:
    """Quantum recurrence time pi/|L2|; undefined for the harmonic oscillator."""
    if params.lambda2_p == 0.0:
        raise StateError("no recurrence scale (harmonic)")
    return np.pi / abs(params.lambda2_p)


def evolve(state: StateVector, t: float, params: KerrParams) -> StateVector:
    """Exact evolution: each amplitude acquires exp(-i E_n t / hbar)."""
    params.require_matched("eigenbasis evolution")
    n = np.arange(state.amplitudes.size)
    nu = n + 0.5
    energies = params.hbar * params.omega * (nu + params.lambda2_p * nu * nu)
    c = state.amplitudes * np.exp(-1j * energies * t / params.hbar)
    out = StateVector(c, tail_mass=state.tail_mass, tol=state.tol,
                      meta=dict(state.meta))
    out.meta["t"] = out.meta.get("t", 0.0) + t
    return out


def density_matrix(state_or_mixture) -> DensityMatrix:
    """rho = |psi><psi| for a state, or a convex combination for a list of
    (weight, state) pairs (padded to the largest cutoff)."""
    if isinstance(state_or_mixture, StateVector):
        c = state_or_mixture.amplitudes
        return DensityMatrix(np.outer(c, c.conj()))
    pairs = list(state_or_mixture)
    if not pairs:
        raise StateError("empty mixture")
    dim = max(s.amplitudes.size for _, s in pairs)
    rho = np.zeros((dim, dim), dtype=complex)
    total = 0.0
    for w, s in pairs:
        if w < 0:
            raise StateError("mixture weights must be nonnegative")
        c = np.zeros(dim, dtype=complex)
        c[: s.amplitudes.size] = s.amplitudes
        rho += w * np.outer(c, c.conj())
        total += w
    if abs(total - 1.0) > 1e-12:
        raise StateError("mixture weights must sum to 1")
    return DensityMatrix(rho)
