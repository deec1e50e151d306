"""Generators, propagation, and closed-form speeds.

A generator ``H = H_plus - i*Gamma`` drives ``i hbar dpsi/dt = H(t) psi``.
For Hermitian ``H`` the projective speed is ``2 dH / hbar``; in general it is
``(2/hbar) sqrt(dH_plus^2 + dGamma^2 + i<[Gamma, H_plus]>)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import (
    BOUND_SLACK,
    BoundReport,
    Trajectory,
    as_state,
    bound_from,
    geodesic_distance,
)
from .numerics import NumericalError, OverflowBlowup, as_matrix, integrate_samples, mat_exp, solve_ode, OVERFLOW_THRESHOLD

HERMITIAN_ATOL = 1e-12


def is_hermitian(A, atol: float = HERMITIAN_ATOL) -> bool:
    A = np.asarray(A)
    return bool(np.max(np.abs(A - A.conj().T), initial=0.0) < atol * max(1.0, np.max(np.abs(A), initial=0.0)))


@dataclass(frozen=True)
class GeneratorSpec:
    """A (possibly time-dependent, possibly non-Hermitian) generator.

    ``H_of_t`` must be a pure function of time. ``time_independent`` lets
    propagation use exact exponentials instead of RK4.
    """

    H_of_t: Callable[[float], np.ndarray]
    dim: int
    hermitian: bool = False
    hbar: float = 1.0
    time_independent: bool = False

    @classmethod
    def constant(cls, H, hbar: float = 1.0, hermitian: bool | None = None) -> "GeneratorSpec":
        H = as_matrix(H)
        H.setflags(write=False)
        if hermitian is None:
            hermitian = is_hermitian(H)
        return cls(lambda t: H, H.shape[0], hermitian, hbar, time_independent=True)

    def __call__(self, t: float) -> np.ndarray:
        H = as_matrix(self.H_of_t(t))
        if H.shape != (self.dim, self.dim):
            raise ValueError(f"H({t}) has shape {H.shape}, expected {(self.dim, self.dim)}")
        if self.hermitian and not is_hermitian(H):
            raise ValueError(f"generator flagged Hermitian but H({t}) is not")
        return H


@dataclass(frozen=True)
class HermitianSplit:
    H_plus: np.ndarray
    Gamma: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.H_plus - 1j * self.Gamma


def split_hamiltonian(H) -> HermitianSplit:
    """Hermitian part ``(H + H^dag)/2`` and decay-rate operator ``i(H - H^dag)/2``."""
    H = as_matrix(H)
    Hd = H.conj().T
    return HermitianSplit(H_plus=0.5 * (H + Hd), Gamma=0.5j * (H - Hd))


def evolve(spec: GeneratorSpec, psi0, t_max: float, steps: int, continuity: float | None = None) -> Trajectory:
    """Propagate ``psi0`` over ``[0, t_max]`` and return the raw (unnormalized) curve."""
    psi0 = as_state(psi0).amplitudes
    if psi0.size != spec.dim:
        raise ValueError(f"initial state has dim {psi0.size}, generator has dim {spec.dim}")
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    if not t_max > 0:
        raise ValueError(f"t_max must be > 0, got {t_max}")
    dt = t_max / steps
    if spec.time_independent:
        H = spec(0.0)
        step = mat_exp(H, -1j * dt / spec.hbar)
        samples = np.empty((steps + 1, spec.dim), dtype=complex)
        samples[0] = psi0
        # Exact one-step propagator; rebase with a fresh exponential every
        # block to keep roundoff from accumulating over long grids.
        for k in range(1, steps + 1):
            if k % 256 == 0:
                samples[k] = mat_exp(H, -1j * k * dt / spec.hbar) @ psi0
            else:
                samples[k] = step @ samples[k - 1]
            peak = np.max(np.abs(samples[k]))
            if not np.isfinite(peak) or peak > OVERFLOW_THRESHOLD:
                raise OverflowBlowup(k * dt, peak)
    else:
        factor = -1j / spec.hbar
        samples = solve_ode(lambda t, y: factor * (spec(t) @ y), psi0, t_max, steps)
    kwargs = {} if continuity is None else {"continuity": continuity}
    return Trajectory(samples, dt, spec.hbar, **kwargs)


def expectation(A, psi) -> complex:
    """``<psi~|A|psi~>`` on the normalized state."""
    A = as_matrix(A)
    u = as_state(psi).normalized()
    if A.shape[0] != u.size:
        raise ValueError(f"operator dim {A.shape[0]} does not match state dim {u.size}")
    return complex(np.vdot(u, A @ u))


def variance(A, psi) -> float:
    """``<A^2> - <A>^2`` for Hermitian ``A``, clamped at zero."""
    A = as_matrix(A)
    if not is_hermitian(A):
        raise ValueError("variance requires a Hermitian operator")
    u = as_state(psi).normalized()
    Au = A @ u
    mean = np.vdot(u, Au).real
    # ||(A - <A>)u||^2 is the variance and is nonnegative by construction.
    return float(np.linalg.norm(Au - mean * u) ** 2)


def commutator_term(split: HermitianSplit, psi) -> float:
    """``i<[Gamma, H_plus]>``, which is real for Hermitian parts."""
    G, Hp = split.Gamma, split.H_plus
    value = 1j * expectation(G @ Hp - Hp @ G, psi)
    scale = max(1.0, abs(value), np.linalg.norm(G) * np.linalg.norm(Hp))
    if abs(value.imag) > 1e-10 * scale:
        raise NumericalError(f"i<[Gamma, H_plus]> has imaginary residue {value.imag:.3e}")
    return float(value.real)


def speed_hermitian(H, psi, hbar: float = 1.0) -> float:
    return 2.0 * np.sqrt(variance(H, psi)) / hbar


def speed_nonhermitian(split: HermitianSplit, psi, hbar: float = 1.0) -> float:
    radicand = variance(split.H_plus, psi) + variance(split.Gamma, psi) + commutator_term(split, psi)
    if radicand < -1e-10:
        raise NumericalError(f"negative speed radicand {radicand:.3e}; inconsistent split or state")
    return 2.0 * np.sqrt(max(radicand, 0.0)) / hbar


def _batch_variance(A: np.ndarray, u: np.ndarray) -> np.ndarray:
    Au = u @ A.T
    mean = np.einsum("ij,ij->i", u.conj(), Au).real
    dev = Au - mean[:, None] * u
    return np.einsum("ij,ij->i", dev.conj(), dev).real


def _constant_speed_profile(H: np.ndarray, samples: np.ndarray, hermitian: bool, hbar: float) -> np.ndarray:
    # Same quantities as speed_hermitian / speed_nonhermitian, batched over samples.
    u = samples / np.linalg.norm(samples, axis=1)[:, None]
    if hermitian:
        return 2.0 * np.sqrt(_batch_variance(H, u)) / hbar
    s = split_hamiltonian(H)
    C = s.Gamma @ s.H_plus - s.H_plus @ s.Gamma
    comm = 1j * np.einsum("ij,ij->i", u.conj(), u @ C.T)
    scale = np.maximum(1.0, np.maximum(np.abs(comm), np.linalg.norm(s.Gamma) * np.linalg.norm(s.H_plus)))
    if np.any(np.abs(comm.imag) > 1e-10 * scale):
        raise NumericalError("i<[Gamma, H_plus]> has an imaginary residue")
    radicand = _batch_variance(s.H_plus, u) + _batch_variance(s.Gamma, u) + comm.real
    if np.any(radicand < -1e-10):
        raise NumericalError(f"negative speed radicand {radicand.min():.3e}; inconsistent split or state")
    return 2.0 * np.sqrt(np.clip(radicand, 0.0, None)) / hbar


def speed_analytic_profile(spec: GeneratorSpec, traj: Trajectory) -> np.ndarray:
    """Closed-form speed at each sample of ``traj`` under generator ``spec``."""
    if spec.time_independent:
        return _constant_speed_profile(spec(0.0), traj.samples, spec.hermitian, spec.hbar)
    out = np.empty(len(traj))
    for k, t in enumerate(traj.times):
        H = spec(t)
        if spec.hermitian:
            out[k] = speed_hermitian(H, traj.samples[k], spec.hbar)
        else:
            out[k] = speed_nonhermitian(split_hamiltonian(H), traj.samples[k], spec.hbar)
    return out


def mt_bound(traj: Trajectory, spec: GeneratorSpec, tolerance: float = BOUND_SLACK) -> BoundReport:
    """Mandelstam-Tamm form: ``T_qsl = hbar S0 / (2 <dH>_T)``."""
    if not spec.hermitian:
        raise ValueError("the Mandelstam-Tamm bound needs a Hermitian generator")
    dH = np.array([np.sqrt(variance(spec(t), traj.samples[k])) for k, t in enumerate(traj.times)])
    T = traj.duration
    mean_dH = integrate_samples(dH, traj.dt) / T
    S = 2.0 * mean_dH * T / spec.hbar
    S0 = geodesic_distance(traj.samples[0], traj.samples[-1])
    return bound_from(S0, S, T, tolerance)
