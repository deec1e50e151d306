"""Driven two-level atom with unequal level decay (rotating-wave form, hbar = 1).

    H(t) = [[-i gamma_1/2,        Omega e^{i Delta t}],
            [Omega e^{-i Delta t}, -i gamma_2/2       ]]

The propagator factorizes as ``U(t) = T(t) Z(t) exp(i M t)`` with a constant
``M``; the evolved state of ``(|0> + |1>)/sqrt(2)`` has a closed form in
terms of ``c2 = sqrt((gamma + i Delta)^2 - 4 Omega^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dynamics import GeneratorSpec, HermitianSplit
from ..geometry import (
    BOUND_SLACK,
    BoundReport,
    PureState,
    Trajectory,
    bound_from,
    speed_profile,
)
from ..numerics import NumericalError, integrate_samples, mat_exp

SERIES_THRESHOLD = 1e-6

PSI0 = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True)
class BetheLambParams:
    gamma_1: float
    gamma_2: float
    Delta: float
    Omega: float

    def __post_init__(self):
        for name in ("gamma_1", "gamma_2", "Delta", "Omega"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.gamma_1 < 0 or self.gamma_2 < 0:
            raise ValueError("decay rates must be >= 0")

    @classmethod
    def from_lifetimes(cls, tau_1: float, tau_2: float, Delta: float, Omega: float) -> "BetheLambParams":
        return cls(gamma_1=1.0 / tau_1, gamma_2=1.0 / tau_2, Delta=Delta, Omega=Omega)

    @property
    def gamma(self) -> float:
        return 0.5 * (self.gamma_1 - self.gamma_2)

    @property
    def c2(self) -> complex:
        return np.sqrt((self.gamma + 1j * self.Delta) ** 2 - 4.0 * self.Omega**2)

    def hamiltonian(self, t: float) -> np.ndarray:
        off = self.Omega * np.exp(1j * self.Delta * t)
        return np.array(
            [[-0.5j * self.gamma_1, off], [np.conj(off), -0.5j * self.gamma_2]],
            dtype=complex,
        )

    def split(self, t: float) -> HermitianSplit:
        off = self.Omega * np.exp(1j * self.Delta * t)
        return HermitianSplit(
            H_plus=np.array([[0, off], [np.conj(off), 0]], dtype=complex),
            Gamma=np.diag([0.5 * self.gamma_1, 0.5 * self.gamma_2]).astype(complex),
        )

    def generator(self) -> GeneratorSpec:
        return GeneratorSpec(self.hamiltonian, dim=2, hermitian=False)

    def M(self) -> np.ndarray:
        return np.array(
            [[0, -self.Omega], [-self.Omega, self.Delta - 1j * self.gamma]],
            dtype=complex,
        )

    def characteristic_rate(self) -> float:
        return max(abs(self.c2), abs(self.Delta), self.gamma_1, self.gamma_2)


def bl_propagator(p: BetheLambParams, t: float) -> np.ndarray:
    """``T(t) Z(t) exp(i M t)``."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    T = np.diag([np.exp(-0.5 * p.gamma_1 * t), np.exp(-0.5 * p.gamma_2 * t)])
    Z = np.diag([1.0, np.exp(-1j * t * (p.Delta - 1j * p.gamma))])
    return T @ Z @ mat_exp(p.M(), 1j * t)


def _scaled_z(p: BetheLambParams, t: float) -> tuple[complex, complex]:
    # z1/c2 and z2/c2: the common factor c2 cancels on normalization and
    # dividing it out keeps the pair finite when c2 -> 0.
    c2 = p.c2
    x = 0.5 * c2 * t
    if abs(x) < SERIES_THRESHOLD:
        ch = 1.0 + x * x / 2.0
        sh_over_c2 = 0.5 * t * (1.0 + x * x / 6.0)
    else:
        ch = np.cosh(x)
        sh_over_c2 = np.sinh(x) / c2
    s2 = np.sqrt(2.0)
    a = (p.gamma + 1j * p.Delta) / s2
    b = s2 * 1j * p.Omega
    w1 = ch / s2 - (a + b) * sh_over_c2
    w2 = ch / s2 + (a - b) * sh_over_c2
    return complex(w1), complex(w2)


def bl_z(p: BetheLambParams, t: float) -> tuple[complex, complex]:
    """``z1(t)`` and ``z2(t)`` in their unscaled normalization."""
    w1, w2 = _scaled_z(p, t)
    return p.c2 * w1, p.c2 * w2


def bl_state(p: BetheLambParams, t: float) -> PureState:
    """Normalized evolved state ``(e^{i t Delta/2} z1, e^{-i t Delta/2} z2)``."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    w1, w2 = _scaled_z(p, t)
    ph = np.exp(0.5j * p.Delta * t)
    v = np.array([ph * w1, np.conj(ph) * w2], dtype=complex)
    n = np.linalg.norm(v)
    if not n > 0 or not np.isfinite(n):
        raise NumericalError(f"Bethe-Lamb state norm is {n} at t={t}")
    return PureState(v / n)


def bl_quantities(p: BetheLambParams, t: float) -> dict:
    """Geodesic distance from the initial state, variances and commutator term."""
    w1, w2 = _scaled_z(p, t)
    n2 = abs(w1) ** 2 + abs(w2) ** 2
    cross = w1 * np.conj(w2)
    ph = np.exp(0.5j * p.Delta * t)
    ov = abs(ph * w1 + np.conj(ph) * w2) / np.sqrt(2.0 * n2)
    return {
        "S0_term": float(2.0 * np.arccos(min(ov, 1.0))),
        "var_Hplus": float(p.Omega**2 * (1.0 - 4.0 * cross.real**2 / n2**2)),
        "var_Gamma": float(abs(w1) ** 2 * abs(w2) ** 2 * p.gamma**2 / n2**2),
        "comm_term": float(2.0 * p.Omega * p.gamma * cross.imag / n2),
    }


def bl_speed(p: BetheLambParams, t: float) -> float:
    q = bl_quantities(p, t)
    radicand = q["var_Hplus"] + q["var_Gamma"] + q["comm_term"]
    scale = max(p.Omega**2, p.gamma**2, 1.0)
    if radicand < -1e-10 * scale:
        raise NumericalError(f"negative speed radicand {radicand:.3e} at t={t}")
    return float(2.0 * np.sqrt(max(radicand, 0.0)))


def bl_trajectory(p: BetheLambParams, T: float, steps: int) -> Trajectory:
    if not T > 0:
        raise ValueError(f"T must be > 0, got {T}")
    times = np.linspace(0.0, T, steps + 1)
    samples = np.array([bl_state(p, t).amplitudes for t in times])
    return Trajectory(samples, T / steps)


def default_steps(p: BetheLambParams, T: float) -> int:
    return max(2000, 40 * int(np.ceil(T * p.characteristic_rate())))


def bl_bound(p: BetheLambParams, T: float, steps: int | None = None, tolerance: float = BOUND_SLACK) -> BoundReport:
    """Speed-limit bound over ``[0, T]`` on the closed-form trajectory.

    ``steps`` defaults to a uniform grid that resolves the fastest rate in
    the problem, so widely spaced ``T`` values can share one call pattern.
    """
    if steps is None:
        steps = default_steps(p, T)
    traj = bl_trajectory(p, T, steps)
    S = integrate_samples(speed_profile(traj), traj.dt)
    S0 = bl_quantities(p, T)["S0_term"]
    return bound_from(S0, S, T, tolerance)


def log_times(t_min: float, t_max: float, count: int) -> np.ndarray:
    return np.geomspace(t_min, t_max, count)
