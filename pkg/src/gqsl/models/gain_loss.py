"""Two coupled modes with gain and loss, including the balanced (PT) case.

One complex-arithmetic path covers strong coupling (real ``delta``), weak
coupling (imaginary ``delta``) and the exceptional point ``g == kappa_plus``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dynamics import GeneratorSpec, HermitianSplit, commutator_term
from ..geometry import (
    BOUND_SLACK,
    BoundReport,
    PureState,
    Trajectory,
    bound_from,
    geodesic_distance,
    speed_profile,
)
from ..numerics import NumericalError, integrate_samples

SERIES_THRESHOLD = 1e-6
EXCEPTIONAL_RTOL = 1e-12
IMAG_TOL = 1e-10

PSI0 = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True)
class GainLossParams:
    g: float
    gamma_L: float
    gamma_G: float

    def __post_init__(self):
        for name in ("g", "gamma_L", "gamma_G"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")

    @classmethod
    def pt_symmetric(cls, g: float, gamma: float) -> "GainLossParams":
        """Balanced gain and loss, ``gamma_L == gamma_G == gamma``."""
        return cls(g=g, gamma_L=gamma, gamma_G=gamma)

    @property
    def kappa_plus(self) -> float:
        return 0.5 * (self.gamma_L + self.gamma_G)

    @property
    def kappa_minus(self) -> float:
        return 0.5 * (self.gamma_L - self.gamma_G)

    @property
    def delta(self) -> complex:
        return np.sqrt(complex(self.g**2 - self.kappa_plus**2))

    def hamiltonian(self) -> np.ndarray:
        return np.array([[-1j * self.gamma_L, self.g], [self.g, 1j * self.gamma_G]], dtype=complex)

    def split(self) -> HermitianSplit:
        return HermitianSplit(
            H_plus=np.array([[0, self.g], [self.g, 0]], dtype=complex),
            Gamma=np.diag([self.gamma_L, -self.gamma_G]).astype(complex),
        )

    def generator(self) -> GeneratorSpec:
        return GeneratorSpec.constant(self.hamiltonian(), hermitian=False)

    def characteristic_rate(self) -> float:
        return max(abs(self.delta), self.kappa_plus, self.g, abs(self.kappa_minus))


def gl_spectrum(p: GainLossParams) -> dict:
    """Eigenvalues ``-i kappa_minus +/- delta`` and the coupling regime."""
    d = p.delta
    kp = p.kappa_plus
    if abs(p.g - kp) <= EXCEPTIONAL_RTOL * max(p.g, kp):
        regime = "exceptional"
    elif p.g > kp:
        regime = "strong"
    else:
        regime = "weak"
    base = -1j * p.kappa_minus
    return {"lambda_plus": base + d, "lambda_minus": base - d, "delta": d, "regime": regime}


def _cos_sinc(delta: complex, t: float) -> tuple[complex, complex]:
    """``cos(delta t)`` and ``sin(delta t)/delta`` with the removable point handled."""
    x = delta * t
    if abs(x) < SERIES_THRESHOLD:
        x2 = x * x
        return 1.0 - x2 / 2.0, t * (1.0 - x2 / 6.0)
    return np.cos(x), np.sin(x) / delta


def gl_propagator(p: GainLossParams, t: float) -> np.ndarray:
    """Closed-form ``exp(-i H t)`` for the gain-loss generator."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    c, sc = _cos_sinc(p.delta, t)
    kp, g = p.kappa_plus, p.g
    U = np.array(
        [[c - kp * sc, -1j * g * sc], [-1j * g * sc, c + kp * sc]],
        dtype=complex,
    )
    return np.exp(-t * p.kappa_minus) * U


def gl_state(p: GainLossParams, t: float) -> PureState:
    """Normalized evolved state starting from ``(|0> + |1>)/sqrt(2)``."""
    psi = gl_propagator(p, t) @ PSI0
    n = np.linalg.norm(psi)
    if not n > 0:
        raise NumericalError(f"gain-loss state vanished at t={t}")
    return PureState(psi / n)


def gl_state_closed_form(p: GainLossParams, t: float) -> np.ndarray:
    """Evolved state from its component-wise closed form, normalized.

    Kept separate from ``gl_state`` so the two can be compared.
    """
    d = p.delta
    c, sc = _cos_sinc(d, t)
    kp, g = p.kappa_plus, p.g
    # The common factor exp(-t kappa_minus)/(sqrt(2) delta N1) is dropped and
    # the result normalized; delta*cos - (...)*sin is written via sin/delta.
    v = np.array([c - (1j * g + kp) * sc, c - (1j * g - kp) * sc], dtype=complex)
    return v / np.linalg.norm(v)


def _real(value: complex, what: str, scale: float = 1.0) -> float:
    value = complex(value)
    if abs(value.imag) > IMAG_TOL * max(1.0, scale):
        raise NumericalError(f"{what} has imaginary residue {value.imag:.3e}")
    return float(value.real)


def _A(p: GainLossParams, t: float) -> complex:
    return p.g**2 - p.kappa_plus**2 * np.cos(2.0 * p.delta * t)


def _B(p: GainLossParams, t: float) -> complex:
    # g^2 - kappa_plus^2 cos(2 delta t) == delta^2 * B; dividing through by
    # delta^2 removes the 0/0 at the exceptional point.
    _, sc = _cos_sinc(p.delta, t)
    return 1.0 + 2.0 * p.kappa_plus**2 * sc**2


def var_hplus_closed_form(p: GainLossParams, t: float) -> float:
    B = _B(p, t)
    return _real(p.g**2 * (1.0 - 1.0 / B**2), "Var(H_plus)", p.g**2)


def var_gamma_closed_form(p: GainLossParams, t: float) -> float:
    c, sc = _cos_sinc(p.delta, t)
    B = _B(p, t)
    kp = p.kappa_plus
    # delta^2 sin^2(2 delta t) / A^2 == (2 cos * sinc)^2 / B^2
    return _real(kp**2 - 4.0 * kp**4 * (c * sc) ** 2 / B**2, "Var(Gamma)", kp**2)


def commutator_term_derived(p: GainLossParams, t: float) -> float:
    """``i<[Gamma, H_plus]>`` on the normalized evolved state, in closed form.

    Equals ``-4 g^2 kappa_plus^2 sin^2(delta t) / (g^2 - kappa_plus^2 cos(2 delta t))``.
    """
    _, sc = _cos_sinc(p.delta, t)
    return _real(-4.0 * p.g**2 * p.kappa_plus**2 * sc**2 / _B(p, t), "derived commutator term", p.g * p.kappa_plus)


def commutator_term_reference(p: GainLossParams, t: float) -> float:
    """``i<[Gamma, H_plus]>`` from the reference form carrying ``exp(-2 t kappa_minus)/delta^2``.

    Only used by the formula audit.
    """
    _, sc = _cos_sinc(p.delta, t)
    comm = 4j * p.g**2 * p.kappa_plus**2 * np.exp(-2.0 * t * p.kappa_minus) * sc**2
    return _real(1j * comm, "reference commutator term", p.g * p.kappa_plus)


def speed_polynomial_form(p: GainLossParams, t: float) -> float:
    """Collected-polynomial speed expression, for comparison only."""
    g, kp, d = p.g, p.kappa_plus, p.delta
    poly = 2 * g**6 - 2 * g**4 * kp**2 - g**2 * (2 * d**4 + kp**4) - d**2 * kp**4 + kp**6
    value = 2.0 / (_A(p, t) * np.sqrt(2.0)) * np.sqrt(complex(poly))
    return _real(value, "polynomial speed form", 1.0)


def gl_quantities(p: GainLossParams, t: float) -> dict:
    """Variances, commutator term and speed along the evolved state.

    The commutator term comes from the expectation on the evolved state;
    the variances from their closed forms.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    psi = gl_state(p, t)
    var_hp = var_hplus_closed_form(p, t)
    var_g = var_gamma_closed_form(p, t)
    comm = commutator_term(p.split(), psi)
    radicand = var_hp + var_g + comm
    if radicand < -1e-10:
        raise NumericalError(f"negative speed radicand {radicand:.3e} at t={t}")
    return {
        "var_Hplus": var_hp,
        "var_Gamma": var_g,
        "comm_term": comm,
        "V": 2.0 * np.sqrt(max(radicand, 0.0)),
    }


def gl_speed(p: GainLossParams, t: float) -> float:
    return gl_quantities(p, t)["V"]


def gl_trajectory(p: GainLossParams, T: float, steps: int) -> Trajectory:
    if not T > 0:
        raise ValueError(f"T must be > 0, got {T}")
    times = np.linspace(0.0, T, steps + 1)
    samples = np.array([gl_state(p, t).amplitudes for t in times])
    return Trajectory(samples, T / steps)


def gl_geodesic(p: GainLossParams, T: float) -> float:
    """Geodesic distance from the initial state to the state at ``T``."""
    return geodesic_distance(PSI0, gl_state(p, T))


def gl_bound(p: GainLossParams, T: float, steps: int, tolerance: float = BOUND_SLACK) -> BoundReport:
    """Speed-limit bound over ``[0, T]`` on the closed-form trajectory."""
    traj = gl_trajectory(p, T, steps)
    S = integrate_samples(speed_profile(traj), traj.dt)
    return bound_from(gl_geodesic(p, T), S, T, tolerance)
