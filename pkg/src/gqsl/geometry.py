"""Fubini-Study geometry on rays of Hilbert space and the speed-limit bound.

States are kept unnormalized; every quantity here is invariant under
``psi -> z * psi`` for nonzero complex ``z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .numerics import NumericalError, as_vector, integrate_samples

DEFAULT_CONTINUITY = 0.9
BOUND_SLACK = 1e-4


class GridTooCoarse(NumericalError):
    """Arc length came out shorter than the geodesic distance."""


class DiscontinuityError(NumericalError, ValueError):
    """Consecutive samples are too far apart for arc length to make sense."""


@dataclass(frozen=True)
class PureState:
    """A ray in projective Hilbert space, stored through any representative."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = as_vector(self.amplitudes)
        if not np.linalg.norm(amps) > 0:
            raise ValueError("zero vector does not represent a state")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> np.ndarray:
        return self.amplitudes / self.norm


def as_state(psi) -> PureState:
    return psi if isinstance(psi, PureState) else PureState(psi)


def overlap_modulus(a, b) -> float:
    """``|<a~|b~>|`` clamped into [0, 1]."""
    a, b = as_state(a), as_state(b)
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    ov = abs(np.vdot(a.normalized(), b.normalized()))
    return float(min(max(ov, 0.0), 1.0))


def fs_distance(a, b) -> float:
    """Generalized Fubini-Study distance ``2 sqrt(1 - |<a~|b~>|^2)``, in [0, 2]."""
    ov = overlap_modulus(a, b)
    return float(2.0 * np.sqrt(max(1.0 - ov * ov, 0.0)))


def geodesic_distance(a, b) -> float:
    """Length of the shortest path between two rays, ``2 arccos |<a~|b~>|``."""
    return float(2.0 * np.arccos(overlap_modulus(a, b)))


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled curve ``t0 + k*dt -> samples[k]`` of unnormalized states.

    Consecutive normalized samples must overlap by more than
    ``continuity`` in modulus; otherwise arc lengths are meaningless.
    """

    samples: np.ndarray
    dt: float
    hbar: float = 1.0
    t0: float = 0.0
    continuity: float = DEFAULT_CONTINUITY

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        if s.ndim != 2:
            raise ValueError(f"samples must be a (n, dim) array, got shape {s.shape}")
        if s.shape[0] < 3:
            raise ValueError(f"a trajectory needs at least 3 samples, got {s.shape[0]}")
        if not np.all(np.isfinite(s)):
            raise ValueError("trajectory contains non-finite amplitudes")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be > 0, got {self.hbar}")
        norms = np.linalg.norm(s, axis=1)
        if np.any(norms == 0):
            k = int(np.argmin(norms))
            raise ValueError(f"sample {k} is the zero vector")
        unit = s / norms[:, None]
        ov = np.abs(np.einsum("ij,ij->i", unit[:-1].conj(), unit[1:]))
        bad = np.flatnonzero(ov <= self.continuity)
        if bad.size:
            k = int(bad[0])
            raise DiscontinuityError(
                f"trajectory is not continuous between samples {k} and {k + 1} "
                f"(|overlap| = {ov[k]:.4f} <= {self.continuity}); refine the grid"
            )
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.dt * (len(self) - 1)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    def state(self, k: int) -> PureState:
        return PureState(self.samples[k])

    def head(self, n: int) -> "Trajectory":
        """The first ``n`` samples as a new trajectory."""
        return Trajectory(self.samples[:n], self.dt, self.hbar, self.t0, self.continuity)


def _transported(samples: np.ndarray) -> np.ndarray:
    # Normalize, then fix phases so consecutive overlaps are real and positive.
    # This strips the dynamical phase, leaving a smooth representative whose
    # finite differences are not polluted by fast global rotation.
    unit = samples / np.linalg.norm(samples, axis=1)[:, None]
    out = np.empty_like(unit)
    out[0] = unit[0]
    for k in range(1, unit.shape[0]):
        ov = np.vdot(out[k - 1], unit[k])
        out[k] = unit[k] * (np.conj(ov) / abs(ov))
    return out


def _derivative(u: np.ndarray, dt: float) -> np.ndarray:
    d = np.empty_like(u)
    d[1:-1] = (u[2:] - u[:-2]) / (2.0 * dt)
    # One-sided (-3, 4, -1) stencils, written in differences so a stationary
    # curve gives exactly zero.
    d[0] = (3.0 * (u[1] - u[0]) - (u[2] - u[1])) / (2.0 * dt)
    d[-1] = (3.0 * (u[-1] - u[-2]) - (u[-2] - u[-3])) / (2.0 * dt)
    return d


def _speed_from(u: np.ndarray, du: np.ndarray) -> np.ndarray:
    # <u'|u'> - (i<u|u'>)^2 equals the squared norm of u' with its component
    # along u removed; the projected form avoids cancellation.
    inner = np.einsum("ij,ij->i", u.conj(), du)
    horizontal = du - inner[:, None] * u
    radicand = np.einsum("ij,ij->i", horizontal.conj(), horizontal).real
    if not np.all(np.isfinite(radicand)):
        k = int(np.flatnonzero(~np.isfinite(radicand))[0])
        raise NumericalError(f"non-finite state derivative at sample {k}")
    return 2.0 * np.sqrt(np.clip(radicand, 0.0, None))


def speed_profile(traj: Trajectory) -> np.ndarray:
    """Evolution speed at every sample, from finite differences of the curve.

    Interior points use a central second-order stencil, endpoints a one-sided
    second-order stencil.
    """
    u = _transported(traj.samples)
    return _speed_from(u, _derivative(u, traj.dt))


def speed_numeric(traj: Trajectory, index: int) -> float:
    """Evolution speed ``V(t_index)`` estimated from the sampled curve."""
    n = len(traj)
    if not -n <= index < n:
        raise IndexError(f"sample index {index} out of range for {n} samples")
    return float(speed_profile(traj)[index])


@dataclass(frozen=True)
class BoundReport:
    T: float
    S0: float
    S: float
    V_bar: float
    T_qsl: float
    ratio: float
    meta: dict = field(default_factory=dict, compare=False)

    def as_row(self) -> tuple[float, ...]:
        return (self.T, self.S0, self.S, self.V_bar, self.T_qsl, self.ratio)

    def to_dict(self) -> dict:
        d = asdict(self)
        if not d["meta"]:
            d.pop("meta")
        return d


def bound_from(S0: float, S: float, T: float, tolerance: float = BOUND_SLACK, meta=None) -> BoundReport:
    """Assemble a report from the geodesic distance and the arc length."""
    if S < S0 - tolerance:
        raise GridTooCoarse(
            f"arc length S={S:.10g} is shorter than geodesic S0={S0:.10g} "
            f"by more than {tolerance:g}; the time grid is too coarse"
        )
    T, S0, S = float(T), float(S0), float(S)
    V_bar = S / T
    T_qsl = 0.0 if S == 0 else T * S0 / S
    return BoundReport(T=T, S0=S0, S=S, V_bar=V_bar, T_qsl=T_qsl, ratio=T_qsl / T, meta=dict(meta or {}))


def qsl_report(traj: Trajectory, tolerance: float = BOUND_SLACK) -> BoundReport:
    """Speed-limit bound for the curve: ``T_qsl = S0 / V_bar``."""
    V = speed_profile(traj)
    S = integrate_samples(V, traj.dt)
    S0 = geodesic_distance(traj.samples[0], traj.samples[-1])
    return bound_from(S0, S, traj.duration, tolerance)
