"""Dense complex linear algebra, fixed-step propagation and quadrature.

Everything here targets the small (dim <= ~16) systems used by the rest of
the package; nothing is sparse or adaptive.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.linalg

OVERFLOW_THRESHOLD = 1e150


class NumericalError(RuntimeError):
    """Raised when a computation cannot produce finite, trustworthy numbers."""


class OverflowBlowup(NumericalError):
    """State amplitudes grew past ``OVERFLOW_THRESHOLD``."""

    def __init__(self, t: float, magnitude: float):
        self.t = float(t)
        self.magnitude = float(magnitude)
        super().__init__(
            f"state norm diverged at t={self.t:.17g} "
            f"(max |amplitude| = {self.magnitude:.3e} > {OVERFLOW_THRESHOLD:.0e})"
        )


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def as_vector(y) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    if y.ndim != 1:
        raise ValueError(f"expected a vector, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("vector has non-finite entries")
    return y


def mat_exp(A, s: float = 1.0) -> np.ndarray:
    """Return ``exp(s * A)``.

    Scaling and squaring with a Pade approximant (scipy's implementation),
    which stays accurate for defective matrices such as a generator sitting
    exactly at an exceptional point.
    """
    A = as_matrix(A)
    if not np.isfinite(s):
        raise ValueError(f"non-finite scale factor {s!r}")
    return scipy.linalg.expm(s * A)


def _check_overflow(y: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(y)):
        raise OverflowBlowup(t, np.inf)
    peak = np.max(np.abs(y)) if y.size else 0.0
    if peak > OVERFLOW_THRESHOLD:
        raise OverflowBlowup(t, peak)


def solve_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_max: float,
    steps: int,
    t0: float = 0.0,
) -> np.ndarray:
    """Integrate ``dy/dt = rhs(t, y)`` with classical RK4 on a uniform grid.

    Returns an array of shape ``(steps + 1, dim)``; row ``k`` is the state at
    ``t0 + k * t_max / steps``.
    """
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    if not t_max > 0:
        raise ValueError(f"t_max must be > 0, got {t_max}")
    y = as_vector(y0).copy()
    dt = t_max / steps
    out = np.empty((steps + 1, y.size), dtype=complex)
    out[0] = y
    for k in range(steps):
        t = t0 + k * dt
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check_overflow(y, t + dt)
        out[k + 1] = y
    return out


def integrate_samples(values: Sequence[float], dt: float) -> float:
    """Composite Simpson rule over uniformly spaced samples.

    With an even number of samples the final panel is closed with the
    trapezoid rule.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("need at least 2 samples")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite sample in integrand")
    n = v.size
    if n == 2:
        return float(0.5 * dt * (v[0] + v[1]))
    m = n if n % 2 == 1 else n - 1
    body = v[:m]
    total = dt / 3.0 * (body[0] + body[-1] + 4.0 * body[1:-1:2].sum() + 2.0 * body[2:-1:2].sum())
    if m != n:
        total += 0.5 * dt * (v[-2] + v[-1])
    return float(total)


def cumulative_integral(values: Sequence[float], dt: float) -> np.ndarray:
    """Running integral at every sample.

    Even-indexed points use Simpson up to that point; odd-indexed points add
    a trapezoid panel, matching ``integrate_samples`` at the last sample.
    """
    v = np.asarray(values, dtype=float)
    out = np.zeros(v.size)
    for k in range(2, v.size, 2):
        out[k] = out[k - 2] + dt / 3.0 * (v[k - 2] + 4.0 * v[k - 1] + v[k])
    for k in range(1, v.size, 2):
        out[k] = out[k - 1] + 0.5 * dt * (v[k - 1] + v[k])
    return out
