"""Quantum speed limits for arbitrary continuous evolutions of finite-dimensional states."""

from .dynamics import (
    GeneratorSpec,
    HermitianSplit,
    evolve,
    expectation,
    mt_bound,
    speed_hermitian,
    speed_nonhermitian,
    split_hamiltonian,
    variance,
)
from .geometry import (
    BoundReport,
    PureState,
    Trajectory,
    fs_distance,
    geodesic_distance,
    qsl_report,
    speed_numeric,
    speed_profile,
)
from .mixed import DensityTrajectory, mixed_qsl, purified_trajectory, purify
from .numerics import NumericalError, integrate_samples, mat_exp, solve_ode

__version__ = "0.1.0"
