from .bethe_lamb import (
    BetheLambParams,
    bl_bound,
    bl_propagator,
    bl_quantities,
    bl_speed,
    bl_state,
    bl_trajectory,
)
from .gain_loss import (
    GainLossParams,
    gl_bound,
    gl_propagator,
    gl_quantities,
    gl_spectrum,
    gl_speed,
    gl_state,
    gl_trajectory,
)

SLOW_GROUND = BetheLambParams.from_lifetimes(tau_1=1e-1, tau_2=1.6e-9, Delta=1.8e8, Omega=6e7)
