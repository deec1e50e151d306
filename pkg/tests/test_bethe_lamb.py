import numpy as np
import pytest

from gqsl.dynamics import commutator_term, variance
from gqsl.geometry import geodesic_distance, overlap_modulus, speed_profile
from gqsl.models import SLOW_GROUND
from gqsl.models import bethe_lamb as bl
from gqsl.numerics import solve_ode

GENERIC = bl.BetheLambParams(0.3, 1.1, 0.7, 0.4)
# gamma = 2 Omega and Delta = 0 puts c2 exactly at zero.
DEGENERATE = bl.BetheLambParams(1.0, 0.2, 0.0, 0.2)


def ode_propagator(p, t, steps=4000):
    cols = [solve_ode(lambda s, y: -1j * (p.hamiltonian(s) @ y), e, t, steps)[-1] for e in np.eye(2)]
    return np.column_stack(cols)


@pytest.mark.parametrize("p", [GENERIC, DEGENERATE, bl.BetheLambParams(0.0, 0.0, 1.5, 0.8)])
def test_propagator_matches_ode(p):
    for t in (0.4, 2.5):
        assert np.allclose(bl.bl_propagator(p, t), ode_propagator(p, t), atol=1e-11)


def test_undriven_levels_decay_independently():
    p = bl.BetheLambParams(0.3, 1.1, 0.7, 0.0)
    for t in (0.0, 0.5, 4.0):
        expected = np.diag([np.exp(-0.15 * t), np.exp(-0.55 * t)])
        assert np.allclose(bl.bl_propagator(p, t), expected, atol=1e-14)


@pytest.mark.parametrize("p", [GENERIC, DEGENERATE])
def test_state_matches_propagator(p):
    assert p is not DEGENERATE or p.c2 == 0
    for t in (0.0, 1e-9, 0.8, 3.0):
        ref = bl.bl_propagator(p, t) @ bl.PSI0
        assert overlap_modulus(bl.bl_state(p, t), ref) == pytest.approx(1.0, abs=1e-12)


def test_unscaled_z_pair_ratio():
    t = 0.8
    z1, z2 = bl.bl_z(GENERIC, t)
    psi = bl.bl_state(GENERIC, t).amplitudes
    ph = np.exp(0.5j * GENERIC.Delta * t)
    assert (ph * z1) / (np.conj(ph) * z2) == pytest.approx(psi[0] / psi[1])


@pytest.mark.parametrize("p", [GENERIC, DEGENERATE, SLOW_GROUND])
def test_quantities_against_direct(p):
    scale = max(p.Omega**2, p.gamma**2)
    for t in np.linspace(0, 10 / p.characteristic_rate(), 5):
        psi = bl.bl_state(p, t)
        s = p.split(t)
        q = bl.bl_quantities(p, t)
        assert q["var_Hplus"] == pytest.approx(variance(s.H_plus, psi), abs=1e-12 * scale)
        assert q["var_Gamma"] == pytest.approx(variance(s.Gamma, psi), abs=1e-12 * scale)
        assert q["comm_term"] == pytest.approx(commutator_term(s, psi), abs=1e-12 * scale)
        assert q["S0_term"] == pytest.approx(geodesic_distance(bl.PSI0, psi), abs=1e-7)


def test_master_identity():
    for p in (GENERIC, SLOW_GROUND):
        traj = bl.bl_trajectory(p, 10 / p.characteristic_rate(), 8000)
        V = np.array([bl.bl_speed(p, t) for t in traj.times])
        assert np.max(np.abs(speed_profile(traj) - V) / V) < 1e-5


def test_from_lifetimes_and_rate():
    assert SLOW_GROUND.gamma_1 == pytest.approx(10.0)
    assert SLOW_GROUND.gamma_2 == pytest.approx(6.25e8)
    assert SLOW_GROUND.characteristic_rate() >= SLOW_GROUND.gamma_2
    with pytest.raises(ValueError):
        bl.BetheLambParams(-1.0, 0.0, 0.0, 0.0)


def test_default_grid_bound_is_consistent():
    T = 1.6e-9
    r = bl.bl_bound(SLOW_GROUND, T)
    fine = bl.bl_bound(SLOW_GROUND, T, steps=4 * bl.default_steps(SLOW_GROUND, T))
    assert r.ratio == pytest.approx(fine.ratio, rel=1e-5)
    assert 0 < r.ratio <= 1 + 1e-6


def test_log_times():
    ts = bl.log_times(1e-10, 1e-7, 4)
    assert ts[0] == pytest.approx(1e-10) and ts[-1] == pytest.approx(1e-7)
    assert np.allclose(np.diff(np.log10(ts)), 1.0)
