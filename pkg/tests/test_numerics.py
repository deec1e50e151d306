import numpy as np
import pytest

from gqsl.numerics import (
    OverflowBlowup,
    cumulative_integral,
    integrate_samples,
    mat_exp,
    solve_ode,
)


def test_mat_exp_matches_eigendecomposition(rng):
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    H = A + A.conj().T
    w, V = np.linalg.eigh(H)
    ref = V @ np.diag(np.exp(-0.7j * w)) @ V.conj().T
    assert np.allclose(mat_exp(H, -0.7j), ref, atol=1e-12)


def test_mat_exp_defective_matrix():
    # Nilpotent Jordan block: the series terminates after the linear term.
    J = np.array([[0, 1], [0, 0]], dtype=complex)
    assert np.allclose(mat_exp(J, 2.5), np.eye(2) + 2.5 * J, atol=1e-14)


def test_mat_exp_rejects_bad_input():
    with pytest.raises(ValueError):
        mat_exp(np.ones((2, 3)))
    with pytest.raises(ValueError):
        mat_exp(np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(ValueError):
        mat_exp(np.eye(2), np.inf)


def test_rk4_oscillator_and_order():
    w = 1.3
    exact = np.exp(-1j * w * 2.0)
    errs = []
    for steps in (50, 100):
        y = solve_ode(lambda t, y: -1j * w * y, [1.0], 2.0, steps)
        assert y.shape == (steps + 1, 1)
        errs.append(abs(y[-1, 0] - exact))
    assert errs[1] < 1e-6
    assert 12 < errs[0] / errs[1] < 20  # fourth order


def test_rk4_time_dependent_rhs():
    # y' = 2 t y  ->  y = exp(t^2)
    y = solve_ode(lambda t, y: 2 * t * y, [1.0], 1.0, 400)
    assert abs(y[-1, 0] - np.e) < 1e-9


def test_rk4_overflow_reports_time():
    with pytest.raises(OverflowBlowup) as info:
        solve_ode(lambda t, y: 500.0 * y, [1.0], 2.0, 4000)
    assert 0 < info.value.t < 2.0
    assert "t=" in str(info.value)


def test_rk4_rejects_bad_grid():
    with pytest.raises(ValueError):
        solve_ode(lambda t, y: y, [1.0], 1.0, 1)
    with pytest.raises(ValueError):
        solve_ode(lambda t, y: y, [1.0], 0.0, 10)


def test_simpson_exact_on_cubics():
    x = np.linspace(0, 2, 11)
    assert integrate_samples(x**3 - x, x[1]) == pytest.approx(4 - 2, abs=1e-13)


def test_simpson_even_count_uses_trapezoid_panel():
    x = np.linspace(0, 1, 4)
    v = x**2
    dt = x[1]
    expected = dt / 3 * (v[0] + 4 * v[1] + v[2]) + dt / 2 * (v[2] + v[3])
    assert integrate_samples(v, dt) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("n", [201, 202])
def test_simpson_accuracy_and_cumulative_agreement(n):
    x = np.linspace(0, np.pi, n)
    v = np.sin(x)
    total = integrate_samples(v, x[1])
    assert abs(total - 2.0) < 1e-5
    assert cumulative_integral(v, x[1])[-1] == pytest.approx(total, rel=1e-14)


def test_cumulative_is_monotone_for_positive_integrand():
    v = 1.0 + np.random.default_rng(0).random(50)
    c = cumulative_integral(v, 0.1)
    assert c[0] == 0.0
    assert np.all(np.diff(c) > 0)


def test_integrate_rejects_nonfinite():
    with pytest.raises(ValueError):
        integrate_samples([1.0, np.nan, 1.0], 0.1)
    with pytest.raises(ValueError):
        integrate_samples([1.0], 0.1)
