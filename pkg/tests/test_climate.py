import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sustain_models.climate import (
    LorenzParams, LyapunovSettings, divergence_experiment, integrate_lorenz_generic,
    lorenz_equilibria, lorenz_family, lorenz_rhs, max_lyapunov, simulate_lorenz,
)
from sustain_models.errors import IntegrationError
from sustain_models.numerics import TimeGrid

CLASSIC = LorenzParams(10.0, 28.0, 8.0 / 3.0)
positive = st.floats(0.01, 100.0)


def test_rhs_value():
    np.testing.assert_allclose(lorenz_rhs([1.0, 2.0, 3.0], CLASSIC), [10.0, 23.0, 2.0 - 8.0])


@pytest.mark.parametrize("bad", [dict(sigma=0), dict(rho=-1), dict(beta=math.nan)])
def test_params_reject(bad):
    kw = dict(sigma=10, rho=28, beta=8 / 3) | bad
    with pytest.raises(ValueError):
        LorenzParams(**kw)


@given(positive, positive, positive)
def test_equilibria_are_roots(sigma, rho, beta):
    p = LorenzParams(sigma, rho, beta)
    eqs = lorenz_equilibria(p)
    assert len(eqs) == (3 if rho > 1 else 1)
    for e in eqs:
        scale = max(1.0, rho * beta, sigma * rho)
        assert np.max(np.abs(lorenz_rhs(e, p))) <= 1e-12 * scale


def test_equilibria_classic():
    eqs = lorenz_equilibria(CLASSIC)
    q = math.sqrt(72.0)
    assert eqs[1] == pytest.approx((q, q, 27.0))
    assert eqs[2] == pytest.approx((-q, -q, 27.0))


def test_frozen_trajectory():
    tr = simulate_lorenz(CLASSIC, [1, 1, 1], TimeGrid(0, 1, 0.01))
    assert tr.final.tolist() == [-9.378615807236296, -8.357059955292339, 29.362403750125733]


def test_kernel_matches_generic_integrator():
    g = TimeGrid(0, 2, 0.01)
    a = simulate_lorenz(CLASSIC, [1, 2, 3], g)
    b = integrate_lorenz_generic(CLASSIC, [1, 2, 3], g)
    np.testing.assert_allclose(a.states, b.states, rtol=1e-12, atol=1e-12)


def test_stable_regime_decays():
    tr = simulate_lorenz(LorenzParams(10, 0.5, 8 / 3), [0.5, -0.3, 0.2], TimeGrid(0, 50, 0.01))
    assert np.linalg.norm(tr.final) < 1e-6


def test_divergence_raises():
    with pytest.raises(IntegrationError):
        simulate_lorenz(CLASSIC, [1, 1, 1], TimeGrid(0, 50, 1.0))


def test_bad_state():
    with pytest.raises(ValueError):
        simulate_lorenz(CLASSIC, [1, 1], TimeGrid(0, 1, 0.1))


def test_divergence_experiment_grows():
    s = divergence_experiment(CLASSIC, [1, 1, 1], [1e-9, 0, 0], TimeGrid(0, 30, 0.01))
    assert s.separation[0] == pytest.approx(1e-9)
    assert s.separation[-1] > 1e-3
    with pytest.raises(ValueError):
        divergence_experiment(CLASSIC, [1, 1, 1], [0, 0, 0], TimeGrid(0, 1, 0.01))


def test_lyapunov_stable_matches_linearization():
    # at rho < 1 the exponent is the slowest decay rate of the origin
    p = LorenzParams(10, 0.5, 8 / 3)
    s, r = p.sigma, p.rho
    lam = (-(s + 1) + math.sqrt((s - 1) ** 2 + 4 * s * r)) / 2
    est = max_lyapunov(p, [0.1, 0.1, 0.1], LyapunovSettings(total_time=200, step=0.01))
    assert est == pytest.approx(lam, abs=0.02)


def test_lyapunov_chaotic_short():
    est = max_lyapunov(CLASSIC, [1, 1, 1], LyapunovSettings(total_time=60, step=0.005), seed=1)
    assert 0.6 < est < 1.2


def test_lyapunov_generic_path_agrees():
    settings = LyapunovSettings(total_time=5, step=0.01)
    a = max_lyapunov(CLASSIC, [1, 1, 1], settings, seed=0)
    b = max_lyapunov(CLASSIC, [1, 1, 1], settings, seed=0, rhs=lambda t, y: lorenz_rhs(y, CLASSIC))
    assert a == pytest.approx(b, rel=1e-9)


def test_lyapunov_settings_validate():
    with pytest.raises(ValueError):
        LyapunovSettings(total_time=1, transient=2)
    with pytest.raises(ValueError):
        LyapunovSettings(step=0.1, renormalization_interval=0.01)
    with pytest.raises(ValueError):
        max_lyapunov(CLASSIC, [1, 1, 1], direction=[0, 0, 0])


def test_family_varies_one_parameter():
    f = lorenz_family(CLASSIC, "rho")(0.5)
    np.testing.assert_allclose(f(np.array([1.0, 0.0, 0.0])), [-10.0, 0.5, 0.0])
    with pytest.raises(ValueError):
        lorenz_family(CLASSIC, "gamma")
