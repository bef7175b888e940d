import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sustain_models.ecosystem import (
    GeneralizedEcoParams, GeneralizedEcoState, Resource, SimpleEcoParams, generalized_rhs,
    liebig_factor, lv_conserved, simple_family, simple_rhs, simulate_generalized, simulate_simple,
)
from sustain_models.errors import ModelError
from sustain_models.numerics import TimeGrid

LV = SimpleEcoParams(r=1.0, c=0.1, b=0.02, m=0.4)


def test_simple_rhs():
    np.testing.assert_allclose(simple_rhs([40, 9], LV), [40 - 36, 7.2 - 3.6])


def test_coexistence_is_rest_point():
    eq = LV.coexistence
    assert (eq.N1, eq.N2) == pytest.approx((20.0, 10.0))
    np.testing.assert_allclose(simple_rhs(eq, LV), 0, atol=1e-12)


def test_conserved_rejects_extinct():
    with pytest.raises(ValueError):
        lv_conserved([0.0, 1.0], LV)


def test_frozen_trajectory():
    tr = simulate_simple(LV, [40, 9], TimeGrid(0, 10, 0.01))
    assert tr.final.tolist() == [38.162973756184876, 7.993930859047344]


@given(st.floats(0.2, 2), st.floats(0.05, 1), st.floats(0.01, 0.5), st.floats(0.1, 2),
       st.floats(0.3, 3), st.floats(0.3, 3))
def test_first_integral_drift_small(r, c, b, m, f1, f2):
    p = SimpleEcoParams(r, c, b, m)
    eq = p.coexistence
    tr = simulate_simple(p, [eq.N1 * f1, eq.N2 * f2], TimeGrid(0, 5, 0.002))
    v = [lv_conserved(s, p) for s in tr.states[:: max(1, len(tr) // 20)]]
    assert max(abs(x - v[0]) for x in v) <= 1e-6 * max(1.0, abs(v[0]))


def test_extinct_predator_gives_exponential_prey():
    tr = simulate_simple(LV, [1.0, 0.0], TimeGrid(0, 1, 0.001))
    assert tr.final[0] == pytest.approx(math.e, rel=1e-10)
    assert tr.final[1] == 0.0


def test_rejects_negative_population():
    with pytest.raises(ValueError):
        simulate_simple(LV, [-1.0, 1.0], TimeGrid(0, 1, 0.1))


def test_family():
    f = simple_family(LV, "m")(0.5)
    np.testing.assert_allclose(f(np.array([1.0, 1.0])), [0.9, -0.48])


vec = st.lists(st.floats(0, 1e3), min_size=1, max_size=8)


@given(st.data())
def test_liebig_min_dominance(data):
    R = data.draw(vec)
    K = data.draw(st.lists(st.floats(1e-3, 1e3), min_size=len(R), max_size=len(R)))
    f = liebig_factor(R, K)
    ratios = [r / k for r, k in zip(R, K)]
    assert f == min(ratios)
    assert all(f <= q for q in ratios)


@given(st.data())
def test_liebig_zero_annihilates(data):
    R = data.draw(vec)
    K = data.draw(st.lists(st.floats(1e-3, 1e3), min_size=len(R), max_size=len(R)))
    i = data.draw(st.integers(0, len(R) - 1))
    R[i] = 0.0
    assert liebig_factor(R, K) == 0.0


def test_liebig_validation():
    with pytest.raises(ValueError):
        liebig_factor([], [])
    with pytest.raises(ValueError):
        liebig_factor([1, 2], [1])
    with pytest.raises(ValueError):
        liebig_factor([1], [0])


GEN = GeneralizedEcoParams(0.8, 0.5, 0.3, (Resource(100, 2, 0.01), Resource(50, 1, 0.005)),
                           0.1, 0.05, 0.05)


def test_generalized_rhs_oracle():
    out = generalized_rhs(GeneralizedEcoState(10, 2, (80, 40)), GEN)
    g = 0.1 * 10 * 2
    np.testing.assert_allclose(out, [0.8 * 10 * 0.8 - g, 0.5 * g - 0.6,
                                     2 - 0.01 * 10 * 0.8, 1 - 0.005 * 10 * 0.8])


def test_generalized_custom_rates_checked():
    bad = GeneralizedEcoParams(1, 0.5, 0.3, (Resource(1),), predation=lambda x, y, R: -1.0)
    with pytest.raises(ModelError):
        generalized_rhs([1, 1, 1], bad)
    bad = GeneralizedEcoParams(1, 0.5, 0.3, (Resource(1, depletion=lambda x, y, r: math.nan),))
    with pytest.raises(ModelError):
        generalized_rhs([1, 1, 1], bad)


def test_generalized_frozen_and_seeded():
    g = TimeGrid(0, 10, 0.01)
    a = simulate_generalized(GEN, [10, 2, 80, 40], g, 42)
    assert a.final.tolist() == [1.0732728959917652, 5.167382199658619, 99.32435703521406,
                                49.66217851760703]
    b = simulate_generalized(GEN, [10, 2, 80, 40], g, 42)
    c = simulate_generalized(GEN, [10, 2, 80, 40], g, 43)
    np.testing.assert_array_equal(a.states, b.states)
    assert not np.array_equal(a.states, c.states)
    # resources carry no noise
    assert a.states.shape == c.states.shape


def test_generalized_stays_nonnegative():
    p = GeneralizedEcoParams(0.5, 0.5, 1.0, (Resource(1.0),), 1.0, 2.0, 2.0)
    tr = simulate_generalized(p, [0.1, 0.1, 0.5], TimeGrid(0, 20, 0.01), 0)
    assert tr.states.min() >= 0.0
    assert tr.clamp_events > 0


def test_generalized_params_validate():
    with pytest.raises(ValueError):
        GeneralizedEcoParams(1, 1.5, 1, (Resource(1),))
    with pytest.raises(ValueError):
        GeneralizedEcoParams(1, 0.5, 1, ())
    with pytest.raises(ValueError):
        Resource(0)
    with pytest.raises(ValueError):
        GeneralizedEcoState(-1, 0, (1,))
