import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risowc import turbulence as tb
from risowc.rerror import ConfigurationError


def test_none_regime_is_constant(rng):
    spec = tb.TurbulenceSpec('none')
    assert tb.sample_irradiance(spec, rng) == 1.0
    np.testing.assert_array_equal(tb.sample_irradiance(spec, rng, 5),
                                  np.ones(5))
    assert tb.mean_sqrt_irradiance(spec) == 1.0
    assert tb.scintillation_index(spec) == 0.0


def test_lognormal_mean_sqrt():
    spec = tb.TurbulenceSpec('lognormal', sigma_lnI_sq=0.25)
    assert tb.mean_sqrt_irradiance(spec) == pytest.approx(
        math.exp(-0.03125), rel=1e-14)
    assert tb.mean_sqrt_irradiance(spec) == pytest.approx(0.96923, abs=1e-5)


def test_gamma_gamma_mean_sqrt():
    spec = tb.TurbulenceSpec('gammagamma', alpha=4.0, beta=4.0)
    assert tb.mean_sqrt_irradiance(spec) == pytest.approx(0.93956, abs=1e-5)


def test_lognormal_sample_moments(rng):
    spec = tb.TurbulenceSpec('lognormal', sigma_lnI_sq=0.25)
    h = tb.sample_irradiance(spec, rng, 200000)
    assert h.min() > 0
    assert h.mean() == pytest.approx(1.0, abs=0.01)
    assert np.sqrt(h).mean() == pytest.approx(tb.mean_sqrt_irradiance(spec),
                                              abs=0.005)
    assert h.var() == pytest.approx(tb.scintillation_index(spec), rel=0.05)


regime_params = st.one_of(
    st.tuples(st.just('lognormal'), st.floats(0.01, 1.0), st.just(4.0),
              st.just(4.0)),
    st.tuples(st.just('gammagamma'), st.just(0.0), st.floats(2.0, 20.0),
              st.floats(2.0, 20.0)))


@settings(max_examples=20, deadline=None)
@given(regime_params, st.integers(0, 2**32 - 1))
def test_unit_mean_for_every_regime(params, seed):
    regime, s, a, b = params
    spec = tb.TurbulenceSpec(regime, sigma_lnI_sq=s, alpha=a, beta=b)
    n = 50000
    h = tb.sample_irradiance(spec, np.random.default_rng(seed), n)
    assert abs(h.mean() - 1) <= 5 * h.std() / math.sqrt(n)


def test_mean_abs_g_scales_with_root_power():
    spec = tb.TurbulenceSpec('lognormal', sigma_lnI_sq=0.1)
    m = tb.mean_abs_g([4.0, 9.0], spec, spec)
    factor = tb.mean_sqrt_irradiance(spec)**2
    np.testing.assert_allclose(m, [2 * factor, 3 * factor], rtol=1e-14)
    with pytest.raises(ConfigurationError):
        tb.mean_abs_g(-1.0, spec, spec)


def test_log_amplitude_conversion():
    assert tb.log_amplitude_to_log_intensity(0.025) == pytest.approx(0.1)


def test_bad_regime():
    with pytest.raises(ConfigurationError):
        tb.TurbulenceSpec('strong')
    with pytest.raises(ConfigurationError):
        tb.TurbulenceSpec('gammagamma', alpha=0.0)


def test_scenario_accepts_the_same_regime_names(small_scenario):
    for regime in tb.regimes:
        sc = small_scenario.evolve('turbulence', regime=regime)
        assert sc.turbulence_spec('tr').regime == regime
    with pytest.raises(ConfigurationError):
        small_scenario.evolve('turbulence', regime='gamma_gamma')
    with pytest.raises(ConfigurationError):
        tb.TurbulenceSpec('gamma_gamma')
