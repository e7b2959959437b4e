import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risowc import estimation as est, montecarlo as mc
from risowc.rerror import (ConfigurationError, ConditioningError,
                           ContractError, UndefinedNMSEError)


def test_dft_pilot_is_unitary():
    phi = est.make_pilot_matrix(est.PilotPlan(M=128, N=64))
    assert phi.shape == (128, 64)
    np.testing.assert_allclose(np.abs(phi), 1.0, rtol=1e-12)
    np.testing.assert_allclose(phi.conj().T @ phi, 128 * np.eye(64),
                               atol=1e-9)
    assert est.is_unitary_pilot(phi)


def test_general_pilot_is_unit_modulus(rng):
    phi = est.make_pilot_matrix(est.PilotPlan(M=32, N=16, kind='general'),
                                rng)
    np.testing.assert_allclose(np.abs(phi), 1.0, rtol=1e-12)
    assert not est.is_unitary_pilot(phi)


def test_plan_rejects_short_pilot():
    with pytest.raises(ConfigurationError) as e:
        est.PilotPlan(M=8, N=16)
    assert e.value.key == 'pilot.length'


def test_noiseless_estimate_is_exact(make_channel, rng):
    g = make_channel(16)
    plan = est.PilotPlan(M=32, N=16, pilot_power=2.0, noise_variance=0.0)
    res = est.estimate_channel(plan, g, rng)
    np.testing.assert_allclose(res.g_hat, g, atol=1e-12)
    assert res.nmse < 1e-24
    assert res.method == 'ls_unitary'


def test_general_path_agrees_with_unitary(make_channel, rng):
    g = make_channel(8)
    plan = est.PilotPlan(M=16, N=8)
    phi = est.make_pilot_matrix(plan)
    y = est.simulate_pilot_rx(phi, g, 1.0, 0.1, rng)
    a = est.ls_estimate_unitary(phi, y, 1.0)
    b = est.ls_estimate_general(phi, y, 1.0)
    np.testing.assert_allclose(a.g_hat, b.g_hat, atol=1e-10)


def test_unitary_path_refuses_general_pilots(rng):
    plan = est.PilotPlan(M=16, N=8, kind='general')
    phi = est.make_pilot_matrix(plan, rng)
    with pytest.raises(ContractError):
        est.ls_estimate_unitary(phi, np.zeros(16), 1.0)


def test_singular_gram_matrix():
    phi = np.ones((8, 4), dtype=complex)
    with pytest.raises(ConditioningError):
        est.ls_estimate_general(phi, np.zeros(8), 1.0)


@pytest.mark.parametrize('n', [16, 32, 64, 128, 256])
def test_operation_counts(n, rng):
    g = np.ones(n, dtype=complex)
    u = est.estimate_channel(est.PilotPlan(M=2 * n, N=n), g, rng)
    v = est.estimate_channel(est.PilotPlan(M=2 * n, N=n, kind='general'), g,
                             rng)
    assert u.op_count == 2 * n * n
    assert v.op_count >= 2 * n * n + 2 * n**3 / 3


def test_nmse_of_zero_channel():
    with pytest.raises(UndefinedNMSEError):
        est.nmse(np.ones(4), np.zeros(4))


def test_required_pilot_length():
    assert est.required_pilot_length(64, 0.005, 100.0) == 128
    assert est.required_pilot_length(64, 0.5, 100.0) == 64
    assert est.required_pilot_length(64, 0.0005, 100.0) == 1280
    assert est.required_pilot_length(64, 0.001, 100.0) == 640
    assert est.required_pilot_length(64, 0.001, 200.0) == 320
    with pytest.raises(ConfigurationError):
        est.required_pilot_length(64, 0.0, 100.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 512), st.floats(1e-4, 0.5), st.floats(1.0, 1e5))
def test_required_length_meets_target(n, eps, gamma):
    m = est.required_pilot_length(n, eps, gamma)
    assert m >= n
    assert est.predicted_nmse(n, m, gamma) <= eps * (1 + 1e-9)
    if m > n:
        assert est.predicted_nmse(n, m - 1, gamma) > eps * (1 - 1e-9)


def test_nmse_attains_prediction(rng):
    n, m = 16, 32
    g = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    gamma = 100.0
    plan = est.PilotPlan(M=m, N=n, noise_variance=n / gamma)
    phi = est.make_pilot_matrix(plan)
    values = [est.estimate_channel(plan, g, rng, phi).nmse
              for _ in range(2000)]
    assert np.mean(values) == pytest.approx(est.predicted_nmse(n, m, gamma),
                                            rel=0.03)


def test_error_covariance_matches_crlb(make_channel, rng):
    n, m, sigma2, trials = 8, 16, 0.5, 10000
    g = make_channel(n)
    plan = est.PilotPlan(M=m, N=n, noise_variance=sigma2)
    phi = est.make_pilot_matrix(plan)
    errs = np.array([est.estimate_channel(plan, g, rng, phi).g_hat - g
                     for _ in range(trials)])
    fi = est.fisher_information(phi, 1.0, sigma2)
    np.testing.assert_allclose(np.diag(fi.crlb).real, sigma2 / m, rtol=1e-9)
    assert fi.crlb_trace == pytest.approx(n * sigma2 / m)
    np.testing.assert_allclose(np.mean(np.abs(errs)**2, axis=0), sigma2 / m,
                               rtol=0.05)

    # unbiased: each real and imaginary error component averages to zero
    se = np.sqrt(sigma2 / (2 * m) / trials)
    mean = errs.mean(axis=0)
    assert np.all(np.abs(mean.real) < 4 * se)
    assert np.all(np.abs(mean.imag) < 4 * se)


@pytest.fixture(scope='module')
def nmse_grid(scenario):
    spec = mc.ExperimentSpec('nmse_vs_M',
                             grid=(('snr_db', (0.0, 10.0, 20.0)),
                                   ('M', (64, 128, 256))),
                             trials=200,
                             master_seed=20240601)
    result = mc.run_experiment(spec, scenario)
    return dict(zip(result.points, result.column('nmse')))


@pytest.mark.parametrize('snr_db', [0.0, 10.0, 20.0])
@pytest.mark.parametrize('m', [64, 128, 256])
def test_nmse_follows_inverse_law(nmse_grid, scenario, snr_db, m):
    n = scenario.to_geometry().n_pixels
    gamma = 10**(snr_db / 10)
    assert nmse_grid[(snr_db, m)] == pytest.approx(
        est.predicted_nmse(n, m, gamma), rel=0.05)


def test_nmse_at_reference_point(nmse_grid):
    assert nmse_grid[(20.0, 128)] == pytest.approx(0.005, rel=0.05)


def test_pilot_noise_variance(rng):
    phi = np.ones((100000, 1), dtype=complex)
    y = est.simulate_pilot_rx(phi, np.zeros(1), 1.0, 0.3, rng)
    assert np.mean(np.abs(y)**2) == pytest.approx(0.3, rel=0.02)
