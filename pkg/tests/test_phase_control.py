import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risowc import channel, phase_control as pc
from risowc.estimation import estimate_channel
from risowc.feedback import phase_quantize
from risowc.montecarlo import pilot_plan
from risowc.rerror import ConfigurationError


def test_single_element_alignment():
    g = np.array([2.0 * np.exp(1j * 0.7)])
    state = pc.adapt_phases(g, pc.AdaptConfig(bits=None))
    assert state.objective == pytest.approx(2.0, rel=1e-12)
    assert state.converged
    assert state.iterations <= 3


def test_optimal_phases_reach_the_bound(make_channel):
    g = make_channel(64)
    theta = pc.optimal_phases(g)
    assert pc.objective(g, theta) == pytest.approx(np.abs(g).sum(),
                                                   rel=1e-12)


def test_adaptation_recovers_from_perturbed_start(make_channel, rng):
    for _ in range(20):
        g = make_channel(64)
        start = -np.angle(g) + rng.uniform(-0.3, 0.3, 64)
        state = pc.adapt_phases(g, pc.AdaptConfig(bits=None,
                                                  max_iterations=500),
                                initial=start)
        assert state.objective >= 0.999 * np.abs(g).sum()


def test_diminishing_step_never_loses_the_start(make_channel, rng):
    g = make_channel(32)
    start = -np.angle(g) + rng.uniform(-0.5, 0.5, 32)
    cfg = pc.AdaptConfig(bits=None, step_mode='diminishing', step_scale=4.0)
    state = pc.adapt_phases(g, cfg, initial=start)
    assert state.objective >= state.trace[0]


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 64), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_quantized_adaptation_meets_the_floor(n, bits, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    state = pc.adapt_phases(g, pc.AdaptConfig(bits=bits))
    assert state.objective >= pc.alignment_floor(g, bits) * (1 - 1e-12)
    np.testing.assert_allclose(phase_quantize(state.phases, bits),
                               state.phases)
    assert state.objective == pytest.approx(pc.objective(g, state.weights))


def test_emit_mode_quantizes_only_the_output(make_channel):
    g = make_channel(16)
    state = pc.adapt_phases(g, pc.AdaptConfig(bits=3, quantize='emit'))
    np.testing.assert_allclose(phase_quantize(state.phases, 3), state.phases)
    assert state.objective >= pc.alignment_floor(g, 3) * (1 - 1e-12)


def test_six_bits_costs_little(scenario):
    rng = np.random.default_rng(6)
    losses = []
    for _ in range(200):
        g = channel.cascaded_channel(scenario, rng).g
        plan = pilot_plan(scenario, g)
        g_hat = estimate_channel(plan, g, rng).g_hat
        fine = pc.adapt_phases(g_hat, pc.AdaptConfig(bits=None))
        coarse = pc.adapt_phases(g_hat, pc.AdaptConfig(bits=6))
        assert coarse.objective >= pc.alignment_floor(g_hat, 6) * (1 - 1e-12)
        losses.append(20 * math.log10(
            pc.objective(g, fine.weights) / pc.objective(g, coarse.weights)))
    losses = np.array(losses)
    assert np.mean(losses <= 0.5) >= 0.95
    assert 0 < np.mean(losses) < 0.5


def test_constant_step_ascends(scenario):
    rng = np.random.default_rng(8)
    cfg = pc.AdaptConfig(bits=6, quantize='emit', step_mode='constant',
                         max_iterations=500)
    steps = []
    for _ in range(30):
        g = channel.cascaded_channel(scenario, rng).g
        start = -np.angle(g) + rng.uniform(-0.5, 0.5, len(g))
        state = pc.adapt_phases(g, cfg, initial=start)
        # the iterates, without the final codebook projection
        trace = np.array(state.trace[:state.iterations + 1])
        steps.extend(np.diff(trace) >= -1e-12 * np.abs(g).sum())
    assert len(steps) > 100
    assert np.mean(steps) >= 0.99


@pytest.mark.parametrize('shift', [0.4, -2.0, math.pi])
def test_common_phase_does_not_matter(make_channel, rng, shift):
    g = make_channel(32)
    start = -np.angle(g) + rng.uniform(-0.5, 0.5, 32)
    cfg = pc.AdaptConfig(bits=None)
    a = pc.adapt_phases(g, cfg, initial=start)
    b = pc.adapt_phases(g * np.exp(1j * shift), cfg, initial=start - shift)
    assert b.objective == pytest.approx(a.objective, rel=1e-8)
    rotated = pc.adapt_phases(g * np.exp(1j * shift), cfg)
    assert rotated.objective == pytest.approx(np.abs(g).sum(), rel=1e-12)


def test_zero_entries_keep_their_phase():
    g = np.array([1.0 + 0j, 0.0, 1j])
    start = np.array([0.0, 1.0, -math.pi / 2])
    state = pc.adapt_phases(g, pc.AdaptConfig(bits=None), initial=start)
    assert state.phases[1] == pytest.approx(1.0)


def test_zero_channel_and_empty_input():
    state = pc.adapt_phases(np.zeros(4), pc.AdaptConfig(bits=2))
    assert state.converged and state.iterations == 0
    with pytest.raises(ConfigurationError):
        pc.adapt_phases(np.zeros(0))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        pc.AdaptConfig(step_scale=2.0)
    with pytest.raises(ConfigurationError):
        pc.AdaptConfig(bits=0)
    with pytest.raises(ConfigurationError):
        pc.AdaptConfig(quantize='never')
    pc.AdaptConfig(step_mode='diminishing', step_scale=3.0)


def test_effective_snr_and_capacity_loss():
    assert pc.effective_snr(100.0, 0.0) == 100.0
    assert pc.effective_snr(100.0, 0.005) == pytest.approx(99.5)
    loss = pc.capacity_loss(100.0, 0.005)
    assert loss.first_order == pytest.approx(0.5 / (math.log(2) * 101),
                                             rel=1e-12)
    assert loss.first_order == pytest.approx(0.00714, abs=1e-5)
    assert loss.first_order <= loss.bound <= loss.first_order * 1.01
    assert pc.capacity_loss(100.0, 0.0) == (0.0, 0.0)
    with pytest.raises(ConfigurationError):
        pc.effective_snr(100.0, 1.0)


def test_perturbation_has_exact_nmse(make_channel, rng):
    g = make_channel(64)
    g_hat = pc.perturb_channel(g, 0.02, rng)
    err = g_hat - g
    assert np.vdot(err, err).real / np.vdot(g, g).real == pytest.approx(
        0.02, rel=1e-12)


def test_matched_filter_efficiency_tracks_nmse(make_channel, rng):
    for eps in (0.005, 0.02, 0.05):
        ratios = [
            pc.matched_filter_efficiency(pc.perturb_channel(g, eps, rng), g)
            for g in (make_channel(64) for _ in range(200))
        ]
        assert np.mean(ratios) == pytest.approx(1 - eps, abs=0.01)


def test_phase_alignment_efficiency_bounds(make_channel):
    g = make_channel(16)
    assert pc.phase_alignment_efficiency(g, pc.optimal_phases(g)) == \
        pytest.approx(1.0)
    assert 0 <= pc.phase_alignment_efficiency(g, np.ones(16)) <= 1
