import json

import numpy as np
import pytest

from risowc import montecarlo as mc
from risowc.rerror import ConfigurationError


def test_derived_seeds_are_stable_and_distinct():
    assert mc.derive_seed(1, 2, 3) == mc.derive_seed(1, 2, 3)
    seeds = set(mc.derive_seed(7, p, t) for p in range(10) for t in range(10))
    assert len(seeds) == 100
    assert all(0 <= s < 2**64 for s in seeds)


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        mc.ExperimentSpec('no_such_experiment')
    with pytest.raises(ConfigurationError):
        mc.ExperimentSpec('nmse_vs_M', grid={'M': ()})
    with pytest.raises(ConfigurationError):
        mc.ExperimentSpec('nmse_vs_M', grid=(('M', (64, )), ('M', (128, ))))
    with pytest.raises(ConfigurationError):
        mc.ExperimentSpec('nmse_vs_M', trials=0)


def test_points_vary_last_axis_fastest():
    spec = mc.ExperimentSpec('cs_feedback',
                             grid=(('K_ratio', (0.5, 1.0)), ('bits', (2, 4))))
    assert spec.points() == [
        {'K_ratio': 0.5, 'bits': 2},
        {'K_ratio': 0.5, 'bits': 4},
        {'K_ratio': 1.0, 'bits': 2},
        {'K_ratio': 1.0, 'bits': 4},
    ]


def test_resolve_uses_scenario_defaults(scenario):
    assert mc.ExperimentSpec('nmse_vs_M').resolve(scenario) == (200,
                                                                20240601)
    assert mc.ExperimentSpec('complexity', trials=50).resolve(scenario) == (
        1, 20240601)


@pytest.fixture(scope='module')
def nmse_sweep(small_scenario):
    spec = mc.ExperimentSpec('nmse_vs_M', grid={'M': (32, 64)}, trials=4,
                             master_seed=11)
    return spec, mc.run_experiment(spec, small_scenario, threads=1)


def test_sweep_table_layout(nmse_sweep):
    spec, result = nmse_sweep
    assert result.header() == ['M', 'mean_nmse', 'stderr', 'trials', 'seed']
    lines = result.to_csv().splitlines()
    assert lines[0] == 'M,mean_nmse,stderr,trials,seed'
    assert lines[1].startswith('32,')
    assert len(lines) == 3
    records = json.loads(result.to_json())
    assert records[0]['trials'] == 4
    assert records[1]['seed'] == mc.derive_seed(11, 1)


def test_sweep_statistics(nmse_sweep):
    spec, result = nmse_sweep
    samples = result.samples[:, :, 0]
    np.testing.assert_allclose(result.column('nmse'), samples.mean(axis=1))
    np.testing.assert_allclose(result.stderrs[:, 0],
                               samples.std(axis=1, ddof=1) / 2)
    assert result.column('nmse')[1] < result.column('nmse')[0]


def test_thread_count_does_not_change_results(small_scenario, nmse_sweep):
    spec, serial = nmse_sweep
    parallel = mc.run_experiment(spec, small_scenario, threads=3)
    np.testing.assert_array_equal(parallel.samples, serial.samples)
    assert parallel.to_csv() == serial.to_csv()


def test_replay_reproduces_a_trial(small_scenario, nmse_sweep):
    spec, result = nmse_sweep
    replay = mc.replay_trial(spec, small_scenario, 1, 2)
    assert replay['nmse'] == result.samples[1, 2, 0]
    with pytest.raises(ConfigurationError):
        mc.replay_trial(spec, small_scenario, 5, 0)


def test_write_result(tmp_path, small_scenario, nmse_sweep):
    spec, result = nmse_sweep
    path, mpath = mc.write_result(result, spec, small_scenario,
                                  str(tmp_path))
    with open(path) as fp:
        assert fp.read() == result.to_csv()
    with open(mpath) as fp:
        doc = json.load(fp)
    assert doc['experiment'] == 'nmse_vs_M'
    assert doc['master_seed'] == 11
    assert doc['scenario_sha256'] == small_scenario.fingerprint()
    assert doc['grid'] == {'M': [32, 64]}
    with pytest.raises(ConfigurationError):
        mc.write_result(result, spec, small_scenario, str(tmp_path), 'xml')


def test_complexity_ratio_grows(scenario):
    spec = mc.ExperimentSpec('complexity', grid={'N': (16, 32, 64, 128)})
    result = mc.run_experiment(spec, scenario)
    n = np.array([16, 32, 64, 128])
    np.testing.assert_array_equal(result.column('ops_unitary'), 2 * n * n)
    assert np.all(result.column('ops_general') >= 2 * n * n + 2 * n**3 / 3)
    assert mc.summarize(result)['ratio_increasing']


def test_pilot_length_scales_with_area_squared(scenario):
    spec = mc.ExperimentSpec('pilot_vs_area',
                             grid=(('rows', (8, )),
                                   ('pixel_width_mm', (1.0, 2.0, 4.0))))
    result = mc.run_experiment(spec, scenario)
    m = result.column('M_required')
    assert m[1] == 128
    assert 10 < m[0] / m[1] < 18
    assert m[2] == 64
    assert '16' in mc.manifest(result, spec, scenario)['notes']


def test_short_wavelengths_suffer_more_jitter_loss(scenario):
    spec = mc.ExperimentSpec('pilot_vs_wavelength',
                             grid={'wavelength_nm': (800.0, 1550.0)})
    result = mc.run_experiment(spec, scenario)
    gamma = result.column('gamma_pilot')
    assert gamma[0] < gamma[1]
    m = result.column('M_required')
    assert m[0] >= m[1] == 128


def test_effective_snr_follows_one_minus_epsilon(small_scenario):
    eps = np.array([0.005, 0.02, 0.05])
    spec = mc.ExperimentSpec('effsnr_vs_nmse',
                             grid={'epsilon': tuple(eps)},
                             trials=100,
                             master_seed=3)
    result = mc.run_experiment(spec, small_scenario)
    summary = mc.summarize(result)
    assert summary['max_deviation_snr_ratio'] < 0.01

    # an isotropic error of N elements keeps a share 1/N of its power in
    # the direction of g, so the expected ratio is (1 + eps/N) / (1 + eps)
    n = small_scenario.to_geometry().n_pixels
    model = np.polyfit(1 - eps, (1 + eps / n) / (1 + eps), 1)
    assert summary['slope_snr_ratio'] == pytest.approx(model[0], abs=0.03)
    assert summary['intercept_snr_ratio'] == pytest.approx(model[1],
                                                           abs=0.03)
    assert np.all(result.column('phase_ratio') <= 1.0)


def _effsnr_result(eps, ratio):
    means = np.column_stack([ratio, ratio])
    return mc.SweepResult(name='effsnr_vs_nmse',
                          axes=('epsilon', ),
                          metrics=('snr_ratio', 'phase_ratio'),
                          points=tuple((e, ) for e in eps),
                          means=means,
                          stderrs=np.zeros_like(means),
                          samples=means[:, None, :],
                          trials=1,
                          master_seed=0,
                          point_seeds=tuple(range(len(eps))))


def test_effective_snr_summary_rejects_other_laws():
    eps = np.array([0.005, 0.02, 0.05])
    exact = mc.summarize(_effsnr_result(eps, 1 - eps))
    assert exact['slope_snr_ratio'] == pytest.approx(1.0)
    assert exact['intercept_snr_ratio'] == pytest.approx(0.0, abs=1e-12)
    assert exact['max_deviation_snr_ratio'] < 1e-12

    flat = mc.summarize(_effsnr_result(eps, np.ones(3)))
    assert flat['slope_snr_ratio'] == pytest.approx(0.0, abs=1e-12)
    assert flat['max_deviation_snr_ratio'] > 0.05

    steep = mc.summarize(_effsnr_result(eps, 1 - 2 * eps))
    assert steep['slope_snr_ratio'] == pytest.approx(2.0)
    assert steep['max_deviation_snr_ratio'] > 0.05


def test_compressed_feedback_sweep(small_scenario):
    spec = mc.ExperimentSpec('cs_feedback',
                             grid=(('K_ratio', (0.5, 1.0)), ('bits', (16, ))),
                             trials=3,
                             master_seed=5)
    result = mc.run_experiment(spec, small_scenario)
    nmse = result.column('nmse')
    base = result.column('estimator_nmse')
    assert nmse[0] > nmse[1]
    assert nmse[1] == pytest.approx(base[1], rel=0.01)


def test_gain_map_attenuation(scenario):
    spec = mc.ExperimentSpec('pixel_gain_maps',
                             grid=(('attenuation', (0.0, 0.2)),
                                   ('mu_y_mrad', (0.0, )),
                                   ('mu_x_mrad', (0.0, ))))
    result = mc.run_experiment(spec, scenario)
    np.testing.assert_allclose(result.column('gain'), [1.0, 0.8], rtol=1e-7)
    np.testing.assert_allclose(result.column('deviation'), [0.0, 0.2],
                               atol=1e-7)


def test_phase_quantization_sweep(small_scenario):
    spec = mc.ExperimentSpec('phase_quantization',
                             grid={'bits': (2, 6)},
                             trials=3,
                             master_seed=9)
    result = mc.run_experiment(spec, small_scenario)
    loss = result.column('snr_loss_db')
    assert loss[1] < 0.5
    assert loss[0] > loss[1]
    assert result.column('floor_loss_db')[1] < 0.011


def test_baselines(small_scenario):
    report = mc.run_baselines(small_scenario, trials=5, master_seed=1)
    assert report.snr_gap_db >= 0
    assert report.capacity_gap >= 0
    assert report.optics_gap_db > 0
    assert report.power_ideal_optics > report.power_realistic
    assert report.to_dict()['trials'] == 5


def test_nmse_mean_settles_by_two_hundred_trials(scenario):
    # 256 elements keep the per-trial NMSE spread near 1/16 of its mean
    wide = scenario.evolve('geometry', rows=16, cols=16)
    means = []
    for trials in (200, 400):
        spec = mc.ExperimentSpec('nmse_vs_M',
                                 grid={'M': (512, )},
                                 trials=trials,
                                 master_seed=20240601)
        means.append(mc.run_experiment(spec, wide).column('nmse')[0])
    assert means[1] == pytest.approx(means[0], rel=0.01)


def test_baseline_means_settle_by_two_hundred_trials(scenario):
    a = mc.run_baselines(scenario, trials=200, master_seed=20240601)
    b = mc.run_baselines(scenario, trials=400, master_seed=20240601)
    for name in ('snr_perfect_db', 'snr_realistic_db'):
        change = 10**(abs(getattr(a, name) - getattr(b, name)) / 10) - 1
        assert change < 0.01, name
    for name in ('capacity_perfect', 'capacity_realistic'):
        assert getattr(b, name) == pytest.approx(getattr(a, name), rel=0.01)
