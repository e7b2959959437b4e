##
## Name:     montecarlo.py
## Purpose:  Seeded, parallel experiment sweeps over a scenario.
##
## An experiment is a grid of points, each a mapping from axis names to
## values, and a sample function that turns (scenario, point, rng) into
## a dictionary of metrics.  Every (point, trial) pair gets its own
## generator seeded from SeedSequence((master, point, trial)), so the
## numbers do not depend on how many worker threads run the trials or
## in which order they finish; results are reduced in index order.
##
## Experiments that evaluate a closed form (pilot-length bounds, gain
## maps, operation counts) run one trial per point and report a zero
## standard error.
##
import csv, functools, io, itertools, json, logging, math, os, platform, time
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
import scipy
import yaml

from .rerror import ConfigurationError
from .scenario import __version__
from . import channel, estimation, feedback, phase_control, pixel_optics

log = logging.getLogger(__name__)

# {{ seeds


def derive_seed(*words):
    """Return a 64-bit seed mixed from the nonnegative integers words,
    e.g., derive_seed(master, point, trial)."""
    state = np.random.SeedSequence(list(words)).generate_state(1, np.uint64)
    return int(state[0])


def trial_generator(master, point, trial):
    return np.random.default_rng(derive_seed(master, point, trial))


# }}

# {{ shared trial steps


def pilot_plan(scenario, g, M=None, snr_db=-1):
    """Return the PilotPlan for one draw g of the scenario's channel.

    M       -- pilot length, default resolved from pilot.length.
    snr_db  -- pilot SNR target; -1 means pilot.snr_db.  With a target,
               P_T = 1 and sigma^2 = ||g||^2 / gamma, so the draw meets
               it exactly; with None, P_T and sigma^2 come from the link
               and the receiver noise model.
    """
    n = len(g)
    if snr_db == -1:
        snr_db = scenario.pilot.snr_db
    if snr_db is None:
        power = scenario.link.pilot_power_w
        sigma2 = channel.receiver_noise(scenario).total
        gamma = power * float(np.vdot(g, g).real) / sigma2
    else:
        power = 1.0
        gamma = channel._from_db(snr_db)
        sigma2 = float(np.vdot(g, g).real) / gamma
    if M is None:
        M = scenario.pilot.resolve_length(n, gamma)
    return estimation.PilotPlan(M=int(M),
                                N=n,
                                kind=scenario.pilot.kind,
                                pilot_power=power,
                                noise_variance=sigma2)


def _estimate(scenario, rng, M=None, snr_db=-1):
    """Draw a channel and estimate it; returns (g, EstimationResult)."""
    g = channel.cascaded_channel(scenario, rng).g
    plan = pilot_plan(scenario, g, M, snr_db)
    return g, estimation.estimate_channel(plan, g, rng)


def _reference_ratio(scenario):
    """P_T / sigma^2 fixed once for the reference scenario."""
    return channel.pilot_power_ratio(scenario)


def _required_length(variant, ratio):
    n = variant.to_geometry().n_pixels
    gamma = ratio * float(channel.mean_element_power(variant).sum())
    return n, gamma, estimation.required_pilot_length(
        n, variant.pilot.target_nmse, gamma)


# }}

# {{ experiments


def _nmse_trial(scenario, point, rng):
    snr_db = point.get('snr_db', -1)
    _, res = _estimate(scenario, rng, point.get('M'), snr_db)
    return {'nmse': res.nmse}


def _effsnr_trial(scenario, point, rng):
    eps = point['epsilon']
    g = channel.cascaded_channel(scenario, rng).g
    g_hat = phase_control.perturb_channel(g, eps, rng)
    theta = phase_control.optimal_phases(g_hat)
    return {
        'snr_ratio': phase_control.matched_filter_efficiency(g_hat, g),
        'phase_ratio': phase_control.phase_alignment_efficiency(g, theta)
    }


def _wavelength_point(scenario, point, rng):
    changes = {'wavelength_nm': point['wavelength_nm']}
    if 'pixel_width_mm' in point:
        changes['pixel_width_mm'] = changes['pixel_height_mm'] = \
            point['pixel_width_mm']
    variant = scenario.evolve('geometry', **changes)
    n, gamma, m = _required_length(variant, _reference_ratio(scenario))
    return {'M_required': m, 'gamma_pilot': gamma}


def _area_point(scenario, point, rng):
    width = point['pixel_width_mm']
    changes = {'pixel_width_mm': width, 'pixel_height_mm': width}
    if 'rows' in point:
        changes['rows'] = changes['cols'] = point['rows']
    variant = scenario.evolve('geometry', **changes)
    n, gamma, m = _required_length(variant, _reference_ratio(scenario))
    return {'M_required': m, 'gamma_pilot': gamma, 'N': n}


def _complexity_point(scenario, point, rng):
    n = int(point['N'])
    m = int(point.get('M_factor', 2) * n)
    g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
    unitary = estimation.PilotPlan(M=m, N=n, kind='unitary_dft')
    general = estimation.PilotPlan(M=m, N=n, kind='general')
    ops_u = estimation.estimate_channel(unitary, g, rng).op_count
    ops_g = estimation.estimate_channel(general, g, rng).op_count
    return {'ops_unitary': ops_u, 'ops_general': ops_g,
            'ratio': ops_g / ops_u}


def _cs_trial(scenario, point, rng):
    g, res = _estimate(scenario, rng)
    n = len(g)
    k = max(1, int(round(point['K_ratio'] * n)))
    fb = feedback.cs_compress(res.g_hat, k, int(point['bits']))
    return {
        'nmse': estimation.nmse(feedback.cs_reconstruct(fb), g),
        'estimator_nmse': res.nmse,
        'payload_bits': fb.total_bits
    }


def _gain_map_point(scenario, point, rng):
    spec = scenario.pixel_spec('tr')
    quad = scenario.quadrature()
    target = point['attenuation']
    if target == 0:
        jitter = pixel_optics.JitterSpec()
    else:
        jitter = pixel_optics.JitterSpec.isotropic(
            _attenuation_sigma(spec, quad, target))
    mu = (point['mu_x_mrad'] * 1e-3, point['mu_y_mrad'] * 1e-3)
    gain = pixel_optics.long_exposure_gain(mu, spec, jitter, quad)
    ideal = spec.scale * float(pixel_optics.ideal_pixel_gain(mu, spec))
    return {'gain': gain, 'deviation': ideal - gain}


@functools.lru_cache(maxsize=64)
def _attenuation_sigma(spec, quad, target):
    return pixel_optics.solve_jitter_for_attenuation(target, spec, quad)


def _quantization_trial(scenario, point, rng):
    g, res = _estimate(scenario, rng)
    bits = int(point['bits'])
    ideal = phase_control.adapt_phases(res.g_hat,
                                       scenario.adapt_config(bits=None))
    coarse = phase_control.adapt_phases(res.g_hat,
                                        scenario.adapt_config(bits=bits))
    snr_ideal = abs(phase_control.combine(g, ideal.weights))**2
    snr_coarse = abs(phase_control.combine(g, coarse.weights))**2
    floor = math.cos(math.pi / 2**bits)
    return {
        'snr_loss_db': 10 * math.log10(snr_ideal / snr_coarse),
        'floor_loss_db': -20 * math.log10(floor) if floor > 0 else math.inf
    }


Experiment = namedtuple('Experiment', 'sample metrics deterministic grid')


def _span(lo, hi, count):
    return tuple(float(v) for v in np.round(np.linspace(lo, hi, count), 12))


experiments = {
    'nmse_vs_M':
    Experiment(_nmse_trial, ('nmse', ), False,
               (('M', (64, 96, 128, 192, 256, 384, 512)), )),
    'nmse_vs_snr':
    Experiment(_nmse_trial, ('nmse', ), False,
               (('snr_db', (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)), )),
    'effsnr_vs_nmse':
    Experiment(_effsnr_trial, ('snr_ratio', 'phase_ratio'), False,
               (('epsilon', (0.001, 0.002, 0.005, 0.01, 0.02, 0.05)), )),
    'pilot_vs_wavelength':
    Experiment(_wavelength_point, ('M_required', 'gamma_pilot'), True,
               (('pixel_width_mm', (1.0, 2.0, 4.0)),
                ('wavelength_nm', _span(800, 1700, 10)))),
    'pilot_vs_area':
    Experiment(_area_point, ('M_required', 'gamma_pilot', 'N'), True,
               (('rows', (4, 8, 16)),
                ('pixel_width_mm', (0.5, 1.0, 2.0, 4.0, 8.0)))),
    'complexity':
    Experiment(_complexity_point, ('ops_unitary', 'ops_general', 'ratio'),
               True, (('N', (16, 32, 64, 128, 256, 512)), )),
    'cs_feedback':
    Experiment(_cs_trial, ('nmse', 'estimator_nmse', 'payload_bits'), False,
               (('K_ratio', (0.25, 0.5, 0.75, 1.0)),
                ('bits', (2, 4, 6, 8, 16)))),
    'pixel_gain_maps':
    Experiment(_gain_map_point, ('gain', 'deviation'), True,
               (('attenuation', (0.0, 0.1, 0.2, 0.4)),
                ('mu_y_mrad', _span(-1.55, 1.55, 21)),
                ('mu_x_mrad', _span(-1.55, 1.55, 21)))),
    'phase_quantization':
    Experiment(_quantization_trial, ('snr_loss_db', 'floor_loss_db'), False,
               (('bits', (2, 3, 4, 5, 6, 7, 8)), )),
}

# Notes carried into the manifest of the named experiment.
experiment_notes = {
    'pilot_vs_area':
    'Mean element power scales as A^2, so halving the pixel width '
    'multiplies the required pilot length by about 16 until it reaches '
    'the M = N floor; a factor of 4 is not supported by the power law.',
    'pilot_vs_wavelength':
    'Absolute pilot lengths scale with the pilot P_T/sigma^2, fixed so '
    'that the reference scenario meets pilot.snr_db; only the ordering '
    'in wavelength and pixel size is meaningful.',
}

# }}

# {{ specs and results


@dataclass(frozen=True)
class ExperimentSpec(object):
    """A sweep to run.

    name         -- one of the keys of experiments.
    grid         -- tuple of (axis, values) pairs; points are their
                    Cartesian product with the last axis varying fastest.
                    None uses the experiment's default grid.
    trials       -- trials per point; None takes experiment.trials from
                    the scenario.  Closed-form experiments use one.
    master_seed  -- None takes experiment.master_seed from the scenario.
    """
    name: str
    grid: tuple = None
    trials: int = None
    master_seed: int = None

    def __post_init__(self):
        if self.name not in experiments:
            raise ConfigurationError(
                "unknown experiment; choose from %s" %
                ', '.join(sorted(experiments)), "experiment")
        grid = self.grid
        if grid is None:
            grid = experiments[self.name].grid
        elif isinstance(grid, dict):
            grid = tuple(grid.items())
        grid = tuple((str(axis), tuple(values)) for axis, values in grid)
        if not grid or any(not values for _, values in grid):
            raise ConfigurationError("grid axes must be non-empty", "grid")
        if len(set(axis for axis, _ in grid)) != len(grid):
            raise ConfigurationError("grid axes must be distinct", "grid")
        object.__setattr__(self, 'grid', grid)
        if self.trials is not None and self.trials < 1:
            raise ConfigurationError("need at least one trial", "trials")

    @property
    def experiment(self):
        return experiments[self.name]

    @property
    def axes(self):
        return tuple(axis for axis, _ in self.grid)

    def points(self):
        """Return the grid points as a list of dicts."""
        names = self.axes
        return [
            dict(zip(names, combo))
            for combo in itertools.product(*[v for _, v in self.grid])
        ]

    def resolve(self, scenario):
        """Return (trials, master_seed) after applying scenario defaults."""
        if self.experiment.deterministic:
            trials = 1
        elif self.trials is None:
            trials = scenario.experiment.trials
        else:
            trials = self.trials
        seed = self.master_seed
        if seed is None:
            seed = scenario.experiment.master_seed
        return trials, seed


@dataclass(frozen=True)
class SweepResult(object):
    """The outcome of run_experiment.

    points       -- grid coordinates, one tuple per point, in axis order.
    means        -- (points, metrics) per-point sample means.
    stderrs      -- (points, metrics) sample std / sqrt(trials); zero for
                    a single trial.
    samples      -- (points, trials, metrics) raw per-trial values.
    point_seeds  -- derive_seed(master, point) per point; the seed of
                    trial t is derive_seed(master, point, t).
    """
    name: str
    axes: tuple
    metrics: tuple
    points: tuple
    means: np.ndarray
    stderrs: np.ndarray
    samples: np.ndarray
    trials: int
    master_seed: int
    point_seeds: tuple
    wall_time: float = 0.0

    def column(self, metric):
        """Return the per-point means of metric."""
        return self.means[:, self.metrics.index(metric)]

    def header(self):
        first = self.metrics[0]
        out = list(self.axes) + ['mean_' + first, 'stderr', 'trials', 'seed']
        for m in self.metrics[1:]:
            out += ['mean_' + m, 'stderr_' + m]
        return out

    def rows(self):
        """Yield one list of values per point, matching header()."""
        for i, coords in enumerate(self.points):
            row = list(coords)
            row += [self.means[i, 0], self.stderrs[i, 0], self.trials,
                    self.point_seeds[i]]
            for j in range(1, len(self.metrics)):
                row += [self.means[i, j], self.stderrs[i, j]]
            yield row

    def records(self):
        """Return the rows as a list of dicts keyed by header()."""
        names = self.header()
        return [dict(zip(names, row)) for row in self.rows()]

    def write_csv(self, stream):
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(self.header())
        for row in self.rows():
            writer.writerow([_text(v) for v in row])

    def to_csv(self):
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    def to_json(self):
        return json.dumps([
            dict((k, _plain(v)) for k, v in rec.items())
            for rec in self.records()
        ],
                          indent=1,
                          sort_keys=False) + '\n'


def _plain(value):
    if isinstance(value, (np.integer, )):
        return int(value)
    if isinstance(value, (np.floating, )):
        return float(value)
    return value


def _text(value):
    value = _plain(value)
    if isinstance(value, float):
        if value.is_integer() and abs(value) < 2**53:
            return '%d' % value
        return repr(value)
    return str(value)


# }}

# {{ running


def _run_one(scenario, exp, point, master, index, trial):
    rng = trial_generator(master, index, trial)
    values = exp.sample(scenario, point, rng)
    return [float(values[m]) for m in exp.metrics]


def run_experiment(spec, scenario, threads=None):
    """Run the sweep spec on scenario and return a SweepResult.

    threads  -- worker count, default experiment.threads; the result is
                the same for any value.
    """
    exp = spec.experiment
    trials, master = spec.resolve(scenario)
    if threads is None:
        threads = scenario.experiment.threads
    points = spec.points()
    jobs = [(p, i, t) for i, p in enumerate(points) for t in range(trials)]

    def work(job):
        point, index, trial = job
        return _run_one(scenario, exp, point, master, index, trial)

    log.debug('[%s: %d points x %d trials on %d threads]', spec.name,
              len(points), trials, threads)
    start = time.time()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(work, jobs))
    else:
        values = [work(job) for job in jobs]
    elapsed = time.time() - start

    samples = np.array(values, dtype=float).reshape(len(points), trials,
                                                    len(exp.metrics))
    means = samples.mean(axis=1)
    if trials > 1:
        stderrs = samples.std(axis=1, ddof=1) / math.sqrt(trials)
    else:
        stderrs = np.zeros_like(means)

    axes = spec.axes
    return SweepResult(name=spec.name,
                       axes=axes,
                       metrics=exp.metrics,
                       points=tuple(tuple(p[a] for a in axes) for p in points),
                       means=means,
                       stderrs=stderrs,
                       samples=samples,
                       trials=trials,
                       master_seed=master,
                       point_seeds=tuple(
                           derive_seed(master, i) for i in range(len(points))),
                       wall_time=elapsed)


def replay_trial(spec, scenario, point, trial):
    """Re-run trial number trial of grid point index point and return its
    metrics as a dict; the values equal result.samples[point, trial]."""
    points = spec.points()
    trials, master = spec.resolve(scenario)
    if not 0 <= point < len(points) or not 0 <= trial < trials:
        raise ConfigurationError("no such point or trial", "replay")
    exp = spec.experiment
    values = _run_one(scenario, exp, points[point], master, point, trial)
    return dict(zip(exp.metrics, values))


def summarize(result):
    """Return experiment-level statistics of result as a dict."""
    out = {'experiment': result.name, 'points': len(result.points)}
    if result.name == 'effsnr_vs_nmse':
        eps = np.array([p[result.axes.index('epsilon')]
                        for p in result.points])
        x = 1 - eps
        for metric in ('snr_ratio', 'phase_ratio'):
            y = result.column(metric)
            if len(x) > 1:
                slope, intercept = np.polyfit(x, y, 1)
                out['slope_' + metric] = float(slope)
                out['intercept_' + metric] = float(intercept)
            # worst relative miss of the 1 - epsilon law over the grid
            out['max_deviation_' + metric] = float(np.max(np.abs(y / x - 1)))
    elif result.name in ('nmse_vs_M', 'nmse_vs_snr'):
        out['max_nmse'] = float(result.column('nmse').max())
        out['min_nmse'] = float(result.column('nmse').min())
    elif result.name == 'complexity':
        ratio = result.column('ratio')
        out['ratios'] = [float(r) for r in ratio]
        out['ratio_increasing'] = bool(np.all(np.diff(ratio) > 0))
    elif result.name == 'phase_quantization':
        bits = [p[result.axes.index('bits')] for p in result.points]
        out['snr_loss_db'] = dict(
            (int(b), float(v))
            for b, v in zip(bits, result.column('snr_loss_db')))
    elif result.name in ('pilot_vs_area', 'pilot_vs_wavelength'):
        m = result.column('M_required')
        out['min_M'] = int(m.min())
        out['max_M'] = int(m.max())
    elif result.name == 'cs_feedback':
        out['min_nmse'] = float(result.column('nmse').min())
    return out


def manifest(result, spec, scenario):
    """Return the run manifest of result as a dict."""
    out = {
        'experiment': result.name,
        'grid': dict((axis, [_plain(v) for v in values])
                     for axis, values in spec.grid),
        'trials': result.trials,
        'master_seed': result.master_seed,
        'scenario_sha256': scenario.fingerprint(),
        'versions': {
            'risowc': __version__,
            'numpy': np.__version__,
            'scipy': scipy.__version__,
            'pyyaml': yaml.__version__,
            'python': platform.python_version(),
        },
        'wall_time_s': result.wall_time,
        'summary': summarize(result),
    }
    if result.name in experiment_notes:
        out['notes'] = experiment_notes[result.name]
    return out


def write_result(result, spec, scenario, directory, fmt='csv'):
    """Write result to <directory>/<name>.<fmt> and its manifest to
    <directory>/<name>.manifest.json; returns the two paths.
    """
    if fmt not in ('csv', 'json'):
        raise ConfigurationError("format must be csv or json", "format")
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, '%s.%s' % (result.name, fmt))
    with open(path, 'w', newline='') as fp:
        if fmt == 'csv':
            result.write_csv(fp)
        else:
            fp.write(result.to_json())

    mpath = os.path.join(directory, '%s.manifest.json' % result.name)
    with open(mpath, 'w') as fp:
        json.dump(manifest(result, spec, scenario), fp, indent=1,
                  sort_keys=True)
        fp.write('\n')
    log.debug('[wrote %s and %s]', path, mpath)
    return path, mpath


# }}

# {{ baselines


@dataclass(frozen=True)
class BaselineReport(object):
    """Realistic link against two idealized references.

    snr_*            -- mean combining SNR (dB): perfect CSI with
                        continuous phases versus estimated CSI with the
                        configured phase resolution.
    capacity_*       -- mean log2(1 + SNR) in bits/s/Hz.
    power_*          -- boresight element power E|g_n|^2 of the
                        configured optics and of jitter-free, S = rho = 1
                        optics, and the expected optimal SNR (dB) each
                        gives at the same P_d / sigma^2.
    """
    trials: int
    master_seed: int
    snr_perfect_db: float
    snr_realistic_db: float
    snr_gap_db: float
    capacity_perfect: float
    capacity_realistic: float
    capacity_gap: float
    power_realistic: float
    power_ideal_optics: float
    optics_gap_db: float
    expected_snr_realistic_db: float
    expected_snr_ideal_optics_db: float

    def to_dict(self):
        return dict((k, _plain(v)) for k, v in asdict(self).items())


def ideal_optics(scenario):
    """Return scenario without pointing jitter and with S = rho = 1."""
    jitter = dict((k, 0.0) for k in ('sigma_x_tr_mrad', 'sigma_y_tr_mrad',
                                     'sigma_x_rr_mrad', 'sigma_y_rr_mrad'))
    optics = dict((k, 1.0) for k in ('strehl_tr', 'strehl_rr',
                                     'obliquity_tr', 'obliquity_rr'))
    return scenario.from_dict({'jitter': jitter, 'optics': optics},
                              base=scenario)


def _baseline_trial(scenario, ratio, master, trial):
    rng = trial_generator(master, 0, trial)
    g, res = _estimate(scenario, rng)
    state = phase_control.adapt_phases(res.g_hat, scenario.adapt_config())
    perfect = ratio * float(np.abs(g).sum())**2
    realistic = channel.instantaneous_snr(g, state.weights, ratio)
    return perfect, realistic


def run_baselines(scenario, trials=None, master_seed=None, threads=None):
    """Compare the configured link with perfect CSI and continuous phases,
    and with ideal jitter-free optics; returns a BaselineReport."""
    if trials is None:
        trials = scenario.experiment.trials
    if master_seed is None:
        master_seed = scenario.experiment.master_seed
    if threads is None:
        threads = scenario.experiment.threads
    ratio = channel.data_power_ratio(scenario)

    def work(t):
        return _baseline_trial(scenario, ratio, master_seed, t)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = np.array(list(pool.map(work, range(trials))))
    else:
        values = np.array([work(t) for t in range(trials)])
    perfect, realistic = values[:, 0], values[:, 1]

    ideal = ideal_optics(scenario)
    n0 = channel.boresight_pixel(scenario)
    p_real = channel.mean_element_power(scenario, n0)
    p_ideal = channel.mean_element_power(ideal, n0)
    e_real = ratio * channel.coherent_gain(
        channel.mean_element_power(scenario),
        channel.mean_abs_element(scenario))
    e_ideal = ratio * channel.coherent_gain(
        channel.mean_element_power(ideal), channel.mean_abs_element(ideal))

    def db(x):
        return 10 * math.log10(x)

    c_perfect = float(np.log2(1 + perfect).mean())
    c_real = float(np.log2(1 + realistic).mean())
    return BaselineReport(
        trials=trials,
        master_seed=master_seed,
        snr_perfect_db=db(perfect.mean()),
        snr_realistic_db=db(realistic.mean()),
        snr_gap_db=db(perfect.mean()) - db(realistic.mean()),
        capacity_perfect=c_perfect,
        capacity_realistic=c_real,
        capacity_gap=c_perfect - c_real,
        power_realistic=p_real,
        power_ideal_optics=p_ideal,
        optics_gap_db=db(p_ideal) - db(p_real),
        expected_snr_realistic_db=db(e_real),
        expected_snr_ideal_optics_db=db(e_ideal))


# }}

__all__ = [
    "derive_seed", "trial_generator", "pilot_plan", "experiments",
    "ExperimentSpec", "SweepResult", "run_experiment", "replay_trial",
    "summarize", "manifest", "write_result", "BaselineReport",
    "ideal_optics", "run_baselines"
]

# Here there be dragons
