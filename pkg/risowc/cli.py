##
## Name:     cli.py
## Purpose:  Command-line driver for the RIS link simulator.
##
## Usage: risowc [options] command [args]
##
## Each command loads the scenario (the shipped defaults unless -c
## names a file), runs one operation, prints a short key=value report
## on standard output and writes its artifacts to the output directory.
## The exit status is 0 on success, 2 for a configuration error, 3 for a
## numerical failure and 4 for an infeasible budget under --strict.
##
import csv, json, logging, os, sys

import numpy as np

from .rerror import (ConfigurationError, NumericalError,
                     InfeasibleBudgetError, RISError)
from .scenario import ScenarioConfig, output_directory
from . import (channel, estimation, feedback, montecarlo, phase_control,
               pixel_optics)

log = logging.getLogger(__name__)

# -- Exit codes
exit_ok = 0
exit_config = 2
exit_numerical = 3
exit_infeasible = 4


class Options(object):
    """Parsed global options."""
    def __init__(self):
        self.config = None
        self.seed = None
        self.out = None
        self.format = 'csv'
        self.threads = None
        self.strict = False
        self.debug = False

    def directory(self):
        if self.out is None:
            return output_directory()
        return self.out


def _report(**fields):
    """Print key=value lines in the order given."""
    for key, value in fields.items():
        if isinstance(value, float):
            value = '%.6g' % value
        print('%s=%s' % (key, value))


def _write_table(opts, name, header, rows):
    """Write rows under header to <out>/<name>.<format>; returns the path."""
    directory = opts.directory()
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, '%s.%s' % (name, opts.format))
    with open(path, 'w', newline='') as fp:
        if opts.format == 'csv':
            writer = csv.writer(fp, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(v) if isinstance(v, float) else v
                                 for v in row])
        else:
            json.dump([dict(zip(header, row)) for row in rows], fp, indent=1)
            fp.write('\n')
    log.debug('[wrote %s]', path)
    return path


def _seed_of(opts, scenario):
    if opts.seed is None:
        return scenario.experiment.master_seed
    return opts.seed


# {{ commands


def cmd_pixel_gain(opts, scenario, args):
    """Long-exposure gain map and deviation surface of the TR hop."""
    spec = scenario.pixel_spec('tr')
    jitter = scenario.jitter_spec('tr')
    quad = scenario.quadrature()
    null = scenario.geometry.wavelength / (scenario.geometry.pixel_width_mm *
                                           1e-3)
    axis = np.linspace(-2 * null, 2 * null, 21)
    grid = np.stack(np.meshgrid(axis, axis, indexing='ij'), axis=-1)
    dev = pixel_optics.deviation_surface(grid, spec, jitter, quad)

    rows = []
    for i, mx in enumerate(axis):
        for j, my in enumerate(axis):
            mu = (mx, my)
            gain = pixel_optics.long_exposure_gain(mu, spec, jitter, quad)
            ideal = spec.scale * float(pixel_optics.ideal_pixel_gain(mu, spec))
            rows.append((float(mx), float(my), ideal, gain, float(dev[i, j])))
    path = _write_table(opts, 'pixel_gain',
                        ('mu_x', 'mu_y', 'ideal', 'gain', 'deviation'), rows)
    _report(boresight_gain=pixel_optics.long_exposure_gain((0.0, 0.0), spec,
                                                           jitter, quad),
            peak_gain=spec.scale,
            first_null_gain=pixel_optics.long_exposure_gain((null, 0.0), spec,
                                                            jitter, quad),
            output=path)
    return exit_ok


def cmd_channel(opts, scenario, args):
    """Draw one cascaded channel realization."""
    seed = _seed_of(opts, scenario)
    ch = channel.cascaded_channel(scenario, seed)
    centers = scenario.to_geometry().pixel_centers
    rows = [(n, float(centers[n, 0]), float(centers[n, 1]),
             float(ch.g[n].real), float(ch.g[n].imag),
             float(abs(ch.baseline[n])), float(ch.irradiance_tr[n]),
             float(ch.irradiance_rr[n])) for n in range(ch.n)]
    path = _write_table(opts, 'channel',
                        ('n', 'x_m', 'y_m', 'g_re', 'g_im', 'baseline_abs',
                         'irradiance_tr', 'irradiance_rr'), rows)
    _report(N=ch.n, seed=seed, power=ch.power(), output=path)
    return exit_ok


def _estimate(opts, scenario):
    seed = _seed_of(opts, scenario)
    rng = np.random.default_rng(seed)
    g = channel.cascaded_channel(scenario, rng).g
    plan = montecarlo.pilot_plan(scenario, g)
    return seed, g, plan, estimation.estimate_channel(plan, g, rng)


def cmd_estimate(opts, scenario, args):
    """Run one pilot phase and report its NMSE."""
    seed, g, plan, res = _estimate(opts, scenario)
    rows = [(n, float(g[n].real), float(g[n].imag), float(res.g_hat[n].real),
             float(res.g_hat[n].imag)) for n in range(len(g))]
    path = _write_table(opts, 'estimate',
                        ('n', 'g_re', 'g_im', 'g_hat_re', 'g_hat_im'), rows)
    gamma = plan.power_ratio * float(np.vdot(g, g).real)
    _report(N=plan.N,
            M=plan.M,
            seed=seed,
            method=res.method,
            nmse=res.nmse,
            predicted_nmse=estimation.predicted_nmse(plan.N, plan.M, gamma),
            op_count=res.op_count,
            output=path)
    return exit_ok


def cmd_adapt(opts, scenario, args):
    """Estimate the channel, then run the phase adaptation."""
    seed, g, plan, res = _estimate(opts, scenario)
    cfg = scenario.adapt_config()
    state = phase_control.adapt_phases(res.g_hat, cfg)
    rows = list(enumerate(state.trace))
    path = _write_table(opts, 'adapt', ('iteration', 'objective'), rows)
    ratio = channel.data_power_ratio(scenario)
    optimum = ratio * float(np.abs(g).sum())**2
    achieved = channel.instantaneous_snr(g, state.weights, ratio)
    _report(N=plan.N,
            seed=seed,
            bits=cfg.bits,
            iterations=state.iterations,
            converged=state.converged,
            objective=state.objective,
            upper_bound=float(np.abs(res.g_hat).sum()),
            snr_db=10 * np.log10(achieved),
            loss_db=10 * np.log10(optimum / achieved),
            output=path)
    return exit_ok


def cmd_budget(opts, scenario, args):
    """Size the pilot and the feedback and check the frame budget."""
    n = scenario.to_geometry().n_pixels
    if scenario.pilot.snr_db is None:
        gamma = channel.pilot_snr(scenario)
    else:
        gamma = channel._from_db(scenario.pilot.snr_db)
    budget = scenario.feedback_budget()
    report = feedback.design_budget(n, budget, scenario.pilot.target_nmse,
                                    gamma)
    _report(N=n,
            target_nmse=scenario.pilot.target_nmse,
            gamma_pilot_db=10 * np.log10(gamma),
            M_required=report.M_required,
            Q_max=report.Q_max,
            component_bits=report.component_bits,
            payload_bits=report.payload_bits,
            tau_pilot=report.tau_pilot,
            tau_fb=report.tau_fb,
            slack=report.slack,
            feasible=report.feasible)
    if opts.strict and not report.feasible:
        raise InfeasibleBudgetError(
            "pilot and feedback overhead exceed the frame budget", report)
    return exit_ok


def cmd_sweep(opts, scenario, args):
    """Run a named experiment and write its table and manifest."""
    if len(args) != 1:
        raise ConfigurationError("sweep takes one experiment name; choose "
                                 "from %s" % ', '.join(sorted(
                                     montecarlo.experiments)), "sweep")
    spec = montecarlo.ExperimentSpec(args[0], master_seed=opts.seed)
    result = montecarlo.run_experiment(spec, scenario, threads=opts.threads)
    path, mpath = montecarlo.write_result(result, spec, scenario,
                                          opts.directory(), opts.format)
    _report(experiment=spec.name,
            points=len(result.points),
            trials=result.trials,
            seed=result.master_seed,
            output=path,
            manifest=mpath)
    return exit_ok


def cmd_baselines(opts, scenario, args):
    """Compare the configured link with the idealized references."""
    report = montecarlo.run_baselines(scenario,
                                      master_seed=opts.seed,
                                      threads=opts.threads)
    directory = opts.directory()
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, 'baselines.json')
    with open(path, 'w') as fp:
        json.dump(report.to_dict(), fp, indent=1, sort_keys=True)
        fp.write('\n')
    fields = report.to_dict()
    fields['output'] = path
    _report(**fields)
    return exit_ok


dispatch = {
    'pixel-gain': cmd_pixel_gain,
    'channel': cmd_channel,
    'estimate': cmd_estimate,
    'adapt': cmd_adapt,
    'budget': cmd_budget,
    'sweep': cmd_sweep,
    'baselines': cmd_baselines,
}

# }}


def main(argv):
    """Main driver for the risowc command line tool; returns the exit
    status."""
    import getopt

    def usage(help=False):
        print("Usage: risowc [options] command [args]", file=sys.stderr)
        if help:
            print("""
Commands:
  pixel-gain        : long-exposure gain map and deviation surface
  channel           : draw one cascaded channel realization
  estimate          : run one pilot phase and report the NMSE
  adapt             : estimate, then adapt the RIS phases
  budget            : pilot length, Q_max and frame feasibility
  sweep <name>      : run an experiment (%s)
  baselines         : compare against perfect CSI and ideal optics

Options include:
  -c/--config <path> : scenario file (default: shipped default.yaml)
  --seed <u64>       : random seed (default: experiment.master_seed)
  --out <dir>        : output directory (default: $RISOWC_OUT or .)
  --format <fmt>     : csv or json
  --threads <n>      : worker threads for sweeps
  --strict           : budget exits 4 if infeasible
  -d/--debug         : enable debugging output
  -h/--help          : display this help message
""" % ', '.join(sorted(montecarlo.experiments)),
                  file=sys.stderr)
        else:
            print("       [use risowc --help for options]\n",
                  file=sys.stderr)

    opts = Options()
    try:
        flags, args = getopt.gnu_getopt(
            argv, 'c:dh', ('config=', 'seed=', 'out=', 'format=', 'threads=',
                           'strict', 'debug', 'help'))
    except getopt.GetoptError as e:
        print("Error: %s" % e, file=sys.stderr)
        usage(False)
        return exit_config

    try:
        for opt, val in flags:
            if opt in ('-c', '--config'):
                opts.config = val
            elif opt == '--seed':
                try:
                    opts.seed = int(val)
                except ValueError:
                    opts.seed = -1
                if not 0 <= opts.seed < 2**64:
                    raise ConfigurationError(
                        "must be an unsigned 64-bit integer", "--seed")
            elif opt == '--out':
                opts.out = val
            elif opt == '--format':
                if val not in ('csv', 'json'):
                    raise ConfigurationError("must be csv or json",
                                             "--format")
                opts.format = val
            elif opt == '--threads':
                try:
                    opts.threads = int(val)
                except ValueError:
                    opts.threads = 0
                if opts.threads < 1:
                    raise ConfigurationError("must be a positive integer",
                                             "--threads")
            elif opt == '--strict':
                opts.strict = True
            elif opt in ('-d', '--debug'):
                opts.debug = True
            elif opt in ('-h', '--help'):
                usage(True)
                return exit_ok

        if opts.debug:
            logging.basicConfig(level=logging.DEBUG,
                                format='%(message)s',
                                stream=sys.stderr)
            print("[debugging output enabled]", file=sys.stderr)

        if len(args) == 0 or args[0] not in dispatch:
            usage(len(args) == 0)
            if args:
                print("Error: unknown command `%s'" % args[0],
                      file=sys.stderr)
            return exit_config

        scenario = ScenarioConfig.load(opts.config)
        return dispatch[args[0]](opts, scenario, args[1:])
    except ConfigurationError as e:
        print("Error: %s" % e, file=sys.stderr)
        return exit_config
    except NumericalError as e:
        print("Numerical failure: %s" % e, file=sys.stderr)
        return exit_numerical
    except InfeasibleBudgetError as e:
        print("Infeasible: %s" % e, file=sys.stderr)
        return exit_infeasible
    except RISError as e:
        print("Error: %s" % e, file=sys.stderr)
        return exit_config


def run():
    """Console-script entry point."""
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    run()

__all__ = ["main", "run", "dispatch"]

# Here there be dragons
