##
## Name:     scenario.py
## Purpose:  Scenario configuration for the RIS link simulator.
##
## A scenario is a nested YAML document with one mapping per section
## (geometry, optics, jitter, turbulence, efficiency, link, noise,
## pilot, budget, control, experiment).  Key names carry their units,
## e.g., wavelength_nm or frame_duration_ms, and are converted to SI
## when the scenario is turned into the specs the modelling modules
## consume.
##
## Loading proceeds parse -> validate -> freeze: every key is checked
## as it is read, unknown sections and keys are rejected, and the result
## is a tree of frozen dataclasses.  A ScenarioConfig is hashable, so
## quantities derived from it may be memoised.  Files need not be
## complete; whatever they omit is taken from the shipped defaults,
## which reproduce the quantization-study parameters in default.yaml.
##
__version__ = "1.0"

import hashlib, logging, math, os, re
from dataclasses import dataclass, field, fields, replace

import numpy as np
import yaml

from .rerror import ConfigurationError
from . import geometry, pixel_optics, turbulence, channel, estimation
from . import feedback, phase_control

log = logging.getLogger(__name__)

# -- Library defaults
default_config_path = os.path.join(os.path.dirname(__file__), 'default.yaml')
output_dir_variable = 'RISOWC_OUT'  # environment: default output directory

# {{ key parsers

# Each parser takes a raw YAML value and returns its canonical form, or
# raises ValueError describing what was wrong with it.


def _real(value):
    if isinstance(value, bool):
        raise ValueError("expected a number, got %r" % (value, ))
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ValueError("expected a number, got %r" % (value, ))
    if not math.isfinite(out):
        raise ValueError("must be finite")
    return out


def _positive(value):
    out = _real(value)
    if out <= 0:
        raise ValueError("must be positive")
    return out


def _nonnegative(value):
    out = _real(value)
    if out < 0:
        raise ValueError("must be nonnegative")
    return out


def _unit_interval(value):
    """A value in (0, 1]."""
    out = _real(value)
    if not 0 < out <= 1:
        raise ValueError("must lie in (0, 1]")
    return out


def _duty(value):
    """A value in [0, 1)."""
    out = _real(value)
    if not 0 <= out < 1:
        raise ValueError("must lie in [0, 1)")
    return out


def _correlation(value):
    out = _real(value)
    if not -1 <= out <= 1:
        raise ValueError("must lie in [-1, 1]")
    return out


def _count(value):
    if isinstance(value, bool):
        raise ValueError("expected an integer, got %r" % (value, ))
    try:
        out = int(value)
    except (TypeError, ValueError):
        raise ValueError("expected an integer, got %r" % (value, ))
    if out != _real(value) or out < 1:
        raise ValueError("must be a positive integer")
    return out


def _seed(value):
    if isinstance(value, bool):
        raise ValueError("expected an integer seed")
    try:
        out = int(value)
    except (TypeError, ValueError):
        raise ValueError("expected an integer seed, got %r" % (value, ))
    if not 0 <= out < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return out


def _flag(value):
    if not isinstance(value, bool):
        raise ValueError("expected true or false, got %r" % (value, ))
    return value


def _vector3(value):
    if isinstance(value, (str, bytes)) or not hasattr(value, '__len__') \
       or len(value) != 3:
        raise ValueError("expected a list of three numbers")
    return tuple(_real(v) for v in value)


def _choice(*options):
    def parse(value):
        if value not in options:
            raise ValueError("must be one of %s" % ', '.join(options))
        return value

    return parse


def _auto_or(parse):
    def wrapped(value):
        if value == 'auto':
            return value
        return parse(value)

    return wrapped


def _optional(parse):
    def wrapped(value):
        if value is None:
            return None
        return parse(value)

    return wrapped


pilot_length_re = re.compile(r'^(\d+(?:\.\d+)?)\s*N$')


def _pilot_length(value):
    """An integer length, "auto", or a multiple of N written "2N"."""
    if isinstance(value, str):
        if value == 'auto' or pilot_length_re.match(value.strip()):
            return value.strip()
        raise ValueError('expected an integer, "auto" or a multiple '
                         'such as "2N"')
    return _count(value)


def _key(default, parse):
    return field(default=default, metadata={'parse': parse})


# }}

# {{ sections


@dataclass(frozen=True)
class GeometrySection(object):
    wavelength_nm: float = _key(1550.0, _positive)
    pixel_width_mm: float = _key(2.0, _positive)
    pixel_height_mm: float = _key(2.0, _positive)
    lattice_pitch_cm: float = _key(2.0, _positive)
    rows: int = _key(8, _count)
    cols: int = _key(8, _count)
    ris_distance_m: float = _key(1000.0, _positive)
    tx_position_m: tuple = _key((0.0, 0.0, 0.0), _vector3)
    rx_position_m: tuple = _key((0.0, 0.0, 2500.0), _vector3)

    @property
    def wavelength(self):
        return self.wavelength_nm * 1e-9

    @property
    def pixel_area(self):
        return self.pixel_width_mm * self.pixel_height_mm * 1e-6

    def to_geometry(self):
        return geometry.ScenarioGeometry.grid(
            rows=self.rows,
            cols=self.cols,
            pitch=self.lattice_pitch_cm * 1e-2,
            ris_distance=self.ris_distance_m,
            rx_position=self.rx_position_m,
            pixel_width=self.pixel_width_mm * 1e-3,
            pixel_height=self.pixel_height_mm * 1e-3,
            wavelength=self.wavelength,
            tx_position=self.tx_position_m)


@dataclass(frozen=True)
class OpticsSection(object):
    strehl_tr: float = _key(1.0, _unit_interval)
    strehl_rr: float = _key(1.0, _unit_interval)
    obliquity_tr: float = _key(1.0, _unit_interval)
    obliquity_rr: float = _key(1.0, _unit_interval)
    quadrature_nodes: int = _key(32, _count)
    quadrature_tolerance: float = _key(1e-8, _positive)
    quadrature_method: str = _key('adaptive', _choice('adaptive', 'fixed'))

    def quadrature(self):
        return pixel_optics.QuadratureSpec(
            nodes_per_axis=self.quadrature_nodes,
            relative_tolerance=self.quadrature_tolerance,
            method=self.quadrature_method)

    def pixel_spec(self, hop, geom):
        """Return the PixelOpticsSpec of hop 'tr' or 'rr' for the pixel
        dimensions in the geometry section geom."""
        return pixel_optics.PixelOpticsSpec.from_pixel(
            geom.pixel_width_mm * 1e-3,
            geom.pixel_height_mm * 1e-3,
            geom.wavelength,
            strehl=getattr(self, 'strehl_%s' % hop),
            obliquity=getattr(self, 'obliquity_%s' % hop))


@dataclass(frozen=True)
class JitterSection(object):
    sigma_x_tr_mrad: float = _key(0.1, _nonnegative)
    sigma_y_tr_mrad: float = _key(0.1, _nonnegative)
    correlation_tr: float = _key(0.0, _correlation)
    sigma_x_rr_mrad: float = _key(0.1, _nonnegative)
    sigma_y_rr_mrad: float = _key(0.1, _nonnegative)
    correlation_rr: float = _key(0.0, _correlation)

    def jitter(self, hop):
        sx = getattr(self, 'sigma_x_%s_mrad' % hop) * 1e-3
        sy = getattr(self, 'sigma_y_%s_mrad' % hop) * 1e-3
        rho = getattr(self, 'correlation_%s' % hop)
        return pixel_optics.JitterSpec.correlated(sx, sy, rho)


@dataclass(frozen=True)
class TurbulenceSection(object):
    regime: str = _key('lognormal',
                       _choice('none', 'lognormal', 'gammagamma'))
    sigma_lnI_sq_tr: float = _key(0.1, _nonnegative)
    sigma_lnI_sq_rr: float = _key(0.1, _nonnegative)
    alpha_tr: float = _key(4.0, _positive)
    beta_tr: float = _key(4.0, _positive)
    alpha_rr: float = _key(4.0, _positive)
    beta_rr: float = _key(4.0, _positive)
    complex_fading: bool = _key(False, _flag)

    def validate(self):
        if self.complex_fading and self.regime != 'none':
            raise ConfigurationError(
                "complex fading and irradiance turbulence are exclusive; "
                "set regime: none to use complex_fading",
                "turbulence.complex_fading")

    def spec(self, hop):
        return turbulence.TurbulenceSpec(
            regime=self.regime,
            sigma_lnI_sq=getattr(self, 'sigma_lnI_sq_%s' % hop),
            alpha=getattr(self, 'alpha_%s' % hop),
            beta=getattr(self, 'beta_%s' % hop))


@dataclass(frozen=True)
class EfficiencySection(object):
    reflectivity: float = _key(0.7, _unit_interval)
    polarization_efficiency: float = _key(1.0, _unit_interval)
    insertion_loss: float = _key(1.0, _unit_interval)

    def spec(self):
        return channel.OpticalEfficiencySpec(
            reflectivity=self.reflectivity,
            polarization_efficiency=self.polarization_efficiency,
            insertion_loss=self.insertion_loss)


@dataclass(frozen=True)
class LinkSection(object):
    tx_directivity: float = _key(1.0, _positive)
    rx_directivity: float = _key(1.0, _positive)
    extinction_per_m: float = _key(1e-4, _nonnegative)
    data_power_w: float = _key(1.0, _positive)
    pilot_power_w: float = _key(1.0, _positive)
    data_snr_db: float = _key(20.0, _optional(_real))

    def spec(self, geom):
        return channel.LinkSpec(tx_directivity=self.tx_directivity,
                                rx_directivity=self.rx_directivity,
                                extinction=self.extinction_per_m,
                                pixel_area=geom.pixel_area,
                                wavenumber=2 * np.pi / geom.wavelength,
                                data_power=self.data_power_w,
                                pilot_power=self.pilot_power_w)


@dataclass(frozen=True)
class NoiseSection(object):
    responsivity_a_per_w: float = _key(1.0, _positive)
    signal_power_w: object = _key('auto', _auto_or(_nonnegative))
    background_power_w: float = _key(1e-6, _nonnegative)
    dark_current_na: float = _key(1.0, _nonnegative)
    bandwidth_hz: float = _key(1e9, _positive)
    temperature_k: float = _key(300.0, _positive)
    feedback_resistance_ohm: float = _key(1e4, _positive)
    transconductance_ms: float = _key(30.0, _positive)
    channel_noise_factor: float = _key(0.7, _positive)
    series_resistance_ohm: float = _key(1e3, _positive)
    input_capacitance_pf: float = _key(1.0, _positive)
    bit_rate_bps: float = _key(1e9, _positive)
    i2: float = _key(0.562, _positive)
    i3: float = _key(0.0868, _positive)
    i_f: float = _key(0.184, _positive)

    def spec(self, signal_power):
        """Return the ReceiverNoiseSpec with P_sig = signal_power (W)."""
        return channel.ReceiverNoiseSpec(
            responsivity=self.responsivity_a_per_w,
            signal_power=signal_power,
            background_power=self.background_power_w,
            dark_current=self.dark_current_na * 1e-9,
            bandwidth=self.bandwidth_hz,
            temperature=self.temperature_k,
            feedback_resistance=self.feedback_resistance_ohm,
            transconductance=self.transconductance_ms * 1e-3,
            channel_noise_factor=self.channel_noise_factor,
            series_resistance=self.series_resistance_ohm,
            input_capacitance=self.input_capacitance_pf * 1e-12,
            bit_rate=self.bit_rate_bps,
            i2=self.i2,
            i3=self.i3,
            i_f=self.i_f)


@dataclass(frozen=True)
class PilotSection(object):
    kind: str = _key('unitary_dft', _choice('unitary_dft', 'general'))
    length: object = _key('2N', _pilot_length)
    snr_db: float = _key(20.0, _optional(_real))
    target_nmse: float = _key(0.005, _duty)

    def validate(self):
        if self.target_nmse <= 0:
            raise ConfigurationError("must lie in (0, 1)",
                                     "pilot.target_nmse")

    def resolve_length(self, n, gamma_pilot=None):
        """Return the integer pilot length M for N = n elements.

        gamma_pilot -- pilot SNR (linear), required when length is "auto".
        """
        if isinstance(self.length, int):
            m = self.length
        elif self.length == 'auto':
            if gamma_pilot is None:
                raise ConfigurationError("automatic pilot length needs a "
                                         "pilot SNR", "pilot.length")
            m = estimation.required_pilot_length(n, self.target_nmse,
                                                 gamma_pilot)
        else:
            factor = float(pilot_length_re.match(self.length).group(1))
            m = int(math.ceil(factor * n))
        if m < n:
            raise ConfigurationError(
                "pilot length %d is shorter than N = %d" % (m, n),
                "pilot.length")
        return m


@dataclass(frozen=True)
class BudgetSection(object):
    spectral_efficiency: float = _key(1.0, _positive)
    feedback_bandwidth_mhz: float = _key(1.0, _positive)
    frame_duration_ms: float = _key(10.0, _positive)
    symbol_rate_msps: float = _key(1.0, _positive)
    min_data_duty: float = _key(0.2, _duty)
    component_bits: object = _key(6, _auto_or(_count))

    def budget(self, component_bits=None):
        if component_bits is None:
            component_bits = self.component_bits
        if component_bits == 'auto':
            component_bits = None
        return feedback.FeedbackBudget(
            component_bits=component_bits,
            spectral_efficiency=self.spectral_efficiency,
            feedback_bandwidth=self.feedback_bandwidth_mhz * 1e6,
            frame_duration=self.frame_duration_ms * 1e-3,
            symbol_rate=self.symbol_rate_msps * 1e6,
            min_data_duty=self.min_data_duty)


@dataclass(frozen=True)
class ControlSection(object):
    phase_bits: int = _key(6, _optional(_count))
    max_iterations: int = _key(200, _count)
    step_mode: str = _key('constant', _choice('constant', 'diminishing'))
    step_scale: float = _key(1.0, _positive)
    tolerance: float = _key(1e-9, _positive)
    quantize: str = _key('every', _choice('every', 'emit'))

    def validate(self):
        if self.step_mode == 'constant' and self.step_scale >= 2:
            raise ConfigurationError(
                "constant step must satisfy step_scale < 2 "
                "(mu < 2/|g|^2)", "control.step_scale")

    def adapt_config(self, bits=-1):
        """Return the AdaptConfig; bits overrides phase_bits if given."""
        return phase_control.AdaptConfig(
            bits=self.phase_bits if bits == -1 else bits,
            max_iterations=self.max_iterations,
            step_mode=self.step_mode,
            step_scale=self.step_scale,
            tolerance=self.tolerance,
            quantize=self.quantize)


@dataclass(frozen=True)
class ExperimentSection(object):
    trials: int = _key(200, _count)
    master_seed: int = _key(20240601, _seed)
    threads: int = _key(1, _count)


section_types = (
    ('geometry', GeometrySection),
    ('optics', OpticsSection),
    ('jitter', JitterSection),
    ('turbulence', TurbulenceSection),
    ('efficiency', EfficiencySection),
    ('link', LinkSection),
    ('noise', NoiseSection),
    ('pilot', PilotSection),
    ('budget', BudgetSection),
    ('control', ControlSection),
    ('experiment', ExperimentSection),
)

# }}

# {{ ScenarioConfig


def _parse_section(name, cls, data, base):
    """Overlay data (a mapping) on the section base and return the new
    frozen section; unknown keys and bad values raise
    ConfigurationError with the dotted key.
    """
    if data is None:
        return base
    if not isinstance(data, dict):
        raise ConfigurationError("section must be a mapping", name)

    known = dict((f.name, f) for f in fields(cls))
    changes = {}
    for key, raw in data.items():
        if key not in known:
            raise ConfigurationError("unknown key", '%s.%s' % (name, key))
        try:
            changes[key] = known[key].metadata['parse'](raw)
        except ValueError as e:
            raise ConfigurationError(str(e), '%s.%s' % (name, key))

    out = replace(base, **changes)
    if hasattr(out, 'validate'):
        out.validate()
    return out


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


@dataclass(frozen=True)
class ScenarioConfig(object):
    """A complete, validated simulation scenario.

    Each attribute is one frozen section; use ScenarioConfig.load() to
    read a YAML file, or .evolve() to derive a variant.
    """
    geometry: GeometrySection = field(default_factory=GeometrySection)
    optics: OpticsSection = field(default_factory=OpticsSection)
    jitter: JitterSection = field(default_factory=JitterSection)
    turbulence: TurbulenceSection = field(default_factory=TurbulenceSection)
    efficiency: EfficiencySection = field(default_factory=EfficiencySection)
    link: LinkSection = field(default_factory=LinkSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    pilot: PilotSection = field(default_factory=PilotSection)
    budget: BudgetSection = field(default_factory=BudgetSection)
    control: ControlSection = field(default_factory=ControlSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)

    @classmethod
    def from_dict(cls, data, base=None):
        """Build a scenario from a nested mapping, merged over base (or
        over the defaults if base is None).
        """
        if base is None:
            base = cls()
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigurationError("scenario must be a mapping of "
                                     "sections")

        names = dict(section_types)
        for key in data:
            if key not in names:
                raise ConfigurationError("unknown section", key)

        changes = {}
        for name, sec in section_types:
            changes[name] = _parse_section(name, sec, data.get(name),
                                           getattr(base, name))
        out = replace(base, **changes)
        out.validate()
        return out

    @classmethod
    def load(cls, path=None):
        """Load a scenario from the YAML file at path; keys it omits take
        their values from the shipped defaults.  With no path, load the
        shipped defaults themselves.
        """
        if path is None:
            path = default_config_path
        try:
            with open(path) as fp:
                data = yaml.safe_load(fp)
        except yaml.YAMLError as e:
            raise ConfigurationError("cannot parse YAML: %s" % e, path)
        except (IOError, OSError) as e:
            raise ConfigurationError("cannot read: %s" % e.strerror, path)

        log.debug('[loaded scenario from %s]', path)
        return cls.from_dict(data)

    @classmethod
    def loads(cls, text):
        """Load a scenario from a YAML string."""
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigurationError("cannot parse YAML: %s" % e)
        return cls.from_dict(data)

    def validate(self):
        """Cross-section checks; each section checks itself."""
        geom = self.to_geometry()
        if isinstance(self.pilot.length, int) and \
           self.pilot.length < geom.n_pixels:
            raise ConfigurationError(
                "pilot length %d is shorter than N = %d" %
                (self.pilot.length, geom.n_pixels), "pilot.length")

    def to_dict(self):
        """Return the effective scenario as plain nested dicts, with every
        default materialized."""
        out = {}
        for name, _ in section_types:
            sec = getattr(self, name)
            out[name] = dict(
                (f.name, _plain(getattr(sec, f.name))) for f in fields(sec))
        return out

    def dump(self, stream=None):
        """Write the effective scenario as YAML to stream, or return it as
        a string if stream is None."""
        return yaml.safe_dump(self.to_dict(),
                              stream,
                              default_flow_style=False,
                              sort_keys=True)

    def fingerprint(self):
        """Return the SHA-256 hex digest of the canonical YAML dump."""
        return hashlib.sha256(self.dump().encode('utf-8')).hexdigest()

    def evolve(self, section, **changes):
        """Return a copy with the named keys of one section changed; the
        new values are parsed and validated like file input.
        """
        names = dict(section_types)
        if section not in names:
            raise ConfigurationError("unknown section", section)
        return self.from_dict({section: changes}, base=self)

    # -- Conversions into the modelling modules' specs

    def to_geometry(self):
        return self.geometry.to_geometry()

    def pixel_spec(self, hop):
        """Return the PixelOpticsSpec for hop 'tr' or 'rr'."""
        return self.optics.pixel_spec(hop, self.geometry)

    def jitter_spec(self, hop):
        return self.jitter.jitter(hop)

    def turbulence_spec(self, hop):
        return self.turbulence.spec(hop)

    def quadrature(self):
        return self.optics.quadrature()

    def efficiency_spec(self):
        return self.efficiency.spec()

    def link_spec(self):
        return self.link.spec(self.geometry)

    def feedback_budget(self, component_bits=None):
        return self.budget.budget(component_bits)

    def adapt_config(self, bits=-1):
        return self.control.adapt_config(bits)


def output_directory(default='.'):
    """Return the default output directory, from RISOWC_OUT if set."""
    return os.environ.get(output_dir_variable, default)


# }}

__all__ = [
    "ScenarioConfig", "GeometrySection", "OpticsSection", "JitterSection",
    "TurbulenceSection", "EfficiencySection", "LinkSection", "NoiseSection",
    "PilotSection", "BudgetSection", "ControlSection", "ExperimentSection",
    "default_config_path", "output_directory", "__version__"
]

# Here there be dragons
