##
## Name:     channel.py
## Purpose:  Cascaded RIS channel, receiver noise and SNR formulas.
##
## Each pixel n contributes two line-of-sight hops, transmitter to
## pixel (TR) and pixel to receiver (RR).  A hop's complex field gain is
##
##    h = sqrt(A G_dir Gbar eta / (4 pi d)^2) exp(-alpha d / 2) exp(-j k d)
##
## where Gbar is the pixel's long-exposure gain on that hop and eta the
## static optical efficiency of the pixel.  The cascaded coefficient
## g_n = h_RR h_TR is a deterministic baseline times a turbulence factor
## sqrt(H_TR H_RR).  In the alternative complex-fading mode the factor
## is instead zeta_TR zeta_RR with zeta ~ CN(0, 1); the two modes are
## mutually exclusive.
##
## Per-scenario quantities that involve quadrature (the per-pixel
## long-exposure gains and hence the baseline) are collected in a
## LinkBudget and memoised on the scenario sections they depend on.
##
import functools, logging
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .rerror import ConfigurationError
from . import geometry, pixel_optics, turbulence

log = logging.getLogger(__name__)

hop_names = ('tr', 'rr')

# {{ specs


@dataclass(frozen=True)
class OpticalEfficiencySpec(object):
    """Static optical efficiency eta = R * xi_p * L_ins of a pixel."""
    reflectivity: float = 1.0
    polarization_efficiency: float = 1.0
    insertion_loss: float = 1.0

    def __post_init__(self):
        for key in ('reflectivity', 'polarization_efficiency',
                    'insertion_loss'):
            if not 0 < getattr(self, key) <= 1:
                raise ConfigurationError("must lie in (0, 1]",
                                         "efficiency." + key)

    @property
    def eta(self):
        return self.reflectivity * self.polarization_efficiency * \
            self.insertion_loss


@dataclass(frozen=True)
class LinkSpec(object):
    """Propagation parameters shared by all pixels.

    tx_directivity, rx_directivity -- G_T, G_R (dimensionless).
    extinction   -- Beer-Lambert coefficient alpha (1/m).
    pixel_area   -- A_n = dx*dy (m^2).
    wavenumber   -- k = 2 pi / lam (rad/m).
    data_power   -- P_d (W).
    pilot_power  -- P_T (W).
    """
    tx_directivity: float
    rx_directivity: float
    extinction: float
    pixel_area: float
    wavenumber: float
    data_power: float = 1.0
    pilot_power: float = 1.0

    def __post_init__(self):
        if self.extinction < 0:
            raise ConfigurationError("must be nonnegative",
                                     "link.extinction_per_m")
        for key in ('tx_directivity', 'rx_directivity', 'pixel_area',
                    'wavenumber', 'data_power', 'pilot_power'):
            if not getattr(self, key) > 0:
                raise ConfigurationError("must be positive", "link." + key)

    def directivity(self, hop):
        return self.tx_directivity if hop == 'tr' else self.rx_directivity


@dataclass(frozen=True)
class ReceiverNoiseSpec(object):
    """Shot- and thermal-noise parameters of a transimpedance receiver.
    All quantities are in SI units; the physical constants default to
    their CODATA values.
    """
    responsivity: float
    signal_power: float
    background_power: float
    dark_current: float
    bandwidth: float
    temperature: float
    feedback_resistance: float
    transconductance: float
    channel_noise_factor: float
    series_resistance: float
    input_capacitance: float
    bit_rate: float
    i2: float = 0.562
    i3: float = 0.0868
    i_f: float = 0.184
    electron_charge: float = constants.e
    boltzmann: float = constants.k

    def __post_init__(self):
        for key in ('signal_power', 'background_power', 'dark_current'):
            if getattr(self, key) < 0:
                raise ConfigurationError("must be nonnegative",
                                         "noise." + key)
        for key in ('responsivity', 'bandwidth', 'temperature',
                    'feedback_resistance', 'transconductance',
                    'channel_noise_factor', 'series_resistance',
                    'input_capacitance', 'bit_rate', 'i2', 'i3', 'i_f',
                    'electron_charge', 'boltzmann'):
            if not getattr(self, key) > 0:
                raise ConfigurationError("must be positive", "noise." + key)


NoiseVariance = namedtuple('NoiseVariance', 'shot thermal total')


@dataclass(frozen=True)
class CascadedChannel(object):
    """One realization of the cascaded channel.

    g              -- complex N-vector of cascaded coefficients.
    baseline       -- deterministic part h_RR * h_TR.
    irradiance_tr  -- per-element fading power factors of the TR hop
                      (H, or |zeta|^2 in complex-fading mode).
    irradiance_rr  -- the same for the RR hop.
    seed           -- the seed the realization was drawn with, if known.
    """
    g: np.ndarray
    baseline: np.ndarray
    irradiance_tr: np.ndarray
    irradiance_rr: np.ndarray
    seed: object = None

    @property
    def n(self):
        return len(self.g)

    def power(self):
        """Return ||g||^2."""
        return float(np.vdot(self.g, self.g).real)


@dataclass(frozen=True)
class LinkBudget(object):
    """Deterministic per-pixel quantities of a scenario.

    hops      -- HopGeometry with distances and direction cosines.
    gain_tr   -- long-exposure pixel gains of the TR hop.
    gain_rr   -- long-exposure pixel gains of the RR hop.
    h_tr      -- complex field gains of the TR hop.
    h_rr      -- complex field gains of the RR hop.
    baseline  -- h_rr * h_tr.
    """
    hops: geometry.HopGeometry
    gain_tr: np.ndarray
    gain_rr: np.ndarray
    h_tr: np.ndarray
    h_rr: np.ndarray
    baseline: np.ndarray

    @property
    def element_power(self):
        return np.abs(self.baseline)**2


# }}

# {{ field gains


def hop_field_gains(hop, hop_geom, gains, link, efficiency):
    """Return the complex field gains of every pixel on one hop.

    hop         -- 'tr' or 'rr'.
    hop_geom    -- HopGeometry giving the per-pixel distances.
    gains       -- per-pixel long-exposure gains Gbar on this hop.
    link        -- LinkSpec.
    efficiency  -- OpticalEfficiencySpec.

    The stochastic factor zeta is not included.
    """
    if hop not in hop_names:
        raise ConfigurationError("hop must be 'tr' or 'rr'", "hop")
    d = hop_geom.d_tr if hop == 'tr' else hop_geom.d_rr
    gains = np.asarray(gains, dtype=float)
    mag = np.sqrt(link.pixel_area * link.directivity(hop) * gains *
                  efficiency.eta) / (4 * np.pi * d)
    mag = mag * np.exp(-0.5 * link.extinction * d)
    return mag * np.exp(-1j * link.wavenumber * d)


def hop_field_gain(hop, n, hop_geom, gains, link, efficiency):
    """Return the complex field gain of pixel n on one hop; see
    hop_field_gains for the arguments."""
    return complex(hop_field_gains(hop, hop_geom, gains, link, efficiency)[n])


def extinction_factor(link, distance):
    """Return the Beer-Lambert power transmission exp(-alpha d)."""
    return float(np.exp(-link.extinction * distance))


@functools.lru_cache(maxsize=64)
def _budget(geom_sec, optics_sec, jitter_sec, efficiency_sec, link_sec):
    geom = geom_sec.to_geometry()
    hg = geometry.direction_cosines(geom)
    quad = optics_sec.quadrature()
    gain = {}
    for hop in hop_names:
        mu = hg.mu_tr if hop == 'tr' else hg.mu_rr
        gain[hop] = pixel_optics.per_pixel_gains(
            mu, optics_sec.pixel_spec(hop, geom_sec), jitter_sec.jitter(hop),
            quad)
    link = link_sec.spec(geom_sec)
    eff = efficiency_sec.spec()
    h_tr = hop_field_gains('tr', hg, gain['tr'], link, eff)
    h_rr = hop_field_gains('rr', hg, gain['rr'], link, eff)
    log.debug('[link budget: N=%d, mean Gbar TR %.4g, RR %.4g]',
              geom.n_pixels, gain['tr'].mean(), gain['rr'].mean())
    return LinkBudget(hops=hg,
                      gain_tr=gain['tr'],
                      gain_rr=gain['rr'],
                      h_tr=h_tr,
                      h_rr=h_rr,
                      baseline=h_rr * h_tr)


def link_budget(scenario):
    """Return the LinkBudget of scenario, computing it at most once for
    each distinct combination of the sections it depends on."""
    return _budget(scenario.geometry, scenario.optics, scenario.jitter,
                   scenario.efficiency, scenario.link)


# }}

# {{ realizations


def _generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), rng


def cascaded_channel(scenario, rng):
    """Draw one realization of the cascaded channel.

    rng -- a numpy Generator, or a seed from which one is made (the seed
           is then recorded in the result).

    With turbulence, g_n = baseline_n sqrt(H_TR,n H_RR,n) with
    independent draws per element and hop; the phase of g_n is that of
    the baseline.  In complex-fading mode g_n = baseline_n zeta_TR,n
    zeta_RR,n.  The same seed always yields the same vector.
    """
    rng, seed = _generator(rng)
    budget = link_budget(scenario)
    n = len(budget.baseline)

    if scenario.turbulence.complex_fading:
        scale = np.sqrt(0.5)
        z_tr = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        z_rr = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        return CascadedChannel(g=budget.baseline * z_tr * z_rr,
                               baseline=budget.baseline,
                               irradiance_tr=np.abs(z_tr)**2,
                               irradiance_rr=np.abs(z_rr)**2,
                               seed=seed)

    h_tr = turbulence.sample_irradiance(scenario.turbulence_spec('tr'), rng,
                                        n)
    h_rr = turbulence.sample_irradiance(scenario.turbulence_spec('rr'), rng,
                                        n)
    return CascadedChannel(g=budget.baseline * np.sqrt(h_tr * h_rr),
                           baseline=budget.baseline,
                           irradiance_tr=h_tr,
                           irradiance_rr=h_rr,
                           seed=seed)


# }}

# {{ moments


def mean_element_power(scenario, n=None):
    """Return E|g_n|^2 for pixel n, or the N-vector of them if n is None:

      eta^2 exp(-alpha (d_tr + d_rr)) A^2 G_T G_R Gbar_TR Gbar_RR
          / ((4 pi)^4 d_tr^2 d_rr^2)
    """
    budget = link_budget(scenario)
    link = scenario.link_spec()
    eta = scenario.efficiency_spec().eta
    d_tr, d_rr = budget.hops.d_tr, budget.hops.d_rr

    power = eta**2 * np.exp(-link.extinction * (d_tr + d_rr)) * \
        link.pixel_area**2 * link.tx_directivity * link.rx_directivity * \
        budget.gain_tr * budget.gain_rr / \
        ((4 * np.pi)**4 * d_tr**2 * d_rr**2)
    return power if n is None else float(power[n])


def amplitude_factor(scenario):
    """Return E|g_n| / sqrt(E|g_n|^2), the product of the per-hop mean
    amplitude factors of the fading model."""
    if scenario.turbulence.complex_fading:
        return np.pi / 4  # (E|zeta|)^2 with E|zeta| = sqrt(pi)/2
    return turbulence.mean_sqrt_irradiance(scenario.turbulence_spec('tr')) * \
        turbulence.mean_sqrt_irradiance(scenario.turbulence_spec('rr'))


def mean_abs_element(scenario):
    """Return the N-vector E|g_n|."""
    if scenario.turbulence.complex_fading:
        return np.sqrt(mean_element_power(scenario)) * amplitude_factor(
            scenario)
    return turbulence.mean_abs_g(mean_element_power(scenario),
                                 scenario.turbulence_spec('tr'),
                                 scenario.turbulence_spec('rr'))


def coherent_gain(power, amplitude):
    """Return sum(p_n) + sum_{n != m} a_n a_m for element powers p and
    mean amplitudes a."""
    power = np.asarray(power, dtype=float)
    amplitude = np.asarray(amplitude, dtype=float)
    return float(power.sum() + amplitude.sum()**2 - (amplitude**2).sum())


# }}

# {{ noise


def noise_variance(spec):
    """Return NoiseVariance(shot, thermal, total) in A^2 for spec."""
    q, kb, T = spec.electron_charge, spec.boltzmann, spec.temperature
    rf, gm = spec.feedback_resistance, spec.transconductance
    ct, rb = spec.input_capacitance, spec.bit_rate

    shot = 2 * q * (spec.responsivity * spec.signal_power +
                    spec.responsivity * spec.background_power +
                    spec.dark_current) * spec.bandwidth
    thermal = (4 * kb * T / rf) * spec.i2 * rb + \
        (16 * np.pi * kb * T / (gm * rf)) * \
        (spec.channel_noise_factor + 1 / (gm * spec.series_resistance)) * \
        ct**2 * spec.i3 * rb**3 + \
        (4 * np.pi**2 * kb * T / gm**2) * ct**2 * spec.i_f * rb**2
    return NoiseVariance(shot, thermal, shot + thermal)


def boresight_pixel(scenario):
    """Return the index of the pixel nearest the RIS axis."""
    centers = scenario.to_geometry().pixel_centers
    return int(np.argmin(np.hypot(centers[:, 0], centers[:, 1])))


def receiver_noise(scenario):
    """Return the NoiseVariance of the scenario's receiver.  A signal
    power of "auto" means P_d times the boresight element power."""
    p_sig = scenario.noise.signal_power_w
    if p_sig == 'auto':
        p_sig = scenario.link.data_power_w * \
            mean_element_power(scenario, boresight_pixel(scenario))
    return noise_variance(scenario.noise.spec(p_sig))


# }}

# {{ SNR


def _from_db(x):
    return 10.0**(x / 10.0)


def data_power_ratio(scenario):
    """Return P_d / sigma^2 for the data phase.  If link.data_snr_db is
    set, the ratio is calibrated so that expected_optimal_snr equals it;
    otherwise it comes from P_d and the receiver noise model."""
    target = scenario.link.data_snr_db
    if target is None:
        return scenario.link.data_power_w / receiver_noise(scenario).total
    gain = coherent_gain(mean_element_power(scenario),
                         mean_abs_element(scenario))
    return _from_db(target) / gain


def pilot_power_ratio(scenario):
    """Return P_T / sigma^2 for the pilot phase.  If pilot.snr_db is set,
    the ratio is calibrated so that pilot_snr equals it on average;
    otherwise it comes from P_T and the receiver noise model."""
    target = scenario.pilot.snr_db
    if target is None:
        return scenario.link.pilot_power_w / receiver_noise(scenario).total
    return _from_db(target) / float(mean_element_power(scenario).sum())


def expected_optimal_snr(scenario):
    """Return E[gamma*] = (P_d/sigma^2)(sum E|g_n|^2 +
    sum_{n != m} E|g_n| E|g_m|) for phase-aligned combining."""
    gain = coherent_gain(mean_element_power(scenario),
                         mean_abs_element(scenario))
    return data_power_ratio(scenario) * gain


def pilot_snr(scenario):
    """Return gamma_pilot = (P_T/sigma^2) sum E|g_n|^2."""
    return pilot_power_ratio(scenario) * float(
        mean_element_power(scenario).sum())


def coherent_pilot_snr(scenario):
    """Return the pilot SNR including the coherent cross terms."""
    gain = coherent_gain(mean_element_power(scenario),
                         mean_abs_element(scenario))
    return pilot_power_ratio(scenario) * gain


def instantaneous_snr(g, theta, power_ratio):
    """Return power_ratio * |sum_n g_n theta_n|^2, the realized SNR of
    channel g under RIS weights theta."""
    s = np.sum(np.asarray(g) * np.asarray(theta))
    return float(power_ratio * abs(s)**2)


# }}

__all__ = [
    "OpticalEfficiencySpec", "LinkSpec", "ReceiverNoiseSpec", "NoiseVariance",
    "CascadedChannel", "LinkBudget", "hop_field_gain", "hop_field_gains",
    "extinction_factor", "link_budget", "cascaded_channel",
    "mean_element_power", "amplitude_factor", "mean_abs_element",
    "coherent_gain", "noise_variance", "boresight_pixel", "receiver_noise",
    "data_power_ratio", "pilot_power_ratio", "expected_optimal_snr",
    "pilot_snr", "coherent_pilot_snr", "instantaneous_snr"
]

# Here there be dragons
