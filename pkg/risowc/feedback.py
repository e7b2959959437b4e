##
## Name:     feedback.py
## Purpose:  Phase quantizer, CSI feedback payloads and frame overhead.
##
## The receiver returns what it learned during training to the
## transmitter over a rate-limited uplink.  It may send the M raw pilot
## samples, the N-element processed estimate, a top-K compressed form
## of the estimate in a sparsifying basis, or just the quantized phases
## of the estimate.  Each real quantity costs a fixed number of bits; a
## frame of duration T must fit the pilots, the feedback and a minimum
## share of data time:
##
##    M / (R_s T) + B_CSI / (beta B_FB T) <= 1 - eta_min.
##
import logging, math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .rerror import ConfigurationError
from . import estimation

log = logging.getLogger(__name__)

feedback_modes = ('processed', 'raw_pilots')
bases = ('dft', 'dct', 'identity')
feasibility_tolerance = 1e-12  # absolute slack on the frame fraction

# {{ phase quantizer


@dataclass(frozen=True)
class QuantizerSpec(object):
    """A b-bit uniform phase quantizer over [0, 2 pi)."""
    bits: int

    def __post_init__(self):
        if not (isinstance(self.bits, (int, np.integer)) and self.bits >= 1):
            raise ConfigurationError("bits must be a positive integer",
                                     "bits")

    @property
    def levels(self):
        return 2**self.bits

    @property
    def step(self):
        return 2 * np.pi / self.levels

    @property
    def codebook(self):
        return np.arange(self.levels) * self.step

    def indices(self, phi):
        return phase_indices(phi, self.bits)

    def quantize(self, phi):
        return phase_quantize(phi, self.bits)


def phase_indices(phi, bits):
    """Return the codeword indices in [0, 2^bits) nearest to phi."""
    if bits < 1:
        raise ConfigurationError("bits must be at least 1", "bits")
    step = 2 * np.pi / 2**bits
    idx = np.round(np.mod(phi, 2 * np.pi) / step).astype(np.int64)
    return np.mod(idx, 2**bits)


def phase_quantize(phi, bits):
    """Wrap phi to [0, 2 pi) and snap it to the nearest of the 2^bits
    equally spaced phases k * 2 pi / 2^bits.  Works elementwise."""
    out = phase_indices(phi, bits) * (2 * np.pi / 2**bits)
    return out if np.ndim(out) else float(out)


def wrapped_distance(a, b):
    """Return the circular distance between phases a and b, in [0, pi]."""
    d = np.mod(np.asarray(a) - np.asarray(b), 2 * np.pi)
    return np.minimum(d, 2 * np.pi - d)


# }}

# {{ amplitude quantizer


def midrise_quantize(x, bits, scale):
    """Quantize real values in [-scale, scale] with a uniform midrise
    quantizer of 2^bits levels, returning (indices, reconstruction).
    Values outside the range are clipped to the end cells.
    """
    x = np.asarray(x, dtype=float)
    levels = 2**bits
    if scale <= 0:
        return np.zeros(x.shape, dtype=np.int64), np.zeros(x.shape)
    step = 2.0 * scale / levels
    idx = np.clip(np.floor((x + scale) / step), 0, levels - 1).astype(np.int64)
    return idx, -scale + (idx + 0.5) * step


def quantize_complex(z, bits):
    """Quantize the real and imaginary parts of z with one midrise
    quantizer scaled to the largest component magnitude.  Returns
    (reconstruction, scale); the scale is sent at full precision.
    """
    z = np.asarray(z, dtype=complex)
    scale = float(max(np.abs(z.real).max(), np.abs(z.imag).max()))
    _, re = midrise_quantize(z.real, bits, scale)
    _, im = midrise_quantize(z.imag, bits, scale)
    return re + 1j * im, scale


# }}

# {{ feedback payloads


@dataclass(frozen=True)
class FeedbackPayload(object):
    """A quantized feedback message.

    mode           -- 'processed' or 'raw_pilots'.
    bits           -- bits per real component, Q.
    payload_bits   -- 2 Q per complex sample sent.
    quantized      -- the quantized samples as received.
    reconstructed  -- the channel estimate the transmitter recovers, or
                      None for raw samples without a pilot matrix.
    scale          -- quantizer range.
    """
    mode: str
    bits: int
    payload_bits: int
    quantized: np.ndarray
    reconstructed: np.ndarray
    scale: float


def quantize_channel_feedback(samples, bits, mode='processed', phi=None,
                              pilot_power=1.0):
    """Quantize a feedback message with bits per real component.

    In 'processed' mode samples is the N-element estimate g_hat, and the
    reconstruction is its quantized copy.  In 'raw_pilots' mode samples
    are the M received pilots; if the pilot matrix phi is given, the
    transmitter reconstructs g_hat from the quantized pilots by least
    squares.
    """
    samples = np.asarray(samples, dtype=complex)
    if samples.size == 0:
        raise ConfigurationError("feedback input is empty", "feedback")
    if mode not in feedback_modes:
        raise ConfigurationError(
            "mode must be one of %s" % ', '.join(feedback_modes), "mode")
    if not bits >= 1:
        raise ConfigurationError("bits must be at least 1",
                                 "budget.component_bits")

    quantized, scale = quantize_complex(samples, bits)
    payload = 2 * bits * len(samples)

    if mode == 'processed':
        recon = quantized
    elif phi is None:
        recon = None
    elif estimation.is_unitary_pilot(np.asarray(phi)):
        recon = estimation.ls_estimate_unitary(phi,
                                               quantized,
                                               pilot_power,
                                               assume_unitary=True).g_hat
    else:
        recon = estimation.ls_estimate_general(phi, quantized,
                                               pilot_power).g_hat

    log.debug('[%s feedback: %d samples x %d bits = %d bits]', mode,
              len(samples), 2 * bits, payload)
    return FeedbackPayload(mode=mode,
                           bits=bits,
                           payload_bits=payload,
                           quantized=quantized,
                           reconstructed=recon,
                           scale=scale)


PhaseFeedback = namedtuple('PhaseFeedback',
                           'indices reconstructed payload_bits')


def phase_feedback(g_hat, bits):
    """Quantize only the phase of each estimate entry to bits, keeping
    its magnitude.  Returns PhaseFeedback(indices, reconstructed,
    payload_bits) with payload N * bits."""
    g_hat = np.asarray(g_hat, dtype=complex)
    if g_hat.size == 0:
        raise ConfigurationError("feedback input is empty", "feedback")
    idx = phase_indices(np.angle(g_hat), bits)
    recon = np.abs(g_hat) * np.exp(1j * idx * (2 * np.pi / 2**bits))
    return PhaseFeedback(idx, recon, bits * len(g_hat))


# }}

# {{ compressed feedback


@dataclass(frozen=True)
class CompressedFeedback(object):
    """Top-K transform-domain feedback.

    basis          -- 'dft', 'dct' or 'identity'.
    n              -- length of the original vector.
    kept_indices   -- the K transform coefficients retained, distinct.
    coefficients   -- their quantized values.
    bits           -- bits per real component.
    scale          -- quantizer range.
    """
    basis: str
    n: int
    kept_indices: np.ndarray
    coefficients: np.ndarray
    bits: int
    scale: float

    @property
    def K(self):
        return len(self.kept_indices)

    @property
    def payload_bits(self):
        """Coefficient bits, 2 * bits * K."""
        return 2 * self.bits * self.K

    @property
    def index_bits(self):
        """Side information naming the kept coefficients."""
        return self.K * int(math.ceil(math.log2(self.n))) if self.n > 1 else 0

    @property
    def total_bits(self):
        return self.payload_bits + self.index_bits


def _forward(x, basis):
    if basis == 'dft':
        return scipy.fft.fft(x, norm='ortho')
    if basis == 'dct':
        return scipy.fft.dct(x.real, norm='ortho') + \
            1j * scipy.fft.dct(x.imag, norm='ortho')
    return np.array(x, dtype=complex)


def _inverse(c, basis):
    if basis == 'dft':
        return scipy.fft.ifft(c, norm='ortho')
    if basis == 'dct':
        return scipy.fft.idct(c.real, norm='ortho') + \
            1j * scipy.fft.idct(c.imag, norm='ortho')
    return np.array(c, dtype=complex)


def cs_compress(g_hat, K, bits, basis='dft'):
    """Transform g_hat by the orthonormal basis, keep the K coefficients
    of largest magnitude and quantize them with bits per real component.
    """
    g_hat = np.asarray(g_hat, dtype=complex)
    n = len(g_hat)
    if n == 0:
        raise ConfigurationError("feedback input is empty", "feedback")
    if not 1 <= K <= n:
        raise ConfigurationError("K = %d outside [1, %d]" % (K, n), "K")
    if basis not in bases:
        raise ConfigurationError("basis must be one of %s" % ', '.join(bases),
                                 "basis")

    coef = _forward(g_hat, basis)
    kept = np.sort(np.argsort(-np.abs(coef), kind='stable')[:K])
    values, scale = quantize_complex(coef[kept], bits)
    return CompressedFeedback(basis=basis,
                              n=n,
                              kept_indices=kept,
                              coefficients=values,
                              bits=bits,
                              scale=scale)


def cs_reconstruct(fb):
    """Rebuild the channel estimate from a CompressedFeedback."""
    coef = np.zeros(fb.n, dtype=complex)
    coef[fb.kept_indices] = fb.coefficients
    return _inverse(coef, fb.basis)


# }}

# {{ frame budget


@dataclass(frozen=True)
class FeedbackBudget(object):
    """Uplink and frame parameters.

    component_bits       -- Q, bits per real component (None if unset).
    spectral_efficiency  -- beta (bit/s/Hz).
    feedback_bandwidth   -- B_FB (Hz).
    frame_duration       -- T (s).
    symbol_rate          -- R_s (symbols/s).
    min_data_duty        -- eta_min in [0, 1).
    """
    component_bits: int = None
    spectral_efficiency: float = 1.0
    feedback_bandwidth: float = 1e6
    frame_duration: float = 1e-2
    symbol_rate: float = 1e6
    min_data_duty: float = 0.0

    def __post_init__(self):
        for key in ('spectral_efficiency', 'feedback_bandwidth',
                    'frame_duration', 'symbol_rate'):
            if not getattr(self, key) > 0:
                raise ConfigurationError("must be positive", "budget." + key)
        if not 0 <= self.min_data_duty < 1:
            raise ConfigurationError("must lie in [0, 1)",
                                     "budget.min_data_duty")
        if self.component_bits is not None and self.component_bits < 1:
            raise ConfigurationError("must be at least 1",
                                     "budget.component_bits")

    @property
    def capacity_bits(self):
        """Feedback bits the uplink carries in one frame, beta B_FB T."""
        return self.spectral_efficiency * self.feedback_bandwidth * \
            self.frame_duration


OverheadReport = namedtuple('OverheadReport',
                            'feasible tau_pilot tau_fb slack')

DesignReport = namedtuple(
    'DesignReport', 'M_required Q_max component_bits payload_bits '
    'tau_pilot tau_fb slack feasible')


def csi_payload_bits(N, component_bits):
    """Return B_CSI = 2 N Q."""
    return 2 * N * component_bits


def feedback_time_fraction(budget, payload_bits):
    """Return tau_FB = payload_bits / (beta B_FB T)."""
    return payload_bits / budget.capacity_bits


def pilot_time_fraction(budget, M):
    """Return tau_pilot = M / (R_s T)."""
    return M / (budget.symbol_rate * budget.frame_duration)


def overhead_feasible(M, budget, payload_bits):
    """Check tau_pilot + tau_FB <= 1 - eta_min (inclusive) and return an
    OverheadReport(feasible, tau_pilot, tau_fb, slack)."""
    if M < 1:
        raise ConfigurationError("pilot length must be at least 1", "M")
    tau_p = pilot_time_fraction(budget, M)
    tau_fb = feedback_time_fraction(budget, payload_bits)
    slack = (1 - budget.min_data_duty) - (tau_p + tau_fb)
    return OverheadReport(slack >= -feasibility_tolerance, tau_p, tau_fb,
                          slack)


def max_quantization_depth(N, budget, epsilon, gamma_pilot):
    """Return the largest Q for which 2 N Q feedback bits still fit the
    frame after a pilot of required_pilot_length(N, epsilon, gamma_pilot)
    symbols; 0 if no feedback budget remains.
    """
    M = estimation.required_pilot_length(N, epsilon, gamma_pilot)
    bracket = (1 - budget.min_data_duty) - pilot_time_fraction(budget, M)
    if bracket <= 0:
        return 0

    q = int(math.floor(budget.capacity_bits * bracket / (2 * N) + 1e-9))

    def fits(bits):
        return overhead_feasible(M, budget, csi_payload_bits(N,
                                                             bits)).feasible

    while q > 0 and not fits(q):
        q -= 1
    while fits(q + 1):
        q += 1
    return q


def design_budget(N, budget, epsilon, gamma_pilot, component_bits=None):
    """Size the pilot and feedback for N elements and return a
    DesignReport.  component_bits defaults to budget.component_bits, or
    to Q_max if that is unset.
    """
    M = estimation.required_pilot_length(N, epsilon, gamma_pilot)
    q_max = max_quantization_depth(N, budget, epsilon, gamma_pilot)
    if component_bits is None:
        component_bits = budget.component_bits
    if component_bits is None:
        component_bits = q_max

    payload = csi_payload_bits(N, component_bits)
    report = overhead_feasible(M, budget, payload)
    log.debug('[design: N=%d M=%d Q=%d (max %d) slack=%.4g]', N, M,
              component_bits, q_max, report.slack)
    return DesignReport(M_required=M,
                        Q_max=q_max,
                        component_bits=component_bits,
                        payload_bits=payload,
                        tau_pilot=report.tau_pilot,
                        tau_fb=report.tau_fb,
                        slack=report.slack,
                        feasible=report.feasible and component_bits >= 1)


# }}

__all__ = [
    "QuantizerSpec", "phase_indices", "phase_quantize", "wrapped_distance",
    "midrise_quantize", "quantize_complex", "FeedbackPayload",
    "quantize_channel_feedback", "PhaseFeedback", "phase_feedback",
    "CompressedFeedback", "cs_compress", "cs_reconstruct", "FeedbackBudget",
    "OverheadReport", "DesignReport", "csi_payload_bits",
    "feedback_time_fraction", "pilot_time_fraction", "overhead_feasible",
    "max_quantization_depth", "design_budget"
]

# Here there be dragons
