##
## Name:     phase_control.py
## Purpose:  RIS phase alignment, quantized gradient adaptation and the
##           estimation-error SNR penalty.
##
## With weights theta_n = exp(j phi_n) the receiver sees the coherent sum
## s = sum_n g_n theta_n, and |s| is largest, equal to sum_n |g_n|, when
## every phi_n cancels the phase of its element.  The transmitter only
## knows the fed-back estimate g_hat, and the RIS only accepts phases
## from a b-bit codebook, so it iterates
##
##    phi_n <- Q_b(wrap(phi_n - mu_t Im{g_hat_n exp(j phi_n) conj(s)}))
##
## which is gradient ascent on |s|^2 followed by projection onto the
## codebook.  A residual NMSE of epsilon costs a factor (1 - epsilon) in
## SNR.
##
import logging, math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .rerror import ConfigurationError
from . import feedback

log = logging.getLogger(__name__)

step_modes = ('constant', 'diminishing')
quantize_modes = ('every', 'emit')


@dataclass(frozen=True)
class AdaptConfig(object):
    """Settings for adapt_phases.

    bits            -- codebook resolution b, or None for continuous phases.
    max_iterations  -- T_max.
    step_mode       -- 'constant' (mu = step_scale / ||g_hat||^2) or
                       'diminishing' (mu_t = mu / (1 + t)).
    step_scale      -- multiplier on 1 / ||g_hat||^2; below 2 when constant.
    tolerance       -- stop once the objective improves by less than this
                       fraction of its upper bound.
    quantize        -- 'every' projects each iterate onto the codebook,
                       'emit' only the final phases.
    """
    bits: int = None
    max_iterations: int = 200
    step_mode: str = 'constant'
    step_scale: float = 1.0
    tolerance: float = 1e-9
    quantize: str = 'every'

    def __post_init__(self):
        if self.bits is not None and self.bits < 1:
            raise ConfigurationError("must be at least 1 or null",
                                     "control.phase_bits")
        if self.max_iterations < 1:
            raise ConfigurationError("must be at least 1",
                                     "control.max_iterations")
        if self.step_mode not in step_modes:
            raise ConfigurationError(
                "must be one of %s" % ', '.join(step_modes),
                "control.step_mode")
        if not self.step_scale > 0:
            raise ConfigurationError("must be positive", "control.step_scale")
        if self.step_mode == 'constant' and not self.step_scale < 2:
            raise ConfigurationError(
                "a constant step must stay below 2 / ||g_hat||^2",
                "control.step_scale")
        if self.tolerance < 0:
            raise ConfigurationError("must be nonnegative",
                                     "control.tolerance")
        if self.quantize not in quantize_modes:
            raise ConfigurationError(
                "must be one of %s" % ', '.join(quantize_modes),
                "control.quantize")

    def step(self, g_hat, t):
        """Return mu_t for iteration t (from 0)."""
        mu = self.step_scale / float(np.vdot(g_hat, g_hat).real)
        if self.step_mode == 'diminishing':
            mu /= (1 + t)
        return mu


@dataclass(frozen=True)
class ControlState(object):
    """The result of a phase adaptation.

    phases      -- phi in [0, 2 pi), in the codebook when bits is set.
    weights     -- theta = exp(j phi).
    trace       -- |sum g_hat theta| after initialization and each step,
                   ending with the value of the returned phases.
    iterations  -- number of update steps taken.
    converged   -- False if max_iterations ran out first.
    """
    phases: np.ndarray
    weights: np.ndarray
    trace: tuple
    iterations: int
    converged: bool

    @property
    def objective(self):
        return self.trace[-1]


CapacityLoss = namedtuple('CapacityLoss', 'bound first_order')


def combine(g, theta):
    """Return the coherent sum s = sum_n g_n theta_n."""
    return complex(np.sum(np.asarray(g) * np.asarray(theta)))


def objective(g_hat, theta):
    """Return |sum_n g_hat_n theta_n|."""
    return abs(combine(g_hat, theta))


def optimal_phases(g_hat):
    """Return the weights theta_n = exp(-j arg g_hat_n) that maximize
    the objective; zero entries get phase 0."""
    g_hat = np.asarray(g_hat, dtype=complex)
    return np.exp(-1j * np.angle(g_hat))


def _project(phi, bits):
    if bits is None:
        return np.mod(phi, 2 * np.pi)
    return feedback.phase_quantize(phi, bits)


def alignment_floor(g_hat, bits):
    """Return cos(Delta_b / 2) sum |g_hat_n|, the objective guaranteed by
    snapping the optimal phases onto a b-bit codebook."""
    total = float(np.abs(g_hat).sum())
    if bits is None:
        return total
    return math.cos(math.pi / 2**bits) * total


def adapt_phases(g_hat, cfg=None, initial=None):
    """Adapt the RIS phases to the estimate g_hat and return the best
    ControlState found.

    The iteration starts from the codebook point nearest -arg g_hat
    unless initial phases are given.  Entries with g_hat_n = 0 have zero
    gradient and keep their starting phase.
    """
    cfg = cfg or AdaptConfig()
    g_hat = np.asarray(g_hat, dtype=complex)
    if g_hat.size == 0:
        raise ConfigurationError("channel estimate is empty", "g_hat")

    step_bits = cfg.bits if cfg.quantize == 'every' else None
    if initial is None:
        initial = -np.angle(g_hat)
    phi = _project(np.asarray(initial, dtype=float), step_bits)

    bound = float(np.abs(g_hat).sum())
    value = objective(g_hat, np.exp(1j * phi))
    trace = [value]
    best_phi, best = phi, value
    if bound == 0:
        phi = _project(phi, cfg.bits)
        return ControlState(phi, np.exp(1j * phi), tuple(trace), 0, True)

    converged = False
    t = 0
    while t < cfg.max_iterations:
        theta = np.exp(1j * phi)
        s = combine(g_hat, theta)
        grad = np.imag(g_hat * theta * np.conj(s))
        phi = _project(phi - cfg.step(g_hat, t) * grad, step_bits)
        t += 1

        value = objective(g_hat, np.exp(1j * phi))
        trace.append(value)
        if value > best:
            best_phi, best = phi, value
        if value - trace[-2] < cfg.tolerance * bound:
            converged = True
            break

    phi = _project(best_phi, cfg.bits)
    theta = np.exp(1j * phi)
    final = objective(g_hat, theta)
    if final != trace[-1]:
        trace.append(final)
    log.debug('[adapt: N=%d bits=%s iterations=%d objective=%.6g of %.6g]',
              len(g_hat), cfg.bits, t, trace[-1], bound)
    return ControlState(phi, theta, tuple(trace), t, converged)


def effective_snr(gamma_star, epsilon):
    """Return gamma_eff = gamma_star (1 - epsilon)."""
    if not 0 <= epsilon < 1:
        raise ConfigurationError("NMSE must lie in [0, 1)", "epsilon")
    return gamma_star * (1 - epsilon)


def capacity_loss(gamma_star, epsilon):
    """Return CapacityLoss(bound, first_order) in bits/s/Hz:

      bound        log2(1 + gamma) - log2(1 + gamma (1 - epsilon))
      first_order  gamma epsilon / (ln 2 (1 + gamma))
    """
    if not gamma_star > 0:
        raise ConfigurationError("SNR must be positive", "gamma_star")
    if not 0 <= epsilon < 1:
        raise ConfigurationError("NMSE must lie in [0, 1)", "epsilon")
    bound = math.log2(1 + gamma_star) - \
        math.log2(1 + effective_snr(gamma_star, epsilon))
    first = gamma_star * epsilon / (math.log(2) * (1 + gamma_star))
    return CapacityLoss(bound, first)


def perturb_channel(g, epsilon, rng):
    """Return g + e where e is isotropic complex Gaussian rescaled so
    that ||e||^2 / ||g||^2 = epsilon exactly."""
    g = np.asarray(g, dtype=complex)
    e = rng.standard_normal(len(g)) + 1j * rng.standard_normal(len(g))
    ref = float(np.vdot(g, g).real)
    return g + e * math.sqrt(epsilon * ref / float(np.vdot(e, e).real))


def matched_filter_efficiency(g_hat, g):
    """Return |g_hat^H g|^2 / (||g_hat||^2 ||g||^2), the fraction of the
    optimal SNR kept by combining with g_hat instead of g."""
    num = abs(np.vdot(g_hat, g))**2
    den = float(np.vdot(g_hat, g_hat).real) * float(np.vdot(g, g).real)
    return num / den


def phase_alignment_efficiency(g, theta):
    """Return |sum g theta|^2 / (sum |g|)^2, the fraction of the
    phase-only optimum that weights theta achieve on channel g."""
    return objective(g, theta)**2 / float(np.abs(g).sum())**2


__all__ = [
    "AdaptConfig", "ControlState", "CapacityLoss", "combine", "objective",
    "optimal_phases", "alignment_floor", "adapt_phases", "effective_snr",
    "capacity_loss", "perturb_channel", "matched_filter_efficiency",
    "phase_alignment_efficiency"
]

# Here there be dragons
