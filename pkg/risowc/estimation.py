##
## Name:     estimation.py
## Purpose:  Pilot-aided least-squares estimation of the cascaded channel.
##
## During training the transmitter sends M pilot symbols while the RIS
## cycles through the rows of an M x N pilot matrix Phi, so the receiver
## observes y = sqrt(P_T) Phi g + n.  With the default pilot matrix,
## the first N columns of an M-point DFT matrix, Phi^H Phi = M I and the
## least-squares estimate is a single matched filter; a general Phi
## needs the normal equations, whose factorization dominates the cost.
## Both paths count complex multiply-accumulates so their complexity
## can be compared.
##
import logging, math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.linalg import dft, lu_factor, lu_solve

from .rerror import (ConfigurationError, ConditioningError, ContractError,
                     UndefinedNMSEError)

log = logging.getLogger(__name__)

pilot_kinds = ('unitary_dft', 'general')
max_condition = 1e12  # Gram matrices worse than this are refused
unitary_tolerance = 1e-8  # relative deviation of Phi^H Phi from M I


@dataclass(frozen=True)
class PilotPlan(object):
    """Training parameters.

    M               -- pilot length (symbols), at least N.
    N               -- number of RIS elements.
    kind            -- 'unitary_dft' or 'general'.
    pilot_power     -- P_T.
    noise_variance  -- sigma^2 per received sample.
    """
    M: int
    N: int
    kind: str = 'unitary_dft'
    pilot_power: float = 1.0
    noise_variance: float = 1.0

    def __post_init__(self):
        if self.N < 1:
            raise ConfigurationError("need at least one element", "N")
        if self.M < self.N:
            raise ConfigurationError(
                "pilot length M = %d is shorter than N = %d" %
                (self.M, self.N), "pilot.length")
        if self.kind not in pilot_kinds:
            raise ConfigurationError(
                "kind must be one of %s" % ', '.join(pilot_kinds),
                "pilot.kind")
        if not self.pilot_power > 0:
            raise ConfigurationError("must be positive", "pilot_power")
        if self.noise_variance < 0:
            raise ConfigurationError("must be nonnegative", "noise_variance")

    @property
    def power_ratio(self):
        """P_T / sigma^2 (infinite if noiseless)."""
        if self.noise_variance == 0:
            return float('inf')
        return self.pilot_power / self.noise_variance


@dataclass(frozen=True)
class EstimationResult(object):
    """The outcome of one estimation.

    g_hat     -- complex N-vector estimate.
    nmse      -- ||g_hat - g||^2 / ||g||^2 if the true channel was known,
                 else None.
    op_count  -- complex multiply-accumulates performed.
    method    -- 'ls_unitary' or 'ls_general'.
    """
    g_hat: np.ndarray
    nmse: float = None
    op_count: int = 0
    method: str = ''


FisherInformation = namedtuple('FisherInformation', 'J crlb crlb_trace')


def _generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def make_pilot_matrix(plan, rng=None):
    """Return the M x N pilot matrix for plan.

    For 'unitary_dft' this is the first N columns of the M-point DFT
    matrix, with Phi^H Phi = M I.  For 'general' the entries are
    unit-modulus with independent uniform phases drawn from rng.
    """
    if plan.kind == 'unitary_dft':
        return dft(plan.M)[:, :plan.N]

    rng = _generator(rng)
    phases = rng.uniform(0, 2 * np.pi, size=(plan.M, plan.N))
    return np.exp(1j * phases)


def simulate_pilot_rx(phi, g, pilot_power, noise_variance, rng):
    """Return y = sqrt(P_T) Phi g + n with n circularly-symmetric complex
    Gaussian of variance noise_variance per entry."""
    rng = _generator(rng)
    phi = np.asarray(phi)
    g = np.asarray(g)
    if phi.shape[1] != len(g):
        raise ConfigurationError(
            "pilot matrix has %d columns for %d elements" %
            (phi.shape[1], len(g)), "pilot")

    m = phi.shape[0]
    noise = np.sqrt(noise_variance / 2) * \
        (rng.standard_normal(m) + 1j * rng.standard_normal(m))
    return np.sqrt(pilot_power) * (phi @ g) + noise


def is_unitary_pilot(phi):
    """True if Phi^H Phi = M I to within unitary_tolerance."""
    m = phi.shape[0]
    gram = phi.conj().T @ phi
    dev = np.abs(gram - m * np.eye(phi.shape[1])).max()
    return dev <= unitary_tolerance * m


def ls_estimate_unitary(phi, y, pilot_power, assume_unitary=False):
    """Return the inversion-free LS estimate g_hat = Phi^H y / (M sqrt(P_T)).

    The pilot matrix is checked for Phi^H Phi = M I unless
    assume_unitary is true; a non-unitary matrix raises ContractError.
    The reported cost is M*N multiply-accumulates.
    """
    phi = np.asarray(phi)
    m, n = phi.shape
    if not assume_unitary and not is_unitary_pilot(phi):
        raise ContractError("pilot matrix is not unitary "
                            "(Phi^H Phi != M I); use ls_estimate_general")

    g_hat = (phi.conj().T @ np.asarray(y)) / (m * np.sqrt(pilot_power))
    return EstimationResult(g_hat=g_hat, op_count=m * n, method='ls_unitary')


def ls_estimate_general(phi, y, pilot_power):
    """Return the LS estimate (Phi^H Phi)^-1 Phi^H y / sqrt(P_T) by an LU
    solve of the normal equations.  Raises ConditioningError when the
    Gram matrix is singular or worse conditioned than max_condition.

    The reported cost is M*N (matched filter) + M*N^2 (Gram matrix) +
    2N^3/3 (factorization) + 2N^2 (triangular solves).
    """
    phi = np.asarray(phi)
    m, n = phi.shape
    gram = phi.conj().T @ phi
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > max_condition:
        raise ConditioningError("pilot Gram matrix is ill-conditioned", cond)

    rhs = phi.conj().T @ np.asarray(y)
    g_hat = lu_solve(lu_factor(gram), rhs) / np.sqrt(pilot_power)
    ops = m * n + m * n * n + -(-2 * n**3 // 3) + 2 * n * n
    log.debug('[general LS: N=%d M=%d cond=%.3g ops=%d]', n, m, cond, ops)
    return EstimationResult(g_hat=g_hat, op_count=ops, method='ls_general')


def nmse(g_hat, g):
    """Return ||g_hat - g||^2 / ||g||^2."""
    g = np.asarray(g)
    ref = float(np.vdot(g, g).real)
    if ref == 0:
        raise UndefinedNMSEError("NMSE is undefined for a zero channel")
    err = np.asarray(g_hat) - g
    return float(np.vdot(err, err).real) / ref


def predicted_nmse(N, M, gamma_pilot):
    """Return the CRLB-attaining NMSE N / (M gamma_pilot)."""
    if not gamma_pilot > 0:
        raise ConfigurationError("pilot SNR must be positive", "gamma_pilot")
    return N / (M * gamma_pilot)


def fisher_information(phi, pilot_power, noise_variance):
    """Return FisherInformation(J, crlb, crlb_trace) with
    J = (P_T / sigma^2) Phi^H Phi and crlb = J^-1."""
    if not noise_variance > 0:
        raise ConfigurationError("noise variance must be positive",
                                 "noise_variance")
    phi = np.asarray(phi)
    J = (pilot_power / noise_variance) * (phi.conj().T @ phi)
    crlb = np.linalg.inv(J)
    return FisherInformation(J, crlb, float(np.trace(crlb).real))


def required_pilot_length(N, epsilon, gamma_pilot):
    """Return the shortest pilot length meeting NMSE target epsilon at
    pilot SNR gamma_pilot: max(N, ceil(N / (epsilon gamma_pilot))).
    """
    if not 0 < epsilon < 1:
        raise ConfigurationError("target NMSE must lie in (0, 1)",
                                 "pilot.target_nmse")
    if not gamma_pilot > 0:
        raise ConfigurationError("pilot SNR must be positive", "gamma_pilot")

    # exact quotients such as 64/0.5 must not round up to the next integer
    m = int(math.ceil(N / (epsilon * gamma_pilot) * (1 - 1e-12)))
    if m <= N:
        log.debug('[pilot length %d below the floor; using M = N = %d]', m,
                  N)
        return N
    return m


def estimate_channel(plan, g, rng, phi=None):
    """Run one pilot phase: build (or reuse) the pilot matrix, simulate the
    received pilots, and estimate g by the path that fits the plan.
    Returns an EstimationResult with its NMSE filled in.
    """
    rng = _generator(rng)
    if phi is None:
        phi = make_pilot_matrix(plan, rng)
    y = simulate_pilot_rx(phi, g, plan.pilot_power, plan.noise_variance, rng)
    if plan.kind == 'unitary_dft':
        res = ls_estimate_unitary(phi, y, plan.pilot_power,
                                  assume_unitary=True)
    else:
        res = ls_estimate_general(phi, y, plan.pilot_power)
    return EstimationResult(g_hat=res.g_hat,
                            nmse=nmse(res.g_hat, g),
                            op_count=res.op_count,
                            method=res.method)


__all__ = [
    "PilotPlan", "EstimationResult", "FisherInformation",
    "make_pilot_matrix", "simulate_pilot_rx", "is_unitary_pilot",
    "ls_estimate_unitary", "ls_estimate_general", "nmse", "predicted_nmse",
    "fisher_information", "required_pilot_length", "estimate_channel"
]

# Here there be dragons
