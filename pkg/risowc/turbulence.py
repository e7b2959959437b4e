##
## Name:     turbulence.py
## Purpose:  Unit-mean irradiance fading factors for each hop.
##
## Each hop of the link multiplies the received intensity by a positive
## random factor H with E[H] = 1.  Weak turbulence is modelled as
## log-normal, H = exp(X) with X ~ N(-s/2, s) where s is the
## log-irradiance variance; moderate-to-strong turbulence as
## Gamma-Gamma, sampled as the product of two independent unit-mean
## Gamma variates.  The field amplitude scales as sqrt(H), and the
## closed-form mean E[sqrt(H)] is what the coherent-combining SNR
## formulas need.
##
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .rerror import ConfigurationError

log = logging.getLogger(__name__)

regimes = ('none', 'lognormal', 'gammagamma')


@dataclass(frozen=True)
class TurbulenceSpec(object):
    """Fading statistics of one hop.

    regime        -- 'none', 'lognormal' or 'gammagamma'.
    sigma_lnI_sq  -- log-irradiance variance (lognormal only).
    alpha, beta   -- Gamma-Gamma shape parameters (gammagamma only).
    """
    regime: str = 'none'
    sigma_lnI_sq: float = 0.0
    alpha: float = 4.0
    beta: float = 4.0

    def __post_init__(self):
        if self.regime not in regimes:
            raise ConfigurationError(
                "regime must be one of %s" % ', '.join(regimes),
                "turbulence.regime")
        if self.regime == 'lognormal' and not self.sigma_lnI_sq >= 0:
            raise ConfigurationError("must be nonnegative",
                                     "turbulence.sigma_lnI_sq")
        if self.regime == 'gammagamma' and \
           not (self.alpha > 0 and self.beta > 0):
            raise ConfigurationError("shape parameters must be positive",
                                     "turbulence.alpha")

    def is_degenerate(self):
        """True if H = 1 with certainty."""
        return self.regime == 'none' or \
            (self.regime == 'lognormal' and self.sigma_lnI_sq == 0)


def log_amplitude_to_log_intensity(sigma_chi_sq):
    """Convert a log-amplitude variance to the log-irradiance variance
    (sigma_lnI^2 = 4 sigma_chi^2), the parameter TurbulenceSpec stores.
    """
    if sigma_chi_sq < 0:
        raise ConfigurationError("variance must be nonnegative",
                                 "sigma_chi_sq")
    return 4.0 * sigma_chi_sq


def sample_irradiance(spec, rng, size=None):
    """Draw irradiance factors H for spec from the numpy Generator rng.
    With size None a single float is returned, otherwise an array.
    """
    if spec.is_degenerate():
        return 1.0 if size is None else np.ones(size)

    if spec.regime == 'lognormal':
        s = spec.sigma_lnI_sq
        out = np.exp(rng.normal(-0.5 * s, np.sqrt(s), size))
    else:
        a, b = spec.alpha, spec.beta
        out = rng.gamma(a, 1.0 / a, size) * rng.gamma(b, 1.0 / b, size)
    return float(out) if size is None else out


def mean_sqrt_irradiance(spec):
    """Return E[sqrt(H)] for spec, a value in (0, 1]."""
    if spec.is_degenerate():
        return 1.0
    if spec.regime == 'lognormal':
        return float(np.exp(-spec.sigma_lnI_sq / 8))

    a, b = spec.alpha, spec.beta
    return float(
        np.exp(gammaln(a + 0.5) + gammaln(b + 0.5) - gammaln(a) -
               gammaln(b) - 0.5 * np.log(a * b)))


def scintillation_index(spec):
    """Return Var[H], the normalized irradiance variance of one hop."""
    if spec.is_degenerate():
        return 0.0
    if spec.regime == 'lognormal':
        return float(np.expm1(spec.sigma_lnI_sq))
    a, b = spec.alpha, spec.beta
    return 1 / a + 1 / b + 1 / (a * b)


def mean_abs_g(baseline_power, spec_tr, spec_rr):
    """Return E|g_n| = sqrt(E|g_n|^2) E[sqrt(H_tr)] E[sqrt(H_rr)].

    baseline_power may be a scalar or an array of per-element powers.
    """
    baseline_power = np.asarray(baseline_power, dtype=float)
    if np.any(baseline_power < 0):
        raise ConfigurationError("element power must be nonnegative")
    out = np.sqrt(baseline_power) * mean_sqrt_irradiance(spec_tr) * \
        mean_sqrt_irradiance(spec_rr)
    return out if out.ndim else float(out)


__all__ = [
    "TurbulenceSpec", "sample_irradiance", "mean_sqrt_irradiance",
    "mean_abs_g", "scintillation_index", "log_amplitude_to_log_intensity"
]

# Here there be dragons
