##
## Name:     pixel_optics.py
## Purpose:  Ideal and jitter-averaged (long-exposure) pixel gains.
##
## A rectangular pixel of size dx by dy illuminated at wavelength lam
## has the Fraunhofer intensity response
##
##    G0(mu) = sinc^2(kx mu_x) sinc^2(ky mu_y),   k = pi d / lam,
##
## in the direction cosines mu = (mu_x, mu_y).  Under zero-mean Gaussian
## pointing jitter delta ~ N(0, Sigma) the long-exposure response is the
## expectation of G0(mu + delta), scaled by the hop's Strehl factor S and
## obliquity factor rho.  Writing sinc^2 as the Fourier transform of a
## triangular window turns that expectation into a real integral over
## the window's support,
##
##    S rho / (4 kx ky) * Int Int (1 - |wx|/2kx)(1 - |wy|/2ky)
##                        exp(-w'Sigma w / 2) cos(w'mu) dw,
##
## evaluated here by tensor-product Gauss-Legendre quadrature on the
## folded quarter domain.  When Sigma is diagonal the integral factors
## into two one-dimensional blur kernels.  A Monte Carlo estimate of the
## same expectation is provided as an independent check.
##
import functools, logging, warnings
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .rerror import ConfigurationError, QuadratureError
from .rwarn import SmallAngleWarning, QuadratureClampWarning

log = logging.getLogger(__name__)

small_angle_limit = 5e-3  # rad; RMS jitter above this is outside paraxial
sinc_series_cutoff = 1e-4  # |u| below this uses the Taylor series
clamp_tolerance = 1e-6  # excursion beyond [0, S rho] that may be clamped
gaussian_cutoff = 10.0  # integrate out to 10 standard deviations

# {{ specs


@dataclass(frozen=True)
class PixelOpticsSpec(object):
    """Optical parameters of one pixel on one hop.

    k_x, k_y   -- normalized spatial frequencies pi*dx/lam, pi*dy/lam (rad).
    strehl     -- Strehl factor S in (0, 1].
    obliquity  -- obliquity factor rho in (0, 1].
    """
    k_x: float
    k_y: float
    strehl: float = 1.0
    obliquity: float = 1.0

    def __post_init__(self):
        if not (self.k_x > 0 and self.k_y > 0):
            raise ConfigurationError("spatial frequencies must be positive",
                                     "optics.k")
        if not 0 < self.strehl <= 1:
            raise ConfigurationError("must lie in (0, 1]", "optics.strehl")
        if not 0 < self.obliquity <= 1:
            raise ConfigurationError("must lie in (0, 1]", "optics.obliquity")

    @classmethod
    def from_pixel(cls, width, height, wavelength, strehl=1.0,
                   obliquity=1.0):
        """Construct a spec from the pixel size and wavelength (m)."""
        if not (width > 0 and height > 0 and wavelength > 0):
            raise ConfigurationError("pixel size and wavelength must be "
                                     "positive", "geometry")
        return cls(k_x=np.pi * width / wavelength,
                   k_y=np.pi * height / wavelength,
                   strehl=strehl,
                   obliquity=obliquity)

    @property
    def scale(self):
        """The peak long-exposure gain S*rho."""
        return self.strehl * self.obliquity


@dataclass(frozen=True)
class JitterSpec(object):
    """Gaussian pointing-jitter covariance of one hop, in rad^2.

    The covariance is kept as a nested tuple so the spec is hashable;
    the .matrix property gives it as a numpy array.  Construction posts
    a SmallAngleWarning when the RMS jitter along the principal axis
    exceeds the paraxial limit.
    """
    covariance: tuple = ((0.0, 0.0), (0.0, 0.0))

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (2, 2) or not np.all(np.isfinite(cov)):
            raise ConfigurationError("covariance must be a finite 2x2 matrix",
                                     "jitter")
        scale = max(np.abs(cov).max(), 1e-300)
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * scale:
            raise ConfigurationError("covariance must be symmetric", "jitter")
        cov[1, 0] = cov[0, 1]
        if np.linalg.eigvalsh(cov).min() < -1e-12 * scale:
            raise ConfigurationError("covariance must be positive "
                                     "semidefinite", "jitter")
        object.__setattr__(self, 'covariance',
                           tuple(tuple(float(v) for v in row) for row in cov))

        rms = self.rms
        if rms > small_angle_limit:
            warnings.warn(SmallAngleWarning(
                "RMS jitter %.3g rad exceeds the small-angle limit %.3g rad"
                % (rms, small_angle_limit), rms),
                          stacklevel=3)

    @classmethod
    def isotropic(cls, sigma):
        return cls(((sigma**2, 0.0), (0.0, sigma**2)))

    @classmethod
    def diagonal(cls, sigma_x, sigma_y):
        return cls(((sigma_x**2, 0.0), (0.0, sigma_y**2)))

    @classmethod
    def correlated(cls, sigma_x, sigma_y, correlation):
        c = correlation * sigma_x * sigma_y
        return cls(((sigma_x**2, c), (c, sigma_y**2)))

    @property
    def matrix(self):
        return np.array(self.covariance)

    @property
    def rms(self):
        """RMS jitter along the principal axis (rad)."""
        return float(np.sqrt(max(np.linalg.eigvalsh(self.matrix).max(), 0)))

    def is_zero(self):
        return not np.any(self.matrix)

    def is_diagonal(self):
        return self.covariance[0][1] == 0

    def sigmas(self):
        """Return the per-axis standard deviations (sigma_x, sigma_y)."""
        return (np.sqrt(self.covariance[0][0]), np.sqrt(self.covariance[1][1]))


@dataclass(frozen=True)
class QuadratureSpec(object):
    """Settings of the Gauss-Legendre rule.

    nodes_per_axis      -- starting (or, for method 'fixed', only) order.
    relative_tolerance  -- adaptive stopping threshold.
    method              -- 'adaptive' doubles the order until two
                           successive estimates agree; 'fixed' evaluates
                           once.
    max_nodes           -- ceiling on the order per axis.
    """
    nodes_per_axis: int = 32
    relative_tolerance: float = 1e-8
    method: str = 'adaptive'
    max_nodes: int = 1024

    def __post_init__(self):
        if self.nodes_per_axis < 8:
            raise ConfigurationError("at least 8 nodes per axis",
                                     "optics.quadrature_nodes")
        if not self.relative_tolerance > 0:
            raise ConfigurationError("must be positive",
                                     "optics.quadrature_tolerance")
        if self.method not in ('adaptive', 'fixed'):
            raise ConfigurationError("must be adaptive or fixed",
                                     "optics.quadrature_method")
        if self.max_nodes < self.nodes_per_axis:
            raise ConfigurationError("max_nodes below nodes_per_axis",
                                     "optics.quadrature_nodes")


# }}

# {{ ideal response


def sinc(u):
    """Unnormalized sinc, sin(u)/u with sinc(0) = 1, elementwise."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < sinc_series_cutoff
    us = u[small]
    out[small] = 1 - us * us / 6 + us**4 / 120
    ub = u[~small]
    out[~small] = np.sin(ub) / ub
    return out if out.ndim else float(out)


def ideal_pixel_gain(mu, spec):
    """Return sinc^2(k_x mu_x) sinc^2(k_y mu_y); S and rho are not
    applied.  mu may be a pair or an array whose last axis has size 2.
    """
    mu = np.asarray(mu, dtype=float)
    return sinc(spec.k_x * mu[..., 0])**2 * sinc(spec.k_y * mu[..., 1])**2


# }}

# {{ quadrature


@functools.lru_cache(maxsize=32)
def _legendre(n):
    return leggauss(n)


def _nodes(n, length):
    """Gauss-Legendre nodes and weights of order n on [0, length]."""
    t, w = _legendre(n)
    half = 0.5 * length
    return half * (t + 1), half * w


def _support(k, var):
    """Upper limit of integration along one axis: the window edge 2k, or
    the point beyond which the Gaussian factor is negligible."""
    if var <= 0:
        return 2 * k
    return min(2 * k, gaussian_cutoff / np.sqrt(var))


def _refine(evaluate, quad, what):
    """Run evaluate(n) with node doubling as quad directs and return the
    converged estimate; raise QuadratureError if max_nodes is reached.
    """
    n = quad.nodes_per_axis
    prev = evaluate(n)
    if quad.method == 'fixed':
        return prev

    err = float('inf')
    while 2 * n <= quad.max_nodes:
        n *= 2
        cur = evaluate(n)
        err = abs(cur - prev)
        if err <= quad.relative_tolerance * max(abs(cur), 1e-14):
            log.debug('[%s converged at %d nodes/axis, delta %.3g]', what, n,
                      err)
            return cur
        prev = cur

    raise QuadratureError(
        "%s did not reach relative tolerance %.3g with %d nodes per axis" %
        (what, quad.relative_tolerance, quad.max_nodes), prev, err)


def _clamp(value, upper):
    """Clamp a quadrature result into [0, upper], posting a warning;
    excursions beyond the clamp tolerance are errors."""
    if 0 <= value <= upper:
        return value
    slack = clamp_tolerance * upper
    if value < -slack or value > upper + slack:
        raise QuadratureError(
            "long-exposure gain %.6g lies outside [0, %.6g]" % (value, upper),
            value, abs(value) if value < 0 else value - upper)
    clamped = min(max(value, 0.0), upper)
    warnings.warn(QuadratureClampWarning(
        "long-exposure gain %.3g clamped to %.3g" % (value, clamped), value),
                  stacklevel=3)
    return clamped


def blur_kernel_1d(mu_axis, k_axis, sigma_axis, quad=None):
    """Return the one-dimensional blur kernel

       B(mu; k, sigma) = (1/2k) Int_0^2k (1 - w/2k) exp(-sigma^2 w^2/2)
                                          2 cos(w mu) dw,

    so that B = sinc^2(k mu) when sigma = 0, and for a diagonal
    covariance the long-exposure gain is S rho B(mu_x) B(mu_y).
    """
    if sigma_axis < 0:
        raise ConfigurationError("sigma must be nonnegative", "jitter")
    if quad is None:
        quad = QuadratureSpec()
    if sigma_axis == 0:
        return float(sinc(k_axis * mu_axis)**2)

    var = sigma_axis**2
    length = _support(k_axis, var)

    def evaluate(n):
        w, wt = _nodes(n, length)
        f = (1 - w / (2 * k_axis)) * np.exp(-0.5 * var * w * w) * \
            np.cos(w * mu_axis)
        return float(wt @ f) / k_axis

    return _refine(evaluate, quad, 'blur kernel')


def _quarter_integral(mu, spec, cov, n):
    """The folded-domain integral, before the S rho / (2 kx ky) factor."""
    kx, ky = spec.k_x, spec.k_y
    sxx, sxy, syy = cov[0, 0], cov[0, 1], cov[1, 1]
    schur_x = sxx - sxy * sxy / syy if syy > 0 else sxx
    schur_y = syy - sxy * sxy / sxx if sxx > 0 else syy

    x, wx = _nodes(n, _support(kx, schur_x))
    y, wy = _nodes(n, _support(ky, schur_y))
    X, Y = x[:, None], y[None, :]

    window = (1 - X / (2 * kx)) * (1 - Y / (2 * ky))
    diag = sxx * X * X + syy * Y * Y
    cross = 2 * sxy * X * Y
    ax, ay = X * mu[0], Y * mu[1]
    f = window * (np.exp(-0.5 * (diag + cross)) * np.cos(ax + ay) +
                  np.exp(-0.5 * (diag - cross)) * np.cos(ax - ay))
    return float(wx @ f @ wy)


def long_exposure_gain(mu, spec, jitter, quad=None, separable=None):
    """Return the jitter-averaged gain of one pixel on one hop.

    mu         -- direction-cosine pair (mu_x, mu_y).
    spec       -- PixelOpticsSpec.
    jitter     -- JitterSpec.
    quad       -- QuadratureSpec (default settings if None).
    separable  -- None dispatches diagonal covariances to the product of
                  1-D kernels; False forces the 2-D rule; True requires
                  a diagonal covariance.

    The result lies in [0, S rho]; values just outside that range are
    clamped with a QuadratureClampWarning.  Raises QuadratureError if the
    adaptive rule does not converge.
    """
    if quad is None:
        quad = QuadratureSpec()
    mu = np.asarray(mu, dtype=float)
    scale = spec.scale

    if jitter.is_zero():
        return scale * float(ideal_pixel_gain(mu, spec))

    if separable is None:
        separable = jitter.is_diagonal()
    elif separable and not jitter.is_diagonal():
        raise ConfigurationError("separable evaluation needs a diagonal "
                                 "covariance", "jitter")

    if separable:
        sx, sy = jitter.sigmas()
        raw = scale * blur_kernel_1d(mu[0], spec.k_x, sx, quad) * \
            blur_kernel_1d(mu[1], spec.k_y, sy, quad)
    else:
        cov = jitter.matrix
        norm = scale / (2 * spec.k_x * spec.k_y)
        raw = norm * _refine(lambda n: _quarter_integral(mu, spec, cov, n),
                             quad, 'long-exposure quadrature')
    return _clamp(raw, scale)


def per_pixel_gains(mu, spec, jitter, quad=None):
    """Return the long-exposure gains of N pixels.

    mu      -- (N, 2) direction cosines, one row per pixel.
    jitter  -- a JitterSpec shared by all pixels, or a sequence of N
               JitterSpecs for pixel-specific covariances.
    """
    mu = np.atleast_2d(np.asarray(mu, dtype=float))
    if isinstance(jitter, JitterSpec):
        jitter = [jitter] * len(mu)
    elif len(jitter) != len(mu):
        raise ConfigurationError(
            "got %d covariances for %d pixels" % (len(jitter), len(mu)),
            "jitter")

    if all(j.is_zero() for j in jitter):
        return spec.scale * ideal_pixel_gain(mu, spec)
    return np.array(
        [long_exposure_gain(m, spec, j, quad) for m, j in zip(mu, jitter)])


def two_hop_gain(g_tr, g_rr):
    """Return the two-hop pixel gain g_tr * g_rr."""
    g_tr = np.asarray(g_tr, dtype=float)
    g_rr = np.asarray(g_rr, dtype=float)
    if np.any(g_tr < 0) or np.any(g_rr < 0):
        raise ConfigurationError("per-hop gains must be nonnegative")
    out = g_tr * g_rr
    return out if out.ndim else float(out)


def deviation_surface(mu_grid, spec, jitter, quad=None):
    """Return G0 - Gbar over a grid of direction cosines (last axis of
    size 2), with S = rho = 1 so the two responses are comparable.
    Positive values mark attenuation, negative values null filling.
    """
    unit = replace(spec, strehl=1.0, obliquity=1.0)
    mu_grid = np.asarray(mu_grid, dtype=float)
    if np.any(np.abs(mu_grid) >= 1):
        raise ConfigurationError("direction cosines must satisfy |mu| < 1",
                                 "mu")
    flat = mu_grid.reshape(-1, 2)
    ideal = ideal_pixel_gain(flat, unit)
    if jitter.is_zero():
        return np.zeros(mu_grid.shape[:-1])
    avg = np.array([long_exposure_gain(m, unit, jitter, quad) for m in flat])
    return (ideal - avg).reshape(mu_grid.shape[:-1])


def solve_jitter_for_attenuation(target, spec, quad=None):
    """Return the isotropic RMS jitter sigma (rad) at which the boresight
    long-exposure gain falls by the fraction target below S rho, e.g.,
    target = 0.2 for a 20% boresight attenuation.
    """
    if not 0 < target < 1:
        raise ConfigurationError("attenuation must lie in (0, 1)", "target")
    if quad is None:
        quad = QuadratureSpec()

    def excess(sigma):
        kept = blur_kernel_1d(0.0, spec.k_x, sigma, quad) * \
            blur_kernel_1d(0.0, spec.k_y, sigma, quad)
        return kept - (1 - target)

    hi = 1.0 / max(spec.k_x, spec.k_y)
    while excess(hi) > 0:
        hi *= 2
    sigma = brentq(excess, 0.0, hi, xtol=1e-15, rtol=1e-12)
    log.debug('[%.1f%% boresight attenuation at sigma = %.6g rad]',
              100 * target, sigma)
    return sigma


# }}

# {{ Monte Carlo oracle


def long_exposure_gain_mc(mu, spec, jitter, trials, seed):
    """Return (mean, standard error) of S rho G0(mu + delta) over trials
    draws of delta ~ N(0, Sigma) from a generator seeded with seed.  The
    result is deterministic in (inputs, seed).
    """
    if trials < 1000:
        raise ConfigurationError("at least 1000 trials required", "trials")
    mu = np.asarray(mu, dtype=float)
    scale = spec.scale

    if jitter.is_zero():
        return scale * float(ideal_pixel_gain(mu, spec)), 0.0

    rng = np.random.default_rng(seed)
    delta = rng.multivariate_normal(np.zeros(2),
                                    jitter.matrix,
                                    size=trials,
                                    method='eigh')
    samples = scale * ideal_pixel_gain(mu + delta, spec)
    return float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(trials))


# }}

__all__ = [
    "PixelOpticsSpec", "JitterSpec", "QuadratureSpec", "sinc",
    "ideal_pixel_gain", "long_exposure_gain", "long_exposure_gain_mc",
    "blur_kernel_1d", "per_pixel_gains", "two_hop_gain", "deviation_surface",
    "solve_jitter_for_attenuation"
]

# Here there be dragons
