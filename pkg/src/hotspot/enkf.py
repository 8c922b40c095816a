"""
Iterative ensemble Kalman update for a scalar latent log-flux.

Each observation is assimilated with the ensemble smoother with multiple
data assimilation (ES-MDA, Emerick & Reynolds 2012/2013): the update is
repeated ``iterations`` times with the observation-error variance inflated
by ``alpha_i`` (``sum(1 / alpha_i) == 1``) and freshly perturbed
observations on every pass. The ensemble is updated in log-flux space.

References
----------
Emerick, A.A., Reynolds, A.C. History matching time-lapse seismic data using
the ensemble Kalman filter with multiple data assimilations.
Comput Geosci 16, 639-659 (2012).
"""
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numba
import numpy as np

from hotspot.errors import ConfigError, DomainError, ForwardModelError
from hotspot.prior import FluxEnsemble


class Observation(NamedTuple):
    """A time-averaged concentration measurement (ppm) at a receptor."""

    value: float
    noise_sd: float
    location: tuple
    time_step: int

    def validate(self):
        if not self.noise_sd > 0:
            raise DomainError(f"noise_sd must be > 0, got {self.noise_sd}")
        if not 0 <= self.time_step <= 15:
            raise DomainError(f"time_step must be in 0..15, got {self.time_step}")
        return self


@dataclass(frozen=True)
class EnkfConfig:
    """ES-MDA settings; ``inflation`` defaults to ``iterations`` repeated."""

    iterations: int = 4
    inflation: Optional[tuple] = field(default=None)

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.inflation is None:
            object.__setattr__(self, "inflation", (float(self.iterations),) * self.iterations)
        else:
            object.__setattr__(self, "inflation", tuple(float(a) for a in self.inflation))
        if len(self.inflation) != self.iterations:
            raise ConfigError("need one inflation factor per iteration")
        if any(a <= 0 for a in self.inflation):
            raise ConfigError("inflation factors must be positive")
        if abs(sum(1.0 / a for a in self.inflation) - 1.0) > 1e-9:
            raise ConfigError("inflation factors must satisfy sum(1/alpha) == 1")
        object.__setattr__(self, "_alphas", np.asarray(self.inflation, dtype=float))

    @property
    def alphas(self):
        return self._alphas


class LinearForward(NamedTuple):
    """``ppm = background + gain * flux``: the plume at one fixed receptor.

    Recognised by :func:`assimilate`, which then runs a compiled kernel.
    """

    background: float
    gain: float

    def __call__(self, flux):
        return self.background + self.gain * np.asarray(flux, dtype=float)


@numba.njit(cache=True)
def _esmda_linear(log_members, obs_value, noise_sd, background, gain, alphas, eps):
    ell = log_members.copy()
    n = ell.size
    d = np.empty(n)
    for i in range(alphas.size):
        alpha = alphas[i]
        lbar = 0.0
        dbar = 0.0
        for j in range(n):
            d[j] = background + gain * np.exp(ell[j])
            lbar += ell[j]
            dbar += d[j]
        lbar /= n
        dbar /= n
        c_ld = 0.0
        c_dd = 0.0
        for j in range(n):
            dd = d[j] - dbar
            c_ld += (ell[j] - lbar) * dd
            c_dd += dd * dd
        c_ld /= n - 1
        c_dd /= n - 1
        k = c_ld / (c_dd + alpha * noise_sd * noise_sd)
        s = np.sqrt(alpha) * noise_sd
        for j in range(n):
            ell[j] += k * (obs_value + s * eps[i, j] - d[j])
    return ell


def _esmda_generic(log_members, obs_value, noise_sd, forward, alphas, eps):
    ell = log_members.copy()
    n = ell.size
    for i, alpha in enumerate(alphas):
        d = np.asarray(forward(np.exp(ell)), dtype=float).reshape(n)
        bad = np.flatnonzero(~np.isfinite(d))
        if bad.size:
            raise ForwardModelError(bad[0], d[bad[0]])
        la = ell - ell.mean()
        da = d - d.mean()
        c_ld = la @ da / (n - 1)
        c_dd = da @ da / (n - 1)
        k = c_ld / (c_dd + alpha * noise_sd**2)
        ell = ell + k * (obs_value + np.sqrt(alpha) * noise_sd * eps[i] - d)
    return ell


def assimilate(e, obs, forward, cfg, rng):
    """Assimilate one observation into the ensemble.

    Parameters
    ----------
    e : FluxEnsemble
        Prior ensemble (unchanged).
    obs : Observation
    forward : callable
        Vectorised map from an array of fluxes to predicted ppm at
        ``obs.location``. A :class:`LinearForward` selects the compiled path.
    cfg : EnkfConfig
    rng : numpy.random.Generator
        Consumes exactly ``iterations * len(e)`` standard normals.

    Returns
    -------
    FluxEnsemble
        The updated ensemble. An ensemble without log-spread is returned
        unchanged in value, since its cross-covariance vanishes.

    Raises
    ------
    ForwardModelError
        If the forward model produces a non-finite prediction.
    """
    if not obs.noise_sd > 0:
        raise DomainError(f"noise_sd must be > 0, got {obs.noise_sd}")
    alphas = cfg.alphas
    eps = rng.standard_normal((alphas.size, len(e)))
    if isinstance(forward, LinearForward):
        ell = _esmda_linear(
            e.log_members, float(obs.value), float(obs.noise_sd),
            float(forward.background), float(forward.gain), alphas, eps,
        )
        if not np.isfinite(ell.sum()):
            bad = int(np.flatnonzero(~np.isfinite(ell))[0])
            raise ForwardModelError(bad, ell[bad])
        return FluxEnsemble._wrap(ell)
    ell = _esmda_generic(e.log_members, float(obs.value), float(obs.noise_sd), forward, alphas, eps)
    return FluxEnsemble(ell)


def sequential_assimilate_all(prior, obs_list, forwards, cfg, rng):
    """Fold :func:`assimilate` over observations in the given (time) order."""
    e = prior
    for obs, forward in zip(obs_list, forwards, strict=True):
        e = assimilate(e, obs, forward, cfg, rng)
    return e
