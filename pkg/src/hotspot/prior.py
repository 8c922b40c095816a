"""Lognormal flux prior and the log-space ensemble carried by the filter."""
import math
from dataclasses import dataclass

import numba
import numpy as np

from hotspot.errors import DegenerateEnsembleError, DomainError


@dataclass(frozen=True)
class LognormalParams:
    """Parameters of ``log(flux) ~ Normal(mu, sigma**2)``."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma}")

    @classmethod
    def from_median_mode(cls, median, mode):
        """Lognormal with the given median and mode (``mode < median``).

        median = exp(mu) and mode = exp(mu - sigma**2).
        """
        if not 0 < mode < median:
            raise DomainError("need 0 < mode < median")
        return cls(float(np.log(median)), float(np.sqrt(np.log(median / mode))))

    @property
    def median(self):
        return float(np.exp(self.mu))

    @property
    def mode(self):
        return float(np.exp(self.mu - self.sigma**2))

    @property
    def mean(self):
        return float(np.exp(self.mu + 0.5 * self.sigma**2))

    def pdf(self, flux):
        """Density in flux space; zero for non-positive flux."""
        flux = np.asarray(flux, dtype=float)
        safe = np.where(flux > 0, flux, 1.0)
        dens = np.exp(-((np.log(safe) - self.mu) ** 2) / (2 * self.sigma**2)) / (
            safe * self.sigma * np.sqrt(2 * np.pi)
        )
        return np.where(flux > 0, dens, 0.0)


DEFAULT_PRIOR = LognormalParams.from_median_mode(100.0, 30.0)


class FluxEnsemble:
    """Ensemble of flux samples stored as natural logarithms.

    Storing ``log(flux)`` keeps every flux strictly positive under additive
    Kalman updates.
    """

    __slots__ = ("log_members",)

    def __init__(self, log_members):
        log_members = np.array(log_members, dtype=float).ravel()
        if log_members.size < 2:
            raise DomainError("an ensemble needs at least 2 members")
        if not np.all(np.isfinite(log_members)):
            raise DomainError("ensemble members must be finite")
        self.log_members = log_members

    @classmethod
    def _wrap(cls, log_members):
        # trusted constructor for arrays produced by the filter itself
        e = object.__new__(cls)
        e.log_members = log_members
        return e

    @classmethod
    def from_fluxes(cls, fluxes):
        fluxes = np.asarray(fluxes, dtype=float)
        if np.any(fluxes <= 0):
            raise DomainError("fluxes must be strictly positive")
        return cls(np.log(fluxes))

    @property
    def fluxes(self):
        return np.exp(self.log_members)

    def __len__(self):
        return self.log_members.size

    def __eq__(self, other):
        if not isinstance(other, FluxEnsemble):
            return NotImplemented
        return np.array_equal(self.log_members, other.log_members)

    def __repr__(self):
        return f"FluxEnsemble(n={len(self)}, log_mean={self.log_members.mean():.4f})"

    def dumps(self):
        """One flux per line, shortest round-tripping decimal text."""
        return "".join(f"{repr(float(v))}\n" for v in self.fluxes)

    @classmethod
    def loads(cls, text):
        return cls.from_fluxes([float(line) for line in text.split() if line])


def sample_prior(params, n, rng):
    """Draw ``n`` i.i.d. log-fluxes from ``Normal(mu, sigma**2)``."""
    if n < 2:
        raise DomainError(f"ensemble size must be >= 2, got {n}")
    return FluxEnsemble(rng.normal(params.mu, params.sigma, size=int(n)))


@numba.njit(cache=True)
def _moments(x):
    n = x.size
    m = 0.0
    for v in x:
        m += v
    m /= n
    ss = 0.0
    for v in x:
        ss += (v - m) * (v - m)
    return m, math.sqrt(ss / (n - 1))


def fit_lognormal(e):
    """Moment fit in log space (sample std with divisor n - 1).

    Raises
    ------
    DegenerateEnsembleError
        If all members are identical.
    """
    mu, sd = _moments(e.log_members)
    if not sd > 0:
        raise DegenerateEnsembleError("ensemble has zero log-variance")
    return LognormalParams(float(mu), sd)


def ensemble_stats(e):
    """Mean, median and standard deviation (ddof=1) of the fluxes.

    For even ensemble sizes the median is the arithmetic mean of the two
    central order statistics in flux space.
    """
    x = e.fluxes
    return float(np.mean(x)), float(np.median(x)), float(np.std(x, ddof=1))
