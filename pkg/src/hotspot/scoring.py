"""Step rewards and the final evaluation score."""
import enum

import numba
import numpy as np

from hotspot.errors import DegenerateEnsembleError, DomainError
from hotspot.prior import LognormalParams, fit_lognormal

# fitted log-sd used in place of an exactly degenerate ensemble
MIN_SIGMA = 1e-6


class RewardKind(enum.Enum):
    NEG_CRPS = "neg-crps"
    KL_GAIN = "kl"
    NEG_ENTROPY = "neg-entropy"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@numba.njit(cache=True)
def _crps_sorted(x, truth):
    # sum_ij |x_i - x_j| = 2 sum_k (2k - n + 1) x_(k) for ascending x
    n = x.size
    err = 0.0
    spread = 0.0
    for k in range(n):
        err += abs(x[k] - truth)
        spread += (2.0 * k - (n - 1)) * x[k]
    return err / n - spread / (n * n)


def crps_ensemble(e, truth):
    """Ensemble CRPS of the fluxes ``exp(e.log_members)`` against ``truth``.

    Plain (non-fair) estimator
    ``mean|x_i - y| - 1/(2N^2) sum_ij |x_i - x_j|``, evaluated in
    O(N log N) through the sorted-sample identity. Accepts a
    :class:`FluxEnsemble` or a plain array of flux-space members.
    """
    if hasattr(e, "log_members"):
        x = np.exp(np.sort(e.log_members))
    else:
        x = np.sort(np.asarray(e, dtype=float).ravel())
    return max(_crps_sorted(x, float(truth)), 0.0)


def crps_pairwise(members, truth):
    """Reference double-sum CRPS on flux-space members, O(N^2)."""
    x = np.asarray(members, dtype=float).ravel()
    n = x.size
    return float(np.sum(np.abs(x - truth)) / n - np.sum(np.abs(x[:, None] - x[None, :])) / (2 * n * n))


def _check_sigma(*params):
    for p in params:
        if not p.sigma > 0:
            raise DomainError(f"sigma must be > 0, got {p.sigma}")


def kl_lognormal(post, prior):
    """Forward KL divergence ``D(post || prior)`` in nats.

    Equal to the KL between the underlying normals.
    """
    _check_sigma(post, prior)
    return float(
        np.log(prior.sigma / post.sigma)
        + (post.sigma**2 + (post.mu - prior.mu) ** 2) / (2 * prior.sigma**2)
        - 0.5
    )


def entropy_lognormal(p):
    """Differential entropy of a lognormal, ``mu + 0.5 ln(2 pi e sigma^2)``."""
    _check_sigma(p)
    return float(p.mu + 0.5 * np.log(2 * np.pi * np.e * p.sigma**2))


def _fit_clamped(e):
    try:
        return fit_lognormal(e)
    except DegenerateEnsembleError:
        return LognormalParams(float(np.mean(e.log_members)), MIN_SIGMA)


def step_reward(kind, post_ensemble, initial_prior, truth):
    """Reward emitted after assimilating one observation.

    Only ``NEG_CRPS`` reads ``truth``.
    """
    if kind is RewardKind.NEG_CRPS:
        return -crps_ensemble(post_ensemble, truth)
    fitted = _fit_clamped(post_ensemble)
    if kind is RewardKind.KL_GAIN:
        return kl_lognormal(fitted, initial_prior)
    if kind is RewardKind.NEG_ENTROPY:
        return -entropy_lognormal(fitted)
    raise ValueError(f"unknown reward kind {kind!r}")
