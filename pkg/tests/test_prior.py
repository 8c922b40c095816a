import numpy as np
import pytest

from hotspot.errors import DegenerateEnsembleError, DomainError
from hotspot.prior import (
    DEFAULT_PRIOR,
    FluxEnsemble,
    LognormalParams,
    ensemble_stats,
    fit_lognormal,
    sample_prior,
)


def test_default_prior_from_median_and_mode():
    assert DEFAULT_PRIOR.mu == pytest.approx(np.log(100))
    assert DEFAULT_PRIOR.sigma**2 == pytest.approx(np.log(100 / 30))
    assert DEFAULT_PRIOR.median == pytest.approx(100)
    assert DEFAULT_PRIOR.mode == pytest.approx(30)


def test_near_degenerate_prior():
    e = sample_prior(LognormalParams(2.0, 1e-12), 50, np.random.default_rng(0))
    np.testing.assert_allclose(e.log_members, 2.0, atol=1e-9)


def test_large_sample_median_and_mode():
    e = sample_prior(DEFAULT_PRIOR, 100_000, np.random.default_rng(1))
    x = e.fluxes
    assert np.median(x) == pytest.approx(100, rel=0.02)
    # histogram mode: densest 10-unit bucket on [0, 200)
    counts, edges = np.histogram(x, bins=20, range=(0, 200))
    mode_bucket = edges[np.argmax(counts)]
    assert 20 <= mode_bucket <= 30


def test_same_seed_same_ensemble():
    a = sample_prior(DEFAULT_PRIOR, 100, np.random.default_rng(5))
    b = sample_prior(DEFAULT_PRIOR, 100, np.random.default_rng(5))
    assert a == b


def test_small_ensemble_rejected():
    with pytest.raises(DomainError):
        sample_prior(DEFAULT_PRIOR, 1, np.random.default_rng(0))


def test_fit_two_points():
    p = fit_lognormal(FluxEnsemble([0.0, 2.0]))
    assert p.mu == pytest.approx(1.0)
    assert p.sigma == pytest.approx(np.sqrt(2.0))


def test_fit_monte_carlo():
    e = FluxEnsemble(np.random.default_rng(2).normal(4.6, 1.1, 100_000))
    assert fit_lognormal(e).mu == pytest.approx(4.6, abs=0.02)


def test_fit_round_trip():
    p = fit_lognormal(sample_prior(DEFAULT_PRIOR, 1_000_000, np.random.default_rng(3)))
    assert p.mu == pytest.approx(DEFAULT_PRIOR.mu, rel=0.01)
    assert p.sigma == pytest.approx(DEFAULT_PRIOR.sigma, rel=0.01)


@pytest.mark.parametrize("n", [100, 1000, 10_000])
def test_fit_error_shrinks_like_root_n(n):
    errs = [
        abs(fit_lognormal(sample_prior(DEFAULT_PRIOR, n, np.random.default_rng(s))).mu - DEFAULT_PRIOR.mu)
        for s in range(200)
    ]
    # mean |error| of a normal mean estimate is sigma * sqrt(2 / (pi n))
    expected = DEFAULT_PRIOR.sigma * np.sqrt(2 / (np.pi * n))
    assert np.mean(errs) == pytest.approx(expected, rel=0.2)


def test_fit_degenerate():
    with pytest.raises(DegenerateEnsembleError):
        fit_lognormal(FluxEnsemble([1.0, 1.0, 1.0]))


def test_stats_degenerate():
    mean, median, sd = ensemble_stats(FluxEnsemble(np.full(10, np.log(250.0))))
    assert mean == pytest.approx(250) and median == pytest.approx(250)
    assert sd == pytest.approx(0, abs=1e-12)


def test_stats_even_median_is_arithmetic():
    _, median, _ = ensemble_stats(FluxEnsemble.from_fluxes([100.0, 400.0]))
    assert median == pytest.approx(250.0)


def test_stats_prior_mean():
    mean, _, _ = ensemble_stats(sample_prior(DEFAULT_PRIOR, 100_000, np.random.default_rng(4)))
    assert DEFAULT_PRIOR.mean == pytest.approx(182.574185835055, rel=1e-12)
    assert mean == pytest.approx(DEFAULT_PRIOR.mean, rel=0.02)


def test_fluxes_positive():
    e = FluxEnsemble(np.random.default_rng(0).normal(0, 30, 1000))
    assert np.all(e.fluxes > 0)
    assert np.all(e.log_members > -np.inf)


def test_dump_round_trip():
    e = sample_prior(DEFAULT_PRIOR, 100, np.random.default_rng(6))
    text = e.dumps()
    assert len(text.splitlines()) == 100
    back = FluxEnsemble.loads(text)
    np.testing.assert_allclose(back.fluxes, e.fluxes, rtol=0, atol=0)


def test_pdf_integrates_to_one():
    from scipy.integrate import quad

    total, _ = quad(DEFAULT_PRIOR.pdf, 0, np.inf, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("kwargs", [dict(mu=0.0, sigma=0.0), dict(mu=np.inf, sigma=1.0), dict(mu=0.0, sigma=-1)])
def test_params_invariants(kwargs):
    with pytest.raises(DomainError):
        LognormalParams(**kwargs)
