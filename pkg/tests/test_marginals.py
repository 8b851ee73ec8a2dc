import math

import numpy as np
import pytest

from censorfuse import H0, H1, GaussianMarginal
from censorfuse.errors import DomainError


@pytest.fixture
def default_marginal():
    return GaussianMarginal(mu0=0.0, mu1=0.5, sigma=3.0)


def test_pdf_anchor_under_h0(default_marginal):
    # 1 / (3 sqrt(2 pi)) at the H0 mean
    want = 1.0 / (3.0 * math.sqrt(2.0 * math.pi))
    assert default_marginal.pdf(0.0, H0) == pytest.approx(want, rel=1e-12)
    assert default_marginal.pdf(0.0, H0) == pytest.approx(0.13298076, abs=1e-8)


def test_likelihood_ratio_anchor(default_marginal):
    # exp(0.5 * (0 - 0.25) / 9)
    assert default_marginal.likelihood_ratio(0.0) == pytest.approx(0.98620712, abs=1e-8)
    assert default_marginal.likelihood_ratio(0.5) == pytest.approx(
        math.exp(0.5 * 0.25 / 9.0), rel=1e-12)


def test_pdf_matches_formula_on_grid(default_marginal):
    xs = np.linspace(-9.0, 9.0, 31)
    for h, mu in ((H0, 0.0), (H1, 0.5)):
        want = np.exp(-0.5 * ((xs - mu) / 3.0) ** 2) / (3.0 * math.sqrt(2 * math.pi))
        np.testing.assert_allclose(default_marginal.pdf(xs, h), want, rtol=1e-12)
        np.testing.assert_allclose(default_marginal.logpdf(xs, h), np.log(want), rtol=1e-12)


def test_cdf_inverse_roundtrip(default_marginal):
    ps = np.array([1e-6, 0.01, 0.35, 0.5, 0.85, 0.99, 1 - 1e-6])
    for h in (H0, H1):
        xs = default_marginal.inv_cdf(ps, h)
        np.testing.assert_allclose(default_marginal.cdf(xs, h), ps, atol=1e-9)


def test_cdf_anchor(default_marginal):
    # Phi(1/3) under H0 at x = 1
    assert default_marginal.cdf(1.0, H0) == pytest.approx(0.6305586598182363, rel=1e-12)


def test_inv_cdf_rejects_boundary(default_marginal):
    for p in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(DomainError):
            default_marginal.inv_cdf(p, H0)


def test_log_likelihood_ratio_is_increasing(default_marginal):
    xs = np.linspace(-12.0, 12.0, 101)
    llr = default_marginal.log_likelihood_ratio(xs)
    assert np.all(np.diff(llr) > 0)
    # slope is dmu / sigma^2 everywhere
    np.testing.assert_allclose(np.diff(llr) / np.diff(xs), 0.5 / 9.0, rtol=1e-9)


def test_means_by_hypothesis(default_marginal):
    assert default_marginal.mean(H0) == 0.0
    assert default_marginal.mean(H1) == 0.5


def test_sampling_moments(default_marginal):
    rng = np.random.default_rng(2024)
    draws = default_marginal.sample(200_000, H1, rng)
    assert np.mean(draws) == pytest.approx(0.5, abs=0.02)
    assert np.std(draws) == pytest.approx(3.0, abs=0.02)


def test_validation_rejects_bad_parameters():
    with pytest.raises(DomainError):
        GaussianMarginal(mu0=0.0, mu1=0.5, sigma=0.0)
    with pytest.raises(DomainError):
        GaussianMarginal(mu0=0.0, mu1=0.5, sigma=-1.0)
    with pytest.raises(DomainError):
        GaussianMarginal(mu0=1.0, mu1=0.5, sigma=3.0)
    with pytest.raises(DomainError):
        GaussianMarginal(mu0=0.0, mu1=math.inf, sigma=3.0)
