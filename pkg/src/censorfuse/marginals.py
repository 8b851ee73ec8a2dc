"""Gaussian sensor marginals under a binary hypothesis pair.

Each sensor observes a Gaussian variable whose mean depends on the true
hypothesis (H0 or H1) while the standard deviation is shared.  The local
likelihood ratio of such a pair is monotone increasing in the observation,
which is what makes a single no-send interval an optimal censoring region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DomainError

H0, H1 = 0, 1

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianMarginal:
    """Location-shifted Gaussian pair: N(mu0, sigma^2) under H0, N(mu1, sigma^2) under H1.

    :param mu0: mean under the null hypothesis.
    :param mu1: mean under the alternative; must exceed mu0 so the
        likelihood ratio is increasing.
    :param sigma: common standard deviation, strictly positive.
    """

    mu0: float
    mu1: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0.0) or not np.isfinite(self.sigma):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma}")
        if not (np.isfinite(self.mu0) and np.isfinite(self.mu1)):
            raise DomainError(f"means must be finite, got mu0={self.mu0}, mu1={self.mu1}")
        if self.mu1 < self.mu0:
            raise DomainError(
                f"mu1 must not be below mu0 (monotone likelihood ratio), "
                f"got mu0={self.mu0}, mu1={self.mu1}"
            )

    def mean(self, h: int) -> float:
        return self.mu1 if h == H1 else self.mu0

    def pdf(self, x, h: int):
        x = np.asarray(x, dtype=float)
        z = (x - self.mean(h)) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))

    def logpdf(self, x, h: int):
        x = np.asarray(x, dtype=float)
        z = (x - self.mean(h)) / self.sigma
        return -0.5 * z * z - math.log(self.sigma) - _LOG_SQRT_2PI

    def cdf(self, x, h: int):
        x = np.asarray(x, dtype=float)
        return ndtr((x - self.mean(h)) / self.sigma)

    def inv_cdf(self, p, h: int):
        """Quantile function; p must lie strictly inside (0, 1)."""
        p = np.asarray(p, dtype=float)
        if np.any(p <= 0.0) or np.any(p >= 1.0):
            raise DomainError("inv_cdf requires probabilities strictly inside (0, 1)")
        return self.mean(h) + self.sigma * ndtri(p)

    def likelihood_ratio(self, x):
        """Pointwise density ratio pdf(x|H1)/pdf(x|H0).

        For a shared-sigma Gaussian pair this is exp(dmu*(x - xbar)/sigma^2)
        with dmu = mu1 - mu0 and xbar the midpoint of the means, hence
        strictly increasing in x.
        """
        return np.exp(self.log_likelihood_ratio(x))

    def log_likelihood_ratio(self, x):
        x = np.asarray(x, dtype=float)
        dmu = self.mu1 - self.mu0
        mid = 0.5 * (self.mu0 + self.mu1)
        return dmu * (x - mid) / (self.sigma * self.sigma)

    def sample(self, size, h: int, rng: np.random.Generator):
        return rng.normal(self.mean(h), self.sigma, size=size)
