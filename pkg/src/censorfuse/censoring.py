"""Single-interval no-send regions: solving the rate constraint, send/censor
decisions, and the interval masses that drive the fusion likelihoods."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .marginals import H0, H1, GaussianMarginal


@dataclass(frozen=True)
class CensoringScheme:
    """No-send interval [t1, t2] with its design censoring rate beta.

    beta is the H0 probability of the interval for the owning sensor's
    marginal; construction via scheme_from_rate guarantees the two agree.
    """

    t1: float
    t2: float
    beta: float

    def __post_init__(self):
        if not (np.isfinite(self.t1) and np.isfinite(self.t2)):
            raise DomainError("censoring limits must be finite")
        if self.t2 < self.t1:
            raise DomainError(f"need t1 <= t2, got [{self.t1}, {self.t2}]")
        if not (0.0 < self.beta < 1.0):
            raise DomainError(f"beta must lie in (0,1), got {self.beta}")


@dataclass(frozen=True)
class SensorMessage:
    """Either a transmitted amplitude or an empty (censored) slot."""

    value: float | None

    @property
    def censored(self) -> bool:
        return self.value is None

    @classmethod
    def sent(cls, value: float) -> "SensorMessage":
        return cls(float(value))


CENSORED = SensorMessage(None)


def solve_upper_limit(m: GaussianMarginal, t1: float, beta: float) -> float:
    """Upper no-send limit t2 with P(X in [t1, t2] | H0) = beta."""
    if not (0.0 < beta < 1.0):
        raise DomainError(f"beta must lie in (0,1), got {beta}")
    lo = m.cdf(t1, H0)
    if lo + beta > 1.0:
        raise DomainError(
            f"infeasible rate: cdf(t1|H0)={lo:.6f} leaves less than beta={beta} above t1")
    # The boundary case lo + beta == 1 pins t2 at +infinity; clip to the
    # largest quantile double precision resolves so the interval stays
    # finite while the realized rate is off by less than 1e-13.
    return float(m.inv_cdf(min(lo + beta, 1.0 - 1e-13), H0))


def scheme_from_rate(m: GaussianMarginal, t1: float, beta: float) -> CensoringScheme:
    """Build a scheme whose interval meets the H0 rate constraint exactly."""
    return CensoringScheme(t1=float(t1), t2=solve_upper_limit(m, t1, beta), beta=float(beta))


def apply_censoring(s: CensoringScheme, x: float) -> SensorMessage:
    """Censor on the closed interval [t1, t2]; send the raw amplitude otherwise."""
    if s.t1 <= x <= s.t2:
        return CENSORED
    return SensorMessage.sent(x)


def censor_mask(s: CensoringScheme, x: np.ndarray) -> np.ndarray:
    """Boolean mask of censored entries, vectorized form of apply_censoring."""
    x = np.asarray(x, dtype=float)
    return (x >= s.t1) & (x <= s.t2)


def no_send_mass(s: CensoringScheme, m: GaussianMarginal, h: int) -> float:
    """P(X in [t1, t2] | h)."""
    return float(m.cdf(s.t2, h) - m.cdf(s.t1, h))


def rho(s: CensoringScheme, m: GaussianMarginal) -> float:
    """Likelihood ratio contributed by an empty slot: H1 mass over H0 mass."""
    denom = no_send_mass(s, m, H0)
    if denom <= 0.0:
        raise DomainError("no-send interval carries zero H0 mass")
    return no_send_mass(s, m, H1) / denom
