"""Copula families: densities, volumes, conditionals, sampling and ML fitting.

Six families are supported: Gaussian, Student-t, Clayton, Frank, Gumbel and
the independence (product) copula.  The Archimedean families use exchangeable
single-parameter forms in any dimension; their densities and first-coordinate
conditionals come from generator-derivative recurrences, so no symbolic mixed
partials are needed.  Elliptical families carry a full correlation matrix.

Conventions
-----------
Arguments on the unit cube are clamped into [CLAMP, 1-CLAMP] before any
transform; all public functions accept a single point (d,) or a batch (n, d)
and return a scalar or an (n,) array accordingly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats
from scipy.optimize import brentq
from scipy.special import gammaln, logsumexp, ndtr, ndtri, owens_t

from .errors import DomainError, FitError, ParameterError
from .numerics import gauss_legendre_01, maximize_1d

log = logging.getLogger("censorfuse")

CLAMP = 1e-10

# Search windows for maximum-likelihood fitting.  Archimedean parameters much
# beyond these correspond to Kendall tau above ~0.94 where double precision
# starts losing the generator arithmetic anyway.
_FRANK_MAX = 34.9
_CLAYTON_MAX = 28.0
_GUMBEL_MAX = 20.0
_EQUICORR_MAX = 0.995

_MVT_SEED = 7261  # fixed QMC stream for Student-t rectangle probabilities


def clamp_unit(u):
    """Clip unit-cube coordinates away from the boundary."""
    return np.clip(np.asarray(u, dtype=float), CLAMP, 1.0 - CLAMP)


class CopulaFamily(str, Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T = "student_t"
    CLAYTON = "clayton"
    FRANK = "frank"
    GUMBEL = "gumbel"
    PRODUCT = "product"


ARCHIMEDEAN = (CopulaFamily.CLAYTON, CopulaFamily.FRANK, CopulaFamily.GUMBEL)
ELLIPTICAL = (CopulaFamily.GAUSSIAN, CopulaFamily.STUDENT_T)


@dataclass(frozen=True, eq=False)
class CopulaModel:
    """A copula family together with its fitted or configured parameters.

    phi is the scalar Archimedean parameter; sigma the correlation matrix of
    an elliptical family; nu the Student-t degrees of freedom (ignored
    elsewhere).
    """

    family: CopulaFamily
    phi: float | None = None
    sigma: np.ndarray | None = None
    nu: int = 5

    def __post_init__(self):
        fam = self.family
        if fam in ARCHIMEDEAN:
            if self.phi is None or not np.isfinite(self.phi):
                raise ParameterError(f"{fam.value} needs a finite scalar parameter")
            p = float(self.phi)
            if fam is CopulaFamily.CLAYTON and (p < -1.0 or p == 0.0):
                raise ParameterError(f"clayton parameter must be in [-1, inf) minus 0, got {p}")
            if fam is CopulaFamily.FRANK and p == 0.0:
                raise ParameterError("frank parameter must be nonzero")
            if fam is CopulaFamily.GUMBEL and p < 1.0:
                raise ParameterError(f"gumbel parameter must be >= 1, got {p}")
        elif fam in ELLIPTICAL:
            if self.sigma is None:
                raise ParameterError(f"{fam.value} needs a correlation matrix")
            s = np.asarray(self.sigma, dtype=float)
            if s.ndim != 2 or s.shape[0] != s.shape[1]:
                raise ParameterError("correlation matrix must be square")
            if not np.allclose(np.diag(s), 1.0, atol=1e-8):
                raise ParameterError("correlation matrix needs a unit diagonal")
            if not np.allclose(s, s.T, atol=1e-10):
                raise ParameterError("correlation matrix must be symmetric")
            if np.linalg.eigvalsh(s)[0] <= 1e-10:
                raise ParameterError("correlation matrix must be positive definite")
            object.__setattr__(self, "sigma", s)
            if fam is CopulaFamily.STUDENT_T:
                if int(self.nu) != self.nu or self.nu < 3:
                    raise ParameterError(f"student_t needs integer nu >= 3, got {self.nu}")
                object.__setattr__(self, "nu", int(self.nu))

    # -- factory helpers -------------------------------------------------
    @classmethod
    def product(cls) -> "CopulaModel":
        return cls(CopulaFamily.PRODUCT)

    @classmethod
    def clayton(cls, phi: float) -> "CopulaModel":
        return cls(CopulaFamily.CLAYTON, phi=float(phi))

    @classmethod
    def frank(cls, phi: float) -> "CopulaModel":
        return cls(CopulaFamily.FRANK, phi=float(phi))

    @classmethod
    def gumbel(cls, phi: float) -> "CopulaModel":
        return cls(CopulaFamily.GUMBEL, phi=float(phi))

    @classmethod
    def gaussian(cls, sigma) -> "CopulaModel":
        return cls(CopulaFamily.GAUSSIAN, sigma=np.asarray(sigma, dtype=float))

    @classmethod
    def student_t(cls, sigma, nu: int = 5) -> "CopulaModel":
        return cls(CopulaFamily.STUDENT_T, sigma=np.asarray(sigma, dtype=float), nu=nu)

    @classmethod
    def equicorrelated(cls, family: CopulaFamily, rho: float, d: int, nu: int = 5) -> "CopulaModel":
        if not (-1.0 / (d - 1) < rho < 1.0):
            raise ParameterError(f"equicorrelation {rho} outside (-1/{d-1}, 1)")
        s = np.full((d, d), float(rho))
        np.fill_diagonal(s, 1.0)
        if family is CopulaFamily.GAUSSIAN:
            return cls.gaussian(s)
        if family is CopulaFamily.STUDENT_T:
            return cls.student_t(s, nu)
        raise ParameterError(f"{family.value} is not elliptical")


def _as_batch(u) -> tuple[np.ndarray, bool]:
    arr = np.asarray(u, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    if arr.ndim != 2:
        raise DomainError("unit-cube input must be a vector or a 2-D batch")
    return arr, False


def _check_archimedean_dim(model: CopulaModel, d: int):
    if d < 2:
        raise DomainError("copula dimension must be at least 2")
    if model.family in (CopulaFamily.CLAYTON, CopulaFamily.FRANK) and model.phi < 0 and d > 2:
        raise ParameterError(
            f"{model.family.value} with negative parameter is only a copula in dimension 2")


# ---------------------------------------------------------------------------
# Archimedean generator kernels.
#
# psi is the (strict) generator with psi(1) = 0; inv_gen its inverse; A_d(s)
# denotes (-1)^d d^d/ds^d inv_gen(s), the positive d-th derivative magnitude
# entering the exchangeable density  c(u) = A_d(sum psi(u_i)) prod (-psi'(u_i)).
# ---------------------------------------------------------------------------

def _psi(fam: CopulaFamily, u, phi: float):
    if fam is CopulaFamily.CLAYTON:
        return np.expm1(-phi * np.log(u)) / phi
    if fam is CopulaFamily.GUMBEL:
        return (-np.log(u)) ** phi
    # frank: log|expm1(-phi)| - log|expm1(-phi*u)|, positive and decreasing
    return np.log(np.abs(np.expm1(-phi))) - np.log(np.abs(np.expm1(-phi * u)))


def _log_neg_dpsi(fam: CopulaFamily, u, phi: float):
    if fam is CopulaFamily.CLAYTON:
        return -(phi + 1.0) * np.log(u)
    if fam is CopulaFamily.GUMBEL:
        lg = -np.log(u)
        return math.log(phi) + (phi - 1.0) * np.log(lg) - np.log(u)
    return math.log(abs(phi)) - phi * u - np.log(np.abs(np.expm1(-phi * u)))


def _inv_gen(fam: CopulaFamily, s, phi: float):
    s = np.asarray(s, dtype=float)
    if fam is CopulaFamily.CLAYTON:
        base = 1.0 + phi * s
        if phi > 0:
            return np.exp(-np.log1p(phi * s) / phi)
        # negative parameter: countermonotone corner gives an empty region
        out = np.zeros_like(base)
        pos = base > 0.0
        out[pos] = np.exp(-np.log(base[pos]) / phi)
        return out
    if fam is CopulaFamily.GUMBEL:
        return np.exp(-(s ** (1.0 / phi)))
    r = math.log(abs(math.expm1(-phi))) - s
    if phi > 0:
        return -np.log(-np.expm1(r)) / phi
    return -np.log1p(np.exp(r)) / phi


_FRANK_COEFFS: dict[int, np.ndarray] = {}


def _frank_poly(d: int) -> np.ndarray:
    """Coefficients a_{d,j}, j = 1..d, of the d-th derivative of log(1+w(s))
    expressed in v = w/(1+w); built from a_{k+1,j} = -j a_{k,j} + (j-1) a_{k,j-1}."""
    if d not in _FRANK_COEFFS:
        a = np.array([-1.0])
        for k in range(1, d):
            nxt = np.zeros(k + 1)
            for j in range(1, k + 1):
                nxt[j - 1] += -j * a[j - 1]
                nxt[j] += j * a[j - 1]
            a = nxt
        _FRANK_COEFFS[d] = a
    return _FRANK_COEFFS[d]


def _gumbel_poly(d: int, alpha: float) -> np.ndarray:
    """Coefficients (j = 1..d) of P_d(x) = (-1)^d Q_d(x) with
    d^d/ds^d exp(-s^alpha) = exp(-x) s^-d Q_d(x), x = s^alpha; all positive."""
    q = np.array([-alpha])
    for k in range(1, d):
        nxt = np.zeros(k + 1)
        for j in range(1, k + 1):
            nxt[j - 1] += (alpha * j - k) * q[j - 1]
            nxt[j] += -alpha * q[j - 1]
        q = nxt
    return q if d % 2 == 0 else -q


def _frank_log_v(s, phi: float) -> np.ndarray:
    """log|v(s)| for the Frank chain variable v = w/(1+w), w = e^-s expm1(-phi)."""
    r = math.log(abs(math.expm1(-phi))) - np.asarray(s, dtype=float)
    if phi > 0:
        # v = -e^r / (1 - e^r), r < 0 on the copula's range
        return r - np.log(-np.expm1(np.minimum(r, -1e-300)))
    return r - np.log1p(np.exp(r))


def _log_A_d(fam: CopulaFamily, s, phi: float, d: int):
    """log of (-1)^d times the d-th derivative of the inverse generator."""
    s = np.asarray(s, dtype=float)
    if fam is CopulaFamily.CLAYTON:
        const = sum(math.log1p(k * phi) for k in range(1, d))
        base = 1.0 + phi * s
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(base > 0.0, np.log(np.maximum(base, 1e-300)), -np.inf)
        return const + (-1.0 / phi - d) * lg
    if fam is CopulaFamily.GUMBEL:
        alpha = 1.0 / phi
        coeffs = _gumbel_poly(d, alpha)
        x = s ** alpha
        lx = np.log(x)
        terms = np.log(coeffs)[:, None] + np.arange(1, d + 1)[:, None] * lx[None, :]
        return -x - d * np.log(s) + logsumexp(terms, axis=0)
    lv = _frank_log_v(s, phi)
    if phi > 0:
        # v < 0 here and every polynomial term then shares one sign, so a
        # log-domain sum is cancellation-free even when |v| overflows
        a = _frank_poly(d)
        terms = np.log(np.abs(a))[:, None] + np.arange(1, d + 1)[:, None] * lv[None, :]
        return -math.log(phi) + logsumexp(terms, axis=0)
    # negative parameter (bivariate only): v = e^r/(1+e^r) stays in (0, 1)
    if d == 1:
        return lv - math.log(-phi)
    if d == 2:
        lv = np.minimum(lv, -1e-16)
        return lv + np.log1p(-np.exp(lv)) - math.log(-phi)
    raise ParameterError("frank with negative parameter is only a copula in dimension 2")


# ---------------------------------------------------------------------------
# Elliptical kernels
# ---------------------------------------------------------------------------

def _scores(fam: CopulaFamily, u: np.ndarray, nu: int) -> np.ndarray:
    if fam is CopulaFamily.GAUSSIAN:
        return ndtri(u)
    return stats.t.ppf(u, df=nu)


def _chol(sigma: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ParameterError("correlation matrix is not positive definite") from exc


def _log_density_gaussian(z: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    chol = _chol(sigma)
    y = np.linalg.solve(chol, z.T)
    quad = np.sum(y * y, axis=0)
    return -np.sum(np.log(np.diag(chol))) - 0.5 * (quad - np.sum(z * z, axis=1))

def _log_density_student(z: np.ndarray, sigma: np.ndarray, nu: int) -> np.ndarray:
    d = z.shape[1]
    chol = _chol(sigma)
    y = np.linalg.solve(chol, z.T)
    quad = np.sum(y * y, axis=0)
    const = (gammaln((nu + d) / 2.0) + (d - 1) * gammaln(nu / 2.0)
             - d * gammaln((nu + 1) / 2.0) - np.sum(np.log(np.diag(chol))))
    return (const - 0.5 * (nu + d) * np.log1p(quad / nu)
            + 0.5 * (nu + 1) * np.sum(np.log1p(z * z / nu), axis=1))


def bvn_cdf(h, k, rho):
    """Standard bivariate normal CDF P(Z1 <= h, Z2 <= k), vectorized.

    Uses the Owen's T representation, which is accurate to ~1e-14 and, unlike
    the generic rectangle integrators, broadcasts over large batches.
    """
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    rho = np.clip(np.asarray(rho, dtype=float), -1.0 + 1e-15, 1.0 - 1e-15)
    h, k, rho = np.broadcast_arrays(h, k, rho)
    # nudge exact zeros so the slope arguments below stay finite
    h = np.where(h == 0.0, 1e-13, h)
    k = np.where(k == 0.0, 1e-13, k)
    root = np.sqrt(1.0 - rho * rho)
    ah = (k - rho * h) / (h * root)
    ak = (h - rho * k) / (k * root)
    delta = np.where(h * k < 0.0, 0.5, 0.0)
    val = 0.5 * (ndtr(h) + ndtr(k)) - owens_t(h, ah) - owens_t(k, ak) - delta
    return np.clip(val, 0.0, 1.0)


def _mvn_cdf(z: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    if sigma.shape[0] == 2:
        return bvn_cdf(z[:, 0], z[:, 1], sigma[0, 1])
    dist = stats.multivariate_normal(mean=np.zeros(sigma.shape[0]), cov=sigma)
    return np.atleast_1d(dist.cdf(z))


def _mvt_cdf(z: np.ndarray, sigma: np.ndarray, nu: int) -> np.ndarray:
    dist = stats.multivariate_t(shape=sigma, df=nu)
    return np.array([float(dist.cdf(row, random_state=_MVT_SEED)) for row in np.atleast_2d(z)])


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def copula_cdf(model: CopulaModel, u):
    """C(u): joint CDF of the copula at one or many unit-cube points."""
    batch, single = _as_batch(u)
    batch = clamp_unit(batch)
    d = batch.shape[1]
    fam = model.family
    if fam is CopulaFamily.PRODUCT:
        out = np.prod(batch, axis=1)
    elif fam in ARCHIMEDEAN:
        _check_archimedean_dim(model, d)
        s = np.sum(_psi(fam, batch, model.phi), axis=1)
        out = _inv_gen(fam, s, model.phi)
    elif fam is CopulaFamily.GAUSSIAN:
        _require_dim(model, d)
        out = _mvn_cdf(ndtri(batch), model.sigma)
    else:
        _require_dim(model, d)
        out = _mvt_cdf(stats.t.ppf(batch, df=model.nu), model.sigma, model.nu)
    return float(out[0]) if single else out


def _require_dim(model: CopulaModel, d: int):
    if model.sigma.shape[0] != d:
        raise DomainError(
            f"point dimension {d} does not match correlation matrix {model.sigma.shape[0]}")


def log_copula_density(model: CopulaModel, u):
    """log c(u); -inf where the density vanishes."""
    batch, single = _as_batch(u)
    batch = clamp_unit(batch)
    d = batch.shape[1]
    fam = model.family
    if fam is CopulaFamily.PRODUCT:
        out = np.zeros(batch.shape[0])
    elif fam in ARCHIMEDEAN:
        _check_archimedean_dim(model, d)
        s = np.sum(_psi(fam, batch, model.phi), axis=1)
        out = _log_A_d(fam, s, model.phi, d) + np.sum(
            _log_neg_dpsi(fam, batch, model.phi), axis=1)
    elif fam is CopulaFamily.GAUSSIAN:
        _require_dim(model, d)
        out = _log_density_gaussian(ndtri(batch), model.sigma)
    else:
        _require_dim(model, d)
        out = _log_density_student(stats.t.ppf(batch, df=model.nu), model.sigma, model.nu)
    return float(out[0]) if single else out


def copula_density(model: CopulaModel, u):
    """c(u) = the copula density, nonnegative."""
    res = log_copula_density(model, u)
    return np.exp(res) if isinstance(res, np.ndarray) else math.exp(res)


_CORNER_BITS: dict[int, np.ndarray] = {}


def _corner_bits(d: int) -> np.ndarray:
    if d not in _CORNER_BITS:
        idx = np.arange(2 ** d)
        _CORNER_BITS[d] = (idx[:, None] >> np.arange(d)[None, :]) & 1
    return _CORNER_BITS[d]


def h_volume(model: CopulaModel, lo, hi):
    """Probability mass the copula assigns to the box [lo, hi].

    Inclusion-exclusion over the 2^d corners of copula_cdf; elliptical
    families with dimension >= 3 use the rectangle form of the same Genz
    integrator directly for accuracy.
    """
    lo_b, single = _as_batch(lo)
    hi_b, _ = _as_batch(hi)
    lo_b = clamp_unit(lo_b)
    hi_b = clamp_unit(hi_b)
    if lo_b.shape != hi_b.shape:
        raise DomainError("box corners must share a shape")
    if np.any(hi_b < lo_b):
        raise DomainError("box upper corner below lower corner")
    d = lo_b.shape[1]
    fam = model.family
    if fam in ELLIPTICAL and d >= 3:
        out = _elliptical_rect(model, lo_b, hi_b)
    else:
        bits = _corner_bits(d)
        corners = np.where(bits[None, :, :] == 1, hi_b[:, None, :], lo_b[:, None, :])
        vals = copula_cdf(model, corners.reshape(-1, d)).reshape(lo_b.shape[0], -1)
        signs = np.where((d - bits.sum(axis=1)) % 2 == 0, 1.0, -1.0)
        out = vals @ signs
    out = np.maximum(out, 0.0)
    return float(out[0]) if single else out


def _elliptical_rect(model: CopulaModel, lo_b: np.ndarray, hi_b: np.ndarray) -> np.ndarray:
    if model.family is CopulaFamily.GAUSSIAN:
        zl, zh = ndtri(lo_b), ndtri(hi_b)
        dist = stats.multivariate_normal(mean=np.zeros(lo_b.shape[1]), cov=model.sigma)
        return np.array([float(dist.cdf(zh[i], lower_limit=zl[i])) for i in range(len(lo_b))])
    zl = stats.t.ppf(lo_b, df=model.nu)
    zh = stats.t.ppf(hi_b, df=model.nu)
    dist = stats.multivariate_t(shape=model.sigma, df=model.nu)
    return np.array([
        float(dist.cdf(zh[i], lower_limit=zl[i], random_state=_MVT_SEED))
        for i in range(len(lo_b))
    ])


def conditional_cdf_wrt_first(model: CopulaModel, u0, rest_lo, rest_hi):
    """P(U_rest in box | U_0 = u0): the partial derivative of the copula CDF
    in its first coordinate, combined over the 2^(d-1) corners of the box.

    u0 may be a scalar or an (n,) array; the box corners broadcast with it.
    """
    u0_arr = np.atleast_1d(clamp_unit(u0))
    lo_b, single = _as_batch(rest_lo)
    hi_b, _ = _as_batch(rest_hi)
    lo_b = clamp_unit(lo_b)
    hi_b = clamp_unit(hi_b)
    n = max(u0_arr.shape[0], lo_b.shape[0])
    u0_arr = np.broadcast_to(u0_arr, (n,))
    lo_b = np.broadcast_to(lo_b, (n, lo_b.shape[1]))
    hi_b = np.broadcast_to(hi_b, (n, hi_b.shape[1]))
    dr = lo_b.shape[1]
    fam = model.family
    if fam is CopulaFamily.PRODUCT:
        out = np.prod(hi_b - lo_b, axis=1)
    elif fam in ARCHIMEDEAN:
        _check_archimedean_dim(model, dr + 1)
        phi = model.phi
        bits = _corner_bits(dr)
        corners = np.where(bits[None, :, :] == 1, hi_b[:, None, :], lo_b[:, None, :])
        s = np.sum(_psi(fam, corners, phi), axis=2) + _psi(fam, u0_arr, phi)[:, None]
        log_a1 = _log_A_d(fam, s.reshape(-1), phi, 1).reshape(n, -1)
        signs = np.where((dr - bits.sum(axis=1)) % 2 == 0, 1.0, -1.0)
        inner = np.exp(log_a1) @ signs
        out = np.maximum(inner, 0.0) * np.exp(_log_neg_dpsi(fam, u0_arr, phi))
    else:
        out = _elliptical_conditional(model, u0_arr, lo_b, hi_b)
    out = np.maximum(out, 0.0)
    return float(out[0]) if single and out.shape[0] == 1 else out


def _elliptical_conditional(model: CopulaModel, u0, lo_b, hi_b) -> np.ndarray:
    sigma = model.sigma
    dr = lo_b.shape[1]
    _require_dim(model, dr + 1)
    s01 = sigma[1:, 0]
    s11 = sigma[1:, 1:]
    cond_cov = s11 - np.outer(s01, s01)
    if model.family is CopulaFamily.GAUSSIAN:
        z0 = ndtri(u0)
        zl = ndtri(lo_b) - z0[:, None] * s01[None, :]
        zh = ndtri(hi_b) - z0[:, None] * s01[None, :]
        sd = np.sqrt(np.diag(cond_cov))
        if dr == 1:
            return ndtr(zh[:, 0] / sd[0]) - ndtr(zl[:, 0] / sd[0])
        if dr == 2:
            r = cond_cov[0, 1] / (sd[0] * sd[1])
            a1, b1 = zl[:, 0] / sd[0], zh[:, 0] / sd[0]
            a2, b2 = zl[:, 1] / sd[1], zh[:, 1] / sd[1]
            return (bvn_cdf(b1, b2, r) - bvn_cdf(a1, b2, r)
                    - bvn_cdf(b1, a2, r) + bvn_cdf(a1, a2, r))
        dist = stats.multivariate_normal(mean=np.zeros(dr), cov=cond_cov)
        return np.array([float(dist.cdf(zh[i], lower_limit=zl[i])) for i in range(len(u0))])
    nu = model.nu
    z0 = stats.t.ppf(u0, df=nu)
    scale = (nu + z0 * z0) / (nu + 1.0)
    zl = stats.t.ppf(lo_b, df=nu) - z0[:, None] * s01[None, :]
    zh = stats.t.ppf(hi_b, df=nu) - z0[:, None] * s01[None, :]
    if dr == 1:
        sd = np.sqrt(scale * cond_cov[0, 0])
        return (stats.t.cdf(zh[:, 0] / sd, df=nu + 1)
                - stats.t.cdf(zl[:, 0] / sd, df=nu + 1))
    out = np.empty(len(u0))
    for i in range(len(u0)):
        dist = stats.multivariate_t(shape=scale[i] * cond_cov, df=nu + 1)
        out[i] = float(dist.cdf(zh[i], lower_limit=zl[i], random_state=_MVT_SEED))
    return out


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def copula_sample(model: CopulaModel, d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n unit-cube vectors from the copula.

    Archimedean families with positive parameter use the frailty (mixing
    variable) construction: Gamma for Clayton, positive stable for Gumbel,
    logarithmic series for Frank.  Negative bivariate parameters fall back to
    inverting the first-coordinate conditional numerically.
    """
    fam = model.family
    if d < 2:
        raise DomainError("copula dimension must be at least 2")
    if fam is CopulaFamily.PRODUCT:
        return rng.random((n, d))
    if fam in ELLIPTICAL:
        _require_dim(model, d)
        chol = _chol(model.sigma)
        z = rng.standard_normal((n, d)) @ chol.T
        if fam is CopulaFamily.GAUSSIAN:
            return ndtr(z)
        g = rng.chisquare(model.nu, size=n)
        return stats.t.cdf(z * np.sqrt(model.nu / g)[:, None], df=model.nu)
    _check_archimedean_dim(model, d)
    phi = model.phi
    if phi < 0:
        return _sample_negative_bivariate(model, n, rng)
    if fam is CopulaFamily.GUMBEL and phi == 1.0:
        return rng.random((n, d))
    if fam is CopulaFamily.CLAYTON:
        frailty = rng.gamma(1.0 / phi, 1.0, size=n)
    elif fam is CopulaFamily.GUMBEL:
        frailty = _positive_stable(1.0 / phi, n, rng)
    else:
        frailty = rng.logseries(-math.expm1(-phi), size=n).astype(float)
    e = rng.exponential(size=(n, d))
    s = e / frailty[:, None]
    if fam is CopulaFamily.CLAYTON:
        # frailty construction uses the Laplace-transform scaling of psi
        u = np.exp(-np.log1p(s) / phi)
    elif fam is CopulaFamily.GUMBEL:
        u = np.exp(-(s ** (1.0 / phi)))
    else:
        u = -np.log1p(np.exp(-s) * math.expm1(-phi)) / phi
    return clamp_unit(u)


def _positive_stable(alpha: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Positive alpha-stable draws with Laplace transform exp(-s^alpha)."""
    theta = rng.uniform(0.0, math.pi, size=n)
    e = rng.exponential(size=n)
    sin_t = np.sin(theta)
    return (np.sin(alpha * theta) / sin_t ** (1.0 / alpha)
            * (np.sin((1.0 - alpha) * theta) / e) ** ((1.0 - alpha) / alpha))


def _sample_negative_bivariate(model: CopulaModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Bivariate conditional-inversion sampler for negative dependence."""
    u1 = rng.random(n)
    target = rng.random(n)
    lo = np.full(n, CLAMP)
    hi = np.full(n, 1.0 - CLAMP)
    width = np.full(n, CLAMP)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        val = conditional_cdf_wrt_first(model, u1, width[:, None], mid[:, None])
        total = conditional_cdf_wrt_first(model, u1, width[:, None],
                                          np.full((n, 1), 1.0 - CLAMP))
        below = val < target * total
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return np.column_stack([u1, 0.5 * (lo + hi)])


# ---------------------------------------------------------------------------
# Kendall tau maps
# ---------------------------------------------------------------------------

def _debye1(x: float) -> float:
    """First Debye function (1/x) * integral of t/(e^t - 1) over [0, x]."""
    nodes, weights = gauss_legendre_01(64)
    t = x * nodes
    integrand = np.where(np.abs(t) < 1e-8, 1.0 - t / 2.0, t / np.expm1(t))
    return float(np.sum(weights * integrand))


def param_to_tau(model: CopulaModel) -> float:
    """Population Kendall tau of the bivariate copula."""
    fam = model.family
    if fam is CopulaFamily.PRODUCT:
        return 0.0
    if fam is CopulaFamily.CLAYTON:
        return model.phi / (model.phi + 2.0)
    if fam is CopulaFamily.GUMBEL:
        return 1.0 - 1.0 / model.phi
    if fam is CopulaFamily.FRANK:
        phi = model.phi
        return 1.0 - 4.0 / phi * (1.0 - _debye1(phi))
    rho = float(model.sigma[0, 1])
    return 2.0 / math.pi * math.asin(rho)


def tau_to_param(family: CopulaFamily, tau: float) -> float:
    """Invert param_to_tau for one family; raises DomainError when tau is
    unreachable (for example a negative tau for Gumbel)."""
    if not (-1.0 < tau < 1.0):
        raise DomainError(f"tau must lie in (-1, 1), got {tau}")
    if family is CopulaFamily.PRODUCT:
        if tau != 0.0:
            raise DomainError("product copula only represents tau = 0")
        return 0.0
    if family in ELLIPTICAL:
        return math.sin(math.pi * tau / 2.0)
    if tau == 0.0:
        raise DomainError(f"{family.value} cannot represent exact independence")
    if family is CopulaFamily.CLAYTON:
        if tau <= -1.0 / 3.0:
            raise DomainError(f"clayton reaches tau > -1/3 only, got {tau}")
        return 2.0 * tau / (1.0 - tau)
    if family is CopulaFamily.GUMBEL:
        if tau < 0.0:
            raise DomainError("gumbel models positive dependence only")
        return 1.0 / (1.0 - tau)
    # frank: numeric inversion, using the map's odd symmetry
    sign = 1.0 if tau > 0.0 else -1.0
    at = abs(tau)
    f = lambda p: param_to_tau(CopulaModel.frank(p)) - at
    if f(_FRANK_MAX * 2) < 0:
        raise DomainError(f"frank tau {tau} beyond the supported parameter range")
    return sign * brentq(f, 1e-9, _FRANK_MAX * 2, xtol=1e-12)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    model: CopulaModel
    loglik: float


@dataclass(frozen=True)
class SelectionReport:
    selected: FitResult
    per_family: tuple[tuple[CopulaFamily, FitResult | None], ...]
    fallback: bool = False


def rank_pseudo_observations(x: np.ndarray) -> np.ndarray:
    """Map raw columns to (rank / (n+1)) pseudo-observations."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    ranks = np.argsort(np.argsort(x, axis=0), axis=0) + 1.0
    return ranks / (n + 1.0)


def _fit_ranges(family: CopulaFamily, d: int) -> tuple[float, float, bool]:
    """(lo, hi, log_scale) of the ML search window."""
    if family is CopulaFamily.FRANK:
        if d == 2:
            return -_FRANK_MAX, _FRANK_MAX, False
        return 1e-4, _FRANK_MAX, True
    if family is CopulaFamily.CLAYTON:
        if d == 2:
            return -0.95, _CLAYTON_MAX, False
        return 1e-4, _CLAYTON_MAX, True
    return 1.0 + 1e-12, _GUMBEL_MAX, True


def _archimedean_model(family: CopulaFamily, phi: float) -> CopulaModel:
    if family is CopulaFamily.FRANK and abs(phi) < 1e-8:
        phi = math.copysign(1e-8, phi if phi != 0 else 1.0)
    if family is CopulaFamily.CLAYTON and -1e-8 < phi < 1e-8:
        phi = math.copysign(1e-8, phi if phi != 0 else 1.0)
    return CopulaModel(family, phi=float(phi))


def fit_ml(family: CopulaFamily, data: np.ndarray, nu: int = 5) -> FitResult:
    """Maximum-likelihood fit of one family to unit-cube pseudo-observations.

    Archimedean parameters come from a bounded 1-D search (log scale whenever
    the window is positive); elliptical correlation matrices use the pairwise
    normal-scores estimate.  Returns the fitted model and its log-likelihood.
    """
    u = np.asarray(data, dtype=float)
    if u.ndim != 2:
        raise FitError("fit data must be a 2-D array of pseudo-observations")
    n, d = u.shape
    if n < 5 * d:
        raise FitError(f"need at least {5 * d} samples to fit {d} dimensions, got {n}")
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        u = clamp_unit(u)
    if np.all(u == u[0]):
        raise FitError("degenerate sample: all pseudo-observation vectors identical")
    if family is CopulaFamily.PRODUCT:
        return FitResult(CopulaModel.product(), 0.0)
    if family in ELLIPTICAL:
        z = ndtri(u)
        sigma = np.corrcoef(z, rowvar=False)
        if not np.all(np.isfinite(sigma)):
            raise FitError("normal-scores correlation is undefined for this sample")
        sigma = _repair_correlation(sigma)
        model = (CopulaModel.gaussian(sigma) if family is CopulaFamily.GAUSSIAN
                 else CopulaModel.student_t(sigma, nu))
        return FitResult(model, float(np.sum(log_copula_density(model, u))))
    lo, hi, log_scale = _fit_ranges(family, d)

    def objective(theta: float) -> float:
        phi = math.exp(theta) if log_scale else theta
        if family is CopulaFamily.GUMBEL and log_scale:
            phi = 1.0 + math.exp(theta)
        try:
            model = _archimedean_model(family, phi)
        except ParameterError:
            return -np.inf
        with np.errstate(over="ignore", invalid="ignore"):
            ll = np.sum(log_copula_density(model, u))
        return float(ll) if np.isfinite(ll) else -np.inf

    if log_scale:
        span = (math.log(lo if family is not CopulaFamily.GUMBEL else 1e-6),
                math.log(hi if family is not CopulaFamily.GUMBEL else hi - 1.0))
        theta, ll = maximize_1d(objective, span[0], span[1], tol=1e-6)
        phi = 1.0 + math.exp(theta) if family is CopulaFamily.GUMBEL else math.exp(theta)
    else:
        phi, ll = maximize_1d(objective, lo, hi, tol=1e-6)
    if not np.isfinite(ll):
        raise FitError(f"{family.value} likelihood is degenerate on this sample")
    return FitResult(_archimedean_model(family, phi), float(ll))


def _repair_correlation(sigma: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(sigma)
    if vals[0] > 1e-6:
        return sigma
    vals = np.maximum(vals, 1e-6)
    fixed = (vecs * vals) @ vecs.T
    scale = np.sqrt(np.diag(fixed))
    return fixed / np.outer(scale, scale)


def select_best(library, data: np.ndarray, nu: int = 5) -> SelectionReport:
    """Fit every library family and keep the largest log-likelihood.

    Ties break toward the earlier library entry.  If every fit fails the
    product copula is returned and flagged as a fallback.
    """
    results: list[tuple[CopulaFamily, FitResult | None]] = []
    best: FitResult | None = None
    for family in library:
        try:
            res = fit_ml(family, data, nu=nu)
        except (FitError, ParameterError) as exc:
            log.debug("fit failed for %s: %s", family.value, exc)
            results.append((family, None))
            continue
        results.append((family, res))
        if best is None or res.loglik > best.loglik:
            best = res
    if best is None:
        log.warning("all copula fits failed; falling back to the product copula")
        return SelectionReport(FitResult(CopulaModel.product(), 0.0),
                               tuple(results), fallback=True)
    return SelectionReport(best, tuple(results))
