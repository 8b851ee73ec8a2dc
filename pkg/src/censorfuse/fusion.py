"""Decision statistics at the fusion center.

Five rules are built here: the exact copula GLRT on analog censored windows,
its quantized-data counterpart, the two noise-aided GLRTs that trade the
multidimensional censoring/cell integrals for one-dimensional surrogate
densities, and the independence-assumption baseline.

The likelihood of one time slot always has the shape

    prod(marginal densities of observed coordinates) * integral of the
    copula density over the box of unobserved coordinates,

where the box collects censoring intervals (analog) or quantizer cells
(quantized) mapped through the marginal CDFs into the unit cube.  The
integral is closed-form for the product and Archimedean families (signed
corner sums of generator derivatives), closed-form for Gaussian boxes up to
two dimensions (conditional rectangle probabilities), and Gauss-Legendre
tensor quadrature otherwise.  Window statistics group time slots by their
censoring pattern so the per-parameter work during fitting is pure array
arithmetic over cached transformed scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import ndtr, ndtri

from . import copulas as cop
from .censoring import CensoringScheme, no_send_mass, rho
from .copulas import CLAMP, CopulaFamily, CopulaModel, bvn_cdf
from .errors import DomainError
from .marginals import H0, H1, GaussianMarginal
from .numerics import Grid1D, gauss_legendre_01, grid_convolve, maximize_1d
from .quantization import (
    NoiseSpec,
    QuantizerSpec,
    compress,
    compressed_density,
    level_value,
    partition,
)

LIKELIHOOD_FLOOR = 1e-300
LOG_FLOOR = math.log(LIKELIHOOD_FLOOR)
DEFAULT_QUAD_NODES = 8
DEFAULT_FIT_TOL = 1e-3


# ---------------------------------------------------------------------------
# Sample containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sensor:
    """Everything the fusion center knows about one sensor."""

    marginal: GaussianMarginal
    scheme: CensoringScheme
    quantizer: QuantizerSpec | None = None


@dataclass(frozen=True)
class QuantizedMessage:
    """A transmitted level index, or an empty slot."""

    index: int | None

    @property
    def censored(self) -> bool:
        return self.index is None


QUANTIZED_CENSORED = QuantizedMessage(None)


@dataclass(frozen=True)
class FusionSample:
    """Messages from the N sensors plus the fusion center's own observation."""

    messages: tuple
    x0: float


@dataclass(frozen=True)
class FusionWindow:
    samples: tuple

    def __post_init__(self):
        if len(self.samples) < 1:
            raise DomainError("a decision window needs at least one sample")
        kinds = {type(m) for s in self.samples for m in s.messages}
        if len(kinds) > 1:
            raise DomainError("mixed analog and quantized messages in one window")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def quantized(self) -> bool:
        return isinstance(self.samples[0].messages[0], QuantizedMessage)


@dataclass(frozen=True)
class NoiseAidedSample:
    """Continuous surrogate vector after noise substitution."""

    z: tuple
    x0: float


@dataclass(frozen=True)
class NoiseAidedWindow:
    samples: tuple

    def __post_init__(self):
        if len(self.samples) < 1:
            raise DomainError("a decision window needs at least one sample")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True, eq=False)
class GlrtResult:
    """Decision statistic with the per-hypothesis winners and diagnostics.

    per_sample_loglik carries 'h1'/'h0' arrays (per-slot log-likelihood under
    the selected model of each hypothesis), the count of floored samples, and
    fallback flags set when every library fit failed for a hypothesis.
    """

    statistic: float
    selected_copula_h1: CopulaModel
    selected_copula_h0: CopulaModel
    per_sample_loglik: dict


# ---------------------------------------------------------------------------
# Surrogate (noise-aided) marginal models
# ---------------------------------------------------------------------------

def substitute_analog_noise(sample: FusionSample, schemes, rng: np.random.Generator
                            ) -> NoiseAidedSample:
    """Replace each censored slot by a uniform draw on its no-send interval."""
    out = []
    for msg, scheme in zip(sample.messages, schemes):
        if msg.censored:
            out.append(float(rng.uniform(scheme.t1, scheme.t2)))
        else:
            out.append(float(msg.value))
    return NoiseAidedSample(z=tuple(out), x0=sample.x0)


def substitute_quantized_noise(sample: FusionSample, specs, noise: NoiseSpec,
                               rng: np.random.Generator) -> NoiseAidedSample:
    """Dither quantized levels into continuous surrogates.

    Works in compressor coordinates: a transmitted level index becomes the
    compressed level value, a censored slot becomes the mid-hole level q/2,
    and independent noise is added to either.
    """
    out = []
    for msg, spec in zip(sample.messages, specs):
        if msg.censored:
            y = spec.q / 2.0
        else:
            y = compress(spec.scheme, spec.q, level_value(spec, msg.index))
        out.append(float(y + noise.sample(1, rng)[0]))
    return NoiseAidedSample(z=tuple(out), x0=sample.x0)


def z_density_analog(z, scheme: CensoringScheme, m: GaussianMarginal, h: int):
    """Density of a sent-or-substituted analog coordinate: the marginal
    outside the no-send interval, the flattened interval mass inside."""
    z_arr = np.asarray(z, dtype=float)
    width = scheme.t2 - scheme.t1
    if width <= 0.0:
        raise DomainError("degenerate no-send interval")
    inside = (z_arr >= scheme.t1) & (z_arr <= scheme.t2)
    flat = no_send_mass(scheme, m, h) / width
    out = np.where(inside, flat, m.pdf(z_arr, h))
    return float(out) if np.isscalar(z) else out


def z_cdf_analog(z, scheme: CensoringScheme, m: GaussianMarginal, h: int):
    """CDF companion of z_density_analog; continuous across the seams."""
    z_arr = np.asarray(z, dtype=float)
    width = scheme.t2 - scheme.t1
    if width <= 0.0:
        raise DomainError("degenerate no-send interval")
    below = m.cdf(np.minimum(z_arr, scheme.t1), h)
    ramp = no_send_mass(scheme, m, h) * np.clip(
        (z_arr - scheme.t1) / width, 0.0, 1.0)
    above = np.where(z_arr > scheme.t2,
                     m.cdf(np.maximum(z_arr, scheme.t2), h) - m.cdf(scheme.t2, h), 0.0)
    out = below + ramp + above
    return float(out) if np.isscalar(z) else out


@dataclass(frozen=True, eq=False)
class QuantizedZModel:
    """Grid density and CDF of the dithered quantizer output under one
    hypothesis: the compressed-input density blurred by the uniform
    quantization kernel and the Gaussian low-pass noise."""

    pdf_grid: Grid1D
    cdf_values: np.ndarray
    hypothesis: int

    def pdf(self, z):
        z_arr = np.asarray(z, dtype=float)
        out = self.pdf_grid.interp(z_arr)
        return float(out) if np.isscalar(z) else out

    def cdf(self, z):
        z_arr = np.asarray(z, dtype=float)
        out = np.interp(z_arr, self.pdf_grid.xs(), self.cdf_values,
                        left=0.0, right=1.0)
        return float(out) if np.isscalar(z) else out


def build_z_model(m: GaussianMarginal, spec: QuantizerSpec, noise: NoiseSpec,
                  h: int) -> QuantizedZModel:
    """Triple convolution f_Y * f_W * f_D on the shared uniform grid."""
    base = compressed_density(m, spec.scheme, spec.q, h)
    widrow = grid_convolve(base.grid, NoiseSpec.uniform(spec.q).density_grid(base.grid.dx))
    full = grid_convolve(widrow, noise.density_grid(base.grid.dx))
    cdf = full.cumulative()
    cdf = np.clip(cdf / cdf[-1], 0.0, 1.0)
    return QuantizedZModel(pdf_grid=full, cdf_values=cdf, hypothesis=h)


def z_density_quantized(z, spec: QuantizerSpec, m: GaussianMarginal,
                        noise: NoiseSpec, h: int):
    """Density of the dithered quantizer output at z (grid interpolation)."""
    return build_z_model(m, spec, noise, h).pdf(z)


def z_cdf_quantized(z, spec: QuantizerSpec, m: GaussianMarginal,
                    noise: NoiseSpec, h: int):
    return build_z_model(m, spec, noise, h).cdf(z)


# ---------------------------------------------------------------------------
# Pattern groups: per-hypothesis slot data with cached transforms
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class _Group:
    rows: np.ndarray          # window indices in this censoring pattern
    fixed_idx: np.ndarray     # copula coordinates observed exactly
    box_idx: np.ndarray       # copula coordinates integrated over boxes
    fixed_u: np.ndarray       # (n, m) pseudo-observations of fixed coords
    box_lo: np.ndarray        # (n, B)
    box_hi: np.ndarray        # (n, B)
    _cache: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.rows.size

    @property
    def n_boxes(self) -> int:
        return self.box_idx.size

    def scores(self, kind: str, nu: int) -> tuple:
        """Cached (z_fixed, z_lo, z_hi) under the normal or t transform."""
        key = (kind, nu)
        if key not in self._cache:
            f = ndtri if kind == "norm" else (lambda u: stats.t.ppf(u, df=nu))
            self._cache[key] = (f(self.fixed_u), f(self.box_lo), f(self.box_hi))
        return self._cache[key]

    def quad_nodes(self, kind: str, nu: int, n_nodes: int) -> tuple:
        """Cached full coordinate matrix over tensor quadrature nodes.

        Returns (coords, log_w) with coords (n * G^B, d) score-space points in
        copula coordinate order and log_w (n, G^B) log volume weights.
        """
        key = ("quad", kind, nu, n_nodes)
        if key not in self._cache:
            x, w = gauss_legendre_01(n_nodes)
            B = self.n_boxes
            grids = np.meshgrid(*([x] * B), indexing="ij")
            mix = np.stack([g.reshape(-1) for g in grids], axis=1)   # (G^B, B)
            wgrids = np.meshgrid(*([w] * B), indexing="ij")
            log_w_nodes = np.sum(np.log(np.stack(
                [g.reshape(-1) for g in wgrids], axis=1)), axis=1)   # (G^B,)
            span = self.box_hi - self.box_lo                          # (n, B)
            v = self.box_lo[:, None, :] + span[:, None, :] * mix[None, :, :]
            f = ndtri if kind == "norm" else (lambda u: stats.t.ppf(u, df=nu))
            z_fix = f(self.fixed_u)
            d = self.fixed_idx.size + B
            coords = np.empty((self.n, mix.shape[0], d))
            coords[:, :, self.fixed_idx] = z_fix[:, None, :]
            coords[:, :, self.box_idx] = f(np.clip(v, CLAMP, 1.0 - CLAMP))
            log_w = log_w_nodes[None, :] + np.sum(
                np.log(np.maximum(span, 1e-300)), axis=1)[:, None]
            self._cache[key] = (coords.reshape(-1, d), log_w)
        return self._cache[key]


def _clamp01(u):
    return np.clip(u, CLAMP, 1.0 - CLAMP)


def _analog_groups(window: FusionWindow, sensors, fc: GaussianMarginal, h: int
                   ) -> tuple[np.ndarray, list[_Group]]:
    """Fixed-coordinate base log-density per slot and the pattern groups."""
    n_sensors = len(sensors)
    L = len(window)
    d = n_sensors + 1
    base = np.zeros(L)
    patterns: dict[tuple, list[int]] = {}
    values = np.zeros((L, n_sensors))
    x0 = np.array([s.x0 for s in window.samples])
    for l, sample in enumerate(window.samples):
        key = []
        for n, msg in enumerate(sample.messages):
            if msg.censored:
                key.append(True)
            else:
                key.append(False)
                values[l, n] = msg.value
        patterns.setdefault(tuple(key), []).append(l)
    base += fc.logpdf(x0, h)
    groups = []
    for key, rows_list in patterns.items():
        rows = np.array(rows_list)
        cens = np.array(key)
        sent_idx = np.flatnonzero(~cens)
        fixed_idx = np.append(sent_idx, n_sensors)   # FC is the last coordinate
        box_idx = np.flatnonzero(cens)
        m_fix = fixed_idx.size
        fixed_u = np.empty((rows.size, m_fix))
        for j, n in enumerate(sent_idx):
            x = values[rows, n]
            base[rows] += sensors[n].marginal.logpdf(x, h)
            fixed_u[:, j] = sensors[n].marginal.cdf(x, h)
        fixed_u[:, -1] = fc.cdf(x0[rows], h)
        lo = np.empty((rows.size, box_idx.size))
        hi = np.empty_like(lo)
        for j, n in enumerate(box_idx):
            s = sensors[n].scheme
            lo[:, j] = sensors[n].marginal.cdf(s.t1, h)
            hi[:, j] = sensors[n].marginal.cdf(s.t2, h)
        groups.append(_Group(rows=rows, fixed_idx=fixed_idx, box_idx=box_idx,
                             fixed_u=_clamp01(fixed_u), box_lo=_clamp01(lo),
                             box_hi=_clamp01(hi)))
    return base, groups


def _cell_box_tables(sensors, h: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Unit-cube edges of every quantizer cell, per sensor, plus the censor
    box appended at position Ln+Un."""
    tables = []
    for sensor in sensors:
        spec = sensor.quantizer
        if spec is None:
            raise DomainError("quantized window requires per-sensor quantizers")
        lows, highs = [], []
        for i in spec.indices:
            lo, hi = partition(spec, i)
            lows.append(0.0 if not math.isfinite(lo) else sensor.marginal.cdf(lo, h))
            highs.append(1.0 if not math.isfinite(hi) else sensor.marginal.cdf(hi, h))
        lows.append(sensor.marginal.cdf(spec.scheme.t1, h))
        highs.append(sensor.marginal.cdf(spec.scheme.t2, h))
        tables.append((_clamp01(np.array(lows)), _clamp01(np.array(highs))))
    return tables


def _quantized_groups(window: FusionWindow, sensors, fc: GaussianMarginal, h: int
                      ) -> tuple[np.ndarray, list[_Group]]:
    """Quantized windows box every sensor coordinate; only the FC is fixed."""
    n_sensors = len(sensors)
    L = len(window)
    tables = _cell_box_tables(sensors, h)
    x0 = np.array([s.x0 for s in window.samples])
    base = fc.logpdf(x0, h)
    cell = np.empty((L, n_sensors), dtype=int)
    for l, sample in enumerate(window.samples):
        for n, msg in enumerate(sample.messages):
            spec = sensors[n].quantizer
            if msg.censored:
                cell[l, n] = spec.Ln + spec.Un
            else:
                if not (-spec.Ln <= msg.index < spec.Un):
                    raise DomainError(
                        f"level index {msg.index} outside [{-spec.Ln}, {spec.Un})")
                cell[l, n] = msg.index + spec.Ln
    lo = np.empty((L, n_sensors))
    hi = np.empty((L, n_sensors))
    for n in range(n_sensors):
        lo[:, n] = tables[n][0][cell[:, n]]
        hi[:, n] = tables[n][1][cell[:, n]]
    group = _Group(rows=np.arange(L),
                   fixed_idx=np.array([n_sensors]),
                   box_idx=np.arange(n_sensors),
                   fixed_u=_clamp01(fc.cdf(x0, h))[:, None],
                   box_lo=lo, box_hi=hi)
    return base, [group]


def _surrogate_groups(window: NoiseAidedWindow, z_pdfs, z_cdfs, fc: GaussianMarginal,
                      h: int) -> tuple[np.ndarray, list[_Group]]:
    """Noise-aided windows have no boxes: every coordinate is observed."""
    L = len(window)
    n_sensors = len(z_pdfs)
    z = np.array([s.z for s in window.samples])
    x0 = np.array([s.x0 for s in window.samples])
    base = fc.logpdf(x0, h)
    fixed_u = np.empty((L, n_sensors + 1))
    for n in range(n_sensors):
        with np.errstate(divide="ignore"):
            base += np.log(np.maximum(z_pdfs[n](z[:, n], h), LIKELIHOOD_FLOOR))
        fixed_u[:, n] = z_cdfs[n](z[:, n], h)
    fixed_u[:, -1] = fc.cdf(x0, h)
    group = _Group(rows=np.arange(L), fixed_idx=np.arange(n_sensors + 1),
                   box_idx=np.arange(0), fixed_u=_clamp01(fixed_u),
                   box_lo=np.zeros((L, 0)), box_hi=np.zeros((L, 0)))
    return base, [group]


# ---------------------------------------------------------------------------
# Per-family log-integral kernels
# ---------------------------------------------------------------------------

_CORNER_CACHE: dict[int, np.ndarray] = {}


def _corner_bits(b: int) -> np.ndarray:
    if b not in _CORNER_CACHE:
        idx = np.arange(2 ** b)
        _CORNER_CACHE[b] = ((idx[:, None] >> np.arange(b)[None, :]) & 1).astype(bool)
    return _CORNER_CACHE[b]


def _archimedean_group(group: _Group, family: CopulaFamily, phi: float) -> np.ndarray:
    """Closed-form log integral over the box coordinates via signed corner
    sums of the m-th generator derivative (m = number of fixed coordinates)."""
    m = group.fixed_idx.size
    s_fixed = np.sum(cop._psi(family, group.fixed_u, phi), axis=1)
    log_dpsi = np.sum(cop._log_neg_dpsi(family, group.fixed_u, phi), axis=1)
    B = group.n_boxes
    if B == 0:
        return cop._log_A_d(family, s_fixed, phi, m) + log_dpsi
    bits = _corner_bits(B)
    corners = np.where(bits[None, :, :], group.box_hi[:, None, :],
                       group.box_lo[:, None, :])
    s = s_fixed[:, None] + np.sum(cop._psi(family, corners, phi), axis=2)
    log_a = cop._log_A_d(family, s.reshape(-1), phi, m).reshape(group.n, -1)
    signs = np.where((B - bits.sum(axis=1)) % 2 == 0, 1.0, -1.0)
    peak = np.max(log_a, axis=1)
    safe = np.isfinite(peak)
    shifted = np.exp(log_a - np.where(safe, peak, 0.0)[:, None])
    inner = np.sum(shifted * signs[None, :], axis=1)
    with np.errstate(divide="ignore"):
        out = peak + np.log(np.maximum(inner, 1e-300)) + log_dpsi
    return np.where(safe, out, -np.inf)


def _product_group(group: _Group) -> np.ndarray:
    if group.n_boxes == 0:
        return np.zeros(group.n)
    return np.sum(np.log(np.maximum(group.box_hi - group.box_lo, 1e-300)), axis=1)


def _block_logdensity_gauss(z: np.ndarray, sigma_ff: np.ndarray) -> np.ndarray:
    chol = np.linalg.cholesky(sigma_ff)
    y = np.linalg.solve(chol, z.T)
    quad = np.sum(y * y, axis=0)
    return -np.sum(np.log(np.diag(chol))) - 0.5 * (quad - np.sum(z * z, axis=1))


def _gaussian_group(group: _Group, sigma: np.ndarray, quad_nodes: int) -> np.ndarray:
    """Gaussian kernel: block density of the fixed coordinates times the
    conditional rectangle probability of the boxed ones."""
    B = group.n_boxes
    zf, zlo, zhi = group.scores("norm", 0)
    f, b = group.fixed_idx, group.box_idx
    s_ff = sigma[np.ix_(f, f)]
    if B == 0:
        return _block_logdensity_gauss(zf, s_ff)
    if B > 2:
        return _quadrature_group(group, "norm", 0, quad_nodes,
                                 lambda zz: _elliptical_logdensity(zz, sigma, None))
    s_bf = sigma[np.ix_(b, f)]
    w = np.linalg.solve(s_ff, s_bf.T)                    # (m, B)
    cond_mean = zf @ w                                   # (n, B)
    s_cond = sigma[np.ix_(b, b)] - s_bf @ w
    sd = np.sqrt(np.diag(s_cond))
    block = _block_logdensity_gauss(zf, s_ff)
    a = (zlo - cond_mean) / sd
    c = (zhi - cond_mean) / sd
    if B == 1:
        p = ndtr(c[:, 0]) - ndtr(a[:, 0])
    else:
        r = s_cond[0, 1] / (sd[0] * sd[1])
        p = (bvn_cdf(c[:, 0], c[:, 1], r) - bvn_cdf(a[:, 0], c[:, 1], r)
             - bvn_cdf(c[:, 0], a[:, 1], r) + bvn_cdf(a[:, 0], a[:, 1], r))
    with np.errstate(divide="ignore"):
        return block + np.log(np.maximum(p, 1e-300))


def _block_logdensity_t(z: np.ndarray, sigma_ff: np.ndarray, nu: int) -> np.ndarray:
    from scipy.special import gammaln
    m = z.shape[1]
    chol = np.linalg.cholesky(sigma_ff)
    y = np.linalg.solve(chol, z.T)
    quad = np.sum(y * y, axis=0)
    # joint multivariate-t density over the standard-t marginal densities
    const = (gammaln((nu + m) / 2.0) + (m - 1) * gammaln(nu / 2.0)
             - m * gammaln((nu + 1) / 2.0) - np.sum(np.log(np.diag(chol))))
    return (const - 0.5 * (nu + m) * np.log1p(quad / nu)
            + 0.5 * (nu + 1) * np.sum(np.log1p(z * z / nu), axis=1))


def _student_group(group: _Group, sigma: np.ndarray, nu: int, quad_nodes: int
                   ) -> np.ndarray:
    B = group.n_boxes
    zf, zlo, zhi = group.scores("t", nu)
    f, b = group.fixed_idx, group.box_idx
    s_ff = sigma[np.ix_(f, f)]
    if B == 0:
        return _block_logdensity_t(zf, s_ff, nu)
    if B > 1:
        return _quadrature_group(group, "t", nu, quad_nodes,
                                 lambda zz: _elliptical_logdensity(zz, sigma, nu))
    m = f.size
    s_bf = sigma[np.ix_(b, f)]
    w = np.linalg.solve(s_ff, s_bf.T)
    cond_mean = (zf @ w)[:, 0]
    s_cond = float((sigma[np.ix_(b, b)] - s_bf @ w)[0, 0])
    chol = np.linalg.cholesky(s_ff)
    y = np.linalg.solve(chol, zf.T)
    quad_f = np.sum(y * y, axis=0)
    scale = np.sqrt(s_cond * (nu + quad_f) / (nu + m))
    p = (stats.t.cdf((zhi[:, 0] - cond_mean) / scale, df=nu + m)
         - stats.t.cdf((zlo[:, 0] - cond_mean) / scale, df=nu + m))
    with np.errstate(divide="ignore"):
        return _block_logdensity_t(zf, s_ff, nu) + np.log(np.maximum(p, 1e-300))


def _elliptical_logdensity(z: np.ndarray, sigma: np.ndarray, nu: int | None
                           ) -> np.ndarray:
    if nu is None:
        return _block_logdensity_gauss(z, sigma)
    return _block_logdensity_t(z, sigma, nu)


def _quadrature_group(group: _Group, kind: str, nu: int, n_nodes: int,
                      log_density) -> np.ndarray:
    """Generic tensor-quadrature fallback in pseudo-observation space."""
    coords, log_w = group.quad_nodes(kind, nu, n_nodes)
    log_c = log_density(coords).reshape(group.n, -1)
    total = log_c + log_w
    peak = np.max(total, axis=1)
    return peak + np.log(np.sum(np.exp(total - peak[:, None]), axis=1))


def _group_loglik(group: _Group, model: CopulaModel, quad_nodes: int, nu: int
                  ) -> np.ndarray:
    fam = model.family
    if fam is CopulaFamily.PRODUCT:
        return _product_group(group)
    if fam in cop.ARCHIMEDEAN:
        return _archimedean_group(group, fam, model.phi)
    if fam is CopulaFamily.GAUSSIAN:
        return _gaussian_group(group, model.sigma, quad_nodes)
    return _student_group(group, model.sigma, model.nu, quad_nodes)


def _window_loglik(groups, model: CopulaModel, L: int, quad_nodes: int, nu: int
                   ) -> np.ndarray:
    out = np.empty(L)
    for g in groups:
        out[g.rows] = _group_loglik(g, model, quad_nodes, nu)
    return out


# ---------------------------------------------------------------------------
# Profile fitting over the library
# ---------------------------------------------------------------------------

def _equicorr(rho: float, d: int) -> np.ndarray:
    s = np.full((d, d), rho)
    np.fill_diagonal(s, 1.0)
    return s


def _family_profile(groups, family: CopulaFamily, d: int, L: int,
                    quad_nodes: int, nu: int, fit_tol: float):
    """Maximize the window log-likelihood over the family's scalar parameter.

    Elliptical families use an equicorrelation matrix, matching the
    single-parameter fits of the Archimedean families.  Returns
    (model, total, per_sample) or None if the likelihood is degenerate.
    """
    def total_for(model: CopulaModel) -> tuple[float, np.ndarray]:
        with np.errstate(over="ignore", invalid="ignore"):
            per = _window_loglik(groups, model, L, quad_nodes, nu)
        per = np.where(np.isfinite(per), np.maximum(per, LOG_FLOOR), LOG_FLOOR)
        return float(np.sum(per)), per

    if family is CopulaFamily.PRODUCT:
        model = CopulaModel.product()
        tot, per = total_for(model)
        return model, tot, per

    if family in cop.ELLIPTICAL:
        lo = -1.0 / (d - 1) + 1e-3
        hi = 0.995

        def make(rho: float) -> CopulaModel:
            sig = _equicorr(rho, d)
            return (CopulaModel.gaussian(sig) if family is CopulaFamily.GAUSSIAN
                    else CopulaModel.student_t(sig, nu))

        rho_star, best = maximize_1d(lambda r: total_for(make(r))[0], lo, hi,
                                     tol=fit_tol)
        if not np.isfinite(best) or best <= L * LOG_FLOOR * 0.5:
            return None
        model = make(rho_star)
        tot, per = total_for(model)
        return model, tot, per

    lo, hi, log_scale = cop._fit_ranges(family, d)

    def phi_of(theta: float) -> float:
        if not log_scale:
            return theta
        if family is CopulaFamily.GUMBEL:
            return 1.0 + math.exp(theta)
        return math.exp(theta)

    if log_scale:
        span = ((math.log(1e-6), math.log(hi - 1.0))
                if family is CopulaFamily.GUMBEL else (math.log(lo), math.log(hi)))
    else:
        span = (lo, hi)
    theta_star, best = maximize_1d(lambda t: total_for(
        cop._archimedean_model(family, phi_of(t)))[0], span[0], span[1], tol=fit_tol)
    if not np.isfinite(best) or best <= L * LOG_FLOOR * 0.5:
        return None
    model = cop._archimedean_model(family, phi_of(theta_star))
    tot, per = total_for(model)
    return model, tot, per


def _select_over_library(groups, library, d: int, L: int, quad_nodes: int,
                         nu: int, fit_tol: float):
    """Best (model, total, per_sample, fallback) over the ordered library."""
    best = None
    for family in library:
        res = _family_profile(groups, family, d, L, quad_nodes, nu, fit_tol)
        if res is None:
            continue
        if best is None or res[1] > best[1]:
            best = res
    if best is None:
        model = CopulaModel.product()
        per = np.empty(L)
        for g in groups:
            per[g.rows] = _product_group(g)
        per = np.maximum(per, LOG_FLOOR)
        return model, float(np.sum(per)), per, True
    return best[0], best[1], best[2], False


# ---------------------------------------------------------------------------
# Public likelihood evaluators (single sample, arbitrary copula model)
# ---------------------------------------------------------------------------

def likelihood_analog(sample: FusionSample, model: CopulaModel, sensors,
                      fc_marginal: GaussianMarginal, h: int,
                      quad_nodes: int = 16) -> float:
    """Joint density of one analog slot under hypothesis h and the given
    copula: marginal densities of the sent values and the FC observation
    times the copula-density integral over the censored box."""
    window = FusionWindow(samples=(sample,))
    if window.quantized:
        raise DomainError("analog likelihood called on quantized messages")
    base, groups = _analog_groups(window, sensors, fc_marginal, h)
    ll = base[0] + _window_loglik(groups, model, 1, quad_nodes, model.nu)[0]
    return float(np.exp(max(ll, LOG_FLOOR)))


def likelihood_quantized(sample: FusionSample, model: CopulaModel, sensors,
                         fc_marginal: GaussianMarginal, h: int,
                         quad_nodes: int = 16) -> float:
    """Joint likelihood of one quantized slot: FC density times the copula
    mass of the product of quantizer cells (or censor intervals)."""
    window = FusionWindow(samples=(sample,))
    if not window.quantized:
        raise DomainError("quantized likelihood called on analog messages")
    base, groups = _quantized_groups(window, sensors, fc_marginal, h)
    ll = base[0] + _window_loglik(groups, model, 1, quad_nodes, model.nu)[0]
    return float(np.exp(max(ll, LOG_FLOOR)))


# ---------------------------------------------------------------------------
# Decision statistics
# ---------------------------------------------------------------------------

def independence_statistic(window: FusionWindow, sensors,
                           fc: GaussianMarginal) -> float:
    """Log likelihood ratio assembled as if all coordinates were independent:
    interval-mass ratios for censored slots, pointwise (or cell-mass) ratios
    for everything else, and the FC's own ratio."""
    total = 0.0
    quantized = window.quantized
    cell_ratio = {}
    if quantized:
        for n, sensor in enumerate(sensors):
            t1 = _cell_box_tables([sensor], H1)[0]
            t0 = _cell_box_tables([sensor], H0)[0]
            with np.errstate(divide="ignore"):
                cell_ratio[n] = (np.log(np.maximum(t1[1] - t1[0], 1e-300))
                                 - np.log(np.maximum(t0[1] - t0[0], 1e-300)))
    for sample in window.samples:
        for n, msg in enumerate(sample.messages):
            if msg.censored:
                total += math.log(rho(sensors[n].scheme, sensors[n].marginal))
            elif quantized:
                total += float(cell_ratio[n][msg.index + sensors[n].quantizer.Ln])
            else:
                total += sensors[n].marginal.log_likelihood_ratio(msg.value)
        total += fc.log_likelihood_ratio(sample.x0)
    return float(total)


def _glrt_from_groups(build, library, d: int, L: int, quad_nodes: int, nu: int,
                      fit_tol: float,
                      h0_model: CopulaModel | None = None) -> GlrtResult:
    """Shared GLRT assembly: build(h) -> (base, groups) per hypothesis.

    When h0_model is given the null side is evaluated at that fixed
    dependence model instead of being maximized over the library.  The
    free two-sided fit is blind to dependence that is present under both
    fits: ranks are preserved by the marginal transforms, so the null-side
    maximization recovers the same association and the ratio keeps only a
    systematically misleading residue.  Pinning the null to the known
    dependence (independence in the standard setup) restores the test.
    """
    per_h = {}
    models = {}
    fallbacks = {}
    floored = 0
    for h in (H1, H0):
        base, groups = build(h)
        if h == H0 and h0_model is not None:
            with np.errstate(over="ignore", invalid="ignore"):
                per_copula = _window_loglik(groups, h0_model, L, quad_nodes,
                                            h0_model.nu)
            per_copula = np.where(np.isfinite(per_copula),
                                  np.maximum(per_copula, LOG_FLOOR), LOG_FLOOR)
            model, fallback = h0_model, False
        else:
            model, _, per_copula, fallback = _select_over_library(
                groups, library, d, L, quad_nodes, nu, fit_tol)
        per = base + per_copula
        floored += int(np.sum(per_copula <= LOG_FLOOR))
        per_h[h] = per
        models[h] = model
        fallbacks[h] = fallback
    statistic = float(np.sum(per_h[H1]) - np.sum(per_h[H0]))
    return GlrtResult(
        statistic=statistic,
        selected_copula_h1=models[H1],
        selected_copula_h0=models[H0],
        per_sample_loglik={"h1": per_h[H1], "h0": per_h[H0], "floored": floored,
                           "fallback_h1": fallbacks[H1], "fallback_h0": fallbacks[H0]})


def glrt_analog(window: FusionWindow, library, sensors, fc: GaussianMarginal,
                quad_nodes: int = DEFAULT_QUAD_NODES, nu: int = 5,
                fit_tol: float = DEFAULT_FIT_TOL,
                h0_model: CopulaModel | None = None) -> GlrtResult:
    """Exact copula GLRT on an analog censored window: under each hypothesis
    the censored-data likelihood is maximized over the library families and
    their scalar dependence parameters.  Pass h0_model to pin the null side
    to a known dependence structure instead of fitting it."""
    if window.quantized:
        raise DomainError("analog GLRT called on quantized messages")
    d = len(sensors) + 1
    return _glrt_from_groups(
        lambda h: _analog_groups(window, sensors, fc, h),
        library, d, len(window), quad_nodes, nu, fit_tol, h0_model)


def glrt_quantized(window: FusionWindow, library, sensors, fc: GaussianMarginal,
                   quad_nodes: int = DEFAULT_QUAD_NODES, nu: int = 5,
                   fit_tol: float = DEFAULT_FIT_TOL,
                   h0_model: CopulaModel | None = None) -> GlrtResult:
    """Exact copula GLRT on quantized data: cell boxes for transmitting
    sensors, the censoring box for silent ones, FC coordinate fixed."""
    if not window.quantized:
        raise DomainError("quantized GLRT called on analog messages")
    d = len(sensors) + 1
    return _glrt_from_groups(
        lambda h: _quantized_groups(window, sensors, fc, h),
        library, d, len(window), quad_nodes, nu, fit_tol, h0_model)


def glrt_noise_analog(window: NoiseAidedWindow, library, sensors,
                      fc: GaussianMarginal, quad_nodes: int = DEFAULT_QUAD_NODES,
                      nu: int = 5, fit_tol: float = DEFAULT_FIT_TOL,
                      h0_model: CopulaModel | None = None) -> GlrtResult:
    """Noise-aided analog GLRT: the independence-form marginal term (interval
    masses flatten the censored slots) plus the maximized copula ratio on
    surrogate pseudo-observations. No multidimensional integrals anywhere."""
    z_pdfs = [(lambda z, h, s=s: z_density_analog(z, s.scheme, s.marginal, h))
              for s in sensors]
    z_cdfs = [(lambda z, h, s=s: z_cdf_analog(z, s.scheme, s.marginal, h))
              for s in sensors]
    d = len(sensors) + 1
    return _glrt_from_groups(
        lambda h: _surrogate_groups(window, z_pdfs, z_cdfs, fc, h),
        library, d, len(window), quad_nodes, nu, fit_tol, h0_model)


def glrt_noise_quantized(window: NoiseAidedWindow, library, sensors,
                         fc: GaussianMarginal, noise: NoiseSpec,
                         z_models: dict | None = None,
                         quad_nodes: int = DEFAULT_QUAD_NODES, nu: int = 5,
                         fit_tol: float = DEFAULT_FIT_TOL,
                         h0_model: CopulaModel | None = None) -> GlrtResult:
    """Noise-aided quantized GLRT: marginal ratios of the dithered-output
    densities plus the maximized copula ratio, structurally identical to the
    analog noise path with different Z-marginals.

    z_models may carry prebuilt {(sensor_index, hypothesis): QuantizedZModel}
    so repeated windows share the convolution grids."""
    if z_models is None:
        z_models = {}
        for n, s in enumerate(sensors):
            for h in (H0, H1):
                z_models[(n, h)] = build_z_model(s.marginal, s.quantizer, noise, h)
    z_pdfs = [(lambda z, h, n=n: z_models[(n, h)].pdf(z)) for n in range(len(sensors))]
    z_cdfs = [(lambda z, h, n=n: z_models[(n, h)].cdf(z)) for n in range(len(sensors))]
    d = len(sensors) + 1
    return _glrt_from_groups(
        lambda h: _surrogate_groups(window, z_pdfs, z_cdfs, fc, h),
        library, d, len(window), quad_nodes, nu, fit_tol, h0_model)
