"""Finite-range uniform quantization with a censoring hole, the equivalent
piecewise-linear compressor, and the additive noise model of quantization
(uniform kernel plus an optional Gaussian low-pass stage) with
characteristic-function diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .censoring import CensoringScheme
from .errors import DomainError, ResolutionError
from .marginals import H0, H1, GaussianMarginal
from .numerics import Grid1D, grid_convolve

GRID_POINTS_PER_STEP = 50  # default density resolution: delta = q / 50
SUPPORT_SIGMAS = 8.0


@dataclass(frozen=True)
class QuantizerSpec:
    """Uniform step quantizer with Ln lower and Un upper levels around the
    no-send hole [t1, t2]; level indices run from -Ln to Un-1."""

    q: float
    Ln: int
    Un: int
    scheme: CensoringScheme

    def __post_init__(self):
        if not (self.q > 0.0 and np.isfinite(self.q)):
            raise DomainError(f"step must be positive, got {self.q}")
        if self.Ln < 1 or self.Un < 1:
            raise DomainError("need at least one level on each side of the hole")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.Ln, self.Un)


def level_value(spec: QuantizerSpec, i) -> np.ndarray | float:
    """Reproduction value of level i: interval midpoints offset from the
    nearest censoring limit."""
    i_arr = np.asarray(i)
    if np.any(i_arr < -spec.Ln) or np.any(i_arr > spec.Un - 1):
        raise DomainError(f"level index outside [{-spec.Ln}, {spec.Un - 1}]")
    base = np.where(i_arr < 0, spec.scheme.t1, spec.scheme.t2)
    out = base + i_arr * spec.q + spec.q / 2.0
    return float(out) if np.isscalar(i) else out


def levels(spec: QuantizerSpec) -> np.ndarray:
    return level_value(spec, spec.indices)


def design_quantizer(m: GaussianMarginal, scheme: CensoringScheme, q: float,
                     span_sigmas: float = 5.0, max_saturation: float = 1e-5) -> QuantizerSpec:
    """Pick Ln and Un so the interior cells cover mean +- span_sigmas under
    both hypotheses, then verify the saturation mass is negligible."""
    lo_needed = min(m.mean(H0), m.mean(H1)) - span_sigmas * m.sigma
    hi_needed = max(m.mean(H0), m.mean(H1)) + span_sigmas * m.sigma
    ln = max(1, int(math.ceil((scheme.t1 - lo_needed) / q)) + 1)
    un = max(1, int(math.ceil((hi_needed - scheme.t2) / q)) + 1)
    spec = QuantizerSpec(q=float(q), Ln=ln, Un=un, scheme=scheme)
    sat = max(_saturation_mass(spec, m, H0), _saturation_mass(spec, m, H1))
    if sat > max_saturation:
        raise DomainError(
            f"saturation mass {sat:.2e} exceeds {max_saturation:.0e}; widen the span")
    return spec


def _saturation_mass(spec: QuantizerSpec, m: GaussianMarginal, h: int) -> float:
    lo_edge = spec.scheme.t1 - (spec.Ln - 1) * spec.q
    hi_edge = spec.scheme.t2 + (spec.Un - 1) * spec.q
    return float(m.cdf(lo_edge, h) + (1.0 - m.cdf(hi_edge, h)))


def quantize(spec: QuantizerSpec, x):
    """Map sent amplitudes to (level_index, level_value).

    Lower-zone cells are closed on the left, upper-zone cells on the right;
    inputs beyond the extreme interior edges saturate to the end levels.
    Strictly censored inputs (inside the open no-send interval) are a
    contract violation.
    """
    x_arr = np.asarray(x, dtype=float)
    t1, t2, q = spec.scheme.t1, spec.scheme.t2, spec.q
    inside = (x_arr > t1) & (x_arr < t2)
    if np.any(inside):
        bad = np.atleast_1d(x_arr)[np.atleast_1d(inside)][0]
        raise DomainError(f"input {bad} lies inside the no-send interval ({t1}, {t2})")
    low = x_arr <= t1
    i_low = np.minimum(np.floor((x_arr - t1) / q), -1.0)
    i_high = np.maximum(np.ceil((x_arr - t2) / q) - 1.0, 0.0)
    idx = np.clip(np.where(low, i_low, i_high), -spec.Ln, spec.Un - 1).astype(int)
    vals = level_value(spec, idx) if idx.ndim else float(level_value(spec, int(idx)))
    if np.isscalar(x) or x_arr.ndim == 0:
        return int(idx), float(vals)
    return idx, vals


def partition(spec: QuantizerSpec, i: int) -> tuple[float, float]:
    """Input interval mapped to level i.

    Lower cells are [lo, hi), upper cells (lo, hi]; the two extreme cells
    absorb the saturation tails and are half-infinite.
    """
    if i < -spec.Ln or i > spec.Un - 1:
        raise DomainError(f"level index {i} outside [{-spec.Ln}, {spec.Un - 1}]")
    t1, t2, q = spec.scheme.t1, spec.scheme.t2, spec.q
    if i < 0:
        lo = t1 + i * q if i > -spec.Ln else -math.inf
        return lo, t1 + (i + 1) * q
    hi = t2 + (i + 1) * q if i < spec.Un - 1 else math.inf
    return t2 + i * q, hi


def partition_masses(spec: QuantizerSpec, m: GaussianMarginal, h: int) -> np.ndarray:
    """Probability of each quantizer cell under hypothesis h, in index order."""
    out = np.empty(spec.Ln + spec.Un)
    for pos, i in enumerate(spec.indices):
        lo, hi = partition(spec, i)
        hi_c = m.cdf(hi, h) if math.isfinite(hi) else 1.0
        lo_c = m.cdf(lo, h) if math.isfinite(lo) else 0.0
        out[pos] = hi_c - lo_c
    return out


# ---------------------------------------------------------------------------
# Piecewise-linear compressor
# ---------------------------------------------------------------------------

def compress(scheme: CensoringScheme, q: float, x):
    """Continuous strictly increasing map squeezing the no-send interval onto
    [0, q]; outside segments keep unit slope (coordinates are taken relative
    to t1, which the reference setup places at zero)."""
    if scheme.t2 <= scheme.t1:
        raise DomainError("compressor is degenerate when t2 <= t1")
    x_arr = np.asarray(x, dtype=float)
    t1, t2 = scheme.t1, scheme.t2
    out = np.where(
        x_arr < t1, x_arr - t1,
        np.where(x_arr <= t2, q * (x_arr - t1) / (t2 - t1), x_arr - t2 + q))
    return float(out) if np.isscalar(x) else out


def decompress(scheme: CensoringScheme, q: float, y):
    """Inverse of compress."""
    if scheme.t2 <= scheme.t1:
        raise DomainError("compressor is degenerate when t2 <= t1")
    y_arr = np.asarray(y, dtype=float)
    t1, t2 = scheme.t1, scheme.t2
    out = np.where(
        y_arr < 0.0, y_arr + t1,
        np.where(y_arr <= q, t1 + y_arr * (t2 - t1) / q, y_arr - q + t2))
    return float(out) if np.isscalar(y) else out


@dataclass(frozen=True)
class CompressedDensity:
    """Density of the compressor output on a uniform grid, for one hypothesis."""

    grid: Grid1D
    hypothesis: int

    @property
    def values(self) -> np.ndarray:
        return self.grid.values

    def mass(self) -> float:
        return self.grid.mass()


def _default_grid_points(m: GaussianMarginal, scheme: CensoringScheme, q: float,
                         delta: float) -> np.ndarray:
    lo = compress(scheme, q, min(m.mean(H0), m.mean(H1)) - SUPPORT_SIGMAS * m.sigma)
    hi = compress(scheme, q, max(m.mean(H0), m.mean(H1)) + SUPPORT_SIGMAS * m.sigma)
    n = int(math.ceil((hi - lo) / delta)) + 1
    return lo + delta * np.arange(n)


def compressed_density(m: GaussianMarginal, scheme: CensoringScheme, q: float,
                       h: int, grid: np.ndarray | None = None) -> CompressedDensity:
    """Density of Y = g(X) under h via exact cell averages.

    Each grid value is the probability of the surrounding half-step cell
    divided by the step, so the Riemann mass telescopes to the exact
    probability of the covered range; this stays correct across the slope
    breaks at 0 and q where the pointwise density jumps.
    """
    if grid is None:
        pts = _default_grid_points(m, scheme, q, q / GRID_POINTS_PER_STEP)
    else:
        pts = np.asarray(grid, dtype=float)
        steps = np.diff(pts)
        if pts.size < 8 or not np.allclose(steps, steps[0], rtol=1e-9):
            raise DomainError("density grid must be uniform with several points")
    dx = pts[1] - pts[0]
    edges_hi = m.cdf(decompress(scheme, q, pts + dx / 2.0), h)
    edges_lo = m.cdf(decompress(scheme, q, pts - dx / 2.0), h)
    vals = (edges_hi - edges_lo) / dx
    return CompressedDensity(Grid1D(x0=float(pts[0]), dx=float(dx), values=vals), h)


def uniform_kernel(q: float, dx: float) -> Grid1D:
    """Quantization noise kernel: uniform on [-q/2, q/2] with height 1/q.

    Endpoint samples carry half weight so the Riemann mass is exactly one and
    grid convolutions conserve probability."""
    half_steps = int(round(q / (2.0 * dx)))
    if half_steps < 1 or abs(half_steps * 2 * dx - q) > 1e-9 * q:
        raise DomainError(f"grid step {dx} does not tile the kernel width {q}")
    vals = np.full(2 * half_steps + 1, 1.0 / q)
    vals[0] *= 0.5
    vals[-1] *= 0.5
    return Grid1D(x0=-half_steps * dx, dx=dx, values=vals)


def widrow_output_density(m: GaussianMarginal, scheme: CensoringScheme, q: float,
                          h: int, grid: np.ndarray | None = None) -> CompressedDensity:
    """Density of Y + W: the compressor output blurred by the uniform
    quantization-noise kernel, the continuous factor of the sampled PDF view
    of quantization."""
    base = compressed_density(m, scheme, q, h, grid)
    kernel = uniform_kernel(q, base.grid.dx)
    return CompressedDensity(grid_convolve(base.grid, kernel), h)


# ---------------------------------------------------------------------------
# Additive noise specifications
# ---------------------------------------------------------------------------

class NoiseKind(str, Enum):
    UNIFORM_WIDROW = "uniform_widrow"
    GAUSSIAN_LPF = "gaussian_lpf"


@dataclass(frozen=True)
class NoiseSpec:
    """Additive dither: the uniform quantization-noise surrogate, or the
    Gaussian low-pass stage with standard deviation sigma_d."""

    kind: NoiseKind
    param: float

    def __post_init__(self):
        if not (self.param > 0.0 and np.isfinite(self.param)):
            raise DomainError(f"noise parameter must be positive, got {self.param}")

    @classmethod
    def uniform(cls, q: float) -> "NoiseSpec":
        return cls(NoiseKind.UNIFORM_WIDROW, float(q))

    @classmethod
    def gaussian_lpf(cls, sigma_d: float) -> "NoiseSpec":
        return cls(NoiseKind.GAUSSIAN_LPF, float(sigma_d))

    @property
    def variance(self) -> float:
        if self.kind is NoiseKind.UNIFORM_WIDROW:
            return self.param ** 2 / 12.0
        return self.param ** 2

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind is NoiseKind.UNIFORM_WIDROW:
            return rng.uniform(-self.param / 2.0, self.param / 2.0, size=n)
        return rng.normal(0.0, self.param, size=n)

    def density_grid(self, dx: float) -> Grid1D:
        if self.kind is NoiseKind.UNIFORM_WIDROW:
            return uniform_kernel(self.param, dx)
        half = int(math.ceil(SUPPORT_SIGMAS * self.param / dx))
        xs = dx * np.arange(-half, half + 1)
        vals = np.exp(-0.5 * (xs / self.param) ** 2) / (self.param * math.sqrt(2 * math.pi))
        return Grid1D(x0=float(xs[0]), dx=dx, values=vals)


# ---------------------------------------------------------------------------
# Characteristic-function diagnostics
# ---------------------------------------------------------------------------

def characteristic_function(density, upsilon_grid) -> np.ndarray:
    """|E exp(j*upsilon*X)| on a frequency grid.

    Accepts a GaussianMarginal (closed form; magnitude is hypothesis-free) or
    a grid density, in which case the Fourier integral is evaluated by the
    trapezoid rule.  The grid must resolve the fastest requested oscillation.
    """
    ups = np.atleast_1d(np.asarray(upsilon_grid, dtype=float))
    if isinstance(density, GaussianMarginal):
        return np.exp(-0.5 * (ups * density.sigma) ** 2)
    grid = density.grid if isinstance(density, CompressedDensity) else density
    if grid.dx * np.max(np.abs(ups)) >= 0.5:
        raise ResolutionError(
            f"grid step {grid.dx} cannot resolve |upsilon| up to {np.max(np.abs(ups))}")
    xs = grid.xs()
    weights = np.full(xs.size, grid.dx)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    phase = np.exp(1j * ups[:, None] * xs[None, :])
    return np.abs(phase @ (grid.values * weights))
