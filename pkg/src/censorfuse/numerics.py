"""Shared numerical kernels: box quadrature, 1-D search, grid densities, quantiles.

Everything here is deterministic given its inputs.  The quasi Monte Carlo path
uses a scrambled Sobol sequence with a seed carried inside the quadrature spec,
so repeated calls reproduce bit-identical values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize_scalar
from scipy.stats import qmc

from .errors import DomainError, IntegrationError

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to the unit interval."""
    if n < 2:
        raise DomainError("need at least 2 quadrature nodes")
    if n not in _GL_CACHE:
        x, w = leggauss(n)
        _GL_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[n]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by lower and upper corners of equal length."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or len(self.lo) == 0:
            raise DomainError("box corners must be non-empty and of equal length")
        for a, b in zip(self.lo, self.hi):
            if not (np.isfinite(a) and np.isfinite(b)) or a > b:
                raise DomainError(f"invalid box edge [{a}, {b}]")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature configuration for integrate_box.

    method "auto" picks the tensor Gauss-Legendre rule up to dimension 3 and
    the scrambled Sobol rule beyond; "tensor" and "qmc" force one of the two.
    """

    method: str = "auto"
    nodes_per_dim: int = 16
    qmc_points: int = 2 ** 14
    qmc_seed: int = 20147

    def __post_init__(self):
        if self.method not in ("auto", "tensor", "qmc"):
            raise DomainError(f"unknown quadrature method {self.method!r}")
        if self.nodes_per_dim < 4:
            raise DomainError("tensor rule needs at least 4 nodes per dimension")
        if self.qmc_points < 1024:
            raise DomainError("qmc rule needs at least 1024 points")


DEFAULT_QUAD = QuadratureSpec()


def tensor_nodes(box: Box, nodes_per_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product Gauss-Legendre nodes over a box.

    Returns (points, weights) with points of shape (nodes_per_dim**d, d).
    """
    x01, w01 = gauss_legendre_01(nodes_per_dim)
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    axes = [lo[i] + (hi[i] - lo[i]) * x01 for i in range(box.dim)]
    waxes = [(hi[i] - lo[i]) * w01 for i in range(box.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    wmesh = np.meshgrid(*waxes, indexing="ij")
    weights = np.ones(points.shape[0])
    for wm in wmesh:
        weights = weights * wm.reshape(-1)
    return points, weights


def integrate_box(f: Callable[[np.ndarray], np.ndarray], box: Box,
                  spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Integrate a vectorized integrand f over an axis-aligned box.

    f receives an (n, d) array of points and must return n values.  The
    tensor rule is used for d <= 3 under "auto"; higher dimensions switch to
    a scrambled Sobol estimate seeded from the QuadratureSpec for
    reproducibility.
    """
    method = spec.method
    if method == "auto":
        method = "tensor" if box.dim <= 3 else "qmc"
    if method == "tensor":
        points, weights = tensor_nodes(box, spec.nodes_per_dim)
        vals = np.asarray(f(points), dtype=float)
        _check_finite(vals, points)
        return float(np.dot(weights, vals))
    sampler = qmc.Sobol(d=box.dim, scramble=True, seed=spec.qmc_seed)
    u = sampler.random(spec.qmc_points)
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    points = lo + (hi - lo) * u
    vals = np.asarray(f(points), dtype=float)
    _check_finite(vals, points)
    return float(np.mean(vals) * box.volume)


def _check_finite(vals: np.ndarray, points: np.ndarray):
    bad = ~np.isfinite(vals)
    if np.any(bad):
        where = points[np.argmax(bad)]
        raise IntegrationError(f"non-finite integrand value at {where.tolist()}")


def maximize_1d(f: Callable[[float], float], lo: float, hi: float,
                tol: float = 1e-6, max_iter: int = 200) -> tuple[float, float]:
    """Maximize a scalar function on [lo, hi].

    A nine-point pre-scan picks the most promising bracket (a hedge against
    multi-modal objectives), then a bounded golden-section/parabolic refinement
    runs inside it.  A flat pre-scan short-circuits to the interval midpoint.
    Returns (argmax, max).
    """
    if not (hi > lo):
        raise DomainError(f"empty search interval [{lo}, {hi}]")
    xs = np.linspace(lo, hi, 9)
    vals = np.array([f(x) for x in xs], dtype=float)
    if np.all(vals == vals[0]):
        mid = 0.5 * (lo + hi)
        return mid, float(f(mid))
    i = int(np.argmax(vals))
    blo = xs[max(i - 1, 0)]
    bhi = xs[min(i + 1, len(xs) - 1)]
    res = minimize_scalar(lambda x: -f(x), bounds=(blo, bhi), method="bounded",
                          options={"xatol": tol, "maxiter": max_iter})
    best_x, best_v = float(xs[i]), float(vals[i])
    if np.isfinite(res.fun) and -res.fun >= best_v:
        best_x, best_v = float(res.x), float(-res.fun)
    return best_x, best_v


@dataclass(frozen=True)
class Grid1D:
    """Uniformly sampled function on x0 + k*dx, k = 0..len(values)-1."""

    x0: float
    dx: float
    values: np.ndarray

    def __post_init__(self):
        if self.dx <= 0:
            raise DomainError("grid step must be positive")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def xs(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.values.size)

    def mass(self) -> float:
        """Riemann sum; equals the trapezoid rule when the ends decay to zero."""
        return float(np.sum(self.values) * self.dx)

    def interp(self, x, left: float = 0.0, right: float = 0.0) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.xs(), self.values,
                         left=left, right=right)

    def cumulative(self) -> np.ndarray:
        """Trapezoid cumulative integral evaluated at the grid nodes."""
        v = self.values
        inner = 0.5 * (v[1:] + v[:-1]) * self.dx
        return np.concatenate([[0.0], np.cumsum(inner)])

    def interp_cdf(self, x) -> np.ndarray:
        cum = self.cumulative()
        return np.interp(np.asarray(x, dtype=float), self.xs(), cum,
                         left=0.0, right=cum[-1])


def grid_convolve(a: Grid1D, b: Grid1D) -> Grid1D:
    """Density convolution of two grids sharing the same step.

    The discrete convolution is scaled by dx so that mass(a * b) equals
    mass(a) x mass(b) exactly (up to roundoff).
    """
    if abs(a.dx - b.dx) > 1e-12 * max(a.dx, b.dx):
        raise DomainError(f"mismatched grid steps {a.dx} vs {b.dx}")
    vals = np.convolve(a.values, b.values) * a.dx
    return Grid1D(a.x0 + b.x0, a.dx, vals)


def empirical_quantile(xs: Sequence[float] | np.ndarray, p: float) -> float:
    """Order-statistic quantile with the conservative 'higher' rule.

    Used for threshold calibration: the returned value is an actual sample
    point at or above the nominal quantile, so the realized false-alarm rate
    of a strict > comparison never exceeds the target.
    """
    arr = np.asarray(xs, dtype=float)
    if arr.size == 0:
        raise DomainError("cannot take a quantile of an empty sample")
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"quantile level must be in [0, 1], got {p}")
    return float(np.quantile(arr, p, method="higher"))
