import math

import numpy as np
import pytest

from censorfuse import H0, H1, GaussianMarginal
from censorfuse.censoring import CensoringScheme, scheme_from_rate
from censorfuse.errors import DomainError, ResolutionError
from censorfuse.quantization import (
    CompressedDensity,
    NoiseSpec,
    QuantizerSpec,
    characteristic_function,
    compress,
    compressed_density,
    decompress,
    design_quantizer,
    level_value,
    levels,
    partition,
    partition_masses,
    quantize,
    uniform_kernel,
    widrow_output_density,
)

M = GaussianMarginal(mu0=0.0, mu1=0.5, sigma=3.0)
SCHEME = scheme_from_rate(M, 0.0, 0.35)  # t2 = 3.10930...
T2 = SCHEME.t2


@pytest.fixture
def spec():
    return design_quantizer(M, SCHEME, q=1.0)


def test_design_covers_both_hypotheses(spec):
    lo, _ = partition(spec, -spec.Ln + 1)
    _, hi = partition(spec, spec.Un - 2)
    assert lo <= -15.0 and hi >= 15.5
    for h in (H0, H1):
        masses = partition_masses(spec, M, h)
        assert masses[0] + masses[-1] < 1e-5  # saturation cells


def test_quantize_reference_points(spec):
    i, k = quantize(spec, T2 + 0.4)
    assert i == 0
    assert k == pytest.approx(T2 + 0.5, abs=1e-12)
    i, k = quantize(spec, -0.3)
    assert i == -1
    assert k == pytest.approx(-0.5, abs=1e-12)
    # saturation in both directions
    i, _ = quantize(spec, -500.0)
    assert i == -spec.Ln
    i, _ = quantize(spec, 500.0)
    assert i == spec.Un - 1


def test_quantize_rejects_censored_inputs(spec):
    with pytest.raises(DomainError):
        quantize(spec, 1.5)
    # the closed endpoints belong to the adjacent cells, not to the error path
    i_lo, _ = quantize(spec, 0.0)
    i_hi, _ = quantize(spec, T2)
    assert (i_lo, i_hi) == (-1, 0)


def test_quantize_idempotent_on_representatives(spec):
    for i in range(-spec.Ln, spec.Un):
        k = level_value(spec, i)
        i_again, k_again = quantize(spec, k)
        assert i_again == i
        assert k_again == k


def test_quantize_is_monotone(spec):
    xs = np.sort(np.concatenate([np.linspace(-20, -1e-9, 300),
                                 np.linspace(T2 + 1e-9, 22, 300)]))
    _, vals = quantize(spec, xs)
    assert np.all(np.diff(vals) >= 0)


def test_partition_reference_cells(spec):
    assert partition(spec, 0) == pytest.approx((T2, T2 + 1.0))
    assert partition(spec, -1) == pytest.approx((-1.0, 0.0))
    assert partition(spec, -spec.Ln)[0] == -math.inf
    assert partition(spec, spec.Un - 1)[1] == math.inf
    with pytest.raises(DomainError):
        partition(spec, spec.Un)


def test_partition_masses_complete_probability(spec):
    for h in (H0, H1):
        total = partition_masses(spec, M, h).sum()
        hole = M.cdf(T2, h) - M.cdf(0.0, h)
        assert total + hole == pytest.approx(1.0, abs=1e-10)


def test_level_indices_shift_immune(spec):
    b = 2.7
    shifted_scheme = CensoringScheme(t1=SCHEME.t1 + b, t2=SCHEME.t2 + b, beta=SCHEME.beta)
    shifted = QuantizerSpec(q=spec.q, Ln=spec.Ln, Un=spec.Un, scheme=shifted_scheme)
    xs = np.concatenate([np.linspace(-18, -1e-6, 200), np.linspace(T2 + 1e-6, 20, 200)])
    idx, _ = quantize(spec, xs)
    idx_shifted, _ = quantize(shifted, xs + b)
    np.testing.assert_array_equal(idx, idx_shifted)


# ---------------------------------------------------------------------------
# Compressor
# ---------------------------------------------------------------------------

def test_compress_branches():
    q = 1.0
    assert compress(SCHEME, q, 0.0) == 0.0
    assert compress(SCHEME, q, T2) == pytest.approx(q, abs=1e-12)
    assert compress(SCHEME, q, T2 + 1.0) == pytest.approx(q + 1.0, abs=1e-12)
    assert compress(SCHEME, q, -2.0) == -2.0
    assert compress(SCHEME, q, T2 / 2.0) == pytest.approx(q / 2.0, abs=1e-12)


def test_compress_monotone_and_invertible():
    q = 0.5
    xs = np.linspace(-15.0, 18.0, 4001)
    ys = compress(SCHEME, q, xs)
    assert np.all(np.diff(ys) > 0)
    back = decompress(SCHEME, q, ys)
    np.testing.assert_allclose(back, xs, atol=1e-10)


def test_compress_degenerate_interval():
    flat = CensoringScheme(t1=1.0, t2=1.0, beta=0.3)
    with pytest.raises(DomainError):
        compress(flat, 1.0, 0.5)


def test_compressed_density_identity_when_t2_equals_q():
    # with t1=0 and t2=q the compressor is the identity map
    ident = CensoringScheme(t1=0.0, t2=1.0, beta=0.25)
    dens = compressed_density(M, ident, 1.0, H0)
    xs = dens.grid.xs()
    keep = np.abs(xs) < 12.0
    np.testing.assert_allclose(dens.values[keep], M.pdf(xs[keep], H0), atol=2e-6)


def test_compressed_density_mass_and_spot_value():
    for q in (1.0, 0.5):
        for h in (H0, H1):
            dens = compressed_density(M, SCHEME, q, h)
            assert dens.mass() == pytest.approx(1.0, abs=1e-4)
        spot = compressed_density(M, SCHEME, q, H0).grid.interp(q / 2.0)
        want = {1.0: 0.36152379428304448, 0.5: 0.72304758856608895}[q]
        assert spot == pytest.approx(want, rel=2e-4)


def test_widrow_output_density_mass_and_mean():
    dens = widrow_output_density(M, SCHEME, 1.0, H0)
    assert dens.mass() == pytest.approx(1.0, abs=1e-4)
    base = compressed_density(M, SCHEME, 1.0, H0)
    mean_out = np.sum(dens.grid.xs() * dens.values) * dens.grid.dx
    mean_base = np.sum(base.grid.xs() * base.values) * base.grid.dx
    assert mean_out == pytest.approx(mean_base, abs=1e-6)


def test_uniform_kernel_shape():
    k = uniform_kernel(1.0, 0.02)
    assert k.mass() == pytest.approx(1.0, rel=1e-12)
    assert k.values.max() == pytest.approx(1.0, rel=1e-12)
    assert k.x0 == pytest.approx(-0.5)
    with pytest.raises(DomainError):
        uniform_kernel(1.0, 0.3)  # step does not tile the width


def test_widrow_moment_theorem():
    # moments of the noise model: adding W and D leaves the mean unchanged
    # and adds q^2/12 + sigma_d^2 of variance
    rng = np.random.default_rng(77)
    n = 1_000_000
    q, sigma_d = 1.0, 1.0
    x = M.sample(n, H0, rng)
    y = compress(SCHEME, q, x)
    z = y + NoiseSpec.uniform(q).sample(n, rng) + NoiseSpec.gaussian_lpf(sigma_d).sample(n, rng)
    se = np.std(z) / math.sqrt(n)
    assert abs(np.mean(z) - np.mean(y)) < 3 * se
    var_want = np.var(y) + q ** 2 / 12.0 + sigma_d ** 2
    assert np.var(z) == pytest.approx(var_want, rel=0.01)


def test_noise_spec_validation():
    with pytest.raises(DomainError):
        NoiseSpec.uniform(0.0)
    with pytest.raises(DomainError):
        NoiseSpec.gaussian_lpf(-1.0)
    assert NoiseSpec.uniform(1.0).variance == pytest.approx(1.0 / 12.0)
    assert NoiseSpec.gaussian_lpf(2.0).variance == pytest.approx(4.0)


def test_gaussian_lpf_density_grid():
    g = NoiseSpec.gaussian_lpf(1.0).density_grid(0.02)
    assert g.mass() == pytest.approx(1.0, abs=1e-6)
    assert g.interp(0.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi), rel=1e-6)


# ---------------------------------------------------------------------------
# Characteristic functions
# ---------------------------------------------------------------------------

def test_cf_gaussian_closed_form():
    ups = np.linspace(0.0, 2.0, 9)
    got = characteristic_function(M, ups)
    np.testing.assert_allclose(got, np.exp(-0.5 * (3.0 * ups) ** 2), rtol=1e-12)


def test_cf_of_identity_compression_matches_gaussian():
    ident = CensoringScheme(t1=0.0, t2=1.0, beta=0.25)
    dens = compressed_density(M, ident, 1.0, H0)
    ups = np.linspace(0.0, 3.0, 13)
    got = characteristic_function(dens, ups)
    np.testing.assert_allclose(got, np.exp(-0.5 * (3.0 * ups) ** 2), atol=2e-5)
    assert got[0] == pytest.approx(1.0, abs=1e-4)


def test_cf_resolution_guard():
    dens = compressed_density(M, SCHEME, 1.0, H0)
    with pytest.raises(ResolutionError):
        characteristic_function(dens, np.array([40.0]))


def test_cf_widrow_suppresses_high_frequencies():
    # blurring by the uniform kernel multiplies the CF by sinc(q*ups/2), which
    # vanishes at ups = 2*pi/q
    q = 0.5
    base = compressed_density(M, SCHEME, q, H0)
    blurred = widrow_output_density(M, SCHEME, q, H0)
    ups = np.array([2 * math.pi / q])
    assert characteristic_function(blurred, ups)[0] < 1e-3
    ratio_pt = np.array([1.0])
    got = characteristic_function(blurred, ratio_pt)[0] / characteristic_function(base, ratio_pt)[0]
    want = abs(math.sin(q * 1.0 / 2.0) / (q * 1.0 / 2.0))
    assert got == pytest.approx(want, abs=1e-3)
