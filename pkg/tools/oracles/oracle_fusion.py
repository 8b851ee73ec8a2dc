"""Independent oracles for the fusion likelihood machinery.

Routes used here deliberately differ from the library implementation:
  * single-slot likelihoods via high-order Gauss-Legendre quadrature in
    x-space of  c(F1,...,F0) * prod f_i  (the library works in u-space with
    corner sums / conditional rectangles),
  * noise-aided surrogate distributions via brute Monte Carlo,
  * product-library reductions against independence_statistic.

Values printed here get frozen into tests/test_fusion.py.
"""
import numpy as np
from scipy import stats

from censorfuse.marginals import H0, H1, GaussianMarginal
from censorfuse.censoring import CensoringScheme, SensorMessage, CENSORED, apply_censoring
from censorfuse.copulas import (CopulaFamily, CopulaModel, copula_density,
                                copula_sample)
from censorfuse.quantization import (NoiseSpec, QuantizerSpec, design_quantizer,
                                     quantize, compress, level_value)
from censorfuse import fusion
from censorfuse.fusion import (FusionSample, FusionWindow, NoiseAidedSample,
                               NoiseAidedWindow, QuantizedMessage, Sensor,
                               QUANTIZED_CENSORED)
from censorfuse.numerics import gauss_legendre_01

np.set_printoptions(precision=17)

m1 = GaussianMarginal(mu0=0.0, mu1=1.0, sigma=1.0)
m2 = GaussianMarginal(mu0=0.0, mu1=1.5, sigma=2.0)
fc = GaussianMarginal(mu0=0.1, mu1=0.6, sigma=3.0)
s1 = CensoringScheme(t1=0.2, t2=1.4,
                     beta=float(stats.norm.cdf(1.4) - stats.norm.cdf(0.2)))
s2 = CensoringScheme(t1=-0.5, t2=2.0,
                     beta=float(stats.norm.cdf(1.0) - stats.norm.cdf(-0.25)))
sensors = [Sensor(marginal=m1, scheme=s1), Sensor(marginal=m2, scheme=s2)]

GL_X, GL_W = gauss_legendre_01(64)


def quad_1d(f, lo, hi):
    x = lo + (hi - lo) * GL_X
    return (hi - lo) * np.sum(GL_W * f(x))


def joint_density(model, xs, margs, h):
    u = np.array([m.cdf(x, h) for m, x in zip(margs, xs)])
    dens = copula_density(model, u[None, :])[0]
    for m, x in zip(margs, xs):
        dens *= m.pdf(x, h)
    return dens


def lik_one_censored(model, x2, x0, h):
    """Sensor 1 censored, sensor 2 sent, FC observed."""
    f = lambda x1: np.array([joint_density(model, [v, x2, x0], [m1, m2, fc], h)
                             for v in x1])
    return quad_1d(f, s1.t1, s1.t2)


def lik_both_censored(model, x0, h):
    def outer(x1v):
        out = []
        for x1 in x1v:
            inner = lambda x2v: np.array(
                [joint_density(model, [x1, x2, x0], [m1, m2, fc], h) for x2 in x2v])
            out.append(quad_1d(inner, s2.t1, s2.t2))
        return np.array(out)
    return quad_1d(outer, s1.t1, s1.t2)


models = {
    "frank3": CopulaModel.frank(3.0),
    "clayton2": CopulaModel.clayton(2.0),
    "gumbel17": CopulaModel.gumbel(1.7),
    "gauss": CopulaModel.equicorrelated(CopulaFamily.GAUSSIAN, 0.4, 3),
    "t5": CopulaModel.equicorrelated(CopulaFamily.STUDENT_T, 0.4, 3, nu=5),
    "prod": CopulaModel.product(),
}

print("== likelihood_analog: sensor1 censored, x2=1.9, x0=-0.7, h=H1 ==")
sample_1c = FusionSample(messages=(CENSORED, SensorMessage(1.9)), x0=-0.7)
for name, model in models.items():
    oracle = lik_one_censored(model, 1.9, -0.7, H1)
    got = fusion.likelihood_analog(sample_1c, model, sensors, fc, H1)
    print(f"{name:9s} oracle={oracle:.17g} got={got:.17g} rel={abs(got-oracle)/oracle:.3g}")

print("== likelihood_analog: both censored, x0=0.3, h=H0 ==")
sample_2c = FusionSample(messages=(CENSORED, CENSORED), x0=0.3)
for name, model in models.items():
    oracle = lik_both_censored(model, 0.3, H0)
    got = fusion.likelihood_analog(sample_2c, model, sensors, fc, H0)
    print(f"{name:9s} oracle={oracle:.17g} got={got:.17g} rel={abs(got-oracle)/oracle:.3g}")

print("== likelihood_analog: none censored, x=(1.9,-1.2), x0=0.5, h=H1 ==")
sample_0c = FusionSample(messages=(SensorMessage(1.9), SensorMessage(-1.2)), x0=0.5)
for name, model in models.items():
    oracle = joint_density(model, [1.9, -1.2, 0.5], [m1, m2, fc], H1)
    got = fusion.likelihood_analog(sample_0c, model, sensors, fc, H1)
    print(f"{name:9s} oracle={oracle:.17g} got={got:.17g} rel={abs(got-oracle)/oracle:.3g}")

# --- quantized slots ---------------------------------------------------------
q = 1.0
qz1 = design_quantizer(m1, s1, q)
qz2 = design_quantizer(m2, s2, q)
qsensors = [Sensor(m1, s1, qz1), Sensor(m2, s2, qz2)]
print("quantizer sizes:", (qz1.Ln, qz1.Un), (qz2.Ln, qz2.Un))


def lik_quantized(model, i1, i2, x0, h):
    from censorfuse.quantization import partition
    lo1, hi1 = partition(qz1, i1) if i1 is not None else (s1.t1, s1.t2)
    lo2, hi2 = partition(qz2, i2) if i2 is not None else (s2.t1, s2.t2)
    lo1, hi1 = max(lo1, -12.0), min(hi1, 14.0)
    lo2, hi2 = max(lo2, -18.0), min(hi2, 20.0)
    def outer(x1v):
        out = []
        for x1 in x1v:
            inner = lambda x2v: np.array(
                [joint_density(model, [x1, x2, x0], [m1, m2, fc], h) for x2 in x2v])
            out.append(quad_1d(inner, lo2, hi2))
        return np.array(out)
    return quad_1d(outer, lo1, hi1)


print("== likelihood_quantized: i=(0, -2), x0=1.1, h=H1 ==")
sampleq = FusionSample(messages=(QuantizedMessage(0), QuantizedMessage(-2)), x0=1.1)
for name, model in models.items():
    oracle = lik_quantized(model, 0, -2, 1.1, H1)
    got = fusion.likelihood_quantized(sampleq, model, qsensors, fc, H1)
    print(f"{name:9s} oracle={oracle:.17g} got={got:.17g} rel={abs(got-oracle)/oracle:.3g}")

print("== likelihood_quantized: i=(censored, 1), x0=-0.4, h=H0 ==")
sampleq2 = FusionSample(messages=(QUANTIZED_CENSORED, QuantizedMessage(1)), x0=-0.4)
for name, model in models.items():
    oracle = lik_quantized(model, None, 1, -0.4, H0)
    got = fusion.likelihood_quantized(sampleq2, model, qsensors, fc, H0)
    print(f"{name:9s} oracle={oracle:.17g} got={got:.17g} rel={abs(got-oracle)/oracle:.3g}")

# total probability: sum of likelihood_quantized over the full alphabet,
# integrated over x0, must be 1
print("== quantized total probability (frank3, H1) ==")
model = models["frank3"]
alphabet1 = list(qz1.indices) + [None]
alphabet2 = list(qz2.indices) + [None]
tot = 0.0
for i1 in alphabet1:
    for i2 in alphabet2:
        msg1 = QUANTIZED_CENSORED if i1 is None else QuantizedMessage(i1)
        msg2 = QUANTIZED_CENSORED if i2 is None else QuantizedMessage(i2)
        f = lambda x0v: np.array([fusion.likelihood_quantized(
            FusionSample(messages=(msg1, msg2), x0=x0), model, qsensors, fc, H1)
            for x0 in x0v])
        tot += quad_1d(f, fc.mu1 - 10 * fc.sigma, fc.mu1 + 10 * fc.sigma)
print("total =", tot)

# --- window construction and product reduction -------------------------------
rng = np.random.default_rng(42)
truth = CopulaModel.frank(4.0)


def draw_window(L, h, quantized):
    u = copula_sample(truth, 3, L, rng)
    xs1 = m1.inv_cdf(u[:, 0], h)
    xs2 = m2.inv_cdf(u[:, 1], h)
    x0 = fc.inv_cdf(u[:, 2], h)
    samples = []
    for l in range(L):
        msgs = []
        for x, s, qz in ((xs1[l], s1, qz1), (xs2[l], s2, qz2)):
            msg = apply_censoring(s, x)
            if quantized:
                msg = QUANTIZED_CENSORED if msg.censored else QuantizedMessage(
                    quantize(qz, x)[0])
            msgs.append(msg)
        samples.append(FusionSample(messages=tuple(msgs), x0=float(x0[l])))
    return FusionWindow(samples=tuple(samples))


win_a = draw_window(40, H1, quantized=False)
win_q = draw_window(40, H1, quantized=True)
lib_prod = [CopulaFamily.PRODUCT]

ind_a = fusion.independence_statistic(win_a, sensors, fc)
glrt_a = fusion.glrt_analog(win_a, lib_prod, sensors, fc)
print("analog product reduction:", ind_a, glrt_a.statistic, abs(ind_a - glrt_a.statistic))

ind_q = fusion.independence_statistic(win_q, qsensors, fc)
glrt_q = fusion.glrt_quantized(win_q, lib_prod, qsensors, fc)
print("quantized product reduction:", ind_q, glrt_q.statistic, abs(ind_q - glrt_q.statistic))

# noise-aided analog: product library must equal independence_statistic too
schemes = [s1, s2]
zwin = NoiseAidedWindow(samples=tuple(
    fusion.substitute_analog_noise(s, schemes, rng) for s in win_a.samples))
noise_stat = fusion.glrt_noise_analog(zwin, lib_prod, sensors, fc)
print("noise-analog product reduction:", ind_a, noise_stat.statistic,
      abs(ind_a - noise_stat.statistic))

# noise-aided quantized: product library equals the marginal surrogate ratio
noise = NoiseSpec.gaussian_lpf(0.5)
specs = [qz1, qz2]
zq = NoiseAidedWindow(samples=tuple(
    fusion.substitute_quantized_noise(s, specs, noise, rng) for s in win_q.samples))
res_nq = fusion.glrt_noise_quantized(zq, lib_prod, qsensors, fc, noise)
zmod = {}
for n, s in enumerate(qsensors):
    for h in (H0, H1):
        zmod[(n, h)] = fusion.build_z_model(s.marginal, s.quantizer, noise, h)
manual = 0.0
for s in zq.samples:
    for n in range(2):
        manual += np.log(zmod[(n, H1)].pdf(s.z[n])) - np.log(zmod[(n, H0)].pdf(s.z[n]))
    manual += fc.log_likelihood_ratio(s.x0)
print("noise-quantized product reduction:", manual, res_nq.statistic,
      abs(manual - res_nq.statistic))

# --- GLRT sanity: fitted statistic on dependent H1 data ----------------------
lib = [CopulaFamily.GAUSSIAN, CopulaFamily.GUMBEL, CopulaFamily.FRANK,
       CopulaFamily.CLAYTON]
res = fusion.glrt_analog(win_a, lib, sensors, fc)
print("glrt_analog H1 window:", res.statistic, res.selected_copula_h1.family,
      getattr(res.selected_copula_h1, "phi", None), res.per_sample_loglik["floored"])
res_q = fusion.glrt_quantized(win_q, lib, qsensors, fc)
print("glrt_quantized H1 window:", res_q.statistic, res_q.selected_copula_h1.family)

# elliptical profile cross-check: brute grid over rho via likelihood_analog
print("== equicorr profile vs brute grid (gaussian) ==")
small = FusionWindow(samples=win_a.samples[:12])
def gauss_total(rho_val, h):
    model = CopulaModel.equicorrelated(CopulaFamily.GAUSSIAN, rho_val, 3)
    return sum(np.log(fusion.likelihood_analog(s, model, sensors, fc, h))
               for s in small.samples)
grid = np.linspace(-0.45, 0.95, 281)
h1_vals = [gauss_total(r, H1) for r in grid]
print("brute argmax rho:", grid[int(np.argmax(h1_vals))], "max:", np.max(h1_vals))
res_small = fusion.glrt_analog(small, [CopulaFamily.GAUSSIAN], sensors, fc)
print("engine h1 model rho:", res_small.selected_copula_h1.sigma[0, 1])

# --- surrogate z model vs Monte Carlo ----------------------------------------
print("== z substitution MC vs model (quantized, sensor1, H1) ==")
noise = NoiseSpec.gaussian_lpf(0.5)
n_mc = 400_000
x = m1.inv_cdf(rng.uniform(size=n_mc), H1)
zs = []
for xi in x:
    msg = apply_censoring(s1, xi)
    if msg.censored:
        y = qz1.q / 2.0
    else:
        y = compress(s1, qz1.q, level_value(qz1, quantize(qz1, xi)[0]))
    zs.append(y)
zs = np.array(zs) + noise.sample(n_mc, rng)
model_z = fusion.build_z_model(m1, qz1, noise, H1)
for probe in (-1.0, 0.5, 1.5, 3.0):
    emp = np.mean(zs <= probe)
    se = np.sqrt(emp * (1 - emp) / n_mc)
    print(f"cdf({probe}): mc={emp:.5f} model={model_z.cdf(probe):.5f} "
          f"diff={abs(emp - model_z.cdf(probe)):.5f} (3se={3*se:.5f})")

print("== analog z density closed checks ==")
print("inside:", fusion.z_density_analog(0.8, s1, m1, H1),
      fusion.no_send_mass_check if False else
      (m1.cdf(s1.t2, H1) - m1.cdf(s1.t1, H1)) / (s1.t2 - s1.t1))
print("cdf at t2:", fusion.z_cdf_analog(s1.t2, s1, m1, H1), m1.cdf(s1.t2, H1))
print("cdf mid:", fusion.z_cdf_analog(0.8, s1, m1, H1))
