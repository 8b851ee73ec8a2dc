"""Independent oracles for the copula module. Run before freezing test values."""
import math
import numpy as np
import mpmath as mp
from scipy import stats

from censorfuse.copulas import (CopulaModel, CopulaFamily, copula_cdf, copula_density,
                                log_copula_density, h_volume, conditional_cdf_wrt_first,
                                copula_sample, param_to_tau, tau_to_param, fit_ml,
                                select_best, bvn_cdf, rank_pseudo_observations)

mp.mp.dps = 40

def mp_clayton_cdf(u, phi):
    return (sum(ui**(-phi) for ui in u) - len(u) + 1) ** (-1/mp.mpf(phi))

def mp_frank_cdf(u, phi):
    phi = mp.mpf(phi)
    prod = mp.mpf(1)
    for ui in u:
        prod *= mp.expm1(-phi*ui)
    return -mp.log(1 + prod / mp.expm1(-phi)**(len(u)-1)) / phi

def mp_gumbel_cdf(u, phi):
    phi = mp.mpf(phi)
    s = sum((-mp.log(ui))**phi for ui in u)
    return mp.exp(-s**(1/phi))

def mp_density(cdf_fn, u, phi, d):
    """Mixed partial derivative of the CDF via mpmath.diff."""
    f = lambda *args: cdf_fn(args, phi)
    return mp.diff(f, tuple(mp.mpf(x) for x in u), tuple([1]*d))

print("=== CDF anchors ===")
print("clayton C(.5,.5; 2) =", float(mp_clayton_cdf([mp.mpf('0.5')]*2, 2)), "lib:",
      copula_cdf(CopulaModel.clayton(2.0), [0.5, 0.5]), "expect 7^-0.5 =", 7**-0.5)
print("frank C(.3,.7; 3)  =", float(mp_frank_cdf([mp.mpf('0.3'), mp.mpf('0.7')], 3)),
      "lib:", copula_cdf(CopulaModel.frank(3.0), [0.3, 0.7]))
print("frank C(.3,.7; -3) =", float(mp_frank_cdf([mp.mpf('0.3'), mp.mpf('0.7')], -3)),
      "lib:", copula_cdf(CopulaModel.frank(-3.0), [0.3, 0.7]))
print("gumbel C(.3,.7; 2) =", float(mp_gumbel_cdf([mp.mpf('0.3'), mp.mpf('0.7')], 2)),
      "lib:", copula_cdf(CopulaModel.gumbel(2.0), [0.3, 0.7]))
print("frank C(.2,.5,.8; 4) =", float(mp_frank_cdf([mp.mpf('0.2'), mp.mpf('0.5'), mp.mpf('0.8')], 4)),
      "lib:", copula_cdf(CopulaModel.frank(4.0), [0.2, 0.5, 0.8]))

print("\n=== densities vs mpmath mixed partials ===")
cases = [
    ("clayton", mp_clayton_cdf, 2.0, [0.3, 0.6]),
    ("clayton", mp_clayton_cdf, 2.0, [0.2, 0.5, 0.8]),
    ("clayton", mp_clayton_cdf, 0.5, [0.9, 0.1, 0.4, 0.7]),
    ("clayton", mp_clayton_cdf, -0.4, [0.3, 0.6]),
    ("frank", mp_frank_cdf, 3.0, [0.3, 0.6]),
    ("frank", mp_frank_cdf, 3.0, [0.2, 0.5, 0.8]),
    ("frank", mp_frank_cdf, 8.0, [0.9, 0.1, 0.4, 0.7]),
    ("frank", mp_frank_cdf, -5.0, [0.3, 0.6]),
    ("frank", mp_frank_cdf, 2.92, [0.97, 0.98]),
    ("gumbel", mp_gumbel_cdf, 2.0, [0.3, 0.6]),
    ("gumbel", mp_gumbel_cdf, 1.5, [0.2, 0.5, 0.8]),
    ("gumbel", mp_gumbel_cdf, 3.0, [0.9, 0.1, 0.4, 0.7]),
    ("gumbel", mp_gumbel_cdf, 1.0 + 1e-9, [0.3, 0.6]),
]
for name, fn, phi, u in cases:
    want = float(mp_density(fn, u, phi, len(u)))
    got = copula_density(CopulaModel(CopulaFamily(name), phi=phi), u)
    rel = abs(got - want) / abs(want)
    print(f"{name:8s} phi={phi:6.3f} d={len(u)}  mp={want:.12e} lib={got:.12e} rel={rel:.2e}")

print("\n=== extreme corner stability (frank) ===")
for u in ([0.999999, 0.999999], [1-1e-9, 1-1e-9], [1e-9, 1-1e-9]):
    got = copula_density(CopulaModel.frank(20.0), u)
    want = float(mp_density(mp_frank_cdf, u, 20.0, 2))
    print(f"u={u}  lib={got:.10e} mp={want:.10e} rel={abs(got-want)/abs(want):.2e}")

print("\n=== gaussian / student density vs scipy ===")
rng = np.random.default_rng(1)
sig = np.array([[1.0, 0.55], [0.55, 1.0]])
u = rng.random((5, 2))
z = stats.norm.ppf(u)
want = stats.multivariate_normal(cov=sig).logpdf(z) - stats.norm.logpdf(z).sum(axis=1)
got = log_copula_density(CopulaModel.gaussian(sig), u)
print("gauss  max abs err:", np.max(np.abs(got - want)))
zt = stats.t.ppf(u, df=5)
want_t = stats.multivariate_t(shape=sig, df=5).logpdf(zt) - stats.t.logpdf(zt, df=5).sum(axis=1)
got_t = log_copula_density(CopulaModel.student_t(sig, 5), u)
print("student max abs err:", np.max(np.abs(got_t - want_t)))

print("\n=== bvn_cdf vs scipy mvn ===")
hs = np.array([-2.0, -0.5, 1e-13, 0.7, 2.5])
ks = np.array([1.2, -1.0, 0.3, 1e-13, -2.2])
rhos = np.array([0.0, 0.8, -0.6, 0.95, -0.99])
for h, k, r in zip(hs, ks, rhos):
    want = stats.multivariate_normal(cov=[[1, r], [r, 1]]).cdf([h, k])
    got = bvn_cdf(h, k, r)
    print(f"h={h:6.2f} k={k:6.2f} rho={r:5.2f}: got={got:.12f} want={want:.12f} diff={abs(got-want):.2e}")

print("\n=== h_volume sanity: total mass = 1, matches MC ===")
for m in [CopulaModel.clayton(2.0), CopulaModel.frank(-4.0), CopulaModel.gumbel(2.5),
          CopulaModel.gaussian(sig), CopulaModel.student_t(sig, 5)]:
    full = h_volume(m, [0.0, 0.0], [1.0, 1.0])
    box = h_volume(m, [0.2, 0.3], [0.7, 0.9])
    smp = copula_sample(m, 2, 200_000, np.random.default_rng(7))
    mc = np.mean((smp[:, 0] > 0.2) & (smp[:, 0] <= 0.7) & (smp[:, 1] > 0.3) & (smp[:, 1] <= 0.9))
    print(f"{m.family.value:10s} full={full:.9f} box={box:.6f} mc={mc:.6f} diff={abs(box-mc):.4f}")

print("\n=== 3-sensor box mass vs MC ===")
sig3 = np.array([[1.0, 0.4, 0.4], [0.4, 1.0, 0.4], [0.4, 0.4, 1.0]])
for m in [CopulaModel.clayton(1.5), CopulaModel.frank(4.0), CopulaModel.gumbel(1.8),
          CopulaModel.gaussian(sig3), CopulaModel.student_t(sig3, 5)]:
    box = h_volume(m, [0.1, 0.2, 0.3], [0.6, 0.8, 0.9])
    smp = copula_sample(m, 3, 400_000, np.random.default_rng(11))
    mc = np.mean((smp[:, 0] > 0.1) & (smp[:, 0] <= 0.6) &
                 (smp[:, 1] > 0.2) & (smp[:, 1] <= 0.8) &
                 (smp[:, 2] > 0.3) & (smp[:, 2] <= 0.9))
    print(f"{m.family.value:10s} box={box:.6f} mc={mc:.6f} diff={abs(box-mc):.4f}")

print("\n=== conditional vs finite differences of the CDF ===")
def cond_fd(model, u0, lo, hi, eps=1e-6):
    d_hi = (copula_cdf(model, [u0+eps] + list(hi)) - copula_cdf(model, [u0-eps] + list(hi))) / (2*eps)
    # inclusion-exclusion in the rest box (d=2 rest=1)
    d_lo = (copula_cdf(model, [u0+eps] + list(lo)) - copula_cdf(model, [u0-eps] + list(lo))) / (2*eps)
    return d_hi - d_lo

for m in [CopulaModel.clayton(2.0), CopulaModel.frank(-4.0), CopulaModel.gumbel(2.5),
          CopulaModel.gaussian(sig), CopulaModel.student_t(sig, 5)]:
    got = conditional_cdf_wrt_first(m, 0.4, [0.25], [0.85])
    want = cond_fd(m, 0.4, [0.25], [0.85])
    print(f"{m.family.value:10s} got={got:.9f} fd={want:.9f} diff={abs(got-want):.2e}")

print("\n=== conditional d=3 (rest box 2-D) vs finite differences ===")
def cond_fd3(model, u0, lo, hi, eps=1e-6):
    total = 0.0
    for b0 in (0, 1):
        for b1 in (0, 1):
            pt = [hi[0] if b0 else lo[0], hi[1] if b1 else lo[1]]
            sign = 1 if (b0 + b1) % 2 == 0 else -1
            der = (copula_cdf(model, [u0+eps]+pt) - copula_cdf(model, [u0-eps]+pt)) / (2*eps)
            total += sign * der
    return total

for m in [CopulaModel.clayton(1.5), CopulaModel.frank(4.0), CopulaModel.gumbel(1.8),
          CopulaModel.gaussian(sig3), CopulaModel.student_t(sig3, 5)]:
    got = conditional_cdf_wrt_first(m, 0.4, [0.25, 0.1], [0.85, 0.7])
    want = cond_fd3(m, 0.4, [0.25, 0.1], [0.85, 0.7])
    print(f"{m.family.value:10s} got={got:.9f} fd={want:.9f} diff={abs(got-want):.2e}")

print("\n=== sample tau vs param_to_tau ===")
for m in [CopulaModel.clayton(2.0), CopulaModel.clayton(-0.4), CopulaModel.frank(5.0),
          CopulaModel.frank(-5.0), CopulaModel.gumbel(2.0), CopulaModel.gaussian(sig),
          CopulaModel.student_t(sig, 5)]:
    smp = copula_sample(m, 2, 40_000, np.random.default_rng(3))
    emp = stats.kendalltau(smp[:, 0], smp[:, 1]).statistic
    pop = param_to_tau(m)
    print(f"{m.family.value:10s} phi={m.phi}  pop tau={pop:.4f} sample tau={emp:.4f} diff={abs(pop-emp):.4f}")

print("\n=== frank tau inversions ===")
for tau in [0.3, -0.3, 0.7, 0.05]:
    p = tau_to_param(CopulaFamily.FRANK, tau)
    back = param_to_tau(CopulaModel.frank(p))
    print(f"tau={tau:5.2f} -> phi={p:.6f} -> tau={back:.10f}")

# mpmath check of Debye-based tau at phi=3
phi = mp.mpf(3)
d1 = mp.quad(lambda t: t/mp.expm1(t), [0, phi]) / phi
tau_mp = 1 - 4/phi*(1 - d1)
print("frank tau(3): mp =", float(tau_mp), " lib =", param_to_tau(CopulaModel.frank(3.0)))

print("\n=== fit recovery ===")
rng = np.random.default_rng(42)
for fam, phi in [(CopulaFamily.CLAYTON, 2.0), (CopulaFamily.FRANK, 4.0),
                 (CopulaFamily.GUMBEL, 2.0), (CopulaFamily.FRANK, -4.0)]:
    smp = copula_sample(CopulaModel(fam, phi=phi), 2, 4000, rng)
    res = fit_ml(fam, smp)
    print(f"{fam.value:8s} true={phi:5.2f} fitted={res.model.phi:7.4f} ll={res.loglik:9.3f}")
smp = copula_sample(CopulaModel.gaussian(sig), 2, 4000, rng)
res = fit_ml(CopulaFamily.GAUSSIAN, smp)
print(f"gaussian true rho=0.55 fitted={res.model.sigma[0,1]:.4f} ll={res.loglik:.3f}")

print("\n=== select_best on clayton data ===")
lib = [CopulaFamily.GAUSSIAN, CopulaFamily.STUDENT_T, CopulaFamily.CLAYTON,
       CopulaFamily.FRANK, CopulaFamily.GUMBEL]
smp = copula_sample(CopulaModel.clayton(3.0), 2, 3000, np.random.default_rng(5))
rep = select_best(lib, smp)
print("selected:", rep.selected.model.family.value, "ll:", rep.selected.loglik)
for fam, r in rep.per_family:
    print(f"  {fam.value:10s} ll={'fail' if r is None else round(r.loglik, 2)}")

print("\n=== rank invariance ===")
raw = np.random.default_rng(9).normal(size=(500, 2)) @ np.linalg.cholesky(sig).T
pseudo = rank_pseudo_observations(raw)
r1 = fit_ml(CopulaFamily.CLAYTON, pseudo)
r2 = fit_ml(CopulaFamily.CLAYTON, rank_pseudo_observations(pseudo))
print("clayton on pseudo vs pseudo(pseudo):", r1.model.phi, r2.model.phi,
      "identical:", r1.model.phi == r2.model.phi)
