"""Monte Carlo experiment harness: scenario sampling, threshold calibration,
ROC curves and censoring-rate sweeps.

Trials are independent decision windows. Each (hypothesis, trial, rule)
triple owns a dedicated RNG substream spawned from the scenario seed, so the
sampled data do not depend on scheduling order and results are reproducible
at any degree of parallelism.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .censoring import CensoringScheme, apply_censoring, scheme_from_rate
from .copulas import CopulaFamily, CopulaModel
from .errors import CalibrationError, DomainError
from .fusion import (
    FusionSample,
    FusionWindow,
    NoiseAidedWindow,
    QUANTIZED_CENSORED,
    QuantizedMessage,
    Sensor,
    build_z_model,
    glrt_analog,
    glrt_noise_analog,
    glrt_noise_quantized,
    glrt_quantized,
    independence_statistic,
    substitute_analog_noise,
    substitute_quantized_noise,
)
from .marginals import H0, H1, GaussianMarginal
from .numerics import empirical_quantile
from .quantization import NoiseSpec, QuantizerSpec, design_quantizer, quantize

RULES = ("glrt-ac", "glrt-qc", "noise-ac", "noise-qc", "ia")
_RULE_STREAM = {rule: i for i, rule in enumerate(RULES)}

DEFAULT_BETA_GRID = (0.1, 0.2, 0.25, 0.3, 0.35, 0.4, 0.5)


class Scenario(str, Enum):
    AC = "ac"
    QC = "qc"


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one Monte Carlo experiment."""

    n_sensors: int
    sensor_marginals: tuple
    fc_marginal: GaussianMarginal
    beta: tuple
    t1: tuple
    truth_copula_h1: CopulaModel
    library: tuple
    scenario: Scenario
    seed: int
    truth_copula_h0: CopulaModel = CopulaModel.product()
    q: float | None = None
    noise: NoiseSpec | None = None
    L: int = 100
    trials: int = 2000
    alpha: float = 0.1
    quad_nodes: int = 8
    fit_tol: float = 1e-3

    def __post_init__(self):
        if self.n_sensors < 1:
            raise DomainError("need at least one sensor")
        for name in ("sensor_marginals", "beta", "t1"):
            if len(getattr(self, name)) != self.n_sensors:
                raise DomainError(f"{name} must have one entry per sensor")
        if self.trials < 100:
            raise DomainError(f"trials must be >= 100, got {self.trials}")
        if self.L < 1:
            raise DomainError("window length must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0,1), got {self.alpha}")
        if self.scenario is Scenario.QC and self.q is None:
            raise DomainError("quantized scenario requires a step size q")
        for b in self.beta:
            if not 0.0 < b < 1.0:
                raise DomainError(f"censoring rate must lie in (0,1), got {b}")
        if self.library is not None and len(self.library) == 0:
            raise DomainError("copula library must not be empty")

    def schemes(self) -> list[CensoringScheme]:
        return [scheme_from_rate(m, t1, b) for m, t1, b
                in zip(self.sensor_marginals, self.t1, self.beta)]

    def sensors(self, quantized: bool) -> list[Sensor]:
        out = []
        for m, scheme in zip(self.sensor_marginals, self.schemes()):
            spec = design_quantizer(m, scheme, self.q) if quantized else None
            out.append(Sensor(marginal=m, scheme=scheme, quantizer=spec))
        return out

    def with_beta(self, beta: float) -> "ScenarioConfig":
        return replace(self, beta=tuple(beta for _ in range(self.n_sensors)))

    def to_dict(self) -> dict:
        def marg(m):
            return {"mu0": m.mu0, "mu1": m.mu1, "sigma": m.sigma}

        def cop_model(c):
            d = {"family": c.family.value}
            if c.phi is not None:
                d["phi"] = c.phi
            if c.sigma is not None:
                d["sigma"] = np.asarray(c.sigma).tolist()
            if c.family is CopulaFamily.STUDENT_T:
                d["nu"] = c.nu
            return d

        out = {
            "n_sensors": self.n_sensors,
            "sensor_marginals": [marg(m) for m in self.sensor_marginals],
            "fc_marginal": marg(self.fc_marginal),
            "beta": list(self.beta),
            "t1": list(self.t1),
            "truth_copula_h1": cop_model(self.truth_copula_h1),
            "truth_copula_h0": cop_model(self.truth_copula_h0),
            "library": [f.value for f in self.library],
            "scenario": self.scenario.value,
            "seed": self.seed,
            "L": self.L,
            "trials": self.trials,
            "alpha": self.alpha,
            "quad_nodes": self.quad_nodes,
            "fit_tol": self.fit_tol,
        }
        if self.q is not None:
            out["q"] = self.q
        if self.noise is not None:
            out["noise"] = {"kind": self.noise.kind.value, "param": self.noise.param}
        return out

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class RocCurve:
    points: tuple          # ((pf, pd), ...) with pf nondecreasing
    rule_label: str
    config_hash: str

    def __post_init__(self):
        pfs = [p[0] for p in self.points]
        if any(b < a for a, b in zip(pfs, pfs[1:])):
            raise DomainError("false-alarm coordinates must be nondecreasing")
        for pf, pd in self.points:
            if not (0.0 <= pf <= 1.0 and 0.0 <= pd <= 1.0):
                raise DomainError("ROC coordinates must lie in [0,1]")


def _truth_copula(config: ScenarioConfig, h: int) -> CopulaModel:
    return config.truth_copula_h1 if h == H1 else config.truth_copula_h0


def _generate(config: ScenarioConfig, h: int, rng: np.random.Generator,
              scenario: Scenario) -> FusionWindow:
    from .copulas import copula_sample

    quantized = scenario is Scenario.QC
    sensors = config.sensors(quantized)
    u = copula_sample(_truth_copula(config, h), config.n_sensors, config.L, rng)
    x0 = config.fc_marginal.inv_cdf(rng.uniform(size=config.L), h)
    samples = []
    for l in range(config.L):
        msgs = []
        for n, sensor in enumerate(sensors):
            x = float(sensor.marginal.inv_cdf(u[l, n], h))
            msg = apply_censoring(sensor.scheme, x)
            if quantized:
                msg = (QUANTIZED_CENSORED if msg.censored
                       else QuantizedMessage(int(quantize(sensor.quantizer, x)[0])))
            msgs.append(msg)
        samples.append(FusionSample(messages=tuple(msgs), x0=float(x0[l])))
    return FusionWindow(samples=tuple(samples))


def generate_window(config: ScenarioConfig, h: int,
                    rng: np.random.Generator) -> FusionWindow:
    """One decision window: sensor vector from the truth copula of h pushed
    through the inverse marginals, FC observation drawn independently,
    censoring (and quantization in the QC scenario) applied."""
    return _generate(config, h, rng, config.scenario)


def rule_scenario(config: ScenarioConfig, rule: str) -> Scenario:
    if rule in ("glrt-qc", "noise-qc"):
        return Scenario.QC
    if rule in ("glrt-ac", "noise-ac"):
        return Scenario.AC
    if rule == "ia":
        return config.scenario
    raise DomainError(f"unknown rule {rule!r}; allowed: {', '.join(RULES)}")


class _RuleRunner:
    """Per-chunk context: sensors and surrogate models built once, then one
    statistic per trial from that trial's own substream."""

    def __init__(self, config: ScenarioConfig, rule: str):
        self.config = config
        self.rule = rule
        self.scenario = rule_scenario(config, rule)
        quantized = self.scenario is Scenario.QC
        if quantized and config.q is None:
            raise DomainError(f"rule {rule!r} needs a quantized scenario config (q)")
        self.sensors = config.sensors(quantized)
        self.z_models = None
        if rule == "noise-qc":
            if config.noise is None:
                raise DomainError("noise-qc requires a noise specification")
            self.z_models = {
                (n, h): build_z_model(s.marginal, s.quantizer, config.noise, h)
                for n, s in enumerate(self.sensors) for h in (H0, H1)}

    def statistic(self, h: int, trial: int) -> float:
        cfg = self.config
        seq = np.random.SeedSequence(cfg.seed,
                                     spawn_key=(h, trial, _RULE_STREAM[self.rule]))
        rng = np.random.default_rng(seq)
        window = _generate(cfg, h, rng, self.scenario)
        if self.rule == "ia":
            return independence_statistic(window, self.sensors, cfg.fc_marginal)
        if self.rule == "glrt-ac":
            return glrt_analog(window, cfg.library, self.sensors, cfg.fc_marginal,
                               quad_nodes=cfg.quad_nodes, fit_tol=cfg.fit_tol,
                               h0_model=cfg.truth_copula_h0).statistic
        if self.rule == "glrt-qc":
            return glrt_quantized(window, cfg.library, self.sensors,
                                  cfg.fc_marginal, quad_nodes=cfg.quad_nodes,
                                  fit_tol=cfg.fit_tol,
                                  h0_model=cfg.truth_copula_h0).statistic
        schemes = [s.scheme for s in self.sensors]
        if self.rule == "noise-ac":
            zwin = NoiseAidedWindow(samples=tuple(
                substitute_analog_noise(s, schemes, rng) for s in window.samples))
            return glrt_noise_analog(zwin, cfg.library, self.sensors,
                                     cfg.fc_marginal, quad_nodes=cfg.quad_nodes,
                                     fit_tol=cfg.fit_tol,
                                     h0_model=cfg.truth_copula_h0).statistic
        specs = [s.quantizer for s in self.sensors]
        zwin = NoiseAidedWindow(samples=tuple(
            substitute_quantized_noise(s, specs, cfg.noise, rng)
            for s in window.samples))
        return glrt_noise_quantized(zwin, cfg.library, self.sensors,
                                    cfg.fc_marginal, cfg.noise,
                                    z_models=self.z_models,
                                    quad_nodes=cfg.quad_nodes,
                                    fit_tol=cfg.fit_tol,
                                    h0_model=cfg.truth_copula_h0).statistic


def _chunk_statistics(config: ScenarioConfig, rule: str, h: int,
                      trials: list[int]) -> list[float]:
    runner = _RuleRunner(config, rule)
    return [runner.statistic(h, t) for t in trials]


def rule_statistics(config: ScenarioConfig, rule: str, jobs: int = 1
                    ) -> dict[int, np.ndarray]:
    """All trial statistics for one rule under both hypotheses.

    Aggregation is by trial index, so the result is identical for any jobs
    value; the worker pool only changes wall-clock time.
    """
    trial_ids = list(range(config.trials))
    out: dict[int, np.ndarray] = {}
    if jobs <= 1:
        for h in (H0, H1):
            out[h] = np.array(_chunk_statistics(config, rule, h, trial_ids))
        return out
    n_chunks = min(jobs * 4, max(1, config.trials))
    bounds = np.linspace(0, config.trials, n_chunks + 1).astype(int)
    tasks = [(h, bounds[i], bounds[i + 1]) for h in (H0, H1)
             for i in range(n_chunks) if bounds[i] < bounds[i + 1]]
    results: dict[int, list] = {H0: [None] * config.trials,
                                H1: [None] * config.trials}
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = {pool.submit(_chunk_statistics, config, rule, h,
                               trial_ids[a:b]): (h, a, b)
                   for h, a, b in tasks}
        for fut, (h, a, b) in futures.items():
            results[h][a:b] = fut.result()
    for h in (H0, H1):
        out[h] = np.array(results[h], dtype=float)
    return out


def calibrate_threshold(statistics_h0, alpha: float) -> float:
    """Conservative empirical (1-alpha)-quantile of the H0 statistics."""
    arr = np.asarray(statistics_h0, dtype=float)
    if arr.size < 1.0 / alpha:
        raise CalibrationError(
            f"need at least {math.ceil(1.0 / alpha)} H0 statistics to "
            f"calibrate alpha={alpha}, got {arr.size}")
    return empirical_quantile(arr, 1.0 - alpha)


def detection_rate(statistics_h1, threshold: float) -> float:
    arr = np.asarray(statistics_h1, dtype=float)
    return float(np.mean(arr > threshold))


def roc(config: ScenarioConfig, rule: str, jobs: int = 1,
        stats: dict | None = None) -> RocCurve:
    """Empirical ROC: one point per distinct pooled statistic value, swept
    from the most to the least conservative threshold."""
    if stats is None:
        stats = rule_statistics(config, rule, jobs)
    s0, s1 = stats[H0], stats[H1]
    thresholds = np.unique(np.concatenate([s0, s1]))[::-1]
    pts = []
    for t in thresholds:
        pts.append((float(np.mean(s0 > t)), float(np.mean(s1 > t))))
    return RocCurve(points=tuple(pts), rule_label=rule,
                    config_hash=config.config_hash())


def sweep_beta(config: ScenarioConfig, rule: str, betas, jobs: int = 1
               ) -> list[tuple[float, float]]:
    """Calibrated P_D at the config's false-alarm budget for each censoring
    rate; thresholds are re-calibrated per rate."""
    out = []
    for beta in betas:
        if not 0.0 < beta < 1.0:
            raise DomainError(f"censoring rate must lie in (0,1), got {beta}")
        cfg = config.with_beta(float(beta))
        stats = rule_statistics(cfg, rule, jobs)
        thr = calibrate_threshold(stats[H0], cfg.alpha)
        out.append((float(beta), detection_rate(stats[H1], thr)))
    return out
