"""JSON experiment configuration: schema-versioned, fail-closed parsing.

Configs are plain JSON objects.  Every key is checked against an explicit
allow-list and every value is validated with a field-level error message, so
a typo fails the run instead of silently running a different experiment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .copulas import CopulaFamily, CopulaModel, tau_to_param
from .errors import CensorfuseError, ConfigError
from .marginals import GaussianMarginal
from .quantization import NoiseSpec
from .simulation import Scenario, ScenarioConfig

SCHEMA_VERSION = 1

_TOP_KEYS = {
    "schema_version",
    "scenario",
    "n_sensors",
    "sensor_marginal",
    "sensor_marginals",
    "fc_marginal",
    "beta",
    "t1",
    "truth_copula_h1",
    "truth_copula_h0",
    "library",
    "q",
    "noise",
    "L",
    "trials",
    "alpha",
    "seed",
    "quad_nodes",
    "betas",
    "nu",
}

_MARGINAL_KEYS = {"mu0", "mu1", "sigma"}
_COPULA_KEYS = {"family", "tau", "phi", "rho", "nu"}
_NOISE_KEYS = {"kind", "sigma_d"}

_FAMILY_NAMES = {f.value: f for f in CopulaFamily}


def _require(raw: dict, key: str, path: str):
    if key not in raw:
        raise ConfigError(f"{path}: missing required key '{key}'")
    return raw[key]


def _reject_unknown(raw: dict, allowed: set, path: str) -> None:
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(
            f"{path}: unknown key '{unknown[0]}' "
            f"(allowed: {', '.join(sorted(allowed))})"
        )


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _parse_marginal(raw, path: str) -> GaussianMarginal:
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected an object with mu0/mu1/sigma")
    _reject_unknown(raw, _MARGINAL_KEYS, path)
    mu0 = _number(_require(raw, "mu0", path), f"{path}.mu0")
    mu1 = _number(_require(raw, "mu1", path), f"{path}.mu1")
    sigma = _number(_require(raw, "sigma", path), f"{path}.sigma")
    try:
        return GaussianMarginal(mu0, mu1, sigma)
    except CensorfuseError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_family(name, path: str) -> CopulaFamily:
    if not isinstance(name, str) or name not in _FAMILY_NAMES:
        raise ConfigError(
            f"{path}: unknown copula family {name!r} "
            f"(allowed: {', '.join(sorted(_FAMILY_NAMES))})"
        )
    return _FAMILY_NAMES[name]


def _parse_copula(raw, path: str, d: int) -> CopulaModel:
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected an object with a 'family' key")
    _reject_unknown(raw, _COPULA_KEYS, path)
    family = _parse_family(_require(raw, "family", path), f"{path}.family")
    params = [k for k in ("tau", "phi", "rho") if k in raw]
    if family is CopulaFamily.PRODUCT:
        if params:
            raise ConfigError(f"{path}: product copula takes no parameters")
        return CopulaModel.product()
    if len(params) != 1:
        raise ConfigError(
            f"{path}: give exactly one of 'tau', 'phi' or 'rho' for "
            f"{family.value}"
        )
    nu = _integer(raw.get("nu", 5), f"{path}.nu")
    elliptical = family in (CopulaFamily.GAUSSIAN, CopulaFamily.STUDENT_T)
    try:
        if params[0] == "tau":
            value = tau_to_param(family, _number(raw["tau"], f"{path}.tau"))
        else:
            value = _number(raw[params[0]], f"{path}.{params[0]}")
        if elliptical:
            return CopulaModel.equicorrelated(family, value, d, nu=nu)
        if params[0] == "rho":
            raise ConfigError(
                f"{path}: 'rho' only parameterizes gaussian/student_t"
            )
        return CopulaModel(family, value)
    except ConfigError:
        raise
    except CensorfuseError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_noise(raw, path: str) -> NoiseSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected an object with kind/sigma_d")
    _reject_unknown(raw, _NOISE_KEYS, path)
    kind = _require(raw, "kind", path)
    if kind != "gaussian_lpf":
        raise ConfigError(f"{path}.kind: unknown noise kind {kind!r}")
    sigma_d = _number(_require(raw, "sigma_d", path), f"{path}.sigma_d")
    try:
        return NoiseSpec.gaussian_lpf(sigma_d)
    except CensorfuseError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _per_sensor(raw, n: int, path: str) -> tuple:
    """Broadcast a scalar or validate an n-length list of numbers."""
    if isinstance(raw, list):
        if len(raw) != n:
            raise ConfigError(f"{path}: expected {n} entries, got {len(raw)}")
        return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(raw))
    return (_number(raw, path),) * n


@dataclass(frozen=True)
class LoadedConfig:
    """A validated experiment description plus the raw JSON it came from."""

    scenario: ScenarioConfig
    betas: tuple | None
    raw: dict


def parse_config(raw: dict, *, seed=None, trials=None, quad_nodes=None,
                 window=None) -> LoadedConfig:
    """Validate a raw JSON object; keyword overrides replace config values."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "config")
    version = _require(raw, "schema_version", "config")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"config.schema_version: expected {SCHEMA_VERSION}, got {version!r}"
        )

    scenario_name = _require(raw, "scenario", "config")
    try:
        scenario = Scenario(scenario_name)
    except ValueError:
        raise ConfigError(
            f"config.scenario: expected 'ac' or 'qc', got {scenario_name!r}"
        ) from None

    n = _integer(_require(raw, "n_sensors", "config"), "config.n_sensors")
    if n < 1:
        raise ConfigError("config.n_sensors: need at least one sensor")

    if ("sensor_marginal" in raw) == ("sensor_marginals" in raw):
        raise ConfigError(
            "config: give exactly one of 'sensor_marginal' (shared) or "
            "'sensor_marginals' (per sensor)"
        )
    if "sensor_marginal" in raw:
        shared = _parse_marginal(raw["sensor_marginal"], "config.sensor_marginal")
        marginals = (shared,) * n
    else:
        entries = raw["sensor_marginals"]
        if not isinstance(entries, list) or len(entries) != n:
            raise ConfigError(
                f"config.sensor_marginals: expected a list of {n} objects"
            )
        marginals = tuple(
            _parse_marginal(e, f"config.sensor_marginals[{i}]")
            for i, e in enumerate(entries)
        )

    fc = _parse_marginal(_require(raw, "fc_marginal", "config"), "config.fc_marginal")
    beta = _per_sensor(_require(raw, "beta", "config"), n, "config.beta")
    t1 = _per_sensor(raw.get("t1", 0.0), n, "config.t1")

    truth_h1 = _parse_copula(_require(raw, "truth_copula_h1", "config"),
                             "config.truth_copula_h1", n)
    if "truth_copula_h0" in raw:
        truth_h0 = _parse_copula(raw["truth_copula_h0"],
                                 "config.truth_copula_h0", n)
    else:
        truth_h0 = CopulaModel.product()

    lib_raw = _require(raw, "library", "config")
    if not isinstance(lib_raw, list) or not lib_raw:
        raise ConfigError("config.library: expected a non-empty list of family names")
    library = tuple(
        _parse_family(name, f"config.library[{i}]")
        for i, name in enumerate(lib_raw)
    )

    q = None
    if "q" in raw:
        q = _number(raw["q"], "config.q")
        if q <= 0:
            raise ConfigError(f"config.q: step must be positive, got {q}")
    noise = _parse_noise(raw["noise"], "config.noise") if "noise" in raw else None

    betas = None
    if "betas" in raw:
        grid = raw["betas"]
        if not isinstance(grid, list) or not grid:
            raise ConfigError("config.betas: expected a non-empty list")
        betas = tuple(_number(b, f"config.betas[{i}]") for i, b in enumerate(grid))
        for i, b in enumerate(betas):
            if not 0.0 < b < 1.0:
                raise ConfigError(f"config.betas[{i}]: must lie in (0,1), got {b}")

    resolved_seed = seed if seed is not None else raw.get("seed")
    if resolved_seed is None:
        raise ConfigError("config.seed: required (or pass --seed)")
    resolved_seed = _integer(resolved_seed, "config.seed")

    kwargs = dict(
        n_sensors=n,
        sensor_marginals=marginals,
        fc_marginal=fc,
        beta=beta,
        t1=t1,
        truth_copula_h1=truth_h1,
        truth_copula_h0=truth_h0,
        library=library,
        scenario=scenario,
        seed=resolved_seed,
        q=q,
        noise=noise,
        L=window if window is not None else _integer(raw.get("L", 100), "config.L"),
        trials=(trials if trials is not None
                else _integer(raw.get("trials", 2000), "config.trials")),
        alpha=_number(raw.get("alpha", 0.1), "config.alpha"),
        quad_nodes=(quad_nodes if quad_nodes is not None
                    else _integer(raw.get("quad_nodes", 8), "config.quad_nodes")),
    )
    try:
        config = ScenarioConfig(**kwargs)
    except CensorfuseError as exc:
        raise ConfigError(f"config: {exc}") from exc
    return LoadedConfig(scenario=config, betas=betas, raw=raw)


def load_config(path: str, **overrides) -> LoadedConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}"
        ) from exc
    return parse_config(raw, **overrides)
