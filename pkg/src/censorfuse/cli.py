"""Command-line front end: scenario configs in, CSV results and figures out.

Exit codes: 0 on success, 2 for usage or configuration problems, 3 when a
numerical failure aborts a run (partial outputs are removed in that case).
Log verbosity comes from the CENSORFUSE_LOG environment variable.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .censoring import CensoringScheme
from .config import LoadedConfig, load_config
from .copulas import CopulaFamily, select_best
from .errors import CensorfuseError, ConfigError, NumericalError
from .plotting import render_cf, render_roc, render_sweep
from .quantization import characteristic_function, compress, compressed_density
from .simulation import DEFAULT_BETA_GRID, RULES, roc, sweep_beta

log = logging.getLogger("censorfuse")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

DEFAULT_CF_RATIOS = (1.0, 2.0, 3.0, 5.0)
DEFAULT_CF_STEP = 0.5

_FIT_LIBRARY = ("gaussian", "gumbel", "frank", "clayton")


def _setup_logging() -> None:
    level = os.environ.get("CENSORFUSE_LOG", "warning").upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR"):
        level = "WARNING"
    logging.basicConfig(
        level=getattr(logging, level),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


class _OutputTracker:
    """Records written files so a numerical abort can clean up after itself."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.paths = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name):
        p = os.path.join(self.out_dir, name)
        self.paths.append(p)
        return p

    def discard_all(self):
        for p in self.paths:
            try:
                os.unlink(p)
            except OSError:
                pass


def _write_csv(path, fieldnames, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".10g")
    return value


def _parse_rules(spec: str):
    rules = tuple(r.strip() for r in spec.split(",") if r.strip())
    if not rules:
        raise ConfigError("no rules requested")
    for rule in rules:
        if rule not in RULES:
            raise ConfigError(
                f"unknown rule '{rule}' (allowed: {', '.join(RULES)})"
            )
    return rules


def _write_manifest(tracker, config_path, loaded: LoadedConfig, started) -> None:
    manifest = {
        "config": config_path,
        "resolved": loaded.raw,
        "seed": loaded.scenario.seed,
        "config_hash": loaded.scenario.config_hash(),
        "version": __version__,
        "wall_clock_seconds": round(time.time() - started, 3),
        "outputs": [os.path.basename(p) for p in tracker.paths],
    }
    path = tracker.path("manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load(args) -> LoadedConfig:
    return load_config(
        args.config,
        seed=args.seed,
        trials=args.trials,
        quad_nodes=args.quad_nodes,
        window=args.window,
    )


def cmd_roc(args) -> int:
    started = time.time()
    loaded = _load(args)
    rules = _parse_rules(args.rules)
    cfg = loaded.scenario
    tracker = _OutputTracker(args.out)
    all_rows = []
    try:
        for rule in rules:
            log.info("roc: rule %s", rule)
            curve = roc(cfg, rule, jobs=args.jobs)
            rows = [
                {
                    "pf": _fmt(pf),
                    "pd": _fmt(pd),
                    "rule": rule,
                    "beta": _fmt(cfg.beta[0]),
                    "scenario": cfg.scenario.value,
                    "seed": cfg.seed,
                }
                for pf, pd in curve.points
            ]
            _write_csv(
                tracker.path(f"roc_{rule}.csv"),
                ["pf", "pd", "rule", "beta", "scenario", "seed"],
                rows,
            )
            all_rows.extend(
                {"pf": pf, "pd": pd, "rule": rule} for pf, pd in curve.points
            )
        render_roc(all_rows, tracker.path("roc.png"))
    except NumericalError as exc:
        tracker.discard_all()
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _write_manifest(tracker, args.config, loaded, started)
    return EXIT_OK


def cmd_sweep_beta(args) -> int:
    started = time.time()
    loaded = _load(args)
    rules = _parse_rules(args.rules)
    cfg = loaded.scenario
    betas = loaded.betas if loaded.betas is not None else DEFAULT_BETA_GRID
    tracker = _OutputTracker(args.out)
    all_rows = []
    try:
        for rule in rules:
            log.info("sweep-beta: rule %s over %d rates", rule, len(betas))
            points = sweep_beta(cfg, rule, betas, jobs=args.jobs)
            rows = [
                {
                    "beta": _fmt(beta),
                    "pd_at_alpha": _fmt(pd),
                    "rule": rule,
                    "alpha": _fmt(cfg.alpha),
                    "seed": cfg.seed,
                }
                for beta, pd in points
            ]
            _write_csv(
                tracker.path(f"sweep_{rule}.csv"),
                ["beta", "pd_at_alpha", "rule", "alpha", "seed"],
                rows,
            )
            all_rows.extend(
                {"beta": b, "pd_at_alpha": pd, "rule": rule} for b, pd in points
            )
        render_sweep(all_rows, tracker.path("sweep.png"))
    except NumericalError as exc:
        tracker.discard_all()
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _write_manifest(tracker, args.config, loaded, started)
    return EXIT_OK


def cf_series(marginal, q, ratios, n_freq=321):
    """Characteristic-function magnitude rows for the raw signal and for the
    compressor output at each censoring-interval-to-step ratio."""
    ups = np.linspace(0.0, 4.0 * np.pi / q, n_freq)
    rows = [
        {"upsilon": float(u), "magnitude": float(g), "series": "x"}
        for u, g in zip(ups, characteristic_function(marginal, ups))
    ]
    lo = marginal.mean(0) - 8.0 * marginal.sigma
    hi = marginal.mean(1) + 8.0 * marginal.sigma
    for ratio in ratios:
        t2 = ratio * q
        beta = float(marginal.cdf(t2, 0) - marginal.cdf(0.0, 0))
        scheme = CensoringScheme(t1=0.0, t2=t2, beta=beta)
        dx = q / 64.0
        grid = compress(scheme, q, lo) + dx * np.arange(
            int(np.ceil((compress(scheme, q, hi) - compress(scheme, q, lo)) / dx)) + 1
        )
        dens = compressed_density(marginal, scheme, q, 0, grid)
        mag = characteristic_function(dens, ups)
        rows.extend(
            {
                "upsilon": float(u),
                "magnitude": float(g),
                "series": f"ratio_{_fmt(ratio)}",
            }
            for u, g in zip(ups, mag)
        )
    return rows


def cmd_cf(args) -> int:
    """Characteristic-function magnitudes for the raw and compressed signal."""
    started = time.time()
    loaded = _load(args)
    cfg = loaded.scenario
    try:
        ratios = tuple(float(r) for r in args.ratios.split(","))
    except ValueError:
        print(f"bad --ratios value: {args.ratios!r}", file=sys.stderr)
        return EXIT_USAGE
    q = cfg.q if cfg.q is not None else DEFAULT_CF_STEP
    tracker = _OutputTracker(args.out)
    try:
        rows = cf_series(cfg.sensor_marginals[0], q, ratios)
        _write_csv(
            tracker.path("cf.csv"),
            ["upsilon", "magnitude", "series"],
            [
                {
                    "upsilon": _fmt(r["upsilon"]),
                    "magnitude": _fmt(r["magnitude"]),
                    "series": r["series"],
                }
                for r in rows
            ],
        )
        render_cf(rows, tracker.path("cf.png"))
    except NumericalError as exc:
        tracker.discard_all()
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _write_manifest(tracker, args.config, loaded, started)
    return EXIT_OK


def _read_pseudo_csv(path):
    rows = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            for lineno, record in enumerate(reader, start=1):
                if not record:
                    continue
                try:
                    rows.append([float(v) for v in record])
                except ValueError:
                    if lineno == 1:
                        continue  # header line
                    raise ConfigError(
                        f"{path}: non-numeric value at line {lineno}"
                    ) from None
                if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                    raise ConfigError(
                        f"{path}: ragged row at line {lineno}"
                    )
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    if data.shape[1] < 2:
        raise ConfigError(f"{path}: need at least two columns")
    return data


def _model_parameter(model):
    if model.family is CopulaFamily.PRODUCT:
        return None
    if model.sigma is not None:
        return np.asarray(model.sigma).tolist()
    return float(model.phi)


def cmd_fit(args) -> int:
    """Fit every library family to pseudo-observations and pick the best."""
    data = _read_pseudo_csv(args.data)
    if np.any(data <= 0.0) or np.any(data >= 1.0):
        raise ConfigError(
            f"{args.data}: values must lie strictly inside (0,1); "
            "transform raw observations through their marginal CDFs first"
        )
    families = []
    for name in args.library.split(","):
        name = name.strip()
        try:
            families.append(CopulaFamily(name))
        except ValueError:
            raise ConfigError(
                f"unknown copula family '{name}' "
                f"(allowed: {', '.join(f.value for f in CopulaFamily)})"
            ) from None
    selection = select_best(families, data)
    report = {"n_observations": int(data.shape[0]), "families": {}}
    for family, fit in selection.per_family:
        if fit is None:
            report["families"][family.value] = {"error": "fit failed"}
        else:
            report["families"][family.value] = {
                "parameter": _model_parameter(fit.model),
                "loglik": float(fit.loglik),
            }
    report["selected"] = selection.selected.model.family.value
    report["selected_loglik"] = float(selection.selected.loglik)
    report["fallback"] = bool(selection.fallback)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        out_path = os.path.join(args.out, "fit_report.json")
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def _add_common(parser) -> None:
    parser.add_argument("--config", required=True, help="JSON scenario config")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes for Monte Carlo trials")
    parser.add_argument("--quad-nodes", type=int, default=None,
                        help="override quadrature nodes per dimension")
    parser.add_argument("--trials", type=int, default=None,
                        help="override Monte Carlo trials per hypothesis")
    parser.add_argument("--window", type=int, default=None,
                        help="override window length L")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="censorfuse",
        description="Fusion rules for censored dependent sensor data",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_roc = sub.add_parser("roc", help="Monte Carlo ROC curves per rule")
    _add_common(p_roc)
    p_roc.add_argument("--rules", default=",".join(RULES),
                       help="comma-separated rule names")
    p_roc.set_defaults(func=cmd_roc)

    p_sweep = sub.add_parser("sweep-beta",
                             help="detection rate across censoring rates")
    _add_common(p_sweep)
    p_sweep.add_argument("--rules", default=",".join(RULES),
                         help="comma-separated rule names")
    p_sweep.set_defaults(func=cmd_sweep_beta)

    p_cf = sub.add_parser("cf", help="characteristic function magnitudes")
    _add_common(p_cf)
    p_cf.add_argument("--ratios", default=",".join(str(r) for r in DEFAULT_CF_RATIOS),
                      help="comma-separated t2/q compression ratios")
    p_cf.set_defaults(func=cmd_cf)

    p_fit = sub.add_parser("fit", help="fit copula families to a data file")
    p_fit.add_argument("--data", required=True,
                       help="CSV of unit-cube pseudo-observations")
    p_fit.add_argument("--library", default=",".join(_FIT_LIBRARY),
                       help="comma-separated families to try")
    p_fit.add_argument("--out", default=None, help="directory for fit_report.json")
    p_fit.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors and 0 for --help/--version
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CensorfuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
