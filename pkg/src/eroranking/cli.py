"""Command line entry point.

    eroranking run <config>        sweep, write records.csv, summary.csv and plots
    eroranking validate <config>   run the bound checks, write lemma_checks.csv
    eroranking demo                noiseless smoke test
    eroranking calibrate           rerun the calibration pilot

Exit codes: 0 success, 1 configuration error, 2 a bound check failed.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import experiment as ex
from . import plots, theory
from .errors import ConfigError, EroError, OutOfRegime
from .model import EroParams, make_ground_truth, sample_comparisons
from .ranking import rank

log = logging.getLogger("eroranking")

EXIT_OK, EXIT_CONFIG, EXIT_CHECK_FAILED = 0, 1, 2
LEMMA_HEADER = "check,n,eta,p,trials,observed_max_ratio,bound_constant,passed,note"


def _config_path(args):
    path = args.config_opt or args.config
    if not path:
        raise ConfigError("a config file is required (positional or --config)")
    return path


def _load(args):
    cfg = ex.load_config(_config_path(args))
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "workers", None):
        cfg.workers = args.workers
    if getattr(args, "no_plots", False):
        cfg.emit_plots = False
    if getattr(args, "timing", False):
        cfg.timing = True
    return cfg.validate()


def cmd_run(args) -> int:
    cfg = _load(args)
    out = ex.resolve_output_dir(cfg, args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = ex.sweep(cfg)
    ex.write_records(out / "records.csv", result.records)
    summary = ex.aggregate(result.records)
    ex.write_summary(out / "summary.csv", summary)
    failed = sum(r.failed for r in result.records)
    print(f"{len(result.records)} records ({failed} failed) -> {out / 'records.csv'}")
    if cfg.emit_plots:
        _emit_plots(cfg, summary, result, out)
    return EXIT_OK


def _emit_plots(cfg, summary, result, out):
    multi_n = len(cfg.n) > 1
    for n in cfg.n:
        for method in cfg.methods:
            for metric in ("rel_linf", "rho_max", "rho_mean"):
                suffix = f"_n{n}" if multi_n else ""
                path = out / f"heatmap_{metric}_{method}{suffix}.svg"
                try:
                    plots.emit_heatmap(summary, metric, path, method=method, n=n)
                except plots.NonRectangularGrid as exc:
                    log.warning("heatmap skipped: %s", exc)
    used = set()
    for (n, eta, p), errs in result.errorbars.items():
        snr = next(r.snr for r in summary if (r.n, r.eta, r.p) == (n, eta, p))
        name = f"errorbar_{snr:.2f}"
        if name in used:
            name += f"_n{n}_p{p:g}"
        used.add(name)
        plots.emit_errorbar(errs, result.references[(n, eta, p)], out / f"{name}.svg",
                            title=f"n={n}, SNR={snr:.2f}, eta={eta:.3g}, p={p:.3g}")


def cmd_validate(args) -> int:
    cfg = _load(args)
    out = ex.resolve_output_dir(cfg, args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        calibration = theory.load_calibration(cfg.calibration or None)
    except (OSError, theory.InvalidParameter) as exc:
        raise ConfigError(f"calibration: {exc}") from None
    missing = [c for c in cfg.checks if c not in calibration]
    if missing:
        raise ConfigError(f"calibration file has no constant for {', '.join(missing)}")
    rows = []
    any_failed = False
    for n, eta, p, gt in ex.grid_cells(cfg):
        params = EroParams(n, p, eta, cfg.seed)
        for name in cfg.checks:
            note = ""
            try:
                res = theory.run_check(name, gt, params, cfg.trials, calibration=calibration,
                                       k_indices=cfg.k_indices or None)
            except OutOfRegime as exc:
                note = f"skipped: {exc}"
            except theory.InvalidParameter as exc:
                note = f"skipped: {exc}"
            except EroError as exc:
                note = f"error: {type(exc).__name__}: {exc}"
                any_failed = True
            if note:
                rows.append([name, n, eta, p, cfg.trials, "", calibration[name].constant,
                             "" if note.startswith("skipped") else False, note])
                tag = "SKIP" if note.startswith("skipped") else "ERR "
                print(f"[{tag}] {name:17s} n={n} eta={eta:.4g} p={p:.4g}  {note}")
                continue
            any_failed |= not res.passed
            rows.append([name, n, eta, p, res.trials, res.observed_max_ratio, res.bound_constant,
                         res.passed, res.note])
            tag = "PASS" if res.passed else "FAIL"
            print(f"[{tag}] {name:17s} n={n} eta={eta:.4g} p={p:.4g}  "
                  f"ratio={res.observed_max_ratio:.4g} <= {res.bound_constant:g}")
    with open(out / "lemma_checks.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEMMA_HEADER.split(","))
        for row in rows:
            w.writerow([ex.format_value(v) for v in row])
    return EXIT_CHECK_FAILED if any_failed else EXIT_OK


def cmd_demo(args) -> int:
    n = 10
    gt = make_ground_truth("uniform-grid", n)
    cm, _ = sample_comparisons(gt, EroParams(n, 1.0, 1.0, 0))
    for method in ("unnormalized", "normalized"):
        est = rank(cm, method)
        print(f"{method:13s} permutation: {' '.join(str(int(v)) for v in est.permutation)}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    path = Path(args.out or "calibration.txt")
    table = theory.run_pilot(seed=args.seed, trials=args.trials, path=path)
    for name, e in table.items():
        print(f"{name:17s} {e.constant:g}")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eroranking", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, help_ in (("run", cmd_run, "run a Monte-Carlo sweep"),
                            ("validate", cmd_validate, "run the perturbation-bound checks")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", nargs="?")
        p.add_argument("--config", dest="config_opt")
        p.add_argument("--workers", type=int)
        p.add_argument("--out", help="output directory (overrides config and $%s)" % ex.OUTPUT_DIR_ENV)
        p.add_argument("--no-plots", action="store_true")
        p.add_argument("--seed", type=int)
        p.add_argument("--timing", action="store_true", help="fill wall_ms (breaks byte-identical output)")
        p.set_defaults(func=fn)

    p = sub.add_parser("demo", help="noiseless n=10 smoke test")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("calibrate", help="rerun the calibration pilot")
    p.add_argument("--out", help="calibration file to write (default ./calibration.txt)")
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--trials", type=int, default=20)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
