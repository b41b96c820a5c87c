"""Monte-Carlo sweeps over (n, eta, p): sampling, ranking, metrics, CSV output.

Configs are flat ``key = value`` text files; list values are comma separated
and ``#`` starts a comment. Example::

    kind = uniform-grid
    n = 1000
    p = 0.25, 0.5, 1.0
    snr = 0.5, 0.8, 1.7     # eta is solved per (n, p); or give eta = ... instead
    trials = 25
    methods = unnormalized
    seed = 7

Each instance is sampled once and shared by every requested method. Random
streams are keyed by (n, eta, p, trial), so a cell's results do not depend on
which other cells are in the grid.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .eigen import DEFAULT_TOL
from .errors import ConfigError, EroError
from .metrics import displacement, relative_linf_error
from .model import EroParams, make_ground_truth, read_ground_truth_csv, sample_comparisons
from .population import eta_for_snr, population_spectrum
from .ranking import METHODS, align_sign, rank, ranks
from .theory import CHECKS

log = logging.getLogger(__name__)

RECORD_HEADER = ("n,p,eta,trial,method,snr,rel_linf,rho_max,rho_mean,"
                 "sigma_top,residual,sign,wall_ms,error")
SUMMARY_HEADER = ("n,eta,p,method,snr,count,failures,rel_linf_mean,rel_linf_std,"
                  "rho_max_mean,rho_max_std,rho_mean_mean,rho_mean_std,warning")
OUTPUT_DIR_ENV = "ERORANKING_OUTPUT_DIR"
DEFAULT_GRID = tuple(round(0.05 * k, 2) for k in range(1, 21))


@dataclass
class ExperimentConfig:
    kind: str = "uniform-grid"
    n: list = field(default_factory=lambda: [200])
    eta: list = field(default_factory=list)
    p: list = field(default_factory=list)
    snr: list = field(default_factory=list)
    trials: int = 25
    methods: list = field(default_factory=lambda: ["unnormalized"])
    seed: int = 0
    output_dir: str = "results"
    emit_plots: bool = True
    workers: int = 1
    gamma_shape: float = 1.0
    gamma_scale: float = 1.0
    scores_file: str = ""
    tol: float = DEFAULT_TOL
    max_iter: int = 0
    timing: bool = False
    errorbar: bool = False
    # validate only
    checks: list = field(default_factory=lambda: list(CHECKS))
    k_indices: list = field(default_factory=list)
    calibration: str = ""

    def validate(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.n or any(v < 2 for v in self.n):
            raise ConfigError("n must be a nonempty list of integers >= 2")
        # an absent sweep axis falls back to the default 20-point grid
        if not self.p:
            self.p = list(DEFAULT_GRID)
        if not self.eta and not self.snr:
            self.eta = list(DEFAULT_GRID)
        if any(not 0 < v <= 1 for v in self.p):
            raise ConfigError("p must be a nonempty list of values in (0, 1]")
        if self.eta and self.snr:
            raise ConfigError("give either eta or snr, not both")
        if any(not 0 < v <= 1 for v in self.eta):
            raise ConfigError("eta values must lie in (0, 1]")
        if any(v <= 0 for v in self.snr):
            raise ConfigError("snr values must be positive")
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise ConfigError(f"methods must be a nonempty subset of {METHODS}")
        if self.kind not in ("uniform-grid", "sorted-gamma", "custom"):
            raise ConfigError(f"unknown kind {self.kind!r}")
        if self.kind == "custom" and not self.scores_file:
            raise ConfigError("kind = custom needs scores_file")
        if any(c not in CHECKS for c in self.checks):
            raise ConfigError(f"checks must be a subset of {CHECKS}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self


_LIST_FLOAT = {"eta", "p", "snr"}
_LIST_INT = {"n", "k_indices"}
_LIST_STR = {"methods", "checks"}
_INT = {"trials", "seed", "workers", "max_iter"}
_FLOAT = {"gamma_shape", "gamma_scale", "tol"}
_BOOL = {"emit_plots", "timing", "errorbar"}
_STR = {"kind", "output_dir", "scores_file", "calibration"}


def _parse_bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_config(text: str, base_dir=None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        seen.add(key)
        items = [v.strip() for v in value.split(",") if v.strip()]
        try:
            if key in _LIST_FLOAT:
                parsed = [float(v) for v in items]
            elif key in _LIST_INT:
                parsed = [int(v) for v in items]
            elif key in _LIST_STR:
                parsed = items
            elif key in _INT:
                parsed = int(value)
            elif key in _FLOAT:
                parsed = float(value)
            elif key in _BOOL:
                parsed = _parse_bool(value)
            elif key in _STR:
                parsed = value
            else:
                raise ConfigError(f"unknown key {key!r}", lineno)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
        setattr(cfg, key, parsed)
    if base_dir is not None:
        for key in ("scores_file", "calibration"):
            val = getattr(cfg, key)
            if val and not os.path.isabs(val):
                setattr(cfg, key, str(Path(base_dir) / val))
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, base_dir=path.parent)


@dataclass
class TrialRecord:
    n: int
    p: float
    eta: float
    trial: int
    method: str
    snr: float
    rel_linf: float = math.nan
    rho_max: float = math.nan
    rho_mean: float = math.nan
    sigma_top: float = math.nan
    residual: float = math.nan
    sign: int = 0
    wall_ms: int = 0
    error: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error)


@dataclass
class SweepResult:
    records: list
    # (n, eta, p) -> trials x n matrix of x - s * xbar for the unnormalized method
    errorbars: dict = field(default_factory=dict)
    references: dict = field(default_factory=dict)


def ground_truth_for(cfg: ExperimentConfig, n: int):
    if cfg.kind == "custom":
        gt = read_ground_truth_csv(cfg.scores_file)
        if gt.n != n:
            raise ConfigError(f"scores_file has {gt.n} items but n = {n}")
        return gt
    seed = rngmod.child_seed(cfg.seed, rngmod.TRUTH, n)
    return make_ground_truth(cfg.kind, n, cfg.gamma_shape, cfg.gamma_scale, seed)


def grid_cells(cfg: ExperimentConfig):
    """``(n, eta, p, gt)`` in sweep order; iso-SNR cells needing eta > 1 are dropped."""
    cells = []
    for n in cfg.n:
        gt = ground_truth_for(cfg, n)
        if cfg.snr:
            for target in cfg.snr:
                for p in cfg.p:
                    eta = eta_for_snr(gt, p, target)
                    if eta > 1:
                        log.warning("snr %g unreachable at n=%d, p=%g (needs eta=%.3g); skipped",
                                    target, n, p, eta)
                        continue
                    cells.append((n, eta, p, gt))
        else:
            for eta in cfg.eta:
                for p in cfg.p:
                    cells.append((n, eta, p, gt))
    return cells


def _run_instance(task):
    gt, n, eta, p, trial, methods, seed, tol, max_iter, timing, want_errors = task
    key = (n, rngmod.float_key(eta), rngmod.float_key(p), trial)
    params = EroParams(n, p, eta, seed)
    pop = population_spectrum(gt, params)
    cm, _ = sample_comparisons(gt, params, rngmod.stream(seed, rngmod.SAMPLE, *key))
    solver_seed = rngmod.child_seed(seed, rngmod.SOLVER, *key)
    truth_rank = None
    out, err_vec = [], None
    for method in methods:
        rec = TrialRecord(n, p, eta, trial, method, float(pop.snr))
        t0 = time.perf_counter()
        try:
            est = rank(cm, method, tol=tol, max_iter=max_iter or None, seed=solver_seed)
            ref = pop.x_bar_unnorm if method == "unnormalized" else pop.normalized_reference
            est = align_sign(est, ref)
            if truth_rank is None:
                truth_rank = ranks(gt.scores)
            disp = displacement(truth_rank, est.permutation)
            rec.rel_linf = relative_linf_error(est.score, ref)
            rec.rho_max, rec.rho_mean = disp.max, disp.mean
            rec.sigma_top = est.eigen.value
            rec.residual = est.eigen.residual
            rec.sign = est.sign_used
            if want_errors and method == "unnormalized":
                x = est.score * (np.linalg.norm(ref) / np.linalg.norm(est.score))
                s = 1.0 if np.abs(x - ref).max() <= np.abs(x + ref).max() else -1.0
                err_vec = x - s * ref
        except EroError as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
        if timing:
            rec.wall_ms = int(round((time.perf_counter() - t0) * 1000))
        out.append(rec)
    return out, err_vec


def sweep(cfg: ExperimentConfig, workers: int | None = None) -> SweepResult:
    workers = workers or cfg.workers
    tasks = []
    cells = grid_cells(cfg)
    for n, eta, p, gt in cells:
        want = cfg.errorbar and n <= 500 and "unnormalized" in cfg.methods
        for t in range(cfg.trials):
            tasks.append((gt, n, eta, p, t, tuple(cfg.methods), cfg.seed, cfg.tol,
                          cfg.max_iter, cfg.timing, want))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_instance, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = [_run_instance(t) for t in tasks]

    result = SweepResult([])
    for task, (recs, err_vec) in zip(tasks, results):
        result.records.extend(recs)
        if err_vec is not None:
            gt, n, eta, p = task[0], task[1], task[2], task[3]
            result.errorbars.setdefault((n, eta, p), []).append(err_vec)
            if (n, eta, p) not in result.references:
                result.references[(n, eta, p)] = population_spectrum(gt, EroParams(n, p, eta)).x_bar_unnorm
    result.errorbars = {k: np.array(v) for k, v in result.errorbars.items()}
    return result


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> list:
    return sweep(cfg, workers).records


def format_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_records(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_HEADER.split(","))
        for r in records:
            w.writerow([format_value(getattr(r, f.name)) for f in fields(TrialRecord)])


def read_records(path) -> list:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for f in fields(TrialRecord):
                v = row[f.name]
                if f.type == "int":
                    kw[f.name] = int(v)
                elif f.type == "float":
                    kw[f.name] = float(v) if v != "" else math.nan
                else:
                    kw[f.name] = v
            out.append(TrialRecord(**kw))
    return out


@dataclass
class SummaryRow:
    n: int
    eta: float
    p: float
    method: str
    snr: float
    count: int
    failures: int
    rel_linf_mean: float = math.nan
    rel_linf_std: float = math.nan
    rho_max_mean: float = math.nan
    rho_max_std: float = math.nan
    rho_mean_mean: float = math.nan
    rho_mean_std: float = math.nan
    warning: str = ""


def _mean_std(values):
    if len(values) == 1:
        return values[0], 0.0
    return statistics.fmean(values), statistics.stdev(values)


def aggregate(records) -> list:
    """Mean and sample standard deviation per (n, eta, p, method), in first-seen order."""
    if not records:
        raise ValueError("no records to aggregate")
    groups = {}
    for r in records:
        groups.setdefault((r.n, r.eta, r.p, r.method), []).append(r)
    rows = []
    for (n, eta, p, method), recs in groups.items():
        ok = [r for r in recs if not r.failed]
        row = SummaryRow(n, eta, p, method, recs[0].snr, len(ok), len(recs) - len(ok))
        if not ok:
            row.warning = "all trials failed"
            log.warning("group n=%d eta=%g p=%g %s: all %d trials failed", n, eta, p, method, len(recs))
        else:
            row.rel_linf_mean, row.rel_linf_std = _mean_std([r.rel_linf for r in ok])
            row.rho_max_mean, row.rho_max_std = _mean_std([r.rho_max for r in ok])
            row.rho_mean_mean, row.rho_mean_std = _mean_std([r.rho_mean for r in ok])
        rows.append(row)
    return rows


def write_summary(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER.split(","))
        for r in rows:
            w.writerow([format_value(v) for v in asdict(r).values()])


def resolve_output_dir(cfg: ExperimentConfig, override=None) -> Path:
    if override:
        return Path(override)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env)
    return Path(cfg.output_dir)
