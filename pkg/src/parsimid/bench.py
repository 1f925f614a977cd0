"""Seeded Monte-Carlo experiment harness.

Three experiments over the scalar ARMAX benchmark: pole error as a function
of the past horizon (sweet spot), the SVD robustness ratio kappa against
the sample count per weighting, and pole error against the sample count per
weighting and realization.  Every experiment writes one CSV row per
(grid point, weighting, realization, trial); rows are produced in a fixed
order and all floats are printed with 17 significant digits, so a config and
base seed determine the output bytes exactly.

Trial t draws its trajectory from seeds derived as base_seed + t (input) and
base_seed + t + 2^31 (noise).  Within a trial, one record of the largest
grid length is simulated and shorter grid points use its prefixes, which
equals simulating them separately with the same seeds.
"""

from __future__ import annotations

import csv
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from .bounds import svd_robustness
from .exceptions import DataFormatError, ParsimIdError
from .hankel import HorizonConfig, build_bundle
from .lti import (
    InputSpec,
    StateSpaceModel,
    Trajectory,
    armax_to_ss,
    simulate,
    true_hankel,
)
from .pipeline import dominant_pole_error
from .realization import realize_cva, realize_moesp, weighted_svd_truncate
from .regression import fit_parsim
from .weighting import build_weighting

EXPERIMENTS = ("sweetspot", "kappa", "poles")

NOISE_SEED_OFFSET = 1 << 31

CSV_COLUMNS = ("experiment", "trial", "seed", "nbar", "p", "f", "weighting",
               "realization", "pole_error", "kappa", "condition_met",
               "status", "wall_time")

SUMMARY_COLUMNS = ("experiment", "nbar", "p", "f", "weighting", "realization",
                   "metric", "count", "failures", "median", "q25", "q75")

PAPER_COLORED_GAIN = 0.318
PAPER_COLORED_A1 = 0.5
PAPER_COLORED_A2 = -0.9


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of one Monte-Carlo sweep (benchmark defaults)."""

    experiment: str
    out: str
    nbar_grid: tuple[int, ...] = (500, 1500, 2500)
    p_grid: tuple[int, ...] = (7,)
    f: int = 7
    order: int = 1
    weightings: tuple[str, ...] = ("okid",)
    realizations: tuple[str, ...] = ("moesp", "cva")
    trials: int = 100
    base_seed: int = 0
    armax_a: float = -0.7
    armax_b: float = 1.0
    armax_c: float = 0.5
    sigma_e_sq: float = 4.0
    input_kind: str = "white"
    sigma_u: float = 1.0
    colored_gain: float = PAPER_COLORED_GAIN
    colored_a1: float = PAPER_COLORED_A1
    colored_a2: float = PAPER_COLORED_A2
    jobs: int = 0          # 0: use all cores
    timing: bool = False   # real wall times break byte determinism
    max_failure_rate: float = 0.5

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise DataFormatError(
                f"unknown experiment {self.experiment!r}; "
                f"choose from {EXPERIMENTS}")
        if not self.nbar_grid or not self.p_grid:
            raise DataFormatError("nbar_grid and p_grid must be nonempty")
        if self.trials < 1:
            raise DataFormatError("trials must be >= 1")

    def model(self) -> StateSpaceModel:
        return armax_to_ss(self.armax_a, self.armax_b, self.armax_c,
                           self.sigma_e_sq)

    def input_spec(self, seed: int) -> InputSpec:
        if self.input_kind == "white":
            return InputSpec.white(self.sigma_u, seed)
        if self.input_kind == "colored":
            return InputSpec.colored_ar2(self.colored_gain, self.colored_a1,
                                         self.colored_a2, seed)
        raise DataFormatError(f"unknown input kind {self.input_kind!r}")


@dataclass(frozen=True)
class TrialRecord:
    experiment: str
    trial: int
    seed: int
    nbar: int
    p: int
    f: int
    weighting: str
    realization: str
    pole_error: float
    kappa: float
    condition_met: bool
    status: str
    wall_time: float

    def to_row(self) -> list[str]:
        return [self.experiment, str(self.trial), str(self.seed),
                str(self.nbar), str(self.p), str(self.f), self.weighting,
                self.realization, _fmt(self.pole_error), _fmt(self.kappa),
                str(int(self.condition_met)), self.status,
                _fmt(self.wall_time)]


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _prefix(traj: Trajectory, nbar: int) -> Trajectory:
    if nbar == traj.nbar:
        return traj
    return Trajectory(u=traj.u[:nbar], y=traj.y[:nbar], seed=traj.seed,
                      input_seed=traj.input_seed,
                      e=None if traj.e is None else traj.e[:nbar],
                      x=None if traj.x is None else traj.x[:nbar])


def _run_trial(cfg: ExperimentConfig, trial: int) -> list[TrialRecord]:
    """All grid rows of one trial, in deterministic grid order."""
    model = cfg.model()
    seed = cfg.base_seed + trial
    spec = cfg.input_spec(seed)

    nbar_max = max(cfg.nbar_grid)
    t0 = time.perf_counter()
    traj_full = simulate(model, nbar_max, spec, seed + NOISE_SEED_OFFSET)

    truth_cache: dict[int, np.ndarray] = {}
    records: list[TrialRecord] = []
    for nbar in cfg.nbar_grid:
        traj = _prefix(traj_full, nbar)
        for p in cfg.p_grid:
            try:
                cfg_h = HorizonConfig.from_nbar(p, cfg.f, nbar)
                bundle = build_bundle(traj, cfg_h)
                estimate = fit_parsim(bundle)
                truth = truth_cache.get(p)
                if truth is None:
                    truth = true_hankel(model, cfg.f, p)
                    truth_cache[p] = truth
            except ParsimIdError as exc:
                records.extend(_failure_rows(cfg, trial, seed, nbar, p,
                                             type(exc).__name__))
                continue
            for wk in cfg.weightings:
                try:
                    pair = build_weighting(wk, bundle)
                    rob = svd_robustness(estimate, pair, truth, cfg.order)
                    balanced = weighted_svd_truncate(estimate, pair, cfg.order)
                except ParsimIdError as exc:
                    for rk in cfg.realizations:
                        records.append(_record(cfg, trial, seed, nbar, p, wk,
                                               rk, math.nan, math.nan, False,
                                               type(exc).__name__, 0.0))
                    continue
                for rk in cfg.realizations:
                    try:
                        if rk == "moesp":
                            est = realize_moesp(balanced, model.n_y, model.n_u)
                        else:
                            est = realize_cva(balanced, bundle)
                        perr = dominant_pole_error(est, model.a)
                        status = "ok"
                    except ParsimIdError as exc:
                        perr = math.nan
                        status = type(exc).__name__
                    wall = time.perf_counter() - t0 if cfg.timing else 0.0
                    records.append(_record(cfg, trial, seed, nbar, p, wk, rk,
                                           perr, rob.kappa, rob.condition_met,
                                           status, wall))
    return records


def _record(cfg, trial, seed, nbar, p, wk, rk, perr, kappa, met, status,
            wall) -> TrialRecord:
    return TrialRecord(experiment=cfg.experiment, trial=trial, seed=seed,
                       nbar=nbar, p=p, f=cfg.f, weighting=str(wk),
                       realization=str(rk), pole_error=perr, kappa=kappa,
                       condition_met=met, status=status, wall_time=wall)


def _failure_rows(cfg, trial, seed, nbar, p, status) -> list[TrialRecord]:
    return [_record(cfg, trial, seed, nbar, p, wk, rk, math.nan, math.nan,
                    False, status, 0.0)
            for wk in cfg.weightings for rk in cfg.realizations]


def _trial_worker(args):
    cfg_dict, trial = args
    return _run_trial(ExperimentConfig(**cfg_dict), trial)


def run_experiment(cfg: ExperimentConfig) -> tuple[list[TrialRecord], float]:
    """Run the sweep, write its CSV, and return (records, failure rate).

    Rows are ordered by (nbar, p, weighting, realization, trial) regardless
    of how the trial pool schedules the work.
    """
    jobs = cfg.jobs or (os.cpu_count() or 1)
    jobs = min(jobs, cfg.trials)
    if jobs <= 1:
        per_trial = [_run_trial(cfg, t) for t in range(cfg.trials)]
    else:
        import multiprocessing as mp

        cfg_dict = cfg.__dict__.copy()
        with mp.get_context("spawn").Pool(jobs) as pool:
            per_trial = pool.map(_trial_worker,
                                 [(cfg_dict, t) for t in range(cfg.trials)],
                                 chunksize=1)
    records = [r for rows in per_trial for r in rows]
    wk_order = {w: j for j, w in enumerate(cfg.weightings)}
    rk_order = {r: j for j, r in enumerate(cfg.realizations)}
    records.sort(key=lambda r: (r.nbar, r.p, wk_order.get(r.weighting, 99),
                                rk_order.get(r.realization, 99), r.trial))
    failure_rate = (sum(1 for r in records if r.status != "ok")
                    / max(len(records), 1))
    with open(cfg.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(r.to_row())
    return records, failure_rate


# ---------------------------------------------------------------------------
# Summaries.
# ---------------------------------------------------------------------------

def read_records(path) -> list[dict]:
    """Parse a trial CSV, validating the schema row by row."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(CSV_COLUMNS):
            raise DataFormatError(
                f"unexpected header {header!r}; expected {list(CSV_COLUMNS)}",
                line=1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_COLUMNS):
                raise DataFormatError(
                    f"row has {len(row)} fields, expected {len(CSV_COLUMNS)}",
                    line=lineno)
            rec = dict(zip(CSV_COLUMNS, row))
            try:
                for key in ("trial", "seed", "nbar", "p", "f"):
                    rec[key] = int(rec[key])
                for key in ("pole_error", "kappa", "wall_time"):
                    rec[key] = float(rec[key])
                rec["condition_met"] = bool(int(rec["condition_met"]))
            except ValueError as exc:
                raise DataFormatError(f"bad field in row: {exc}",
                                      line=lineno) from exc
            rows.append(rec)
    return rows


def summarize(in_path, out_path) -> list[dict]:
    """Aggregate a trial CSV into per-cell median/quartile rows.

    One output row per (grid cell, metric in {pole_error, kappa}); failed
    trials are excluded from the statistics but counted.
    """
    rows = read_records(in_path)
    groups: dict[tuple, list[dict]] = {}
    for rec in rows:
        key = (rec["experiment"], rec["nbar"], rec["p"], rec["f"],
               rec["weighting"], rec["realization"])
        groups.setdefault(key, []).append(rec)

    out_rows: list[dict] = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], k[4], k[5])):
        cell = groups[key]
        failures = sum(1 for r in cell if r["status"] != "ok")
        for metric in ("pole_error", "kappa"):
            vals = np.array([r[metric] for r in cell if r["status"] == "ok"
                             and not math.isnan(r[metric])])
            if len(vals):
                med, q25, q75 = (float(np.median(vals)),
                                 float(np.quantile(vals, 0.25)),
                                 float(np.quantile(vals, 0.75)))
            else:
                med = q25 = q75 = math.nan
            out_rows.append(dict(zip(SUMMARY_COLUMNS, (
                key[0], key[1], key[2], key[3], key[4], key[5], metric,
                len(cell), failures, med, q25, q75))))
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for r in out_rows:
            writer.writerow([r["experiment"], r["nbar"], r["p"], r["f"],
                             r["weighting"], r["realization"], r["metric"],
                             r["count"], r["failures"], _fmt(r["median"]),
                             _fmt(r["q25"]), _fmt(r["q75"])])
    return out_rows


def parse_config_file(path) -> dict:
    """Plain-text key = value config; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataFormatError(
                    f"expected 'key = value', got {line!r}", line=lineno)
            key, val = (part.strip() for part in line.split("=", 1))
            out[key] = val
    return out
