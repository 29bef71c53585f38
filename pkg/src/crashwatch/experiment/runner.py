"""Full study: grid search per cell, repeated seeded test runs, persisted results."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import CrashwatchError
from ..evaluation import FIELDS, NOT_DEFINED, is_defined
from .config import ExperimentConfig, expand_grid
from .pipeline import MarketData, ModelBundle, derive_seed, evaluate_bundle, fit_bundle, fold_windows, prepare_market
from .plotting import ProbabilitySeries, write_series
from .search import grid_search

RAW_FIELDS = ("market", "alpha", "model", "run", "seed", "resampling") + FIELDS + ("hyper", "status")
AGG_METRICS = ("ifar", "hit_rate", "bal_acc", "auc_prc")
AGG_FIELDS = ("market", "alpha", "model", "resampling", "runs") + AGG_METRICS
ALL_MARKETS = "ALL"


def mode_name(enabled: bool) -> str:
    return "smote_enn" if enabled else "none"


def alpha_tag(alpha: float) -> str:
    return repr(float(alpha))


@dataclass
class CellResult:
    market: str
    alpha: float
    family: str
    resampling: str
    rows: list = field(default_factory=list)
    search: list = field(default_factory=list)
    best_index: int = 0
    checkpoint: bytes | None = None
    series: ProbabilitySeries | None = None
    error: str | None = None

    def mean(self, metric: str) -> float:
        vals = [r[metric] for r in self.rows if is_defined(r.get(metric, NOT_DEFINED))]
        return sum(vals) / len(vals) if vals else -math.inf


def cell_seed(cfg: ExperimentConfig, market: str, alpha: float, family: str, resampling: bool, run: int) -> int:
    return derive_seed(cfg.seed, market, alpha_tag(alpha), family, mode_name(resampling), run)


def run_cell(cfg: ExperimentConfig, md: MarketData, alpha: float, family: str, resampling: bool) -> CellResult:
    """Grid-search on the validation folds, then fit/test ``repetitions`` times on the test fold."""
    res = CellResult(md.name, alpha, family, mode_name(resampling))
    settings = cfg.resampling if resampling else None
    tag = (md.name, alpha_tag(alpha), family, res.resampling)
    try:
        grid = expand_grid(family, cfg.models[family])
        val_folds = [fold_windows(md, alpha, f, cfg) for f in cfg.plan.validation]
        found = grid_search(family, grid, val_folds, settings, cfg.seed, cfg.val_fraction, tag)
        res.search = [p.as_dict() for p in found.points]
        res.best_index = found.best_index
        hyper = found.best
        test = cfg.plan.test
        if test is None:
            raise CrashwatchError("split plan has no TEST fold")
        train_w, test_w = fold_windows(md, alpha, test, cfg)
    except Exception as exc:  # recorded per cell, the run continues
        res.error = _describe(exc)
        return res

    hyper_json = json.dumps(asdict(hyper), sort_keys=True)
    for run in range(cfg.repetitions):
        seed = cell_seed(cfg, md.name, alpha, family, resampling, run)
        row = {"market": md.name, "alpha": alpha, "model": family, "run": run, "seed": seed,
               "resampling": res.resampling, "hyper": hyper_json, "status": "ok"}
        try:
            bundle, _ = fit_bundle(family, hyper, train_w, settings, seed, cfg.val_fraction, protected=(test_w,))
            report, p = evaluate_bundle(bundle, test_w, cfg.decision_threshold)
            row.update(report.as_dict())
            if run == 0:
                res.checkpoint = bundle.dumps()
                res.series = ProbabilitySeries(test_w.sample_dates, p, test_w.labels, cfg.decision_threshold,
                                               f"{md.name} alpha={alpha_tag(alpha)} {family} ({res.resampling})")
        except Exception as exc:
            row["status"] = _describe(exc)
        res.rows.append(row)
    return res


def _describe(exc: BaseException) -> str:
    if isinstance(exc, (CrashwatchError, ValueError, FloatingPointError)):
        return f"{type(exc).__name__}: {exc}"
    return f"{type(exc).__name__}: {exc} | {traceback.format_exc(limit=3).strip().splitlines()[-1]}"


def _cell_task(args):
    return run_cell(*args)


def plan_cells(cfg: ExperimentConfig, markets: dict) -> list[tuple]:
    """Work items in a fixed order: market, alpha, family, resampling mode."""
    tasks = []
    for m in cfg.markets:
        for alpha in cfg.alphas:
            for family in cfg.models:
                for enabled in cfg.resampling.modes():
                    tasks.append((cfg, markets[m.name], alpha, family, enabled))
    return tasks


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, markets: dict | None = None, write: bool = True) -> dict:
    """Run every cell and, when ``write`` is set, persist results under ``cfg.out_dir``.

    Cells are independent and seeded from their own coordinates, so the
    output does not depend on ``jobs``.
    """
    if markets is None:
        markets = {}
        for m in cfg.markets:
            md = prepare_market(cfg, m)
            if cfg.expected_predictors is not None and md.panel.shape[1] != cfg.expected_predictors:
                raise CrashwatchError(f"{m.name}: {md.panel.shape[1]} predictors, expected {cfg.expected_predictors}")
            cfg.plan.check_coverage(md.panel.dates)
            markets[m.name] = md
    tasks = plan_cells(cfg, markets)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_cell_task, tasks))
    else:
        cells = [_cell_task(t) for t in tasks]
    raw = [r for c in cells for r in c.rows]
    agg = aggregate(raw)
    out = {"cells": cells, "raw": raw, "agg": agg}
    if write:
        out["files"] = write_results(cfg, cells, raw, agg)
    return out


# -- persistence ------------------------------------------------------------

def _fmt(v) -> str:
    if v is NOT_DEFINED:
        return "NOT_DEFINED"
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def table_csv(rows: list, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


def aggregate(raw: list) -> list:
    """Per-cell means over defined values, plus pooled rows across markets."""
    groups: dict = {}
    for r in raw:
        if r["status"] != "ok":
            continue
        for market in (r["market"], ALL_MARKETS):
            key = (market, r["alpha"], r["model"], r["resampling"])
            groups.setdefault(key, []).append(r)
    per_market = [k for k in groups if k[0] != ALL_MARKETS]
    pooled = [k for k in groups if k[0] == ALL_MARKETS]
    out = []
    for key in per_market + pooled:
        rows = groups[key]
        rec = dict(zip(("market", "alpha", "model", "resampling"), key))
        rec["runs"] = len(rows)
        for m in AGG_METRICS:
            vals = [x[m] for x in rows if is_defined(x[m])]
            rec[m] = float(np.mean(vals)) if vals else NOT_DEFINED
        out.append(rec)
    return out


def _write(path: str, text: str) -> str:
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def write_results(cfg: ExperimentConfig, cells: list, raw: list, agg: list) -> list:
    os.makedirs(cfg.out_dir, exist_ok=True)
    ck_dir = os.path.join(cfg.out_dir, "checkpoints")
    os.makedirs(ck_dir, exist_ok=True)
    files = [
        _write(os.path.join(cfg.out_dir, "results_raw.csv"), table_csv(raw, RAW_FIELDS)),
        _write(os.path.join(cfg.out_dir, "results_agg.csv"), table_csv(agg, AGG_FIELDS)),
    ]
    log = [{"market": c.market, "alpha": c.alpha, "model": c.family, "resampling": c.resampling,
            "best_index": c.best_index, "points": c.search, "error": c.error} for c in cells]
    files.append(_write(os.path.join(cfg.out_dir, "search.json"), json.dumps(log, indent=1, sort_keys=True) + "\n"))

    for c in cells:
        if c.checkpoint is None:
            continue
        ext = "ckpt" if c.family in ("rnn", "lstm", "gru") else "json"
        path = os.path.join(ck_dir, f"{c.market}_{alpha_tag(c.alpha)}_{c.family}_{c.resampling}.{ext}")
        with open(path, "wb") as fh:
            fh.write(c.checkpoint)
        files.append(path)

    # one probability chart per (market, alpha): the cell with the best mean test AUC-PRC
    best: dict = {}
    for c in cells:
        if c.series is None:
            continue
        key = (c.market, c.alpha)
        if key not in best or c.mean("auc_prc") > best[key].mean("auc_prc"):
            best[key] = c
    for (market, alpha), c in best.items():
        stem = os.path.join(cfg.out_dir, f"probability_{market}_{alpha_tag(alpha)}")
        files.extend(write_series(c.series, stem))
    return files


def load_raw(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
