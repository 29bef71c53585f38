"""Command-line entry point: one subcommand per pipeline stage plus the full run.

Every command prints a one-line summary on stdout and a JSON status object on
stderr. Exit codes: 0 success, 1 user error, 2 internal error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import traceback

import numpy as np

from .errors import CrashwatchError, UsageError

SUBCOMMANDS = ("ingest", "features", "label", "windows", "resample", "train", "evaluate", "gridsearch", "run", "plot")
EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, self.format_help())


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crashwatch", description="Early crash detection pipeline.")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, help_text, *flags):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        for flag in flags:
            _FLAGS[flag](sp)
        return sp

    add("ingest", "Parse instrument CSVs; write aligned prices and anchor returns.", "config", "in", "out", "market")
    add("features", "Indicator catalog, sparse-column drop, warm-up trim and KNN imputation.",
        "config", "out", "market")
    add("label", "VaR threshold and crash labels for a returns file.",
        "config", "in", "out", "alpha", "market", "threshold-window")
    add("windows", "Build T-step windows from a features CSV and a labels CSV.", "config", "in", "out", "market", "alpha")
    add("resample", "SMOTE-ENN a windows file (training data only).", "config", "in", "out", "seed")
    add("train", "Fit one model family on the test fold's training range.",
        "config", "in", "out", "alpha", "model", "seed", "baseline", "market", "threshold-window")
    add("evaluate", "Score a checkpoint on the test fold.", "config", "in", "out", "alpha", "model", "market",
        "threshold-window")
    add("gridsearch", "Grid search one model family on the validation folds.",
        "config", "in", "out", "alpha", "model", "seed", "baseline", "market", "threshold-window")
    add("run", "Full experiment: search, repeated runs, results tables and plots.",
        "config", "out", "seed", "jobs", "baseline", "threshold-window")
    add("plot", "Crash-probability CSV and SVG for a checkpoint on the test fold.",
        "config", "in", "out", "alpha", "model", "market", "threshold-window")
    return p


_FLAGS = {
    "config": lambda sp: sp.add_argument("--config", help="experiment JSON file"),
    "in": lambda sp: sp.add_argument("--in", dest="inputs", nargs="+", default=[], help="input file(s)"),
    "out": lambda sp: sp.add_argument("--out", help="output file or directory"),
    "alpha": lambda sp: sp.add_argument("--alpha", type=float, help="VaR tail probability"),
    "model": lambda sp: sp.add_argument("--model", help="model family (rnn|lstm|gru|forest|boost) or checkpoint path"),
    "seed": lambda sp: sp.add_argument("--seed", type=int, help="base seed (falls back to CRASHWATCH_SEED)"),
    "jobs": lambda sp: sp.add_argument("--jobs", type=int, default=1, help="worker processes"),
    "baseline": lambda sp: sp.add_argument("--baseline", action="store_true", help="disable resampling"),
    "market": lambda sp: sp.add_argument("--market", help="market name from the config"),
    "threshold-window": lambda sp: sp.add_argument("--threshold-window", choices=("full", "train"),
                                                   help="returns used to fit the VaR threshold"),
}


# -- helpers ----------------------------------------------------------------

def _seed(args, cfg=None):
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("CRASHWATCH_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"CRASHWATCH_SEED must be an integer, got {env!r}")
    return cfg.seed if cfg is not None else 0


def _config(args, required=True):
    from .experiment.config import ResamplingSettings, load_config
    if not args.config:
        if required:
            raise UsageError(f"{args.command}: --config is required")
        return None
    cfg = load_config(args.config)
    changes = {"seed": _seed(args, cfg)}
    if getattr(args, "baseline", False):
        changes["resampling"] = ResamplingSettings(False, cfg.resampling.smote_k, cfg.resampling.enn_k,
                                                   cfg.resampling.ratio, False)
    if getattr(args, "threshold_window", None):
        changes["threshold_window"] = args.threshold_window
    return dataclasses.replace(cfg, **changes)


def _market(args, cfg):
    if getattr(args, "market", None):
        try:
            return cfg.market(args.market)
        except KeyError as exc:
            raise UsageError(str(exc.args[0]))
    return cfg.markets[0]


def _alpha(args, cfg):
    if getattr(args, "alpha", None) is not None:
        return args.alpha
    if cfg is None:
        raise UsageError(f"{args.command}: --alpha is required")
    return cfg.alphas[0]


def _family(args):
    from .experiment.config import FAMILIES
    if not args.model or args.model not in FAMILIES:
        raise UsageError(f"{args.command}: --model must be one of {', '.join(FAMILIES)}")
    return args.model


def _write_text(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def _write_bytes(path, blob):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(blob)
    return path


def _require_out(args):
    if not args.out:
        raise UsageError(f"{args.command}: --out is required")
    return args.out


def _load_windows(path):
    from .windowing import WindowTensor
    with open(path, "rb") as fh:
        return WindowTensor.loads(fh.read())


def _split_inputs(args):
    """Sort --in files into a windows file, a hyperparameter JSON and the rest."""
    out = {"windows": None, "hyper": None, "other": []}
    for p in args.inputs:
        if p.endswith(".bin"):
            out["windows"] = p
        elif p.endswith(".json"):
            out["hyper"] = p
        else:
            out["other"].append(p)
    return out


def _fold_data(args, cfg, fold):
    """(train, eval) windows for a fold from --in windows or straight from the config."""
    from .experiment.pipeline import fold_windows, prepare_market
    from .experiment.splits import assert_no_leakage
    files = _split_inputs(args)
    if files["windows"]:
        w, extra = _load_windows(files["windows"])
        tr, ev = w.between(fold.train_start, fold.train_end), w.between(fold.eval_start, fold.eval_end)
        assert_no_leakage(tr.sample_dates, ev.sample_dates)
        return tr, ev, extra.get("market", _market(args, cfg).name), extra.get("alpha", _alpha(args, cfg))
    md = prepare_market(cfg, _market(args, cfg))
    alpha = _alpha(args, cfg)
    tr, ev = fold_windows(md, alpha, fold, cfg)
    return tr, ev, md.name, alpha


def _hyper(args, cfg, family):
    from .experiment.config import _hyper_class, expand_grid
    files = _split_inputs(args)
    if files["hyper"]:
        with open(files["hyper"]) as fh:
            doc = json.load(fh)
        return _hyper_class(family)(**doc.get("best", doc))
    return expand_grid(family, cfg.models.get(family, {}))[0]


# -- subcommands ------------------------------------------------------------

def cmd_ingest(args):
    from .experiment.pipeline import anchor_returns, load_series
    from .market_data import FeaturePanel, align_calendars, read_csv, series_panel
    out = _require_out(args)
    if args.inputs and not args.config:
        path = args.inputs[0]
        inst = os.path.splitext(os.path.basename(path))[0].lower()
        s = read_csv(path, inst)
        _write_text(out, series_panel(s).to_csv())
        return f"ingested {len(s)} bars for {inst}", {"rows": len(s), "files": [out]}
    cfg = _config(args)
    m = _market(args, cfg)
    series = load_series(m, cfg.data_dir)
    prices = align_calendars(series, m.anchor)
    anchor = next(s for s in series if s.instrument_id == m.anchor)
    r = anchor_returns(anchor, prices.dates)
    os.makedirs(out, exist_ok=True)
    files = [
        _write_text(os.path.join(out, f"{m.name}_prices.csv"), prices.to_csv()),
        _write_text(os.path.join(out, f"{m.name}_returns.csv"),
                    FeaturePanel(prices.dates, ("return",), r[:, None]).to_csv()),
    ]
    return (f"ingested {len(series)} instruments for {m.name}: {prices.shape[0]} anchor dates",
            {"market": m.name, "rows": prices.shape[0], "instruments": len(series), "files": files})


def cmd_features(args):
    from .experiment.pipeline import prepare_market
    cfg = _config(args)
    out = _require_out(args)
    m = _market(args, cfg)
    md = prepare_market(cfg, m)
    if cfg.expected_predictors is not None and md.panel.shape[1] != cfg.expected_predictors:
        raise CrashwatchError(f"{m.name}: {md.panel.shape[1]} predictors, expected {cfg.expected_predictors}")
    _write_text(out, md.panel.to_csv())
    return (f"{md.panel.shape[1]} predictors over {md.panel.shape[0]} dates for {m.name}",
            {"market": m.name, "predictors": md.panel.shape[1], "rows": md.panel.shape[0],
             "dropped": list(md.dropped), "files": [out]})


def _read_returns(path):
    """A ``date,return`` CSV, or an OHLCV file whose adjusted close gives the returns."""
    from .experiment.pipeline import anchor_returns
    from .market_data import FeaturePanel, read_csv
    with open(path) as fh:
        head = fh.readline()
    if head.lower().startswith("date,open"):
        s = read_csv(path, "x")
        return s.dates, anchor_returns(s, s.dates)
    with open(path) as fh:
        panel = FeaturePanel.from_csv(fh.read())
    if "return" not in panel.names:
        raise UsageError(f"{path}: expected a 'return' column or an OHLCV file")
    return panel.dates, panel.column("return")


def cmd_label(args):
    from .experiment.pipeline import study_mask
    from .labeling import label_by_var
    if not args.inputs:
        raise UsageError("label: --in returns.csv is required")
    cfg = _config(args, required=False)
    alpha = _alpha(args, cfg)
    dates, r = _read_returns(args.inputs[0])
    fit = None
    if cfg is not None:
        if cfg.threshold_window == "train" and cfg.plan.test is not None:
            fit = cfg.plan.test.train_mask(dates)
        else:
            fit = study_mask(dates, cfg.plan)
    labels = label_by_var(r, alpha, dates, fit, cfg.quantile_method if cfg else "linear")
    status = {"alpha": alpha, "threshold": labels.scenario.threshold, "crashes": int(labels.labels.sum()),
              "rows": len(labels.dates), "files": []}
    if args.out:
        status["files"].append(_write_text(args.out, labels.to_csv()))
    return f"alpha={alpha} threshold={labels.scenario.threshold!r} crashes={status['crashes']}", status


def cmd_windows(args):
    from .labeling import LabelSeries
    from .market_data import FeaturePanel
    from .windowing import make_windows
    if len(args.inputs) != 2:
        raise UsageError("windows: --in FEATURES.csv LABELS.csv is required")
    out = _require_out(args)
    cfg = _config(args, required=False)
    with open(args.inputs[0]) as fh:
        panel = FeaturePanel.from_csv(fh.read())
    with open(args.inputs[1]) as fh:
        labels = LabelSeries.from_csv(fh.read())
    if not np.array_equal(panel.dates, labels.dates):
        # labels may cover more dates than the trimmed feature panel
        pos = np.searchsorted(labels.dates, panel.dates)
        if (pos >= len(labels.dates)).any() or not np.array_equal(labels.dates[pos], panel.dates):
            raise UsageError("windows: label dates do not cover the feature dates")
        labels = LabelSeries(panel.dates, labels.labels[pos], labels.scenario, labels.returns[pos], labels.missing[pos])
    T = cfg.timesteps if cfg else 7
    w = make_windows(panel, labels, T)
    observed = ~labels.missing[np.searchsorted(labels.dates, w.sample_dates)]
    w = w.subset(observed)
    extra = {"alpha": labels.scenario.alpha, "threshold": labels.scenario.threshold}
    if cfg is not None:
        extra["market"] = _market(args, cfg).name
    _write_bytes(out, w.dumps(extra))
    return (f"{w.n_samples} windows of {w.timesteps}x{w.n_features}, {int(w.labels.sum())} crashes",
            {"samples": w.n_samples, "T": w.timesteps, "F": w.n_features, "files": [out]})


def cmd_resample(args):
    from .experiment.pipeline import resample_windows
    from .experiment.config import ResamplingSettings
    if not args.inputs:
        raise UsageError("resample: --in WINDOWS.bin is required")
    out = _require_out(args)
    cfg = _config(args, required=False)
    settings = cfg.resampling if cfg else ResamplingSettings()
    w, extra = _load_windows(args.inputs[0])
    res_w, res = resample_windows(w, settings, _seed(args, cfg))
    audit = os.path.splitext(out)[0] + ".audit.csv"
    _write_bytes(out, res_w.dumps(extra))
    _write_text(audit, res.audit_csv())
    n_syn = int((res.origin == "synthetic").sum())
    return (f"{w.n_samples} -> {res_w.n_samples} samples ({n_syn} synthetic, {int(res.removed.sum())} removed)",
            {"before": w.n_samples, "after": res_w.n_samples, "synthetic": n_syn,
             "removed": int(res.removed.sum()), "files": [out, audit]})


def cmd_train(args):
    from .experiment.pipeline import fit_bundle
    from .experiment.runner import cell_seed
    cfg = _config(args)
    family = _family(args)
    out = _require_out(args)
    fold = cfg.plan.test
    tr, ev, market, alpha = _fold_data(args, cfg, fold)
    hyper = _hyper(args, cfg, family)
    enabled = cfg.resampling.enabled
    seed = cell_seed(cfg, market, alpha, family, enabled, 0)
    bundle, info = fit_bundle(family, hyper, tr, cfg.resampling if enabled else None, seed, cfg.val_fraction,
                              protected=(ev,))
    bundle.save(out)
    return (f"trained {family} on {tr.n_samples} windows ({info.n_after_resampling} after resampling)",
            {"model": family, "market": market, "alpha": alpha, "seed": seed, "fit": dataclasses.asdict(info),
             "hyper": dataclasses.asdict(hyper), "files": [out]})


def _checkpoint(args):
    from .experiment.pipeline import ModelBundle
    if not args.model or not os.path.exists(args.model):
        raise UsageError(f"{args.command}: --model must name an existing checkpoint file")
    return ModelBundle.load(args.model)


def cmd_evaluate(args):
    from .experiment.pipeline import evaluate_bundle
    cfg = _config(args)
    bundle = _checkpoint(args)
    _, ev, market, alpha = _fold_data(args, cfg, cfg.plan.test)
    report, _ = evaluate_bundle(bundle, ev, cfg.decision_threshold)
    doc = json.loads(report.to_json())
    files = [_write_text(args.out, json.dumps(doc, indent=1) + "\n")] if args.out else []
    return (f"{bundle.family} {market} alpha={alpha}: bal_acc={doc['bal_acc']} hit_rate={doc['hit_rate']} "
            f"auc_prc={doc['auc_prc']}", {"market": market, "alpha": alpha, "metrics": doc, "files": files})


def cmd_gridsearch(args):
    from .experiment.config import expand_grid
    from .experiment.runner import alpha_tag, mode_name
    from .experiment.search import grid_search
    cfg = _config(args)
    family = _family(args)
    folds, market, alpha = [], None, None
    for f in cfg.plan.validation:
        tr, ev, market, alpha = _fold_data(args, cfg, f)
        folds.append((tr, ev))
    settings = cfg.resampling if cfg.resampling.enabled else None
    tag = (market, alpha_tag(alpha), family, mode_name(cfg.resampling.enabled))
    found = grid_search(family, expand_grid(family, cfg.models.get(family, {})), folds, settings, cfg.seed,
                        cfg.val_fraction, tag)
    doc = {"model": family, "market": market, "alpha": alpha, "best_index": found.best_index,
           "best": dataclasses.asdict(found.best), "skipped": found.skipped,
           "points": [p.as_dict() for p in found.points]}
    files = [_write_text(args.out, json.dumps(doc, indent=1, sort_keys=True) + "\n")] if args.out else []
    return (f"{family}: best grid point {found.best_index} of {len(found.points)}",
            {"model": family, "best_index": found.best_index, "files": files})


def cmd_run(args):
    from .experiment.runner import run_experiment
    cfg = _config(args)
    if args.out:
        cfg = dataclasses.replace(cfg, out_dir=os.path.abspath(args.out))
    if args.jobs < 1:
        raise UsageError("run: --jobs must be >= 1")
    result = run_experiment(cfg, jobs=args.jobs)
    failed = [r for r in result["raw"] if r["status"] != "ok"]
    cell_errors = [f"{c.market}/{c.alpha}/{c.family}: {c.error}" for c in result["cells"] if c.error]
    return (f"{len(result['raw'])} runs ({len(failed)} failed) written to {cfg.out_dir}",
            {"rows": len(result["raw"]), "failed": len(failed), "cell_errors": cell_errors,
             "files": result["files"]})


def cmd_plot(args):
    from .experiment.plotting import emit_probability_series, write_series
    from .experiment.runner import alpha_tag
    cfg = _config(args)
    bundle = _checkpoint(args)
    _, ev, market, alpha = _fold_data(args, cfg, cfg.plan.test)
    series = emit_probability_series(bundle, ev, threshold=cfg.decision_threshold,
                                     title=f"{market} alpha={alpha_tag(alpha)} {bundle.family}")
    stem = args.out or os.path.join(cfg.out_dir, f"probability_{market}_{alpha_tag(alpha)}")
    if stem.endswith((".csv", ".svg")):
        stem = stem[:-4]
    os.makedirs(os.path.dirname(os.path.abspath(stem)), exist_ok=True)
    files = list(write_series(series, stem))
    return f"{len(series)} points plotted for {market}", {"rows": len(series), "files": files}


COMMANDS = {name: globals()[f"cmd_{name}"] for name in SUBCOMMANDS}


def _status(command, ok, code, **kw):
    doc = {"command": command, "ok": ok, "exit_code": code}
    doc.update(kw)
    sys.stderr.write(json.dumps(doc, sort_keys=True, default=str) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    command = None
    try:
        args = parser.parse_args(argv)
        command = args.command
        summary, status = COMMANDS[command](args)
    except UsageError as exc:
        sys.stdout.write(f"usage error: {exc}\n")
        if exc.help_text:
            sys.stdout.write(exc.help_text)
        _status(command, False, EXIT_USER, error=str(exc))
        return EXIT_USER
    except (CrashwatchError, ValueError, KeyError, OSError) as exc:
        sys.stdout.write(f"error: {type(exc).__name__}: {exc}\n")
        _status(command, False, EXIT_USER, error=f"{type(exc).__name__}: {exc}")
        return EXIT_USER
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USER
    except Exception as exc:
        sys.stdout.write(f"internal error: {type(exc).__name__}: {exc}\n")
        _status(command, False, EXIT_INTERNAL, error=f"{type(exc).__name__}: {exc}",
                traceback=traceback.format_exc())
        return EXIT_INTERNAL
    sys.stdout.write(summary + "\n")
    _status(command, True, EXIT_OK, **status)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
