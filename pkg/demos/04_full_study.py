"""The full study on a config file, as `crashwatch run` does it, then a look at the tables.

python3 demos/04_full_study.py [config.json] [out_dir]
With no arguments it runs the bundled synthetic market. For the five real
markets copy asean5.example.json next to your CSV exports and pass it here.
"""
import dataclasses
import os
import sys

from crashwatch.experiment import load_config, run_experiment
from crashwatch.synthetic import fixture_dir

path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(fixture_dir(), "experiment.json")
cfg = load_config(path)
if len(sys.argv) > 2:
    cfg = dataclasses.replace(cfg, out_dir=os.path.abspath(sys.argv[2]))
elif path.startswith(fixture_dir()):
    cfg = dataclasses.replace(cfg, out_dir=os.path.abspath("demo_out/study"))

print("markets", [m.name for m in cfg.markets], "alphas", cfg.alphas, "models", list(cfg.models),
      "repetitions", cfg.repetitions)
out = run_experiment(cfg, jobs=min(4, os.cpu_count() or 1))

print(f"\n{'market':10s} {'alpha':6s} {'model':6s} {'mode':9s} {'ifar':>6s} {'hit':>6s} {'bal_acc':>7s} {'auc_prc':>7s}")
for a in out["agg"]:
    vals = [a[m] for m in ("ifar", "hit_rate", "bal_acc", "auc_prc")]
    cells = " ".join(f"{v:7.3f}" if isinstance(v, float) else f"{str(v):>7s}" for v in vals)
    print(f"{a['market']:10s} {a['alpha']:<6} {a['model']:6s} {a['resampling']:9s} {cells}")
for c in out["cells"]:
    if c.error:
        print("cell error:", c.market, c.alpha, c.family, c.error)
print("\nwrote", len(out["files"]), "files under", cfg.out_dir)
