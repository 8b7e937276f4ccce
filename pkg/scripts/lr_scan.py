"""Measured Lieb-Robinson discrepancy against the series bound, TFIM and a random chain."""
import argparse
from pathlib import Path

from epsqca.heisenberg import lr_records_to_csv, lr_scan
from epsqca.models import preset_models

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--n", type=int, default=10)
p.add_argument("--out", default="results")
args = p.parse_args()

out = Path(args.out)
out.mkdir(exist_ok=True)
for model in ("tfim", "random-seeded"):
    h = preset_models(model, args.n, {"seed": 0})
    recs = lr_scan(h, args.n // 2, [0.25, 0.5, 1.0, 2.0], [2, 4, 6, 8], model=model)
    (out / f"lr_{model}.csv").write_text(lr_records_to_csv(recs))
    worst = max(r.measured / r.bound for r in recs if r.bound > 0)
    print(f"{model}: {len(recs)} points, worst measured/bound = {worst:.3f}")
