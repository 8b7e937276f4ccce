"""First-order Trotter error against step count, beside a QCA of matched accuracy."""
import argparse
from pathlib import Path

from epsqca.experiments import matched_qca, trotter_scan
from epsqca.models import preset_models

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--n", type=int, default=8)
p.add_argument("--t", type=float, default=1.0)
p.add_argument("--out", default="results")
args = p.parse_args()

out = Path(args.out)
out.mkdir(exist_ok=True)
h = preset_models("tfim", args.n)
rec = trotter_scan(h, args.t, [4, 8, 16, 32, 64, 128], model="tfim")
rec.summary = matched_qca(h, args.t, rec.rows[-1]["trotter_error"])
(out / "trotter.csv").write_text(rec.to_csv())
(out / "trotter.json").write_text(rec.to_json())
print(rec.to_csv())
print(rec.summary)
