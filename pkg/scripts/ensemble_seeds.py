"""BRF vs SRN-BRF mean g-mean over several seeds on the highest-IR fixtures.

    python3 scripts/ensemble_seeds.py --seeds 0 1 2 --alpha 0.5
"""
import argparse
import sys
from pathlib import Path

import numpy as np

from srnbrf.bench import BenchmarkConfig, list_datasets, run

DATA = Path(__file__).resolve().parents[1] / "data" / "keel"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data-dir", default=str(DATA))
    ap.add_argument("--top", type=int, default=5, help="number of highest-IR datasets")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--alpha", type=float, default=0.5, help="alpha_rus inside SRN-BRF")
    ap.add_argument("--trees", type=int, default=100)
    args = ap.parse_args()
    entries = [e for e in list_datasets(args.data_dir) if e.error is None]
    names = [e.id for e in entries[-args.top:]][::-1]
    scores = {ds: {"brf": [], "srn-brf": []} for ds in names}
    for seed in args.seeds:
        cfg = BenchmarkConfig(data_dir=args.data_dir, datasets=names, methods=["brf", "srn-brf"], seed=seed,
                              alpha_rus=args.alpha, n_trees=args.trees)
        rep = run(cfg)
        for ds in names:
            for m in ("brf", "srn-brf"):
                scores[ds][m].append(rep.value(ds, m, "gmean"))
    wins = 0
    print(f"{'dataset':<30}{'BRF':>8}{'SRN-BRF':>9}")
    for ds, s in scores.items():
        b, r = np.mean(s["brf"]), np.mean(s["srn-brf"])
        wins += r >= b
        print(f"{ds:<30}{100 * b:>8.2f}{100 * r:>9.2f}")
    print(f"SRN-BRF >= BRF on {wins}/{len(names)}", file=sys.stderr)


if __name__ == "__main__":
    main()
