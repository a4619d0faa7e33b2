"""Pivot a bench CSV into a dataset x method table for one metric.

    python3 scripts/summarize.py results/full.csv --metric gmean
"""
import argparse
import csv
from collections import defaultdict


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("report")
    ap.add_argument("--metric", default="gmean",
                    choices=["accuracy", "sensitivity", "specificity", "gmean", "roc_auc"])
    args = ap.parse_args()
    with open(args.report, newline="") as fh:
        rows = list(csv.DictReader(fh))
    methods = list(dict.fromkeys(r["method"] for r in rows))
    table = defaultdict(dict)
    ratio = {}
    for r in rows:
        table[r["dataset"]][r["method"]] = r[args.metric] or "-"
        ratio[r["dataset"]] = r["imbalance_ratio"]
    width = max(12, *(len(m) + 2 for m in methods))
    print(f"{'dataset':<30}{'IR':>8}" + "".join(f"{m:>{width}}" for m in methods))
    for ds, cells in table.items():
        print(f"{ds:<30}{ratio[ds]:>8}" + "".join(f"{cells.get(m, '-'):>{width}}" for m in methods))
    wins = defaultdict(int)
    for cells in table.values():
        vals = {m: float(v) for m, v in cells.items() if v != "-"}
        if vals:
            best = max(vals.values())
            for m, v in vals.items():
                wins[m] += v == best
    print(f"{'best (incl. ties)':<38}" + "".join(f"{wins[m]:>{width}}" for m in methods))


if __name__ == "__main__":
    main()
