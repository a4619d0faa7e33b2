"""Copy KEEL .dat files into data/keel/, ordinal-encoding nominal inputs.

The loader only accepts numeric attributes, so nominal input attributes
(abalone's Sex, every flare-F column) are rewritten as integers following
the order of the declared value set. The class attribute is left alone.

Source files come from the ``imbalanced-databases`` wheel, which vendors
the KEEL imbalanced collection:

    pip download imbalanced-databases --no-deps -d /tmp/idb
    python -m zipfile -e /tmp/idb/imbalanced_databases-*.whl /tmp/idb/x
    python scripts/vendor_keel_fixtures.py /tmp/idb/x/imbalanced_databases/data
"""
import argparse
import re
from pathlib import Path

DATASETS = [
    "wisconsin", "yeast1", "vehicle1", "ecoli2", "yeast3", "ecoli3",
    "page-blocks0", "vowel0", "glass2", "glass4", "ecoli4", "abalone9-18",
    "flare-F", "yeast4", "winequality-red-4", "yeast-1-2-8-9_vs_7", "yeast5",
    "ecoli-0-1-3-7_vs_2-6", "yeast6", "abalone-19_vs_10-11-12-13",
    "winequality-white-3-9_vs_5", "poker-8-9_vs_6", "winequality-red-3_vs_5",
    "abalone-20_vs_8-9-10", "poker-8_vs_6", "abalone19",
]

_NOMINAL = re.compile(r"@attribute\s+(\S+)\s*\{(.*)\}", re.IGNORECASE)


def convert(src: Path, dst: Path) -> None:
    lines = src.read_text().splitlines()
    attr_lines = [i for i, l in enumerate(lines) if l.lower().startswith("@attribute")]
    class_line = attr_lines[-1]
    codes = {}
    out = []
    in_data = False
    for i, line in enumerate(lines):
        if not in_data:
            m = _NOMINAL.match(line.strip())
            if m and i != class_line:
                values = [v.strip() for v in m.group(2).split(",")]
                codes[attr_lines.index(i)] = {v: j for j, v in enumerate(values)}
                line = f"@attribute {m.group(1)} integer [0, {len(values) - 1}]"
            if line.strip().lower().startswith("@data"):
                in_data = True
            out.append(line)
            continue
        if not line.strip():
            continue
        toks = [t.strip() for t in line.split(",")]
        for col, mapping in codes.items():
            toks[col] = str(mapping[toks[col]])
        out.append(",".join(toks))
    dst.write_text("\n".join(out) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("source", type=Path)
    ap.add_argument("--dest", type=Path, default=Path(__file__).parents[1] / "data" / "keel")
    args = ap.parse_args()
    args.dest.mkdir(parents=True, exist_ok=True)
    for name in DATASETS:
        convert(args.source / name / f"{name}.dat", args.dest / f"{name}.dat")
        print(name)


if __name__ == "__main__":
    main()
