#!/usr/bin/env python3
"""Convert the UCI ann-thyroid files into the CSV + schema layout the loader reads.

Inputs are the whitespace-separated `ann-train.data` and `ann-test.data`
(21 feature columns then a class in {1, 2, 3}) and the cost list
`ann-thyroid.cost` (one `name: cost` line per feature, in column order).
Both data files are concatenated, giving all 7200 rows. Class names keep
the source numbering; the CSV label column holds their 0-based index.

usage: scripts/ann_thyroid_to_csv.py <dir-with-ann-files> <out-dir>
"""
import csv
import json
import os
import sys

# Columns that take values other than 0/1 in the source files.
REAL = {"age", "TSH", "T3", "TT4", "T4U", "FTI"}


def read_costs(path):
    costs = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            name, _, value = line.partition(":")
            costs.append((name.strip(), float(value.strip().rstrip("."))))
    if len(costs) != 21:
        sys.exit(f"{path}: expected 21 cost lines, found {len(costs)}")
    return costs


def read_rows(path):
    with open(path) as f:
        for n, line in enumerate(f, 1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 22:
                sys.exit(f"{path}:{n}: expected 22 columns, found {len(fields)}")
            yield fields


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    src, out = sys.argv[1:]
    costs = read_costs(os.path.join(src, "ann-thyroid.cost"))
    names = [n for n, _ in costs]
    os.makedirs(out, exist_ok=True)
    rows = 0
    with open(os.path.join(out, "thyroid.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(names + ["label"])
        for part in ("ann-train.data", "ann-test.data"):
            for fields in read_rows(os.path.join(src, part)):
                # Labels are 0-based class indices; source classes are 1..3.
                w.writerow(fields[:21] + [int(fields[21]) - 1])
                rows += 1
    schema = {
        "features": [
            {"name": n, "kind": "real" if n in REAL else "binary", "cost": c} for n, c in costs
        ],
        "classes": ["1", "2", "3"],
    }
    with open(os.path.join(out, "schema.json"), "w") as f:
        json.dump(schema, f, indent=2)
    print(f"wrote {rows} rows to {out}")


if __name__ == "__main__":
    main()
