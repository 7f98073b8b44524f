#!/usr/bin/env python3
"""Build data/adult/adult.csv from the UCI Adult train and test files.

The UCI files have no header, use ", " separators, and the test file carries a
banner line plus a trailing "." on every label. This script writes one headered
CSV with both files concatenated (48 842 rows), "?" kept as the missing token.

The raw files are taken from a local directory (--raw-dir) when given, else
extracted from the `responsibly` wheel, which ships them verbatim.

    python scripts/fetch_adult.py [--raw-dir DIR] [--out data/adult/adult.csv]
"""

import argparse
import csv
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country", "income",
]


def _read_raw(raw_dir):
    if raw_dir is not None:
        raw_dir = Path(raw_dir)
        return (raw_dir / "adult.data").read_text(), (raw_dir / "adult.test").read_text()
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
             "-d", tmp, "responsibly==0.1.2"],
            check=True,
        )
        wheel = next(Path(tmp).glob("responsibly-*.whl"))
        with zipfile.ZipFile(wheel) as z:
            prefix = "responsibly/dataset/adult/"
            return (z.read(prefix + "adult.data").decode(),
                    z.read(prefix + "adult.test").decode())


def _rows(text):
    for line in text.splitlines():
        if not line.strip() or line.startswith("|"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(COLUMNS):
            raise ValueError(f"unexpected arity {len(fields)}: {line!r}")
        fields[-1] = fields[-1].rstrip(".")
        yield fields


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--raw-dir", default=None)
    parser.add_argument("--out", default="data/adult/adult.csv")
    args = parser.parse_args(argv)

    train, test = _read_raw(args.raw_dir)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in list(_rows(train)) + list(_rows(test)):
            writer.writerow(row)
            n += 1
    print(f"wrote {n} rows to {out}")


if __name__ == "__main__":
    main()
