#!/usr/bin/env python3
"""Convert raw dataset downloads into the formats the experiment runner reads.

Subcommands:
  shuttle <Shuttle.rda> <out.csv.gz>
      mlbench's Statlog (Shuttle) R data file -> gzipped label-last CSV.
      Class factor codes map to the UCI integer labels 1..7.

  seizure <chunked.csv> <out.csv.gz>
      Pass through a UCI epileptic-seizure-recognition CSV (178 features,
      label last, 1..5), stripping any header / row-name column.

The MNIST IDX files need no conversion; drop the four .gz files from any
mirror of the canonical distribution into data/mnist/ as-is.
"""

import gzip
import sys


def write_csv_gz(path, rows):
    with gzip.open(path, "wt", newline="\n") as out:
        for row in rows:
            out.write(",".join(row) + "\n")


def fmt(value):
    f = float(value)
    if f == int(f):
        return str(int(f))
    return repr(f)


def shuttle(rda_path, out_path):
    import rdata

    converted = rdata.conversion.convert(rdata.parser.parse_file(rda_path))
    df = converted["Shuttle"]
    feature_cols = [c for c in df.columns if c != "Class"]
    codes = df["Class"].cat.codes  # 0-based in UCI class order -> +1
    rows = []
    for i in range(len(df)):
        rows.append([fmt(df.iloc[i][c]) for c in feature_cols] + [str(codes.iloc[i] + 1)])
    write_csv_gz(out_path, rows)
    print(f"wrote {len(rows)} rows x {len(feature_cols)}+1 cols to {out_path}")


def seizure(csv_path, out_path):
    rows = []
    with open(csv_path, "r", newline="") as f:
        for line_no, line in enumerate(f):
            cells = line.strip().split(",")
            if line_no == 0 and not _is_number(cells[-1]):
                continue  # header
            if not _is_number(cells[0]):
                cells = cells[1:]  # row-name column like "X21.V1.791"
            if len(cells) != 179:
                raise SystemExit(f"line {line_no + 1}: expected 179 numeric cells, got {len(cells)}")
            rows.append([fmt(c) for c in cells[:-1]] + [str(int(float(cells[-1])))])
    write_csv_gz(out_path, rows)
    print(f"wrote {len(rows)} rows to {out_path}")


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def main():
    if len(sys.argv) != 4 or sys.argv[1] not in {"shuttle", "seizure"}:
        print(__doc__, file=sys.stderr)
        return 2
    {"shuttle": shuttle, "seizure": seizure}[sys.argv[1]](sys.argv[2], sys.argv[3])
    return 0


if __name__ == "__main__":
    sys.exit(main())
