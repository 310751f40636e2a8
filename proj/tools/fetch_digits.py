#!/usr/bin/env python3
"""Writes the UCI handwritten-digits dataset (the 8x8 scikit-learn copy)
as the CSV this project ingests: 65 integer fields per row, 64 pixels in
0..16 followed by the label 0..9, no header.

Usage: python3 tools/fetch_digits.py [out.csv]
"""

import sys

from sklearn.datasets import load_digits


def main() -> None:
    out_path = sys.argv[1] if len(sys.argv) > 1 else "data/digits.csv"
    digits = load_digits()
    with open(out_path, "w", encoding="ascii", newline="\n") as out:
        for pixels, label in zip(digits.data, digits.target):
            fields = [str(int(p)) for p in pixels] + [str(int(label))]
            out.write(",".join(fields) + "\n")
    print(f"wrote {len(digits.target)} rows to {out_path}")


if __name__ == "__main__":
    main()
