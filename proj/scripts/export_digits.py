#!/usr/bin/env python3
"""Export the scikit-learn handwritten digits dataset as a numeric CSV.

Produces an n x 65 table: 64 pixel columns followed by the class label in the
last column, which is the layout `tailbench run` expects with
"response_column": 64. No header row is written.

Usage: python3 scripts/export_digits.py [out.csv]
"""

import sys

import numpy as np
from sklearn.datasets import load_digits


def main() -> None:
    out = sys.argv[1] if len(sys.argv) > 1 else "digits.csv"
    digits = load_digits()
    table = np.column_stack([digits.data, digits.target])
    np.savetxt(out, table, delimiter=",", fmt="%g")
    print(f"wrote {table.shape[0]} rows x {table.shape[1]} columns to {out}")


if __name__ == "__main__":
    main()
