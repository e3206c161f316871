#!/usr/bin/env python3
"""Convert a CoraML-style .npz citation network into mapdg input files.

The expected archive stores the adjacency and attribute matrices in CSR
form (adj_data/adj_indices/adj_indptr/adj_shape, attr_* likewise) plus a
dense `labels` array. That is the layout used by the common cora_ml.npz
distribution.

Output, written into --out:
  edges.tsv     one directed edge "u<TAB>v" per line
  features.bin  MDGFEAT1 magic, u64 rows, u64 cols, row-major f32
  labels.tsv    "node<TAB>class" per line

Usage:
  python3 scripts/convert_coraml.py cora_ml.npz --out data/coraml
"""

import argparse
import struct
import sys
from pathlib import Path

import numpy as np


def load_csr(data, prefix):
    from scipy.sparse import csr_matrix

    return csr_matrix(
        (data[f"{prefix}_data"], data[f"{prefix}_indices"], data[f"{prefix}_indptr"]),
        shape=tuple(data[f"{prefix}_shape"]),
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("npz", type=Path)
    ap.add_argument("--out", type=Path, required=True)
    args = ap.parse_args()

    data = np.load(args.npz, allow_pickle=True)
    adj = load_csr(data, "adj")
    attr = load_csr(data, "attr").toarray().astype(np.float32)
    labels = np.asarray(data["labels"]).astype(np.int64)

    n = adj.shape[0]
    if attr.shape[0] != n or labels.shape[0] != n:
        sys.exit(f"inconsistent node counts: adj {n}, attr {attr.shape[0]}, labels {labels.shape[0]}")

    args.out.mkdir(parents=True, exist_ok=True)

    rows, cols = adj.nonzero()
    with open(args.out / "edges.tsv", "w") as f:
        for u, v in zip(rows.tolist(), cols.tolist()):
            if u != v:
                f.write(f"{u}\t{v}\n")

    with open(args.out / "features.bin", "wb") as f:
        f.write(b"MDGFEAT1")
        f.write(struct.pack("<QQ", attr.shape[0], attr.shape[1]))
        f.write(attr.tobytes(order="C"))

    with open(args.out / "labels.tsv", "w") as f:
        for i, c in enumerate(labels.tolist()):
            f.write(f"{i}\t{c}\n")

    print(f"wrote {args.out}: n={n}, m={(rows != cols).sum()}, f={attr.shape[1]}, classes={labels.max() + 1}")


if __name__ == "__main__":
    main()
