#!/usr/bin/env python3
# Copyright 2026 The uacgan Authors.
# SPDX-License-Identifier: Apache-2.0
"""Write the bundled 5,000-image MNIST subset as gzipped IDX files.

Source: mnist_5k.csv.gz from the mlxtend package (784 pixel columns followed
by the label; 500 images per digit). Per digit, the first 400 rows in file
order go to the train split and the remaining 100 to the test split.

    python3 tools/make_mnist_subset.py mnist_5k.csv.gz data/mnist-5k
"""

import gzip
import struct
import sys
from pathlib import Path


def write_idx(path, magic, dims, payload):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in dims)
    # mtime=0 keeps the archive bytes reproducible.
    with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0, filename="") as out:
        out.write(header + payload)


def main(src, dst):
    rows = [list(map(int, line.split(","))) for line in gzip.open(src, "rt").read().split()]
    seen = {}
    splits = {"train": [], "t10k": []}
    for r in rows:
        label = r[-1]
        seen[label] = seen.get(label, 0) + 1
        splits["train" if seen[label] <= 400 else "t10k"].append(r)
    dst = Path(dst)
    dst.mkdir(parents=True, exist_ok=True)
    for name, items in splits.items():
        pixels = bytes(v for r in items for v in r[:784])
        labels = bytes(r[-1] for r in items)
        write_idx(dst / f"{name}-images-idx3-ubyte.gz", 0x803, (len(items), 28, 28), pixels)
        write_idx(dst / f"{name}-labels-idx1-ubyte.gz", 0x801, (len(items),), labels)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
