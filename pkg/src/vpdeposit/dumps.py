"""On-disk density dumps.

A dump directory holds ``manifest.csv`` (``block,file``) and one
``block_NNNN.csv`` per block. Each block file has the header
``i,j[,k],density`` followed by one row per cell with axis 0 varying
fastest; densities are written with ``repr`` so identical runs produce
identical bytes.
"""

from __future__ import annotations

import csv
import itertools
from pathlib import Path

import numpy as np

from .deposition import DensityField

_IDX = "ijk"


def write_density_dump(directory, fields) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "manifest.csv", "w", newline="") as man:
        mw = csv.writer(man, lineterminator="\n")
        mw.writerow(["block", "file"])
        for f in fields:
            name = f"block_{f.block:04d}.csv"
            mw.writerow([f.block, name])
            _write_block(directory / name, f)


def _write_block(path, f: DensityField):
    shape = f.values.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(_IDX[: len(shape)]) + ["density"])
        for rev in itertools.product(*(range(n) for n in reversed(shape))):
            idx = tuple(reversed(rev))
            w.writerow(list(idx) + [repr(float(f.values[idx]))])


def read_density_dump(directory) -> list:
    directory = Path(directory)
    out = []
    with open(directory / "manifest.csv", newline="") as man:
        for row in csv.DictReader(man):
            with open(directory / row["file"], newline="") as fh:
                reader = csv.reader(fh)
                header = next(reader)
                ndim = len(header) - 1
                rows = [r for r in reader]
            idx = np.array([[int(v) for v in r[:ndim]] for r in rows])
            shape = tuple(idx.max(axis=0) + 1)
            values = np.zeros(shape)
            for r, i in zip(rows, idx):
                values[tuple(i)] = float(r[ndim])
            out.append(DensityField(int(row["block"]), values))
    return out
