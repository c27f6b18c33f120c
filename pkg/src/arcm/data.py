"""Dataset ingestion (LIBSVM text and CSV), standardization, and seeded
synthetic generation.

Datasets are dense and immutable; generation is a pure function of the
spec so identical specs always produce bit-identical data.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ParseError


@dataclass(frozen=True)
class Dataset:
    """Dense n-by-d feature matrix with a length-n label vector."""

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        feats = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        labs = np.ascontiguousarray(np.asarray(self.labels, dtype=np.float64))
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise ConfigurationError("features must be a non-empty 2-d matrix")
        if labs.shape != (feats.shape[0],):
            raise ConfigurationError(
                f"labels length {labs.shape} does not match {feats.shape[0]} rows"
            )
        if not np.all(np.isfinite(feats)) or not np.all(np.isfinite(labs)):
            raise ConfigurationError("dataset contains non-finite entries")
        feats.setflags(write=False)
        labs.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    d: int
    label_noise: float = 0.0
    task: str = "classification"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ConfigurationError("n and d must be positive")
        if not 0.0 <= self.label_noise <= 1.0:
            raise ConfigurationError("label_noise must lie in [0, 1]")
        if self.task not in ("classification", "regression"):
            raise ConfigurationError(f"unknown task {self.task!r}")


def gen_synthetic(spec: SyntheticSpec) -> Dataset:
    """Generate a seeded dataset with standard-normal features.

    Classification labels are the sign indicator of a hidden linear score,
    flipped independently with probability ``label_noise``; regression
    labels add heavy-tailed Student-t(3) noise to the linear score so the
    robust loss has outliers to reject.
    """
    rng = np.random.Generator(np.random.Philox(spec.seed))
    features = rng.standard_normal((spec.n, spec.d))
    hidden = rng.standard_normal(spec.d)
    score = features @ hidden
    if spec.task == "classification":
        base = score > 0.0
        flips = rng.random(spec.n) < spec.label_noise
        labels = np.logical_xor(base, flips).astype(np.float64)
    else:
        labels = score + rng.standard_t(3, size=spec.n)
    name = f"synthetic-{spec.task}-n{spec.n}-d{spec.d}-seed{spec.seed}"
    return Dataset(features, labels, name)


def standardize(ds: Dataset) -> Dataset:
    """Center and scale every feature column to mean 0 and unit variance.

    Uses the population convention (divide by sqrt(mean squared deviation));
    zero-variance columns become all-zeros.
    """
    if ds.n < 2:
        raise ConfigurationError("standardize requires at least 2 samples")
    mu = ds.features.mean(axis=0)
    centered = ds.features - mu
    std = np.sqrt(np.mean(centered * centered, axis=0))
    scale = np.where(std == 0.0, 1.0, std)
    out = centered / scale
    out[:, std == 0.0] = 0.0
    return Dataset(out, ds.labels, f"{ds.name}:std")


def subsample(ds: Dataset, n_max: int, seed: int = 0) -> Dataset:
    """Take a seeded without-replacement row sample, preserving row order."""
    if n_max < 1:
        raise ConfigurationError("n_max must be positive")
    if n_max >= ds.n:
        return ds
    rng = np.random.Generator(np.random.Philox(seed))
    idx = np.sort(rng.choice(ds.n, size=n_max, replace=False))
    return Dataset(ds.features[idx], ds.labels[idx], f"{ds.name}:sub{n_max}")


def load_libsvm(path) -> Dataset:
    """Parse LIBSVM text: one "label idx:val ..." line per sample.

    Indices are 1-based and must be strictly increasing within a line; the
    matrix width is the largest index seen anywhere. Labels {-1,+1} and
    {1,2} are remapped to {0,1}; anything else is kept verbatim.
    """
    path = Path(path)
    rows: list[dict[int, float]] = []
    labels: list[float] = []
    max_index = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split()
            try:
                label = float(tokens[0])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad label {tokens[0]!r}") from None
            if not np.isfinite(label):
                raise ParseError(f"{path}:{lineno}: non-finite label")
            entries: dict[int, float] = {}
            prev_index = 0
            for tok in tokens[1:]:
                idx_str, sep, val_str = tok.partition(":")
                if not sep:
                    raise ParseError(f"{path}:{lineno}: bad token {tok!r}")
                try:
                    idx = int(idx_str)
                    val = float(val_str)
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: bad token {tok!r}") from None
                if idx <= prev_index:
                    raise ParseError(
                        f"{path}:{lineno}: index {idx} not strictly increasing"
                    )
                if not np.isfinite(val):
                    raise ParseError(f"{path}:{lineno}: non-finite value in {tok!r}")
                entries[idx] = val
                prev_index = idx
            rows.append(entries)
            labels.append(label)
            max_index = max(max_index, prev_index)
    if not rows:
        raise ParseError(f"{path}: empty file")
    if max_index == 0:
        raise ParseError(f"{path}: no feature entries found")

    features = np.zeros((len(rows), max_index))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            features[i, idx - 1] = val
    return Dataset(features, _remap_labels(np.array(labels)), name=path.stem)


def _remap_labels(labels: np.ndarray) -> np.ndarray:
    values = set(np.unique(labels))
    if values <= {-1.0, 1.0}:
        return (labels > 0).astype(np.float64)
    if values <= {1.0, 2.0}:
        return (labels - 1.0).astype(np.float64)
    return labels


def load_csv(path, label_col: int) -> Dataset:
    """Parse a rectangular numeric CSV, extracting ``label_col`` as labels.

    A header row is detected by any non-numeric cell in the first row and
    skipped. Remaining columns form the features in their original order.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty file")

    def parse_row(line, rowno):
        cells = line.split(",")
        out = []
        for col, cell in enumerate(cells):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: row {rowno}, column {col}: non-numeric cell {cell!r}"
                ) from None
            if not np.isfinite(v):
                raise ParseError(f"{path}: row {rowno}, column {col}: non-finite cell")
            out.append(v)
        return out

    # header row = any cell that is not a number (non-finite cells are data
    # errors, not headers)
    def is_numeric_row(line):
        try:
            [float(c) for c in line.split(",")]
        except ValueError:
            return False
        return True

    start = 0 if is_numeric_row(lines[0]) else 1
    if start == len(lines):
        raise ParseError(f"{path}: header-only file")
    first = parse_row(lines[start], start + 1)
    width = len(first)
    if not 0 <= label_col < width:
        raise ParseError(f"{path}: label_col {label_col} out of range for {width} columns")

    data = []
    for rowno, line in enumerate(lines[start:], start=start + 1):
        row = parse_row(line, rowno)
        if len(row) != width:
            raise ParseError(
                f"{path}: row {rowno}: expected {width} cells, found {len(row)}"
            )
        data.append(row)
    matrix = np.array(data)
    labels = matrix[:, label_col]
    features = np.delete(matrix, label_col, axis=1)
    return Dataset(features, labels, name=path.stem)


def write_libsvm(ds: Dataset, path) -> None:
    """Write LIBSVM text; zero entries are omitted (restored as 0 on load)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for i in range(ds.n):
            parts = [f"{ds.labels[i]:.17g}"]
            row = ds.features[i]
            for j in np.flatnonzero(row != 0.0):
                parts.append(f"{j + 1}:{row[j]:.17g}")
            fh.write(" ".join(parts) + "\n")


def write_csv(ds: Dataset, path, header: bool = False) -> None:
    """Write features followed by the label as the last column."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if header:
            fh.write(",".join([f"f{j}" for j in range(ds.dim)] + ["label"]) + "\n")
        for i in range(ds.n):
            cells = [f"{v:.17g}" for v in ds.features[i]]
            cells.append(f"{ds.labels[i]:.17g}")
            fh.write(",".join(cells) + "\n")
