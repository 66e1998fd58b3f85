"""Data model, dataset I/O, imputation, prefixing and dataset statistics.

A time-series is a float array of shape ``(D, T)``; missing measurements are
``NaN``. Univariate series use ``D == 1``.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

TimeSeries = np.ndarray

CATEGORY_NAMES = ("Wide", "Large", "Unstable", "Imbalanced", "Multiclass", "Common")

WIDE_LENGTH = 1300
LARGE_HEIGHT = 1000
UNSTABLE_STD = 100.0


class DatasetError(ValueError):
    """Raised for unreadable or inconsistent datasets."""


def as_series(values) -> TimeSeries:
    """Coerce a 1-D or 2-D array-like to a ``(D, T)`` float array."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise DatasetError(f"series must be 1-D or 2-D with T >= 1, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class LabeledInstance:
    series: TimeSeries
    label: str | None = None
    source_id: str | None = None

    @property
    def n_dims(self) -> int:
        return self.series.shape[0]

    @property
    def length(self) -> int:
        return self.series.shape[1]


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of labelled instances sharing a variable count."""

    instances: tuple[LabeledInstance, ...]
    name: str = "dataset"
    class_set: tuple[str, ...] = field(default=())

    def __post_init__(self):
        instances = tuple(self.instances)
        object.__setattr__(self, "instances", instances)
        if instances:
            dims = {inst.n_dims for inst in instances}
            if len(dims) != 1:
                raise DatasetError(f"inconsistent variable count across instances: {sorted(dims)}")
        if not self.class_set:
            labels = sorted({inst.label for inst in instances if inst.label is not None})
            object.__setattr__(self, "class_set", tuple(labels))

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def n_dims(self) -> int:
        return self.instances[0].n_dims if self.instances else 0

    @property
    def lengths(self) -> list[int]:
        return [inst.length for inst in self.instances]

    @property
    def is_equal_length(self) -> bool:
        return len(set(self.lengths)) <= 1

    @property
    def labels(self) -> list[str | None]:
        return [inst.label for inst in self.instances]

    def label_indices(self) -> np.ndarray:
        """Dense integer codes of the labels, following ``class_set`` order."""
        index = {c: i for i, c in enumerate(self.class_set)}
        return np.array([index[inst.label] for inst in self.instances], dtype=int)

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Stack into ``X`` of shape ``(n, D, T)`` and integer labels ``y``."""
        if not self.is_equal_length:
            raise DatasetError(f"{self.name}: ragged lengths {sorted(set(self.lengths))}; equal length required")
        X = np.stack([inst.series for inst in self.instances])
        return X, self.label_indices()

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.instances[i] for i in indices), name=self.name, class_set=self.class_set)


# ---------------------------------------------------------------- loading


def _parse_float(token: str, lineno: int, path) -> float:
    token = token.strip()
    if token in ("?", "NaN", "nan", ""):
        return math.nan
    try:
        return float(token)
    except ValueError:
        raise DatasetError(f"{path}:{lineno}: non-numeric value {token!r}") from None


def _load_csv(path: Path, dims: int, has_source: bool) -> list[LabeledInstance]:
    instances = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            label = fields[0].strip()
            source = None
            if has_source:
                if len(fields) < 2:
                    raise DatasetError(f"{path}:{lineno}: missing source id field")
                source = fields[1].strip()
                fields = fields[1:]
            values = [_parse_float(tok, lineno, path) for tok in fields[1:]]
            if not values or len(values) % dims:
                raise DatasetError(f"{path}:{lineno}: {len(values)} values cannot be split into {dims} variables")
            series = np.array(values).reshape(dims, -1)
            instances.append(LabeledInstance(series, label, source))
    return instances


def _load_ts(path: Path) -> list[LabeledInstance]:
    instances = []
    has_labels = True
    in_data = False
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("@"):
                key, _, rest = line[1:].partition(" ")
                key = key.lower()
                if key == "classlabel":
                    has_labels = rest.strip().lower().startswith("true")
                elif key == "data":
                    in_data = True
                continue
            if not in_data:
                raise DatasetError(f"{path}:{lineno}: data line before @data")
            parts = line.split(":")
            label = None
            if has_labels:
                label = parts[-1].strip()
                parts = parts[:-1]
            rows = [[_parse_float(tok, lineno, path) for tok in part.split(",")] for part in parts]
            if len({len(r) for r in rows}) != 1:
                raise DatasetError(f"{path}:{lineno}: dimensions of unequal length")
            instances.append(LabeledInstance(np.array(rows, dtype=float), label))
    return instances


def load_dataset(path, fmt: str | None = None, dims: int = 1, has_source: bool = False, name: str | None = None) -> Dataset:
    """Load a dataset from CSV (``label,v1,...``) or sktime ``.ts`` text.

    ``fmt`` is inferred from the file suffix when omitted. CSV rows lay out
    multivariate values variable-major; ``dims`` gives the variable count.
    With ``has_source`` the second CSV field is a grouping key (e.g. vessel id).
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"no such dataset file: {path}")
    if fmt is None:
        fmt = "ts-text" if path.suffix.lower() == ".ts" else "csv"
    if fmt == "csv":
        instances = _load_csv(path, dims, has_source)
    elif fmt in ("ts", "ts-text"):
        instances = _load_ts(path)
    else:
        raise DatasetError(f"unknown dataset format {fmt!r}")
    if not instances:
        raise DatasetError(f"{path}: no instances")
    return Dataset(tuple(instances), name=name or path.stem)


def dump_csv(d: Dataset, path) -> None:
    """Write ``d`` in the CSV layout accepted by :func:`load_dataset`."""
    with open(path, "w") as fh:
        for inst in d.instances:
            vals = ",".join(repr(float(v)) if not math.isnan(v) else "?" for v in inst.series.ravel())
            fh.write(f"{inst.label},{vals}\n")


# ---------------------------------------------------------------- transforms


def _impute_row(row: np.ndarray) -> np.ndarray:
    present = ~np.isnan(row)
    if present.all():
        return row
    idx = np.flatnonzero(present)
    out = row.copy()
    missing = np.flatnonzero(~present)
    after = np.searchsorted(idx, missing)
    before_val = row[idx[np.maximum(after - 1, 0)]]
    after_val = row[idx[np.minimum(after, len(idx) - 1)]]
    # edge gaps replicate the nearest present value
    before_val = np.where(after > 0, before_val, after_val)
    after_val = np.where(after < len(idx), after_val, before_val)
    out[missing] = (before_val + after_val) / 2.0
    return out


def impute_series(s: TimeSeries) -> TimeSeries:
    s = as_series(s)
    for v, row in enumerate(s):
        if np.isnan(row).all():
            raise DatasetError(f"variable {v} has no present values")
    return np.vstack([_impute_row(row) for row in s])


def impute_missing(d: Dataset) -> Dataset:
    """Fill each gap with the mean of the values bracketing it."""
    out = []
    for i, inst in enumerate(d.instances):
        try:
            series = impute_series(inst.series)
        except DatasetError as exc:
            raise DatasetError(f"{d.name}: instance {i}: {exc}") from None
        out.append(LabeledInstance(series, inst.label, inst.source_id))
    return Dataset(tuple(out), name=d.name, class_set=d.class_set)


def prefix(s: TimeSeries, t: int) -> TimeSeries:
    """First ``t`` time-points of every variable."""
    s = as_series(s)
    if not 1 <= t <= s.shape[1]:
        raise ValueError(f"prefix length {t} outside [1, {s.shape[1]}]")
    return s[:, :t]


def znormalize(s, axis: int = -1) -> np.ndarray:
    """Per-variable z-normalization with population std; constants map to 0."""
    s = np.asarray(s, dtype=float)
    mu = s.mean(axis=axis, keepdims=True)
    sd = s.std(axis=axis, keepdims=True)
    constant = sd <= 1e-12 * np.maximum(1.0, np.abs(mu))
    return np.where(constant, 0.0, (s - mu) / np.where(constant, 1.0, sd))


# ---------------------------------------------------------------- folds


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: tuple[int, ...]
    stratify_key: str = "class"

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignments) == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignments) != fold)

    def to_dict(self) -> dict:
        return {"k": self.k, "stratify_key": self.stratify_key, "assignments": list(self.assignments)}


def stratified_assignments(keys: Sequence[Hashable], k: int, seed: int) -> np.ndarray:
    """Assign each index a fold so every stratum spreads within +-1 across folds.

    Strata are dealt round-robin after a seeded shuffle; the starting fold of
    each stratum continues where the previous one stopped, which keeps fold
    sizes balanced as well.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    keys = list(keys)
    groups: dict = {}
    for i, key in enumerate(keys):
        groups.setdefault(key, []).append(i)
    out = np.empty(len(keys), dtype=int)
    offset = 0
    for key in sorted(groups, key=str):
        members = np.array(groups[key])
        members = members[rng.permutation(len(members))]
        out[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    return out


def stratified_folds(d: Dataset, k: int = 5, seed: int = 0, key: str = "class") -> FoldPlan:
    """Stratified k-fold plan over class labels or over ``source_id`` groups.

    With ``key="source_id"`` each fold gets the same number of instances from
    every source (within one), the grouping rule used for vessel data.
    """
    if key == "class":
        keys = d.labels
    elif key == "source_id":
        keys = [inst.source_id for inst in d.instances]
        if any(s is None for s in keys):
            raise DatasetError("source_id stratification needs a source id on every instance")
    else:
        raise ValueError(f"unknown stratification key {key!r}")
    smallest = min(Counter(keys).values())
    if smallest < k:
        logger.warning("%s: smallest stratum has %d instances, fewer than k=%d folds", d.name, smallest, k)
    return FoldPlan(k, tuple(int(a) for a in stratified_assignments(keys, k, seed)), key)


# ---------------------------------------------------------------- statistics


@dataclass(frozen=True)
class DatasetStats:
    height: int
    length: int
    num_classes: int
    imbalance_ratio: float
    std_dev: tuple[float, ...]
    pooled_std: float
    categories: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "height": self.height,
            "length": self.length,
            "num_classes": self.num_classes,
            "imbalance_ratio": self.imbalance_ratio,
            "std_dev": list(self.std_dev),
            "pooled_std": self.pooled_std,
            "categories": list(self.categories),
        }


def categorize(height: int, length: int, num_classes: int, imbalance_ratio: float, pooled_std: float) -> tuple[str, ...]:
    cats = []
    if length > WIDE_LENGTH:
        cats.append("Wide")
    if height > LARGE_HEIGHT:
        cats.append("Large")
    if pooled_std > UNSTABLE_STD:
        cats.append("Unstable")
    if imbalance_ratio > 1:
        cats.append("Imbalanced")
    if num_classes > 2:
        cats.append("Multiclass")
    return tuple(cats) if cats else ("Common",)


def dataset_stats(d: Dataset) -> DatasetStats:
    if not len(d):
        raise DatasetError("cannot describe an empty dataset")
    counts = Counter(inst.label for inst in d.instances)
    ratio = max(counts.values()) / min(counts.values())
    per_var = []
    for v in range(d.n_dims):
        vals = np.concatenate([inst.series[v] for inst in d.instances])
        per_var.append(float(np.nanstd(vals)))
    pooled = float(np.nanstd(np.concatenate([inst.series.ravel() for inst in d.instances])))
    height, length = len(d), max(d.lengths)
    return DatasetStats(
        height=height,
        length=length,
        num_classes=len(counts),
        imbalance_ratio=float(ratio),
        std_dev=tuple(per_var),
        pooled_std=pooled,
        categories=categorize(height, length, len(counts), ratio, pooled),
    )
