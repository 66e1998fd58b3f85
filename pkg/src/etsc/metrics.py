"""Evaluation metrics and category-level aggregation."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.metrics import f1_score

from .base import harmonic_mean

METRICS = ("accuracy", "f1", "earliness", "harmonic_mean")


@dataclass
class MetricRecord:
    algorithm: str
    dataset: str
    fold: int
    status: str = "ok"
    accuracy: float | None = None
    f1: float | None = None
    f1_positive: float | None = None
    earliness: float | None = None
    harmonic_mean: float | None = None
    train_seconds: float | None = None
    test_seconds: float | None = None
    error: str | None = None

    def to_dict(self, timings: bool = True) -> dict:
        d = asdict(self)
        if not timings:
            d.pop("train_seconds")
            d.pop("test_seconds")
        return d


def compute_metrics(y_true, y_pred, triggers, length) -> dict:
    """Accuracy, macro F1, mean earliness and their harmonic mean.

    ``length`` is the full series length (scalar or per instance). For two
    classes the F1 of the second (sorted) class is reported as
    ``f1_positive``.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) == 0:
        raise ValueError("no predictions")
    trig = np.asarray(triggers, dtype=float)
    earl = float(np.mean(trig / np.asarray(length, dtype=float)))
    acc = float(np.mean(y_true == y_pred))
    labels = np.unique(np.concatenate([y_true, y_pred]))
    out = {
        "accuracy": acc,
        "f1": float(f1_score(y_true, y_pred, labels=labels, average="macro", zero_division=0)),
        "f1_positive": None,
        "earliness": earl,
        "harmonic_mean": harmonic_mean(acc, earl),
    }
    classes = np.unique(y_true)
    if len(classes) == 2:
        out["f1_positive"] = float(f1_score(y_true, y_pred, pos_label=classes[1], average="binary",
                                            labels=classes, zero_division=0))
    return out


def dataset_means(records) -> dict:
    """Fold means per (algorithm, dataset) over completed records."""
    groups = defaultdict(list)
    for r in records:
        if r.status == "ok":
            groups[(r.algorithm, r.dataset)].append(r)
    return {
        key: {m: float(np.mean([getattr(r, m) for r in rs])) for m in METRICS}
        for key, rs in sorted(groups.items())
    }


def categorize_and_aggregate(records, categories: dict) -> list[dict]:
    """Mean and population std of each metric per (algorithm, category).

    ``categories`` maps dataset id to its category names; a dataset in
    several categories contributes to each.
    """
    per_cat = defaultdict(list)
    for (alg, ds), means in dataset_means(records).items():
        for cat in categories.get(ds, ()):
            per_cat[(alg, cat)].append(means)
    rows = []
    for (alg, cat), items in sorted(per_cat.items()):
        row = {"algorithm": alg, "category": cat, "n_datasets": len(items)}
        for m in METRICS:
            vals = np.array([it[m] for it in items])
            row[f"{m}_mean"] = float(vals.mean())
            row[f"{m}_std"] = float(vals.std())
        rows.append(row)
    return rows
