"""Benchmark harness: cross-validated runs of early classifiers with time budgets.

Each (algorithm, dataset, fold) job runs in its own forked process so a
budget overrun can be killed without disturbing other jobs. Test series are
streamed through the model's ``decide`` call at its checkpoints.

Outputs in ``output_dir``:

* ``report.json``: config, per-fold records and category aggregates. It holds
  no wall-clock values, so identical configs give byte-identical files.
* ``timings.json`` and ``records.csv``: the same records with timings.
"""

from __future__ import annotations

import csv
import json
import logging
import multiprocessing as mp
import time
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Dataset, dataset_stats, impute_missing, load_dataset, stratified_folds
from .ecec import ECEC
from .economy import EconomyK
from .ects import ECTS
from .edsc import EDSC
from .ensemble import FixedPrefixModel, VotingClassifier
from .metrics import MetricRecord, categorize_and_aggregate, compute_metrics
from .teaser import TEASER

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2


def _teaser_z(**params):
    return TEASER(znorm=True, **params)


ALGORITHMS = {
    "edsc": EDSC,
    "ects": ECTS,
    "teaser": TEASER,
    "teaser-z": _teaser_z,
    "ecec": ECEC,
    "economy-k": EconomyK,
    "fixed-prefix": FixedPrefixModel,
}


def register_algorithm(name: str, factory) -> None:
    """Make ``factory(**params)`` available to configs under ``name``."""
    ALGORITHMS[name] = factory


def make_model(algorithm: str, params: dict | None, n_dims: int):
    """Instantiate an algorithm; univariate ones are wrapped for multivariate data."""
    try:
        factory = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; known: {sorted(ALGORITHMS)}") from None
    params = dict(params or {})
    model = factory(**params)
    if n_dims > 1 and not getattr(model, "multivariate", False):
        return VotingClassifier(lambda: factory(**params))
    return model


@dataclass
class DatasetSpec:
    path: str
    name: str | None = None
    format: str | None = None
    dims: int = 1
    has_source: bool = False

    @classmethod
    def parse(cls, entry) -> "DatasetSpec":
        if isinstance(entry, str):
            return cls(entry)
        return cls(**entry)

    def load(self) -> Dataset:
        d = load_dataset(self.path, self.format, self.dims, self.has_source, self.name)
        return impute_missing(d)


@dataclass
class RunConfig:
    datasets: list
    algorithms: list
    folds: int = 5
    seed: int = 0
    timeout_seconds: float = 24 * 3600.0
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        self.datasets = [DatasetSpec.parse(e) if not isinstance(e, DatasetSpec) else e for e in self.datasets]
        self.algorithms = [a if isinstance(a, dict) else {"id": a} for a in self.algorithms]
        for a in self.algorithms:
            a.setdefault("params", {})
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if not self.timeout_seconds > 0:
            raise ValueError("timeout_seconds must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - {"datasets", "algorithms", "folds", "seed", "timeout_seconds", "output_dir", "workers"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "datasets": [vars(s) for s in self.datasets],
            "algorithms": self.algorithms,
            "folds": self.folds,
            "seed": self.seed,
            "timeout_seconds": self.timeout_seconds,
        }


def stream_predict(model, X) -> tuple[np.ndarray, np.ndarray]:
    """Feed each series point by point; return labels and trigger lengths."""
    labels, triggers = [], []
    for x in X:
        series = model.preprocess(x if x.shape[0] > 1 else x[0])
        state = model.init_state()
        for t in model.checkpoints():
            lab = model.decide(series[..., :t], state)
            if lab is not None:
                labels.append(lab)
                triggers.append(t)
                break
        else:
            raise RuntimeError(f"{type(model).__name__} did not emit by the final checkpoint")
    return np.array(labels), np.array(triggers)


def evaluate_fold(algorithm: str, params: dict, d: Dataset, train, test) -> dict:
    X, y = d.to_arrays()
    model = make_model(algorithm, params, X.shape[1])
    Xtr = X[train] if X.shape[1] > 1 or getattr(model, "multivariate", False) else X[train, 0]
    t0 = time.perf_counter()
    model.fit(Xtr, y[train])
    t1 = time.perf_counter()
    labels, triggers = stream_predict(model, X[test])
    t2 = time.perf_counter()
    out = compute_metrics(y[test], labels, triggers, X.shape[2])
    out.update(train_seconds=t1 - t0, test_seconds=t2 - t1)
    return out


def _job_entry(conn, algorithm, params, d, train, test):
    try:
        conn.send(("ok", evaluate_fold(algorithm, params, d, train, test)))
    except Exception as exc:  # reported back as an error record
        conn.send(("error", f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"))
    finally:
        conn.close()


@dataclass
class _Job:
    key: tuple
    args: tuple
    proc: mp.Process | None = None
    conn: object = None
    started: float = 0.0


def _run_jobs(jobs: list[_Job], timeout: float, workers: int) -> dict:
    ctx = mp.get_context("fork")
    pending = list(jobs)
    active: list[_Job] = []
    results = {}
    while pending or active:
        while pending and len(active) < workers:
            job = pending.pop(0)
            parent, child = ctx.Pipe(duplex=False)
            job.proc = ctx.Process(target=_job_entry, args=(child, *job.args), daemon=True)
            job.proc.start()
            child.close()
            job.conn, job.started = parent, time.monotonic()
            active.append(job)
        time.sleep(0.01)
        for job in list(active):
            # liveness first: a worker that exited has already flushed its result
            alive = job.proc.is_alive()
            if job.conn.poll():
                try:
                    results[job.key] = job.conn.recv()
                except EOFError:
                    results[job.key] = ("error", "worker exited without a result")
            elif not alive:
                results[job.key] = ("error", f"worker died with exit code {job.proc.exitcode}")
            elif time.monotonic() - job.started > timeout:
                job.proc.kill()
                results[job.key] = ("timeout", None)
            else:
                continue
            job.proc.join()
            job.conn.close()
            active.remove(job)
    return results


def run_experiment(cfg: RunConfig) -> tuple[list[MetricRecord], int]:
    """Run every job of ``cfg``, write the reports and return (records, exit code)."""
    for a in cfg.algorithms:
        if a["id"] not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a['id']!r}; known: {sorted(ALGORITHMS)}")
    datasets = {}
    for spec in cfg.datasets:
        d = spec.load()
        if d.name in datasets:
            raise ValueError(f"duplicate dataset name {d.name!r}")
        datasets[d.name] = d

    jobs = []
    categories = {}
    for name, d in datasets.items():
        categories[name] = list(dataset_stats(d).categories)
        key = "source_id" if any(i.source_id is not None for i in d.instances) else "class"
        plan = stratified_folds(d, cfg.folds, cfg.seed, key=key)
        for a in cfg.algorithms:
            for f in range(cfg.folds):
                args = (a["id"], a["params"], d, plan.train_indices(f), plan.test_indices(f))
                jobs.append(_Job((a["id"], name, f), args))

    results = _run_jobs(jobs, cfg.timeout_seconds, cfg.workers)
    records = []
    for job in jobs:
        status, payload = results[job.key]
        rec = MetricRecord(*job.key, status=status)
        if status == "ok":
            for k, v in payload.items():
                setattr(rec, k, v)
        elif status == "error":
            rec.error = payload
            logger.warning("%s on %s fold %d failed: %s", *job.key, payload.splitlines()[0])
        else:
            logger.warning("%s on %s fold %d timed out", *job.key)
        records.append(rec)

    write_reports(cfg, records, categories)
    code = EXIT_OK if all(r.status == "ok" for r in records) else EXIT_PARTIAL
    return records, code


def write_reports(cfg: RunConfig, records, categories: dict) -> None:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "config": cfg.to_dict(),
        "categories": categories,
        "records": [r.to_dict(timings=False) for r in records],
        "aggregates": categorize_and_aggregate(records, categories),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    (out / "timings.json").write_text(json.dumps([r.to_dict() for r in records], indent=2) + "\n")
    rows = [r.to_dict() for r in records]
    with open(out / "records.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else list(MetricRecord.__dataclass_fields__))
        w.writeheader()
        for row in rows:
            if row["error"]:
                row["error"] = row["error"].splitlines()[0]
            w.writerow({k: "" if v is None else v for k, v in row.items()})
