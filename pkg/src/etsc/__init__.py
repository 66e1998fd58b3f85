"""Early time-series classification: algorithms, base learners and a benchmark harness."""

from .base import EarlyClassifier, checkpoint_schedule, harmonic_mean
from .core import Dataset, DatasetError, LabeledInstance, dataset_stats, load_dataset, stratified_folds
from .ecec import ECEC
from .economy import EconomyK
from .ects import ECTS
from .edsc import EDSC
from .ensemble import FixedPrefixModel, VotingClassifier
from .metrics import MetricRecord, compute_metrics
from .teaser import TEASER

__all__ = [
    "Dataset",
    "DatasetError",
    "EarlyClassifier",
    "ECEC",
    "ECTS",
    "EDSC",
    "EconomyK",
    "FixedPrefixModel",
    "LabeledInstance",
    "MetricRecord",
    "TEASER",
    "VotingClassifier",
    "checkpoint_schedule",
    "compute_metrics",
    "dataset_stats",
    "harmonic_mean",
    "load_dataset",
    "stratified_folds",
]
