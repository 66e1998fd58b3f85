"""Synthetic datasets with a known class-signal onset."""

from __future__ import annotations

import numpy as np

from .core import Dataset, LabeledInstance


def make_onset_dataset(n: int = 100, length: int = 50, onset: int = 10, n_classes: int = 2,
                       amplitude: float = 2.0, noise: float = 1.0, seed: int = 0,
                       name: str = "synthetic") -> Dataset:
    """Gaussian noise throughout, plus a class-specific level step from index ``onset``.

    Class ``c`` is shifted by the ``c``-th of ``n_classes`` levels evenly
    spaced in ``[-amplitude, amplitude]``. Before the onset no value carries
    class information. Instances alternate between classes.
    """
    if not 0 <= onset < length:
        raise ValueError("onset must lie inside the series")
    rng = np.random.default_rng(seed)
    levels = np.linspace(-amplitude, amplitude, n_classes)
    active = np.arange(length) >= onset
    instances = []
    for i in range(n):
        c = i % n_classes
        x = noise * rng.standard_normal(length) + np.where(active, levels[c], 0.0)
        instances.append(LabeledInstance(x[np.newaxis, :], str(c)))
    return Dataset(tuple(instances), name=name)
