"""Multi-view dataset ingestion, splitting, batching, and synthesis.

A dataset directory holds ``view_0.csv`` ... ``view_{V-1}.csv`` plus
``labels.csv``.  View files are comma-separated decimal floats, one sample
per line, no header by default; the labels file has one nonnegative integer
per line.  Row i across all files is one instance.  Floats are written with
``repr`` (shortest round-trip form, at most 17 significant digits), so a
save/load round trip reproduces every value exactly.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError


@dataclass
class MinMaxScale:
    """Per-view, per-feature affine map of training features onto [0, 1].

    Fit on training rows only; the identical transform is applied to test
    rows, so constant features map to 0 and nothing leaks from the test set.
    """

    mins: list
    ranges: list

    @classmethod
    def fit(cls, views):
        mins, ranges = [], []
        for x in views:
            lo = x.min(axis=0)
            span = x.max(axis=0) - lo
            span[span == 0.0] = 1.0
            mins.append(lo)
            ranges.append(span)
        return cls(mins, ranges)

    def apply(self, views):
        return [(x - lo) / span for x, lo, span in zip(views, self.mins, self.ranges)]


@dataclass
class MultiViewDataset:
    """Aligned per-view feature matrices sharing a single label vector.

    Parameters
    ----------
    views : list of ndarray
        One (n_samples, n_features_v) float64 matrix per view; all views
        have the same rows in the same order.
    labels : ndarray
        Integer class ids in [0, n_classes).
    n_classes : int
        Total class count; may exceed the number of ids actually present.
    scaling : MinMaxScale, optional
        Record of the feature scaling applied to ``views``, if any.
    """

    views: list
    labels: np.ndarray
    n_classes: int
    scaling: MinMaxScale = None

    def __post_init__(self):
        self.views = [np.ascontiguousarray(v, dtype=np.float64) for v in self.views]
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if not self.views:
            raise ValueError("dataset needs at least one view")
        if self.labels.ndim != 1:
            raise ValueError(f"labels must be 1-D, got shape {self.labels.shape}")
        n = self.labels.shape[0]
        for v, x in enumerate(self.views):
            if x.ndim != 2:
                raise ValueError(f"view {v} must be 2-D, got shape {x.shape}")
            if x.shape[0] != n:
                raise DataError(
                    f"view {v} has {x.shape[0]} rows but there are {n} labels"
                )
            if not np.isfinite(x).all():
                raise DataError(f"view {v} contains non-finite values")
        if n and self.labels.min() < 0:
            raise DataError(f"labels must be nonnegative, found {self.labels.min()}")
        if n and self.labels.max() >= self.n_classes:
            raise DataError(
                f"label {self.labels.max()} out of range for {self.n_classes} classes"
            )

    @property
    def n_samples(self):
        return self.labels.shape[0]

    @property
    def n_views(self):
        return len(self.views)

    @property
    def view_dims(self):
        return tuple(x.shape[1] for x in self.views)

    def subset(self, idx):
        """Row-gather the same indices from every view and the labels."""
        idx = np.asarray(idx)
        return MultiViewDataset(
            [x[idx] for x in self.views], self.labels[idx], self.n_classes, self.scaling
        )


@dataclass
class SynthSpec:
    """Recipe for a synthetic multi-view classification dataset."""

    views: int = 2
    classes: int = 4
    samples_per_class: int = 100
    latent_dim: int = 4
    noise_std: float = 0.3
    view_dims: tuple = (20, 20)

    def __post_init__(self):
        self.view_dims = tuple(int(m) for m in self.view_dims)
        counts = (self.views, self.classes, self.samples_per_class, self.latent_dim)
        if any(c < 1 for c in counts) or any(m < 1 for m in self.view_dims):
            raise ValueError(f"all counts must be >= 1, got {self}")
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")
        if len(self.view_dims) != self.views:
            raise ValueError(
                f"need {self.views} view dims, got {len(self.view_dims)}"
            )


def _read_float_csv(path, header=False):
    rows = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if header and lineno == 1:
                continue
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise DataError(
                    f"expected {width} columns, found {len(cells)}", path, lineno
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise DataError(f"non-numeric cell in {cells!r}", path, lineno) from None
    return np.array(rows, dtype=np.float64).reshape(len(rows), width or 0)


def _read_labels(path, header=False):
    labels = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if header and lineno == 1:
                continue
            line = line.strip()
            if not line:
                continue
            try:
                value = int(line)
            except ValueError:
                raise DataError(f"non-integer label {line!r}", path, lineno) from None
            if value < 0:
                raise DataError(f"negative label {value}", path, lineno)
            labels.append(value)
    return np.array(labels, dtype=np.int64)


def load_dataset(dir_path, header=False, strict=False):
    """Load ``view_0.csv`` ... ``view_{V-1}.csv`` plus ``labels.csv``.

    The class count is ``max(label) + 1``.  Ids in that range with no
    samples trigger a warning, or a :class:`DataError` when ``strict``.
    """
    view_paths = []
    while True:
        p = os.path.join(dir_path, f"view_{len(view_paths)}.csv")
        if not os.path.isfile(p):
            break
        view_paths.append(p)
    if not view_paths:
        raise DataError("no view_0.csv found", os.path.join(dir_path, "view_0.csv"))
    labels_path = os.path.join(dir_path, "labels.csv")
    if not os.path.isfile(labels_path):
        raise DataError("labels file missing", labels_path)

    views = [_read_float_csv(p, header=header) for p in view_paths]
    labels = _read_labels(labels_path, header=header)
    counts = {p: x.shape[0] for p, x in zip(view_paths, views)}
    counts[labels_path] = labels.shape[0]
    if len(set(counts.values())) > 1:
        detail = ", ".join(f"{os.path.basename(p)} has {c} rows" for p, c in counts.items())
        raise DataError(f"row counts differ across files: {detail}")
    if labels.size == 0:
        raise DataError("dataset is empty", labels_path)

    n_classes = int(labels.max()) + 1
    missing = sorted(set(range(n_classes)) - set(np.unique(labels).tolist()))
    if missing:
        msg = f"class ids {missing} have no samples (labels imply {n_classes} classes)"
        if strict:
            raise DataError(msg, labels_path)
        warnings.warn(msg)
    return MultiViewDataset(views, labels, n_classes)


def save_dataset(dir_path, dataset):
    """Write a dataset in the directory layout :func:`load_dataset` reads."""
    os.makedirs(dir_path, exist_ok=True)
    for v, x in enumerate(dataset.views):
        with open(os.path.join(dir_path, f"view_{v}.csv"), "w", encoding="utf-8") as fh:
            for row in x:
                fh.write(",".join(repr(float(c)) for c in row) + "\n")
    with open(os.path.join(dir_path, "labels.csv"), "w", encoding="utf-8") as fh:
        for y in dataset.labels:
            fh.write(f"{int(y)}\n")


def split(dataset, ratio, seed):
    """Class-stratified train/test split.

    One seeded shuffle of the row indices is applied identically to every
    view and the labels; the train side gets ceil(ratio * N) rows overall,
    allocated per class by largest remainder so per-class counts stay within
    one of proportional.  Every present class must have at least 2 samples.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    n = dataset.n_samples
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    labels = dataset.labels
    present = np.unique(labels)
    class_order = {int(k): [] for k in present}
    for i in perm:
        class_order[int(labels[i])].append(int(i))
    for k, idx in class_order.items():
        if len(idx) < 2:
            raise ValueError(
                f"class {k} has {len(idx)} sample(s); stratified split needs >= 2"
            )

    n_train = math.ceil(ratio * n)
    quota = {k: ratio * len(idx) for k, idx in class_order.items()}
    take = {k: math.floor(q) for k, q in quota.items()}
    leftovers = sorted(
        class_order, key=lambda k: (-(quota[k] - take[k]), k)
    )
    for k in leftovers[: n_train - sum(take.values())]:
        take[k] += 1
    # keep both sides nonempty per class, then rebalance to the exact total
    for k, idx in class_order.items():
        take[k] = min(max(take[k], 1), len(idx) - 1)
    keys = sorted(class_order)
    while sum(take.values()) < n_train:
        k = next(k for k in keys if take[k] < len(class_order[k]) - 1)
        take[k] += 1
    while sum(take.values()) > n_train:
        k = next(k for k in keys if take[k] > 1)
        take[k] -= 1

    train_idx = np.array([i for k in keys for i in class_order[k][: take[k]]], dtype=int)
    test_idx = np.array([i for k in keys for i in class_order[k][take[k]:]], dtype=int)
    return dataset.subset(train_idx), dataset.subset(test_idx)


def batches(n_rows, batch_size, seed):
    """Seeded permutation of ``range(n_rows)`` chunked into batches.

    The last batch may be short; together the batches cover every index
    exactly once.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    perm = np.random.default_rng(seed).permutation(n_rows)
    return [perm[i : i + batch_size] for i in range(0, n_rows, batch_size)]


def synth_multiview(spec, seed):
    """Generate a dataset with one shared latent and view-specific maps.

    Per class a latent center is drawn uniformly from [-1, 1]^latent_dim;
    each sample's latent is its center plus N(0, 0.1^2) noise.  View v
    observes x = z @ A_v.T + N(0, noise_std^2) where A_v is a fixed seeded
    random map with N(0, 1/latent_dim) entries.  All views see the same
    latent (consistency) through different maps (complementarity).
    """
    rng = np.random.default_rng(seed)
    k, spc, ld = spec.classes, spec.samples_per_class, spec.latent_dim
    centers = rng.uniform(-1.0, 1.0, size=(k, ld))
    maps = [
        rng.normal(0.0, 1.0 / math.sqrt(ld), size=(m, ld)) for m in spec.view_dims
    ]
    labels = np.repeat(np.arange(k), spc)
    z = centers[labels] + 0.1 * rng.standard_normal((labels.size, ld))
    views = [
        z @ a.T + spec.noise_std * rng.standard_normal((labels.size, m))
        for a, m in zip(maps, spec.view_dims)
    ]
    return MultiViewDataset(views, labels, k)
