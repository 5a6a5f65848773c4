"""Downstream evaluation: logistic regression, GMM clustering, and metrics.

The protocol mirrors a semi-supervised feature-quality study: feature
extractors are fit on the training half of a stratified split, a logistic
regression is trained on training-half features and scored on the test
half (accuracy, macro-F1), and a Gaussian mixture clusters the test-half
features and is scored against the test labels (NMI, pairwise Jaccard).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import split
from .exceptions import ShapeError, StateError
from .networks import encode_views, joint_latent
from .ops import one_hot, softmax_rows
from .validation import check_labels, check_matrix

VARIANCE_FLOOR = 1e-6


@dataclass
class LogRegModel:
    """Multinomial logistic regression parameters."""

    weight: np.ndarray
    bias: np.ndarray

    def scores(self, x):
        x = check_matrix(x, name="x")
        if x.shape[1] != self.weight.shape[0]:
            raise ShapeError(
                f"model expects {self.weight.shape[0]} features, got {x.shape[1]}"
            )
        return x @ self.weight + self.bias


def train_logreg(x, labels, iters=500, lr=0.5, n_classes=None):
    """Fit multinomial logistic regression by full-batch gradient descent.

    Zero initialization makes the fit deterministic; the gradient is
    averaged over samples, so duplicating every row leaves the trained
    decision function unchanged.
    """
    x = check_matrix(x, name="x")
    labels = check_labels(labels, x.shape[0])
    if len(np.unique(labels)) < 2:
        raise ValueError("logistic regression needs at least 2 classes present")
    k = int(labels.max()) + 1 if n_classes is None else int(n_classes)
    y = one_hot(labels, k)
    n = x.shape[0]
    w = np.zeros((x.shape[1], k))
    b = np.zeros(k)
    for _ in range(iters):
        p = softmax_rows(x @ w + b)
        err = (p - y) / n
        w -= lr * (x.T @ err)
        b -= lr * err.sum(axis=0)
    return LogRegModel(w, b)


def predict_logreg(model, x):
    """Argmax class per row; ties resolve to the lowest class id."""
    return np.argmax(model.scores(x), axis=1)


@dataclass
class GmmModel:
    """Diagonal-covariance Gaussian mixture with its fit history."""

    k: int
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihoods: list = field(default_factory=list)


def _log_components(x, means, variances):
    # (n, k) log density of each sample under each diagonal Gaussian
    diff = x[:, None, :] - means[None, :, :]
    quad = (diff * diff / variances[None, :, :]).sum(axis=2)
    norm = np.log(2.0 * np.pi * variances).sum(axis=1)
    return -0.5 * (quad + norm[None, :])


def _kmeanspp_centers(x, k, rng):
    centers = [x[rng.integers(x.shape[0])]]
    for _ in range(1, k):
        d2 = np.min(
            [np.square(x - c).sum(axis=1) for c in centers], axis=0
        )
        total = d2.sum()
        if total > 0:
            idx = rng.choice(x.shape[0], p=d2 / total)
        else:
            idx = rng.integers(x.shape[0])
        centers.append(x[idx])
    return np.array(centers)


def fit_gmm(x, k, seed, max_iters=200, tol=1e-6):
    """EM for a diagonal-covariance mixture, seeded by k-means++ centers.

    The recorded log-likelihood trace is non-decreasing; variances are
    floored at 1e-6 so degenerate components shrink but never crash EM.
    """
    x = check_matrix(x, name="x")
    n, d = x.shape
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n < k:
        raise ValueError(f"need at least k={k} samples, got {n}")
    rng = np.random.default_rng(seed)
    means = _kmeanspp_centers(x, k, rng)
    base_var = np.maximum(x.var(axis=0), VARIANCE_FLOOR)
    variances = np.tile(base_var, (k, 1))
    weights = np.full(k, 1.0 / k)

    trace = []
    for _ in range(max_iters):
        logp = _log_components(x, means, variances) + np.log(weights)[None, :]
        row_max = logp.max(axis=1, keepdims=True)
        lse = row_max + np.log(np.exp(logp - row_max).sum(axis=1, keepdims=True))
        trace.append(float(lse.sum()))
        if len(trace) > 1 and trace[-1] - trace[-2] < tol:
            break
        resp = np.exp(logp - lse)
        nk = np.maximum(resp.sum(axis=0), 1e-12)
        weights = nk / n
        weights /= weights.sum()
        means = (resp.T @ x) / nk[:, None]
        diff = x[:, None, :] - means[None, :, :]
        variances = (resp[:, :, None] * diff * diff).sum(axis=0) / nk[:, None]
        variances = np.maximum(variances, VARIANCE_FLOOR)
    return GmmModel(k, weights, means, variances, trace)


def predict_gmm(model, x):
    """Most-responsible component per row."""
    x = check_matrix(x, name="x")
    if x.shape[1] != model.means.shape[1]:
        raise ShapeError(
            f"model expects {model.means.shape[1]} features, got {x.shape[1]}"
        )
    logp = _log_components(x, model.means, model.variances)
    return np.argmax(logp + np.log(model.weights)[None, :], axis=1)


def _paired(pred, truth):
    pred = check_labels(np.asarray(pred))
    truth = check_labels(np.asarray(truth))
    if pred.shape[0] != truth.shape[0]:
        raise ShapeError(
            f"length mismatch: {pred.shape[0]} predictions, {truth.shape[0]} labels"
        )
    return pred, truth


def accuracy(pred, truth):
    """Fraction of exact matches."""
    pred, truth = _paired(pred, truth)
    return float(np.mean(pred == truth)) if pred.size else 0.0


def macro_f1(pred, truth):
    """Unweighted mean of per-class F1; empty denominators count as 0."""
    pred, truth = _paired(pred, truth)
    classes = np.union1d(pred, truth)
    scores = []
    for c in classes:
        tp = int(np.sum((pred == c) & (truth == c)))
        fp = int(np.sum((pred == c) & (truth != c)))
        fn = int(np.sum((pred != c) & (truth == c)))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        denom = precision + recall
        scores.append(2.0 * precision * recall / denom if denom else 0.0)
    return float(np.mean(scores)) if scores else 0.0


def _contingency(a, b):
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ua.size, ub.size), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def nmi(a, b):
    """Mutual information over sqrt of the entropy product, natural logs."""
    a, b = _paired(a, b)
    n = a.shape[0]
    table = _contingency(a, b)
    pa = table.sum(axis=1) / n
    pb = table.sum(axis=0) / n
    ha = -sum(p * math.log(p) for p in pa if p > 0)
    hb = -sum(p * math.log(p) for p in pb if p > 0)
    mi = 0.0
    for i in range(table.shape[0]):
        for j in range(table.shape[1]):
            nij = table[i, j]
            if nij:
                mi += (nij / n) * math.log(nij / n / (pa[i] * pb[j]))
    denom = math.sqrt(ha * hb)
    return float(mi / denom) if denom > 0 else 0.0


def jaccard(a, b):
    """Pairwise same-cluster agreement over unordered sample pairs.

    Pairs co-clustered in both partitions over pairs co-clustered in at
    least one; with no co-clustered pairs anywhere the partitions agree
    vacuously and the score is 1.
    """
    a, b = _paired(a, b)
    table = _contingency(a, b)

    def pairs(counts):
        return float((counts * (counts - 1) // 2).sum())

    both = pairs(table)
    union = pairs(table.sum(axis=1)) + pairs(table.sum(axis=0)) - both
    return float(both / union) if union > 0 else 1.0


@dataclass
class MetricsReport:
    """Flat evaluation records: one per (features, view, method, metric)."""

    dataset: str
    records: list = field(default_factory=list)

    def add(self, features, view, method, metric, value):
        self.records.append(
            {
                "dataset": self.dataset,
                "features": features,
                "view": view,
                "method": method,
                "metric": metric,
                "value": float(value),
            }
        )

    def value(self, features, view, method, metric):
        for r in self.records:
            if (r["features"], r["view"], r["method"], r["metric"]) == (
                features,
                view,
                method,
                metric,
            ):
                return r["value"]
        raise KeyError((features, view, method, metric))

    def to_json(self):
        return json.dumps({"dataset": self.dataset, "records": self.records}, indent=2)

    def format_table(self):
        lines = [
            f"{'features':<12}{'view':<8}{'method':<8}{'metric':<10}{'value':>8}"
        ]
        for r in self.records:
            lines.append(
                f"{r['features']:<12}{str(r['view']):<8}{r['method']:<8}"
                f"{r['metric']:<10}{r['value']:>8.4f}"
            )
        return "\n".join(lines)


def evaluate_protocol(
    dataset,
    result,
    cfg,
    split_ratio=0.5,
    scale=False,
    dataset_name="dataset",
    logreg_iters=500,
    logreg_lr=0.5,
):
    """Score four feature families with LR classification and GMM clustering.

    Families: raw per-view features; per-view latents from autoencoders
    trained alone (``ae``); per-view latents after the full alternating
    schedule (``ae_cotrain``); and the fused joint latent (``joint``).  The
    split is re-derived from ``cfg.seed``, so pass the same config the
    model was trained with; with ``scale`` the min-max scaler is refit on
    the training half exactly as during training.
    """
    from .cotrain import run_cotraining
    from .data import MinMaxScale, MultiViewDataset

    if result is None:
        raise StateError("no trained model: run co-training before evaluating")
    bank = result.bank if hasattr(result, "bank") else result
    train_ds, test_ds = split(dataset, split_ratio, cfg.seed)
    if scale:
        scaler = MinMaxScale.fit(train_ds.views)
        train_ds = MultiViewDataset(
            scaler.apply(train_ds.views), train_ds.labels, train_ds.n_classes, scaler
        )
        test_ds = MultiViewDataset(
            scaler.apply(test_ds.views), test_ds.labels, test_ds.n_classes, scaler
        )

    ae_bank = run_cotraining(train_ds, cfg, supervised=False).bank
    h_ae_train = encode_views(train_ds.views, ae_bank.encoders)
    h_ae_test = encode_views(test_ds.views, ae_bank.encoders)
    h_co_train = encode_views(train_ds.views, bank.encoders)
    h_co_test = encode_views(test_ds.views, bank.encoders)
    z_train = joint_latent(train_ds.views, bank.encoders, bank.supervised)
    z_test = joint_latent(test_ds.views, bank.encoders, bank.supervised)

    columns = []
    for v in range(dataset.n_views):
        columns.append(("raw", v, train_ds.views[v], test_ds.views[v]))
    for v in range(dataset.n_views):
        columns.append(("ae", v, h_ae_train[v], h_ae_test[v]))
    for v in range(dataset.n_views):
        columns.append(("ae_cotrain", v, h_co_train[v], h_co_test[v]))
    columns.append(("joint", "joint", z_train, z_test))

    report = MetricsReport(dataset_name)
    for features, view, ftrain, ftest in columns:
        lr_model = train_logreg(
            ftrain,
            train_ds.labels,
            iters=logreg_iters,
            lr=logreg_lr,
            n_classes=dataset.n_classes,
        )
        pred = predict_logreg(lr_model, ftest)
        report.add(features, view, "lr", "acc", accuracy(pred, test_ds.labels))
        report.add(features, view, "lr", "f1", macro_f1(pred, test_ds.labels))

        gmm = fit_gmm(ftest, dataset.n_classes, cfg.seed)
        clusters = predict_gmm(gmm, ftest)
        report.add(features, view, "gmm", "nmi", nmi(clusters, test_ds.labels))
        report.add(features, view, "gmm", "jaccard", jaccard(clusters, test_ds.labels))
    return report
