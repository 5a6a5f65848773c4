"""Input validation helpers shared by the estimator and evaluation code."""

from __future__ import annotations

import numpy as np

from .exceptions import ShapeError


def check_matrix(x, name="X"):
    """Coerce to a finite, C-contiguous float64 2-D array."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError(f"{name} contains NaN or infinite values")
    return x


def check_views(views):
    """Validate a list of per-view matrices with aligned rows."""
    if not isinstance(views, (list, tuple)) or len(views) == 0:
        raise ValueError("views must be a nonempty list of 2-D arrays")
    out = [check_matrix(x, name=f"views[{v}]") for v, x in enumerate(views)]
    n = out[0].shape[0]
    for v, x in enumerate(out):
        if x.shape[0] != n:
            raise ShapeError(
                f"views[{v}] has {x.shape[0]} rows, expected {n} (views must align)"
            )
    return out


def check_labels(y, n_rows=None):
    """Coerce labels to a 1-D int64 vector, optionally of a required length."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ShapeError(f"labels must be 1-D, got shape {y.shape}")
    if y.size and not np.issubdtype(y.dtype, np.number):
        raise ValueError(f"labels must be numeric, got dtype {y.dtype}")
    y = y.astype(np.int64)
    if n_rows is not None and y.shape[0] != n_rows:
        raise ShapeError(f"got {y.shape[0]} labels for {n_rows} rows")
    return y
