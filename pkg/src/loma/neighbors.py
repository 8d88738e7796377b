"""Exact per-class nearest-neighbor retrieval."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError, EmptyClassError, InsufficientPointsError


@dataclass(frozen=True)
class ClassIndex:
    """Training points of one class, kept in training-row order.

    ``rows[i]`` is the position of ``points[i]`` in the full training matrix,
    so scanning in storage order breaks distance ties by training row.
    """

    label: int
    points: np.ndarray
    rows: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if len(pts) < 1:
            raise EmptyClassError(f"class {self.label} has no points")

    @property
    def size(self):
        return self.points.shape[0]


def build_indexes(features, labels, n_classes=None):
    """One :class:`ClassIndex` per internal label ``1..L``.

    Parameters
    ----------
    features : (n, D) array_like
    labels : (n,) array_like of int
        Internal labels in ``1..L``.
    n_classes : int, optional
        ``L``; inferred from ``labels.max()`` when omitted.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    if features.ndim != 2 or len(features) == 0:
        raise DimensionError("training set must be a non-empty 2-d array")
    if labels.shape != (len(features),):
        raise DimensionError("labels must have one entry per training row")
    L = int(labels.max()) if n_classes is None else int(n_classes)
    indexes = []
    for label in range(1, L + 1):
        rows = np.flatnonzero(labels == label)
        if len(rows) == 0:
            raise EmptyClassError(f"class {label} has no training points")
        indexes.append(ClassIndex(label, features[rows], rows))
    return indexes


def knn_within_class(index, x, k):
    """The ``k`` nearest class points to ``x``, nearest first.

    Returns
    -------
    points : (k, D) ndarray
    rows : (k,) ndarray
        Training-row positions of the returned points.
    """
    if not 1 <= k <= index.size:
        raise InsufficientPointsError(f"K={k} exceeds the {index.size} points of class {index.label}")
    x = np.ascontiguousarray(x, dtype=float)
    if x.shape != (index.points.shape[1],):
        raise DimensionError(f"query has shape {x.shape}, index holds {index.points.shape[1]}-d points")
    local = kernels.knn_select(index.points, x, k)
    return index.points[local], index.rows[local]
