"""Pure-numpy implementations of the per-query kernels.

Signatures mirror the compiled ``_kernels`` extension exactly.
"""

import numpy as np

from .errors import SingularFitError
from .geometry import project_to_sphere, spca_fit


def knn_select(points, x, k):
    """Row indices of the ``k`` rows of ``points`` nearest to ``x``.

    Ordered by (squared distance, row index); ties at the cut go to the lower row.
    """
    points = np.asarray(points, dtype=float)
    x = np.asarray(x, dtype=float)
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    diff = points - x
    d2 = np.einsum("ij,ij->i", diff, diff)
    if k < n:
        kth = np.partition(d2, k - 1)[k - 1]
        cand = np.flatnonzero(d2 <= kth)
    else:
        cand = np.arange(n)
    order = np.lexsort((cand, d2[cand]))
    return cand[order[:k]].astype(np.intp)


def sphere_distance(neighbors, x, p):
    """Distance from ``x`` to the ``p``-sphere fitted to ``neighbors``.

    Returns ``(distance, degenerate)``.  If all neighbors coincide the
    distance to that single point is returned, flagged degenerate.
    """
    try:
        res = project_to_sphere(spca_fit(neighbors, p), x)
    except SingularFitError:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - neighbors[0])), True
    return res.distance, res.degenerate


def class_distance(points, x, k, p):
    idx = knn_select(points, x, k)
    return sphere_distance(points[idx], x, p)


def batch_class_distances(points, queries, k, p):
    points = np.ascontiguousarray(points, dtype=float)
    queries = np.ascontiguousarray(queries, dtype=float)
    m = queries.shape[0]
    dist = np.empty(m)
    degen = np.zeros(m, dtype=bool)
    for i in range(m):
        dist[i], degen[i] = class_distance(points, queries[i], k, p)
    return dist, degen
