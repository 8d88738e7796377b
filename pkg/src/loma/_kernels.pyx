# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-query kernels: exact per-class kNN plus spherical fit and distance.

Same contract as ``loma._pykernels``.  The distance is evaluated as
sqrt(|perp|^2 + (|w| - r)^2) in local coordinates rather than by forming the
projected point, so it serves as an independent route for cross-checking.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport malloc, free
from libc.string cimport memset
from scipy.linalg.cython_lapack cimport dgesvd, dsyev

cnp.import_array()

cdef double COND_LIMIT = 1e12
cdef double PINV_RCOND = 1e-10
cdef double DEGENERATE_RTOL = 1e-12


cdef struct Workspace:
    Py_ssize_t D
    Py_ssize_t k
    int q
    Py_ssize_t* idx
    double* d2
    double* mean
    double* A        # D x k, column-major (row-major k x D)
    double* s
    double* U        # D x min(D, k), column-major
    double* loc      # k x q
    double* scatter  # q x q
    double* evals
    double* rhs
    double* c
    double* y
    double* work
    int lwork
    double* swork
    int slwork


cdef int ws_init(Workspace* ws, Py_ssize_t D, Py_ssize_t k, int q) noexcept nogil:
    cdef int m = <int>D, n = <int>k, lda = <int>D, ldu = <int>D, ldvt = 1
    cdef int info = 0, lwork = -1, qi = q
    cdef double wq = 0.0, dummy = 0.0
    cdef Py_ssize_t mn = D if D < k else k
    ws.D = D
    ws.k = k
    ws.q = q
    ws.idx = <Py_ssize_t*> malloc(k * sizeof(Py_ssize_t))
    ws.d2 = <double*> malloc(k * sizeof(double))
    ws.mean = <double*> malloc(D * sizeof(double))
    ws.A = <double*> malloc(D * k * sizeof(double))
    ws.s = <double*> malloc(mn * sizeof(double))
    ws.U = <double*> malloc(D * mn * sizeof(double))
    ws.loc = <double*> malloc(k * q * sizeof(double))
    ws.scatter = <double*> malloc(q * q * sizeof(double))
    ws.evals = <double*> malloc(q * sizeof(double))
    ws.rhs = <double*> malloc(q * sizeof(double))
    ws.c = <double*> malloc(q * sizeof(double))
    ws.y = <double*> malloc(q * sizeof(double))
    ws.work = NULL
    ws.swork = NULL
    dgesvd(b"S", b"N", &m, &n, ws.A, &lda, ws.s, ws.U, &ldu, &dummy, &ldvt, &wq, &lwork, &info)
    ws.lwork = <int>wq + 1
    ws.work = <double*> malloc(ws.lwork * sizeof(double))
    lwork = -1
    dsyev(b"V", b"U", &qi, ws.scatter, &qi, ws.evals, &wq, &lwork, &info)
    ws.slwork = <int>wq + 1
    ws.swork = <double*> malloc(ws.slwork * sizeof(double))
    if (ws.idx == NULL or ws.d2 == NULL or ws.mean == NULL or ws.A == NULL
            or ws.s == NULL or ws.U == NULL or ws.loc == NULL or ws.scatter == NULL
            or ws.evals == NULL or ws.rhs == NULL or ws.c == NULL or ws.y == NULL
            or ws.work == NULL or ws.swork == NULL):
        return -1
    return 0


cdef void ws_free(Workspace* ws) noexcept nogil:
    free(ws.idx); free(ws.d2); free(ws.mean); free(ws.A); free(ws.s); free(ws.U)
    free(ws.loc); free(ws.scatter); free(ws.evals); free(ws.rhs); free(ws.c)
    free(ws.y); free(ws.work); free(ws.swork)


cdef void knn_core(const double[:, ::1] pts, const double* x, Py_ssize_t k,
                   Py_ssize_t* idx, double* best) noexcept nogil:
    """Insertion-buffer selection; strict comparison keeps the lower row on ties."""
    cdef Py_ssize_t n = pts.shape[0], D = pts.shape[1]
    cdef Py_ssize_t i, j, filled = 0, pos
    cdef double acc, diff
    for i in range(n):
        acc = 0.0
        for j in range(D):
            diff = pts[i, j] - x[j]
            acc = acc + diff * diff
        if filled == k and acc >= best[k - 1]:
            continue
        pos = filled if filled < k else k - 1
        while pos > 0 and best[pos - 1] > acc:
            best[pos] = best[pos - 1]
            idx[pos] = idx[pos - 1]
            pos -= 1
        best[pos] = acc
        idx[pos] = i
        if filled < k:
            filled += 1


cdef int sphere_core(Workspace* ws, const double[:, ::1] pts, const double* x,
                     double* dist_out) noexcept nogil:
    """Fit a sphere to pts[ws.idx[:k]] and measure the distance to x.

    Returns 1 for a degenerate query, 0 otherwise, negative on LAPACK failure.
    """
    cdef Py_ssize_t D = ws.D, k = ws.k, i, j, a, b
    cdef int q = ws.q, m = <int>D, n = <int>k, lda = <int>D, ldu = <int>D, ldvt = 1
    cdef int info = 0, qi = q
    cdef double dummy = 0.0, acc, t, sqmean, top, cut, r, perp2, nw, off2
    cdef double* A = ws.A
    cdef double* U = ws.U
    cdef double* L = ws.loc
    cdef double* S = ws.scatter

    memset(ws.mean, 0, D * sizeof(double))
    for i in range(k):
        for j in range(D):
            ws.mean[j] += pts[ws.idx[i], j]
    for j in range(D):
        ws.mean[j] /= k
    for i in range(k):
        for j in range(D):
            A[i * D + j] = pts[ws.idx[i], j] - ws.mean[j]

    # all neighbors identical: no sphere, fall back to point distance
    acc = 0.0
    for i in range(k * D):
        if A[i] != 0.0:
            acc = 1.0
            break
    if acc == 0.0:
        for j in range(D):
            t = x[j] - pts[ws.idx[0], j]
            acc += t * t
        dist_out[0] = sqrt(acc)
        return 1

    # dgesvd overwrites A; local coordinates are recomputed from pts below
    dgesvd(b"S", b"N", &m, &n, A, &lda, ws.s, U, &ldu, &dummy, &ldvt,
           ws.work, &ws.lwork, &info)
    if info != 0:
        return -1

    for i in range(k):
        for a in range(q):
            acc = 0.0
            for j in range(D):
                acc += (pts[ws.idx[i], j] - ws.mean[j]) * U[a * D + j]
            L[i * q + a] = acc

    # center local coordinates exactly and accumulate scatter / rhs
    for a in range(q):
        acc = 0.0
        for i in range(k):
            acc += L[i * q + a]
        ws.y[a] = acc / k
    sqmean = 0.0
    for i in range(k):
        acc = 0.0
        for a in range(q):
            acc += L[i * q + a] * L[i * q + a]
        sqmean += acc
    sqmean /= k
    for a in range(q):
        ws.rhs[a] = 0.0
        for b in range(q):
            S[a * q + b] = 0.0
    for i in range(k):
        acc = 0.0
        for a in range(q):
            acc += L[i * q + a] * L[i * q + a]
        acc -= sqmean
        for a in range(q):
            t = L[i * q + a] - ws.y[a]
            ws.rhs[a] += 0.5 * acc * t
            for b in range(q):
                S[a * q + b] += t * (L[i * q + b] - ws.y[b])

    dsyev(b"V", b"U", &qi, S, &qi, ws.evals, ws.swork, &ws.slwork, &info)
    if info != 0:
        return -2
    top = ws.evals[q - 1]
    cut = 0.0
    if ws.evals[0] <= top / COND_LIMIT:
        cut = PINV_RCOND * top
    for a in range(q):
        ws.c[a] = 0.0
    for b in range(q):
        if ws.evals[b] <= cut or ws.evals[b] <= 0.0:
            continue
        acc = 0.0
        for a in range(q):
            acc += S[b * q + a] * ws.rhs[a]
        acc /= ws.evals[b]
        for a in range(q):
            ws.c[a] += acc * S[b * q + a]

    r = 0.0
    for i in range(k):
        acc = 0.0
        for a in range(q):
            t = L[i * q + a] - ws.c[a]
            acc += t * t
        r += sqrt(acc)
    r /= k

    # query in local coordinates; perpendicular part measured explicitly
    for a in range(q):
        acc = 0.0
        for j in range(D):
            acc += (x[j] - ws.mean[j]) * U[a * D + j]
        ws.y[a] = acc
    perp2 = 0.0
    for j in range(D):
        acc = x[j] - ws.mean[j]
        for a in range(q):
            acc -= U[a * D + j] * ws.y[a]
        perp2 += acc * acc
    nw = 0.0
    for a in range(q):
        t = ws.y[a] - ws.c[a]
        nw += t * t
    off2 = perp2 + nw
    nw = sqrt(nw)
    if nw <= DEGENERATE_RTOL * (1.0 + sqrt(off2)):
        dist_out[0] = sqrt(off2 + r * r)
        return 1
    dist_out[0] = sqrt(perp2 + (nw - r) * (nw - r))
    return 0


def knn_select(const double[:, ::1] points, const double[::1] x, Py_ssize_t k):
    """Row indices of the ``k`` nearest rows, ordered by (distance, row)."""
    cdef Py_ssize_t n = points.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    if x.shape[0] != points.shape[1]:
        raise ValueError("query dimension does not match points")
    out = np.empty(k, dtype=np.intp)
    cdef Py_ssize_t[::1] out_v = out
    cdef double* best = <double*> malloc(k * sizeof(double))
    if best == NULL:
        raise MemoryError()
    with nogil:
        knn_core(points, &x[0], k, &out_v[0], best)
    free(best)
    return out


def _check(points, k, p):
    n, D = points.shape
    if k < 1 or k > n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    if p < 1 or p + 2 > k or p + 1 > D:
        raise ValueError(f"p={p} infeasible for k={k}, D={D}")


def sphere_distance(neighbors, x, int p):
    """Distance from ``x`` to the ``p``-sphere fitted to all rows of ``neighbors``."""
    cdef const double[:, ::1] pts = np.ascontiguousarray(neighbors, dtype=np.float64)
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t k = pts.shape[0], i
    _check(np.asarray(pts), k, p)
    cdef Workspace ws
    cdef double dist = 0.0
    cdef int rc = 0
    if ws_init(&ws, pts.shape[1], k, p + 1) != 0:
        ws_free(&ws)
        raise MemoryError()
    with nogil:
        for i in range(k):
            ws.idx[i] = i
        rc = sphere_core(&ws, pts, &xv[0], &dist)
    ws_free(&ws)
    if rc < 0:
        raise ArithmeticError(f"LAPACK failure ({rc})")
    return dist, rc == 1


def class_distance(points, x, Py_ssize_t k, int p):
    """kNN within ``points`` followed by the sphere distance."""
    d, g = batch_class_distances(points, np.asarray(x, dtype=np.float64)[None, :], k, p)
    return float(d[0]), bool(g[0])


def batch_class_distances(points, queries, Py_ssize_t k, int p):
    """Sphere distance of every query row to its local ``p``-sphere in ``points``.

    Returns ``(distances, degenerate)`` arrays.  Runs without the GIL.
    """
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] qs = np.ascontiguousarray(queries, dtype=np.float64)
    _check(np.asarray(pts), k, p)
    if qs.shape[0] and qs.shape[1] != pts.shape[1]:
        raise ValueError("query dimension does not match points")
    cdef Py_ssize_t m = qs.shape[0], i
    dist = np.empty(m, dtype=np.float64)
    degen = np.zeros(m, dtype=bool)
    if m == 0:
        return dist, degen
    cdef double[::1] dv = dist
    cdef cnp.uint8_t[::1] gv = degen.view(np.uint8)
    cdef Workspace ws
    cdef int rc = 0
    cdef double* best = <double*> malloc(k * sizeof(double))
    if ws_init(&ws, pts.shape[1], k, p + 1) != 0 or best == NULL:
        free(best)
        ws_free(&ws)
        raise MemoryError()
    with nogil:
        for i in range(m):
            knn_core(pts, &qs[i, 0], k, ws.idx, best)
            rc = sphere_core(&ws, pts, &qs[i, 0], &dv[i])
            if rc < 0:
                break
            gv[i] = rc
    free(best)
    ws_free(&ws)
    if rc < 0:
        raise ArithmeticError(f"LAPACK failure ({rc})")
    return dist, degen
