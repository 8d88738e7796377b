"""Spherical PCA: fit a p-sphere to a point cloud and query distances to it.

A p-sphere in R^D lives in a (p+1)-dimensional affine subspace
``{origin + basis @ u}``.  Fitting proceeds in three steps:

1. the top ``p+1`` principal directions of the points give ``basis``;
2. points are expressed in local coordinates ``u_i = basis.T @ (x_i - origin)``
   and the algebraic least-squares circle/sphere center is solved there;
3. the radius is the mean distance of the projected points to the center.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InsufficientPointsError, NumericError, SingularFitError

# Scatter matrices with a larger condition number are solved by pseudo-inverse.
COND_LIMIT = 1e12
PINV_RCOND = 1e-10
DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class Sphere:
    """A p-dimensional sphere embedded in R^D.

    Attributes
    ----------
    basis : (D, p+1) ndarray
        Orthonormal columns spanning the sphere's affine subspace.
    center : (D,) ndarray
    radius : float
    origin : (D,) ndarray
        Anchor point of the affine subspace (the sample mean of the fitted points).
    """

    basis: np.ndarray
    center: np.ndarray
    radius: float
    origin: np.ndarray

    def __post_init__(self):
        for name in ("basis", "center", "origin"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def dim(self):
        """Intrinsic dimension p."""
        return self.basis.shape[1] - 1

    @property
    def ambient_dim(self):
        return self.basis.shape[0]


@dataclass(frozen=True)
class SphereQueryResult:
    projection: np.ndarray
    distance: float
    degenerate: bool


def _as_points(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-d point array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NumericError("point set contains non-finite values")
    return X


def _normalize_signs(V):
    # largest-magnitude entry of each column made positive; first index wins ties
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def principal_subspace(X, k):
    """Top-``k`` principal directions of a point set.

    Parameters
    ----------
    X : (n, D) array_like
    k : int

    Returns
    -------
    basis : (D, k) ndarray
        Eigenvectors of the sample covariance, by decreasing eigenvalue, each
        signed so its largest-magnitude entry is positive.
    mean : (D,) ndarray
    """
    X = _as_points(X)
    n, D = X.shape
    if n < 2:
        raise InsufficientPointsError(f"need at least 2 points, got {n}")
    if not 1 <= k <= min(n - 1, D):
        raise DimensionError(f"k={k} must lie in [1, min(n-1, D)] = [1, {min(n - 1, D)}]")
    mean = X.mean(axis=0)
    A = X - mean
    # right singular vectors of the centered data are the covariance eigenvectors
    _, s, Vt = np.linalg.svd(A, full_matrices=False)
    if not np.all(np.isfinite(s)):
        raise NumericError("covariance decomposition produced non-finite values")
    return _normalize_signs(Vt[:k].T.copy()), mean


def _solve_center(U):
    """Algebraic least-squares center of points given in local coordinates."""
    ubar = U.mean(axis=0)
    Uc = U - ubar
    sq = np.einsum("ij,ij->i", U, U)
    scatter = Uc.T @ Uc
    rhs = 0.5 * (Uc.T @ (sq - sq.mean()))
    evals = np.linalg.eigvalsh(scatter)
    top = evals[-1]
    if top <= 0.0:
        raise SingularFitError("all points coincide; no sphere is determined")
    if evals[0] <= top / COND_LIMIT:
        return np.linalg.pinv(scatter, rcond=PINV_RCOND, hermitian=True) @ rhs
    return np.linalg.solve(scatter, rhs)


def spca_fit(X, p):
    """Fit a ``p``-dimensional sphere to the rows of ``X``.

    Raises
    ------
    InsufficientPointsError
        If there are fewer than ``p + 2`` points.
    SingularFitError
        If every point is identical.
    """
    X = _as_points(X)
    n, D = X.shape
    p = int(p)
    if p < 1:
        raise DimensionError(f"intrinsic dimension must be >= 1, got {p}")
    if n < p + 2:
        raise InsufficientPointsError(f"a {p}-sphere needs at least {p + 2} points, got {n}")
    if p + 1 > D:
        raise DimensionError(f"a {p}-sphere does not fit in R^{D}")
    if np.all(X == X[0]):
        raise SingularFitError("all points coincide; no sphere is determined")
    V, mean = principal_subspace(X, p + 1)
    U = (X - mean) @ V
    c_local = _solve_center(U)
    radius = float(np.mean(np.linalg.norm(U - c_local, axis=1)))
    return Sphere(basis=V, center=mean + V @ c_local, radius=radius, origin=mean)


def project_to_sphere(sphere, x):
    """Closest point on ``sphere`` to ``x`` and the distance to it.

    When ``x`` projects onto the sphere's center within the subspace, every
    sphere point is equidistant; ``degenerate`` is then set and the returned
    projection is ``center + radius * basis[:, 0]``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != sphere.center.shape:
        raise DimensionError(f"query has shape {x.shape}, sphere lives in R^{sphere.ambient_dim}")
    if not np.all(np.isfinite(x)):
        raise NumericError("query contains non-finite values")
    V, c, r = sphere.basis, sphere.center, sphere.radius
    offset = x - c
    w = V @ (V.T @ offset)
    norm_w = np.linalg.norm(w)
    norm_offset = np.linalg.norm(offset)
    if norm_w <= DEGENERATE_RTOL * (1.0 + norm_offset):
        xhat = c + r * V[:, 0]
        return SphereQueryResult(xhat, float(np.hypot(norm_offset, r)), True)
    xhat = c + (r / norm_w) * w
    return SphereQueryResult(xhat, float(np.linalg.norm(x - xhat)), False)


def distance_to_sphere(sphere, x):
    return project_to_sphere(sphere, x).distance
