"""The spherical-approximation (SPA) classifier.

The model is lazy: fitting only validates the configuration and partitions
the training points by class.  For every query and every class the ``K``
nearest same-class training points are fitted with a ``p``-sphere and the
query goes to the class whose sphere is closest.
"""

import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import kernels
from ._io import atomic_write, sha256_file
from .datasets import LabeledDataset, dataset_to_csv, load_csv
from .errors import (
    ChecksumError,
    DataValidationError,
    DimensionError,
    InfeasibleConfigError,
    UsageError,
)
from .neighbors import build_indexes

MANIFEST_FORMAT = "loma-spa-model"
MANIFEST_VERSION = 1
THREADS_ENV = "LOMA_THREADS"


def _is_auto(v):
    return isinstance(v, str) and v == "auto"


@dataclass(frozen=True)
class SpaConfig:
    """Hyperparameters.

    ``K`` and ``p`` accept ``"auto"``.  Automatic ``K`` is
    ``clamp(ceil(sqrt(n_min)), p + 2, n_min)`` with ``n_min`` the smallest
    class size; automatic ``p`` is chosen from ``p_grid`` by stratified
    ``cv_folds``-fold cross-validation seeded with ``seed``.  Distance ties
    always go to the lowest label.
    """

    K: object = "auto"
    p: object = "auto"
    p_grid: tuple = (1, 2, 3)
    cv_folds: int = 5
    seed: int = 0
    k_clamped: bool = field(default=False, compare=False)
    cv_accuracy: tuple = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "p_grid", tuple(int(v) for v in self.p_grid))
        if not _is_auto(self.K) and not (isinstance(self.K, (int, np.integer)) and self.K >= 1):
            raise UsageError(f"K must be a positive integer or 'auto', got {self.K!r}")
        if not _is_auto(self.p) and not (isinstance(self.p, (int, np.integer)) and self.p >= 1):
            raise UsageError(f"p must be a positive integer or 'auto', got {self.p!r}")
        if not self.p_grid or min(self.p_grid) < 1:
            raise UsageError("p_grid must be a non-empty list of positive integers")
        if int(self.cv_folds) < 2:
            raise UsageError("cv_folds must be >= 2")
        if not _is_auto(self.K) and not _is_auto(self.p) and self.K < self.p + 2:
            raise UsageError(f"K={self.K} is below the {self.p + 2} points a {self.p}-sphere needs")

    @property
    def resolved(self):
        return not (_is_auto(self.K) or _is_auto(self.p))

    def to_dict(self):
        d = asdict(self)
        d["p_grid"] = list(self.p_grid)
        if self.cv_accuracy is not None:
            d["cv_accuracy"] = [list(row) for row in self.cv_accuracy]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("cv_accuracy") is not None:
            d["cv_accuracy"] = tuple((int(p), float(a)) for p, a in d["cv_accuracy"])
        return cls(**d)


def auto_k(n_min, p):
    return min(max(math.isqrt(n_min - 1) + 1, p + 2), n_min)


def _min_class_size(train):
    return int(train.class_counts().min())


def _resolve_k(config, n_min, p):
    if _is_auto(config.K):
        return auto_k(n_min, p), False
    if config.K > n_min:
        return n_min, True
    return int(config.K), False


def _check_p(p, n_min, D):
    if p + 2 > n_min:
        raise InfeasibleConfigError(f"p={p} needs {p + 2} points per class, smallest class has {n_min}")
    if p + 1 > D:
        raise InfeasibleConfigError(f"p={p} needs ambient dimension >= {p + 1}, data has D={D}")


def resolve_config(config, train):
    """Replace every ``"auto"`` in ``config`` with a concrete value for ``train``."""
    n_min = _min_class_size(train)
    if n_min < 3:
        raise InfeasibleConfigError(f"every class needs at least 3 points, smallest has {n_min}")
    scores = config.cv_accuracy
    if _is_auto(config.p):
        if not any(p + 2 <= n_min and p + 1 <= train.dim for p in config.p_grid):
            raise InfeasibleConfigError(f"no p in {list(config.p_grid)} is feasible with {n_min} points per class")
        p, scores = tune_p(train, config, return_scores=True)
    else:
        p = int(config.p)
    _check_p(p, n_min, train.dim)
    K, clamped = _resolve_k(config, n_min, p)
    if clamped:
        warnings.warn(f"K={config.K} exceeds the smallest class size {n_min}; using K={K}", stacklevel=2)
    return replace(config, K=K, p=p, k_clamped=clamped, cv_accuracy=scores)


@dataclass(frozen=True)
class Prediction:
    label: object
    distances: np.ndarray
    degenerate: np.ndarray


def default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class SpaModel:
    train: LabeledDataset
    config: SpaConfig
    indexes: list = field(repr=False)

    @property
    def label_map(self):
        """Original label for each internal label ``1..L`` (position ``l - 1``)."""
        return self.train.classes

    @property
    def dim(self):
        return self.train.dim

    def distance_matrix(self, X, n_jobs=None):
        """Per-class sphere distances for every row of ``X``.

        Returns
        -------
        distances : (m, L) ndarray
        degenerate : (m, L) bool ndarray
        """
        X = np.asarray(X, dtype=float)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, self.dim)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise DimensionError(f"queries must have {self.dim} columns, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DataValidationError("queries contain non-finite values")
        X = np.ascontiguousarray(X)
        m, L = len(X), len(self.indexes)
        dist = np.empty((m, L))
        degen = np.zeros((m, L), dtype=bool)
        K, p = self.config.K, self.config.p

        def run(lo, hi):
            for j, index in enumerate(self.indexes):
                dist[lo:hi, j], degen[lo:hi, j] = kernels.batch_class_distances(index.points, X[lo:hi], K, p)

        n_jobs = default_threads() if n_jobs is None else max(1, int(n_jobs))
        if n_jobs == 1 or m < 2 * n_jobs:
            run(0, m)
        else:
            bounds = np.linspace(0, m, n_jobs + 1).astype(int)
            with ThreadPoolExecutor(n_jobs) as pool:
                list(pool.map(run, bounds[:-1], bounds[1:]))
        return dist, degen

    def predict(self, X, n_jobs=None):
        """Predicted original labels for the rows of ``X``."""
        dist, _ = self.distance_matrix(X, n_jobs)
        # argmin returns the first minimum: lowest label wins ties
        return self.label_map[np.argmin(dist, axis=1)] if len(dist) else self.label_map[:0]

    def classify(self, x):
        return classify(self, x)

    def classify_batch(self, X, n_jobs=None):
        return classify_batch(self, X, n_jobs)


def fit(train, config=None):
    """Resolve ``config`` against ``train`` and build the lazy model."""
    config = SpaConfig() if config is None else config
    resolved = config if config.resolved and _config_fits(config, train) else resolve_config(config, train)
    indexes = build_indexes(train.features, train.internal_labels, train.n_classes)
    return SpaModel(train=train, config=resolved, indexes=indexes)


def _config_fits(config, train):
    n_min = _min_class_size(train)
    return config.p + 2 <= config.K <= n_min and config.p + 1 <= train.dim


def classify(model, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dim,):
        raise DimensionError(f"query must have shape ({model.dim},), got {x.shape}")
    return classify_batch(model, x[None, :], n_jobs=1)[0]


def classify_batch(model, X, n_jobs=None):
    """:class:`Prediction` for each row of ``X``, in input order."""
    dist, degen = model.distance_matrix(X, n_jobs)
    winners = np.argmin(dist, axis=1) if len(dist) else []
    return [Prediction(model.label_map[w].item(), dist[i], degen[i]) for i, w in enumerate(winners)]


def _stratified_folds(train, folds, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    fold_of = np.empty(train.n, dtype=np.int64)
    for label in range(1, train.n_classes + 1):
        rows = np.flatnonzero(train.internal_labels == label)
        fold_of[rows[rng.permutation(len(rows))]] = np.arange(len(rows)) % folds
    return fold_of


def tune_p(train, config, return_scores=False):
    """Pick the intrinsic dimension from ``config.p_grid`` by cross-validation.

    Held-out points are absent from the fold's training set, so they never
    appear in their own neighborhoods.  Highest mean fold accuracy wins;
    ties go to the smaller ``p``.
    """
    grid = sorted(set(config.p_grid))
    if len(grid) == 1:
        return (grid[0], None) if return_scores else grid[0]
    folds = int(config.cv_folds)
    counts = train.class_counts()
    if counts.min() < folds:
        raise InfeasibleConfigError(f"{folds}-fold tuning needs {folds} points per class, smallest has {counts.min()}")
    fold_of = _stratified_folds(train, folds, config.seed)
    acc = {p: [] for p in grid}
    for f in range(folds):
        tr = train.subset(np.flatnonzero(fold_of != f))
        te = train.subset(np.flatnonzero(fold_of == f))
        n_min = _min_class_size(tr)
        for p in grid:
            if acc[p] is None:
                continue
            if p + 2 > n_min or p + 1 > train.dim:
                acc[p] = None
                continue
            K, _ = _resolve_k(config, n_min, p)
            model = fit(tr, replace(config, K=K, p=p))
            acc[p].append(float(np.mean(model.predict(te.features) == te.labels)))
    scores = tuple((p, float(np.mean(a))) for p, a in acc.items() if a is not None)
    if not scores:
        raise InfeasibleConfigError(f"no p in {grid} is feasible within the cross-validation folds")
    best_p, best = scores[0]
    for p, a in scores[1:]:
        if a > best:
            best_p, best = p, a
    return (best_p, scores) if return_scores else best_p


# --------------------------------------------------------------- persistence


def _label_json(v):
    return v.item() if hasattr(v, "item") else v


def save_model(model, manifest_path):
    """Write ``<manifest>`` plus the training matrix next to it as CSV.

    Returns the path of the training CSV.
    """
    manifest_path = os.fspath(manifest_path)
    stem = manifest_path[:-5] if manifest_path.endswith(".json") else manifest_path
    csv_path = stem + ".train.csv"
    atomic_write(csv_path, dataset_to_csv(model.train, label_column="first"))
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "config": model.config.to_dict(),
        "label_map": [_label_json(v) for v in model.label_map],
        "train_csv": os.path.basename(csv_path),
        "label_column": "first",
        "sha256": sha256_file(csv_path),
        "n": model.train.n,
        "D": model.train.dim,
    }
    atomic_write(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return csv_path


def load_model(manifest_path):
    """Rebuild a model from a manifest, verifying the training data checksum."""
    with open(manifest_path, encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataValidationError(f"{manifest_path}: invalid JSON ({exc})") from None
    if manifest.get("format") != MANIFEST_FORMAT:
        raise DataValidationError(f"{manifest_path}: not a model manifest")
    if manifest.get("version") != MANIFEST_VERSION:
        raise DataValidationError(f"{manifest_path}: unsupported manifest version {manifest.get('version')}")
    csv_path = os.path.join(os.path.dirname(os.path.abspath(manifest_path)), manifest["train_csv"])
    digest = sha256_file(csv_path)
    if digest != manifest["sha256"]:
        raise ChecksumError(f"{csv_path}: checksum {digest} does not match manifest {manifest['sha256']}")
    train = load_csv(csv_path, label_column=manifest["label_column"])
    if [_label_json(v) for v in train.classes] != manifest["label_map"]:
        raise DataValidationError("training labels do not match the manifest label map")
    return fit(train, SpaConfig.from_dict(manifest["config"]))
