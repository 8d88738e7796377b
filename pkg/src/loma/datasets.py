"""Labeled datasets: CSV I/O, USPS/Libras loaders, synthetic generators, splits.

CSV layout
----------
Comma separated, UTF-8.  One row per point; the label occupies either the
first or the last column and every other column is a feature.  A header row
is optional and is recognised when none of its feature cells parse as
numbers.  Features are written with 17 significant digits so a write/read
round trip is exact.

Synthetic families
------------------
All curves are parametrised by ``t`` drawn uniformly from ``[0, 2*pi)``.

``funky-curves`` (three classes in the plane, each pair crossing)::

    Ml(t) = cl + 0.55 (cos t, sin t) + 0.03 (cos(kl t + phl), sin(kl t + phl))

    cl  = 0.35 (cos al, sin al),  al = 90, 210, 330 degrees
    kl  = 2, 3, 4
    phl = 0, 1, 2

i.e. epicycles with frequency pairs (1, 2), (1, 3), (1, 4) whose base
circles sit on a triangle, all inside [-0.93, 0.93]^2.

``disjoint-curves`` (two classes, minimum separation exactly 0.7)::

    M1(t) = (cos t, sin t)
    M2(t) = (2 + 0.3 sin 3t) * (cos t, sin t)

``concentric-spheres``: class ``l`` is the sphere of radius ``l`` centred at
the origin of R^D, sampled uniformly.

Curves are embedded in the first two coordinates of R^D.  Observations are
``z + sigma * N(0, I_D)``.

Random streams: ``SeedSequence(seed)`` is spawned into one child per class;
each child drives a PCG64 generator that first draws all curve positions of
that class and then all noise.  Output is therefore bit-identical for a given
seed, numpy version and platform.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ._io import atomic_write
from .errors import (
    DataValidationError,
    DimensionError,
    NumericError,
    ParseError,
    RangeError,
    UnknownFamilyError,
    UsageError,
)

FAMILIES = ("funky-curves", "concentric-spheres", "disjoint-curves")
DISJOINT_SEPARATION = 0.7


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature matrix with one label per row.

    ``labels`` are in the original label space (ints or strings).  Internal
    labels ``1..L`` follow the sorted order of :attr:`classes`.
    """

    features: np.ndarray
    labels: np.ndarray
    name: str = ""
    classes: np.ndarray = field(init=False, repr=False)
    internal_labels: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DimensionError(f"features must be a non-empty n x D matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise NumericError("features contain non-finite values")
        y = np.asarray(self.labels)
        if y.shape != (X.shape[0],):
            raise DimensionError(f"expected {X.shape[0]} labels, got shape {y.shape}")
        classes, internal = np.unique(y, return_inverse=True)
        X.flags.writeable = False
        y = y.copy()
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "internal_labels", internal.astype(np.int64) + 1)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def n_classes(self):
        return len(self.classes)

    def class_counts(self):
        return np.bincount(self.internal_labels, minlength=self.n_classes + 1)[1:]

    def subset(self, rows, name=None):
        rows = np.asarray(rows, dtype=np.intp)
        return LabeledDataset(self.features[rows], self.labels[rows], self.name if name is None else name)


def _parse_float(cell, row, col):
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric feature value {cell!r}", row=row, column=col) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite feature value {cell!r}", row=row, column=col)
    return v


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: file is empty")
    return rows


def _label_slot(label_column, width):
    if label_column in ("first", 0):
        return 0
    if label_column in ("last", -1):
        return width - 1
    raise UsageError(f"label column must be 'first' or 'last', got {label_column!r}")


def _parse_labels(cells):
    try:
        return np.array([int(c) for c in cells], dtype=np.int64)
    except ValueError:
        return np.array([c.strip() for c in cells])


def load_csv(path, label_column="first", name=None):
    """Read a labeled CSV file.

    Raises
    ------
    ParseError
        On an empty file, ragged rows, or a feature cell that is not a finite
        number; the message names the offending row and column (1-based).
    """
    rows = _read_rows(path)
    width = len(rows[0])
    if width < 2:
        raise ParseError(f"{path}: need a label column and at least one feature", row=1)
    slot = _label_slot(label_column, width)
    feature_cols = [j for j in range(width) if j != slot]
    start = 0
    if not any(_is_number(rows[0][j]) for j in feature_cols):
        start = 1
    body = rows[start:]
    if not body:
        raise ParseError(f"{path}: no data rows")
    X = np.empty((len(body), width - 1))
    for i, r in enumerate(body, start=start + 1):
        if len(r) != width:
            raise ParseError(f"{path}: expected {width} columns, found {len(r)}", row=i)
        for k, j in enumerate(feature_cols):
            X[i - start - 1, k] = _parse_float(r[j], i, j + 1)
    y = _parse_labels([r[slot] for r in body])
    return LabeledDataset(X, y, name or str(path))


def load_features(path):
    """Read an unlabeled CSV of query points (optional header row)."""
    rows = _read_rows(path)
    width = len(rows[0])
    start = 0 if any(_is_number(c) for c in rows[0]) else 1
    body = rows[start:]
    if not body:
        raise ParseError(f"{path}: no data rows")
    X = np.empty((len(body), width))
    for i, r in enumerate(body, start=start + 1):
        if len(r) != width:
            raise ParseError(f"{path}: expected {width} columns, found {len(r)}", row=i)
        for j, cell in enumerate(r):
            X[i - start - 1, j] = _parse_float(cell, i, j + 1)
    return X


def format_float(v):
    return format(float(v), ".17g")


def dataset_to_csv(data, label_column="first"):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for x, y in zip(data.features, data.labels):
        feats = [format_float(v) for v in x]
        label = str(y.item() if hasattr(y, "item") else y)
        writer.writerow([label, *feats] if label_column == "first" else [*feats, label])
    return buf.getvalue()


def write_csv(data, path, label_column="first"):
    _label_slot(label_column, 2)
    atomic_write(path, dataset_to_csv(data, label_column))


def load_usps(path, label_column="first"):
    """Load USPS digits: a label column plus 256 gray levels in [0, 255]."""
    data = load_csv(path, label_column=label_column, name=f"usps:{path}")
    if data.dim != 256:
        raise DimensionError(f"USPS rows must carry 256 pixels, got {data.dim}")
    bad = np.argwhere((data.features < 0) | (data.features > 255))
    if len(bad):
        i, j = bad[0]
        raise RangeError(f"pixel value {data.features[i, j]:g} outside [0, 255] at data row {i + 1}, pixel {j + 1}")
    return data


def load_libras(path):
    """Load the UCI Libras Movement file (90 features, label last)."""
    data = load_csv(path, label_column="last", name=f"libras:{path}")
    if data.dim != 90:
        raise DimensionError(f"Libras rows must carry 90 features, got {data.dim}")
    return data


def convert_usps_mat(mat_path, csv_path):
    """Convert ``usps_all.mat`` (256 x 1100 x 10 uint8) to the CSV layout.

    Slice ``k`` of the array holds digit ``k + 1`` with slice 9 holding zeros.
    """
    from scipy.io import loadmat

    raw = loadmat(mat_path)["data"]
    feats, labels = [], []
    for k in range(raw.shape[2]):
        block = raw[:, :, k].T.astype(float)
        feats.append(block)
        labels.append(np.full(len(block), (k + 1) % 10, dtype=np.int64))
    data = LabeledDataset(np.vstack(feats), np.concatenate(labels), name="usps")
    write_csv(data, csv_path)
    return data


# ---------------------------------------------------------------- generators


FUNKY_CENTER_ANGLES = np.deg2rad([90.0, 210.0, 330.0])
FUNKY_HARMONICS = (2, 3, 4)
FUNKY_PHASES = (0.0, 1.0, 2.0)


def funky_curve(label, t):
    """Point(s) of funky curve ``label`` (1, 2 or 3) at parameter ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a = FUNKY_CENTER_ANGLES[label - 1]
    k, ph = FUNKY_HARMONICS[label - 1], FUNKY_PHASES[label - 1]
    x = 0.35 * np.cos(a) + 0.55 * np.cos(t) + 0.03 * np.cos(k * t + ph)
    y = 0.35 * np.sin(a) + 0.55 * np.sin(t) + 0.03 * np.sin(k * t + ph)
    return np.column_stack([x, y])


def disjoint_curve(label, t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    radius = 1.0 if label == 1 else 2.0 + 0.3 * np.sin(3 * t)
    return np.column_stack([radius * np.cos(t), radius * np.sin(t)])


@dataclass(frozen=True)
class SynthSpec:
    family: str
    n_per_class: int
    sigma: float = 0.0
    seed: int = 0
    D: int = 2
    n_classes: int = 2  # concentric-spheres only

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnknownFamilyError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if int(self.n_per_class) < 1:
            raise UsageError("n_per_class must be >= 1")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise UsageError("sigma must be a finite value >= 0")
        if int(self.D) < 2:
            raise UsageError("ambient dimension D must be >= 2")
        if self.family == "concentric-spheres" and int(self.n_classes) < 1:
            raise UsageError("n_classes must be >= 1")


def _embed(z, D):
    if z.shape[1] == D:
        return z
    out = np.zeros((len(z), D))
    out[:, : z.shape[1]] = z
    return out


def generate(spec):
    """Draw a labeled noisy-manifold sample described by ``spec``."""
    if spec.family == "funky-curves":
        n_classes = 3
    elif spec.family == "disjoint-curves":
        n_classes = 2
    else:
        n_classes = int(spec.n_classes)
    n, D = int(spec.n_per_class), int(spec.D)
    children = np.random.SeedSequence(spec.seed).spawn(n_classes)
    feats, labels = [], []
    for label, child in enumerate(children, start=1):
        rng = np.random.Generator(np.random.PCG64(child))
        if spec.family == "concentric-spheres":
            g = rng.standard_normal((n, D))
            z = label * g / np.linalg.norm(g, axis=1, keepdims=True)
        else:
            t = rng.uniform(0.0, 2 * np.pi, size=n)
            curve = funky_curve if spec.family == "funky-curves" else disjoint_curve
            z = _embed(curve(label, t), D)
        if spec.sigma > 0:
            z = z + spec.sigma * rng.standard_normal((n, D))
        feats.append(z)
        labels.append(np.full(n, label, dtype=np.int64))
    name = f"{spec.family}(n={n},sigma={spec.sigma:g},seed={spec.seed},D={D})"
    return LabeledDataset(np.vstack(feats), np.concatenate(labels), name)


# -------------------------------------------------------------------- splits


def _train_counts(counts, fraction):
    quota = np.asarray(counts, dtype=float) * fraction
    base = np.floor(quota + 1e-9).astype(np.int64)
    target = int(math.floor(float(np.sum(counts)) * fraction + 0.5))
    extra = max(0, target - int(base.sum()))
    remainder = quota - base
    # largest remainder first; stable sort keeps lower labels ahead on ties
    order = np.argsort(-remainder, kind="stable")
    for j in order[:extra]:
        if base[j] < counts[j]:
            base[j] += 1
    return base


def stratified_split_indices(data, train_fraction, seed):
    """Row indices ``(train, test)`` of a per-class proportional split.

    Per-class training counts use largest-remainder rounding of
    ``train_fraction * n_l`` so the total matches ``round(fraction * n)``.
    Both index arrays are returned in ascending order.
    """
    if not 0.0 < train_fraction < 1.0:
        raise UsageError(f"train fraction must lie in (0, 1), got {train_fraction}")
    counts = data.class_counts()
    if np.any(counts < 2):
        raise DataValidationError("every class needs at least 2 points to split")
    n_train = _train_counts(counts, train_fraction)
    if np.any(n_train == 0):
        bad = data.classes[np.flatnonzero(n_train == 0)[0]]
        raise DataValidationError(f"train fraction {train_fraction} leaves class {bad} without training points")
    rng = np.random.Generator(np.random.PCG64(seed))
    train, test = [], []
    for label, k in enumerate(n_train, start=1):
        rows = np.flatnonzero(data.internal_labels == label)
        perm = rng.permutation(len(rows))
        train.append(rows[perm[:k]])
        test.append(rows[perm[k:]])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_split(data, train_fraction, seed):
    """Split ``data`` into ``(train, test)`` datasets, stratified by class."""
    tr, te = stratified_split_indices(data, train_fraction, seed)
    return data.subset(tr, name=f"{data.name}[train]"), data.subset(te, name=f"{data.name}[test]")
