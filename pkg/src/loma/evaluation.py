"""Accuracy reports, learning curves, the noise error bound, and a kNN baseline."""

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .classifier import SpaConfig, fit
from .datasets import DISJOINT_SEPARATION, SynthSpec, generate, stratified_split
from .errors import DataValidationError, DimensionError, InsufficientPointsError, UsageError

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Test-set accuracy with the confusion matrix (rows true, columns predicted)."""

    accuracy: float
    confusion: np.ndarray
    labels: tuple
    n_train: int
    n_test: int
    config_used: object = None
    method: str = "spa"

    def to_dict(self):
        cfg = self.config_used.to_dict() if isinstance(self.config_used, SpaConfig) else self.config_used
        return {
            "schema": "loma-eval-report",
            "schema_version": REPORT_SCHEMA_VERSION,
            "method": self.method,
            "accuracy": self.accuracy,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "labels": [_plain(v) for v in self.labels],
            "confusion": self.confusion.tolist(),
            "config": cfg,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self):
        """One row per class: label, test count, correct count, class accuracy."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "n_test", "n_correct", "accuracy"])
        for i, label in enumerate(self.labels):
            total = int(self.confusion[i].sum())
            correct = int(self.confusion[i, i])
            w.writerow([_plain(label), total, correct, _fmt(correct / total if total else float("nan"))])
        return buf.getvalue()


def _plain(v):
    return v.item() if hasattr(v, "item") else v


def _fmt(v):
    return format(float(v), ".17g")


def _report(labels, y_true, y_pred, n_train, config, method):
    labels = np.asarray(labels)
    pos = {(_plain(v)): i for i, v in enumerate(labels)}
    try:
        t = np.array([pos[_plain(v)] for v in y_true], dtype=np.intp)
    except KeyError as exc:
        raise DataValidationError(f"test label {exc.args[0]!r} does not occur in the training data") from None
    pidx = np.array([pos[_plain(v)] for v in y_pred], dtype=np.intp)
    L = len(labels)
    confusion = np.zeros((L, L), dtype=np.int64)
    np.add.at(confusion, (t, pidx), 1)
    n_test = len(t)
    acc = float(np.trace(confusion) / n_test) if n_test else float("nan")
    return EvalReport(acc, confusion, tuple(labels.tolist()), int(n_train), n_test, config, method)


def evaluate(model, test, n_jobs=None):
    """Classify every point of ``test`` with ``model``."""
    if test.dim != model.dim:
        raise DimensionError(f"test data has D={test.dim}, model was trained with D={model.dim}")
    pred = model.predict(test.features, n_jobs=n_jobs)
    return _report(model.label_map, test.labels, pred, model.train.n, model.config, "spa")


def knn_baseline(train, test, K=1):
    """Plain majority-vote kNN over all training points.

    Neighbor ties go to the lower training row; vote ties to the lowest label.
    """
    if test.dim != train.dim:
        raise DimensionError(f"test data has D={test.dim}, training data has D={train.dim}")
    if not 1 <= K <= train.n:
        raise InsufficientPointsError(f"K={K} must lie in [1, {train.n}]")
    X = np.ascontiguousarray(train.features)
    L = train.n_classes
    pred = np.empty(test.n, dtype=np.intp)
    for i, x in enumerate(test.features):
        idx = kernels.knn_select(X, np.ascontiguousarray(x), K)
        votes = np.bincount(train.internal_labels[idx], minlength=L + 1)[1:]
        pred[i] = np.argmax(votes)
    return _report(train.classes, test.labels, train.classes[pred], train.n, {"K": K}, f"knn(K={K})")


# ------------------------------------------------------------ learning curve


def derive_seed(seed, repeat):
    """Seed for repeat ``repeat``; identical across fractions (paired design)."""
    return int(np.random.SeedSequence([int(seed), int(repeat)]).generate_state(1)[0])


@dataclass(frozen=True)
class CurveRow:
    fraction: float
    n_train: int
    mean_accuracy: float
    std_accuracy: float
    accuracies: tuple
    baseline_mean: float = None
    baseline_std: float = None


def learning_curve(data, fractions, config=None, repeats=10, seed=0, baseline_k=None, n_jobs=None):
    """Accuracy versus training size.

    ``data`` is split once into a training pool and a fixed test half (seed
    ``seed``).  For each fraction and repeat a stratified subsample of the pool
    of that fraction trains the model, which is scored on the test half.
    Pass ``baseline_k`` to add plain-kNN columns computed on the same splits.
    """
    config = SpaConfig() if config is None else config
    fractions = [float(f) for f in fractions]
    if not fractions:
        raise UsageError("at least one fraction is required")
    for f in fractions:
        if not 0.0 < f < 1.0:
            raise UsageError(f"fractions must lie in (0, 1), got {f}")
    if int(repeats) < 1:
        raise UsageError("repeats must be >= 1")
    pool, test = stratified_split(data, 0.5, seed)
    rows = []
    for f in fractions:
        accs, base, sizes = [], [], []
        for r in range(int(repeats)):
            train, _ = stratified_split(pool, f, derive_seed(seed, r))
            sizes.append(train.n)
            accs.append(evaluate(fit(train, config), test, n_jobs=n_jobs).accuracy)
            if baseline_k is not None:
                base.append(knn_baseline(train, test, baseline_k).accuracy)
        rows.append(
            CurveRow(
                f,
                sizes[0],
                float(np.mean(accs)),
                float(np.std(accs)),
                tuple(accs),
                float(np.mean(base)) if base else None,
                float(np.std(base)) if base else None,
            )
        )
    return rows


def curve_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    with_base = any(r.baseline_mean is not None for r in rows)
    header = ["fraction", "n_train", "mean_accuracy", "std_accuracy"]
    if with_base:
        header += ["baseline_mean_accuracy", "baseline_std_accuracy"]
    w.writerow(header)
    for r in rows:
        line = [_fmt(r.fraction), r.n_train, _fmt(r.mean_accuracy), _fmt(r.std_accuracy)]
        if with_base:
            line += [_fmt(r.baseline_mean), _fmt(r.baseline_std)]
        w.writerow(line)
    return buf.getvalue()


# -------------------------------------------------------------- error bound


@dataclass(frozen=True)
class BoundInputs:
    delta: float
    sigma: float
    D: int

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise UsageError(f"delta must be a finite positive number, got {self.delta}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise UsageError(f"sigma must be a finite positive number, got {self.sigma}")
        if int(self.D) != self.D or self.D < 1:
            raise UsageError(f"D must be a positive integer, got {self.D}")


@dataclass(frozen=True)
class BoundResult:
    value: float
    log_value: float
    trivial: bool


def misclassification_bound(b):
    """Gaussian-noise term of the asymptotic misclassification bound.

    With ``alpha = delta**2 / (4 sigma**2)`` the Chernoff bound on
    ``P(chi2_D >= alpha)`` at its optimum is
    ``exp(-alpha/2 + (D/2) log(alpha) - (D/2)(log D - 1))``, which equals
    ``exp((D/2) (1 + log s - s))`` with ``s = alpha / D``.  The optimum is
    interior only for ``s > 1``; otherwise the trivial bound 1 is returned
    with ``trivial=True``.
    """
    if not isinstance(b, BoundInputs):
        b = BoundInputs(*b)
    D = int(b.D)
    s = (b.delta / b.sigma) ** 2 / (4.0 * D)
    if s <= 1.0:
        return BoundResult(1.0, 0.0, True)
    e = s - 1.0
    log_value = 0.5 * D * (math.log1p(e) - e)
    return BoundResult(math.exp(log_value), log_value, False)


@dataclass(frozen=True)
class SweepRow:
    sigma: float
    error: float
    bound: float
    trivial: bool
    delta: float
    n_train: int
    n_test: int

    @property
    def within_bound(self):
        return self.error <= self.bound


def bound_vs_error_sweep(sigmas, n, seed=0, family="disjoint-curves", D=2, config=None):
    """Empirical test error next to the noise bound for each noise level.

    ``delta`` is half the minimum curve separation, so the tubes of radius
    ``delta`` around the two curves are disjoint and only the Gaussian term
    of the bound remains.  At ``sigma = 0`` the bound is 0.
    """
    if family != "disjoint-curves":
        raise UsageError("the sweep needs a family with known curve separation (disjoint-curves)")
    config = SpaConfig(p=1) if config is None else config
    delta = DISJOINT_SEPARATION / 2
    rows = []
    for sigma in sigmas:
        sigma = float(sigma)
        data = generate(SynthSpec(family, int(n), sigma, seed, D))
        train, test = stratified_split(data, 0.5, seed)
        report = evaluate(fit(train, config), test)
        if sigma == 0.0:
            bound, trivial = 0.0, False
        else:
            res = misclassification_bound(BoundInputs(delta, sigma, D))
            bound, trivial = res.value, res.trivial
        rows.append(SweepRow(sigma, 1.0 - report.accuracy, bound, trivial, delta, train.n, test.n))
    return rows


def sweep_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sigma", "error", "bound", "trivial", "delta", "n_train", "n_test"])
    for r in rows:
        w.writerow([_fmt(r.sigma), _fmt(r.error), _fmt(r.bound), int(r.trivial), _fmt(r.delta), r.n_train, r.n_test])
    return buf.getvalue()
