"""Command line interface.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 data validation error.
The default worker-thread count comes from ``LOMA_THREADS``.
"""

import argparse
import csv
import io
import json
import sys
import warnings

from . import __version__
from ._io import atomic_write
from .classifier import SpaConfig, fit, load_model, save_model, tune_p
from .datasets import (
    FAMILIES,
    SynthSpec,
    generate,
    load_csv,
    load_features,
    stratified_split,
    write_csv,
)
from .errors import LomaError, UsageError
from .evaluation import (
    BoundInputs,
    bound_vs_error_sweep,
    curve_to_csv,
    evaluate,
    knn_baseline,
    learning_curve,
    misclassification_bound,
    sweep_to_csv,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 2, 3, 4


def _k_value(text):
    if text == "auto":
        return text
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {text!r}")
    return v


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return tuple(vals)


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("expected at least one number")
    return vals


def _positive_int(text):
    v = _k_value(text)
    if v == "auto":
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def _nonneg_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v >= 0 or v == float("inf"):
        raise argparse.ArgumentTypeError(f"expected a finite number >= 0, got {text!r}")
    return v


def _add_config_flags(p, p_default="auto"):
    p.add_argument("--k", dest="K", type=_k_value, default="auto", help="neighborhood size or 'auto'")
    p.add_argument("--p", dest="p", type=_k_value, default=p_default, help="intrinsic dimension or 'auto'")
    p.add_argument("--p-grid", type=_int_list, default=(1, 2, 3), help="candidates for --p auto")
    p.add_argument("--folds", type=_positive_int, default=5, help="cross-validation folds for --p auto")


def _add_label_flag(p):
    p.add_argument("--label-column", choices=("first", "last"), default="first")


def _config(args):
    return SpaConfig(K=args.K, p=args.p, p_grid=args.p_grid, cv_folds=args.folds, seed=args.seed)


def build_parser():
    parser = argparse.ArgumentParser(prog="loma", description="Spherical local manifold approximation classifier")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=_positive_int, default=None, help="worker threads (default $LOMA_THREADS or 1)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("synth", help="generate a synthetic dataset as CSV")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--n", type=_positive_int, required=True, help="points per class")
    p.add_argument("--sigma", type=_nonneg_float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=_positive_int, default=2)
    p.add_argument("--classes", type=_positive_int, default=2, help="class count for concentric-spheres")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("split", help="stratified train/test split of a CSV dataset")
    p.add_argument("--data", required=True)
    _add_label_flag(p)
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)

    p = sub.add_parser("fit", help="write a model manifest for a training set")
    p.add_argument("--train", required=True)
    _add_label_flag(p)
    _add_config_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="manifest path (.json)")

    p = sub.add_parser("predict", help="label query points with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--queries", required=True, help="CSV of feature rows (no label column)")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("eval", help="train on one CSV, report accuracy on another")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    _add_label_flag(p)
    _add_config_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--baseline-k", type=_positive_int, default=None, help="also report plain kNN with this K")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("tune", help="choose p by cross-validation")
    p.add_argument("--train", required=True)
    _add_label_flag(p)
    p.add_argument("--k", dest="K", type=_k_value, default="auto")
    p.add_argument("--p-grid", type=_int_list, default=(1, 2, 3))
    p.add_argument("--folds", type=_positive_int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None)

    p = sub.add_parser("learning-curve", help="accuracy versus training size")
    p.add_argument("--data", required=True)
    _add_label_flag(p)
    _add_config_flags(p)
    p.add_argument("--fractions", type=_float_list, required=True)
    p.add_argument("--repeats", type=_positive_int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--baseline-k", type=_positive_int, default=None)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("bound", help="evaluate the Gaussian-noise misclassification bound")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--dim", type=_positive_int, required=True)

    p = sub.add_parser("bound-sweep", help="empirical error versus bound over noise levels")
    p.add_argument("--sigmas", type=_float_list, required=True)
    p.add_argument("--n", type=_positive_int, default=500, help="points per class")
    p.add_argument("--dim", type=_positive_int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None)
    return parser


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        atomic_write(path, text)


def cmd_synth(args):
    spec = SynthSpec(args.family, args.n, args.sigma, args.seed, args.dim, args.classes)
    data = generate(spec)
    write_csv(data, args.output)
    print(f"n={data.n} D={data.dim} L={data.n_classes}")


def cmd_split(args):
    data = load_csv(args.data, args.label_column)
    train, test = stratified_split(data, args.train_fraction, args.seed)
    write_csv(train, args.train_out, args.label_column)
    write_csv(test, args.test_out, args.label_column)
    print(f"train={train.n} test={test.n}")


def cmd_fit(args):
    model = fit(load_csv(args.train, args.label_column), _config(args))
    csv_path = save_model(model, args.output)
    print(f"K={model.config.K} p={model.config.p} train={csv_path}")


def cmd_predict(args):
    model = load_model(args.model)
    X = load_features(args.queries)
    preds = model.classify_batch(X, n_jobs=args.threads)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label"] + [f"d_{lab}" for lab in model.label_map.tolist()])
    for pr in preds:
        w.writerow([pr.label] + [format(float(d), ".17g") for d in pr.distances])
    atomic_write(args.output, buf.getvalue())
    print(f"predicted {len(preds)} points")


def cmd_eval(args):
    train = load_csv(args.train, args.label_column)
    test = load_csv(args.test, args.label_column)
    model = fit(train, _config(args))
    report = evaluate(model, test, n_jobs=args.threads)
    if args.output is not None:
        if args.format == "json":
            summary = report.to_dict()
            if args.baseline_k is not None:
                summary["baseline"] = knn_baseline(train, test, args.baseline_k).to_dict()
            atomic_write(args.output, json.dumps(summary, indent=2, sort_keys=True) + "\n")
        else:
            atomic_write(args.output, report.to_csv())
    print(f"accuracy: {report.accuracy:.4f} (K={model.config.K}, p={model.config.p}, n_test={report.n_test})")
    if args.baseline_k is not None and args.output is None:
        base = knn_baseline(train, test, args.baseline_k)
        print(f"knn accuracy: {base.accuracy:.4f} (K={args.baseline_k})")


def cmd_tune(args):
    train = load_csv(args.train, args.label_column)
    cfg = SpaConfig(K=args.K, p="auto", p_grid=args.p_grid, cv_folds=args.folds, seed=args.seed)
    best, scores = tune_p(train, cfg, return_scores=True)
    summary = {"p": best, "cv_accuracy": [list(s) for s in scores] if scores else None}
    if args.output is not None:
        atomic_write(args.output, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for p, acc in scores or ():
        print(f"p={p} cv_accuracy={acc:.4f}")
    print(f"chosen p={best}")


def cmd_learning_curve(args):
    data = load_csv(args.data, args.label_column)
    rows = learning_curve(data, args.fractions, _config(args), args.repeats, args.seed, args.baseline_k, args.threads)
    if args.format == "csv":
        text = curve_to_csv(rows)
    else:
        text = json.dumps(
            {
                "schema": "loma-learning-curve",
                "schema_version": 1,
                "rows": [
                    {
                        "fraction": r.fraction,
                        "n_train": r.n_train,
                        "mean_accuracy": r.mean_accuracy,
                        "std_accuracy": r.std_accuracy,
                        "accuracies": list(r.accuracies),
                        "baseline_mean_accuracy": r.baseline_mean,
                        "baseline_std_accuracy": r.baseline_std,
                    }
                    for r in rows
                ],
            },
            indent=2,
            sort_keys=True,
        ) + "\n"
    _emit(text, args.output)


def cmd_bound(args):
    res = misclassification_bound(BoundInputs(args.delta, args.sigma, args.dim))
    regime = "trivial" if res.trivial else "chernoff"
    print(f"{res.value:.10g}\tregime={regime}")


def cmd_bound_sweep(args):
    rows = bound_vs_error_sweep(args.sigmas, args.n, args.seed, D=args.dim)
    _emit(sweep_to_csv(rows), args.output)


COMMANDS = {
    "synth": cmd_synth,
    "split": cmd_split,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "tune": cmd_tune,
    "learning-curve": cmd_learning_curve,
    "bound": cmd_bound,
    "bound-sweep": cmd_bound_sweep,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda msg, *a, **k: print(f"warning: {msg}", file=sys.stderr)
            COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LomaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
