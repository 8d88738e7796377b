"""Local manifold approximation classification with spherical local fits."""

__version__ = "0.1.0"

from .classifier import Prediction, SpaConfig, SpaModel, classify, classify_batch, fit, load_model, resolve_config, save_model, tune_p
from .datasets import LabeledDataset, SynthSpec, generate, load_csv, load_libras, load_usps, stratified_split, write_csv
from .evaluation import (
    BoundInputs,
    EvalReport,
    bound_vs_error_sweep,
    evaluate,
    knn_baseline,
    learning_curve,
    misclassification_bound,
)
from .geometry import Sphere, SphereQueryResult, principal_subspace, project_to_sphere, spca_fit
from .kernels import BACKEND as KERNEL_BACKEND
from .neighbors import ClassIndex, build_indexes, knn_within_class
