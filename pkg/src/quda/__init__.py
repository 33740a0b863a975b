"""Sparse quadratic discriminant analysis by direct estimation of the
precision-matrix difference and the linear index."""

from .admm import AdmmConfig, OmegaSolution, OmegaSolver, kkt_residual_omega, solve_omega
from .errors import QudaError
from .intercept import search_eta
from .lasso import DeltaSolution, compute_gamma_hat, solve_delta
from .metrics import misclassification_rate, run_benchmark, support_metrics
from .model import (
    QudaModel,
    classify,
    fit,
    load_model,
    oracle_classify,
    predict,
    save_model,
)
from .moments import ClassMoments, LabeledDataset, estimate_moments
from .synthgen import SyntheticSpec, SyntheticTruth, build_truth, make_dataset
from .tuning import CvConfig, cv_select

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig",
    "ClassMoments",
    "CvConfig",
    "DeltaSolution",
    "LabeledDataset",
    "OmegaSolution",
    "OmegaSolver",
    "QudaError",
    "QudaModel",
    "SyntheticSpec",
    "SyntheticTruth",
    "build_truth",
    "classify",
    "compute_gamma_hat",
    "cv_select",
    "estimate_moments",
    "fit",
    "kkt_residual_omega",
    "load_model",
    "make_dataset",
    "misclassification_rate",
    "oracle_classify",
    "predict",
    "run_benchmark",
    "save_model",
    "search_eta",
    "solve_delta",
    "solve_omega",
    "support_metrics",
]
