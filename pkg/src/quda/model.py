"""Fitted classifier, the end-to-end fit, the Bayes oracle and model files.

The rule assigns ``z`` to class 1 when

    (z - mu)' W (z - mu) + delta' (z - mu) + eta > 0

and to class 2 otherwise (including equality). ``mu`` is the midpoint of
the two class means. No feature standardization happens anywhere.
"""

from __future__ import annotations

import base64
import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .admm import AdmmConfig, OmegaSolution, OmegaSolver
from .errors import CorruptPayload, QudaError, SchemaVersionMismatch, ShapeMismatch
from .intercept import best_split, discriminant_scores
from .lasso import DeltaSolution, compute_gamma_hat, solve_delta
from .linalg import log_det_spd, mat_inverse_spd
from .moments import ClassMoments, LabeledDataset, estimate_moments
from .synthgen import SyntheticTruth

__all__ = [
    "QudaModel",
    "classify",
    "predict",
    "decision_function",
    "fit",
    "fit_from_parts",
    "oracle_classify",
    "oracle_predict",
    "analytic_eta",
    "model_from_truth",
    "save_model",
    "load_model",
    "save_truth",
    "load_truth",
    "encode_array",
    "decode_array",
]

MODEL_SCHEMA = "quda-model"
TRUTH_SCHEMA = "quda-truth"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class QudaModel:
    mu: np.ndarray
    omega: np.ndarray
    delta: np.ndarray
    eta: float
    lam: float = float("nan")
    lambda_delta: float = float("nan")
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        omega = np.asarray(self.omega, dtype=float)
        delta = np.asarray(self.delta, dtype=float)
        p = mu.shape[0]
        if mu.ndim != 1 or omega.shape != (p, p) or delta.shape != (p,):
            raise ShapeMismatch(
                f"inconsistent shapes: mu {mu.shape}, omega {omega.shape}, delta {delta.shape}"
            )
        if not np.array_equal(omega, omega.T):
            raise ShapeMismatch("omega must be symmetric")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "eta", float(self.eta))

    @property
    def p(self) -> int:
        return self.mu.shape[0]

    def omega_support(self) -> frozenset:
        rows, cols = np.nonzero(np.triu(self.omega != 0))
        return frozenset(zip(rows.tolist(), cols.tolist()))

    def delta_support(self) -> frozenset:
        return frozenset(np.flatnonzero(self.delta).tolist())


def decision_function(model: QudaModel, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return discriminant_scores(model.mu, model.omega, model.delta, x) + model.eta


def predict(model: QudaModel, x) -> np.ndarray:
    """Class labels (1 or 2) for every row of ``x``."""
    return np.where(decision_function(model, x) > 0, 1, 2)


def classify(model: QudaModel, z) -> int:
    z = np.asarray(z, dtype=float)
    if z.shape != (model.p,):
        raise ShapeMismatch(f"z must have length {model.p}, got shape {z.shape}")
    return int(predict(model, z[None, :])[0])


@contextmanager
def _stage(name):
    try:
        yield
    except QudaError as err:
        if err.stage is None:
            err.stage = name
        raise


def fit_from_parts(
    data: LabeledDataset,
    m: ClassMoments,
    omega_sol: OmegaSolution,
    lambda_delta: float,
    delta_init=None,
) -> tuple[QudaModel, DeltaSolution]:
    """Finish a fit from moments and an already computed interaction
    estimate: linear index, training scores, intercept."""
    with _stage("delta"):
        gamma = compute_gamma_hat(m, omega_sol.omega)
        dsol = solve_delta(m, gamma, lambda_delta, init=delta_init)
    with _stage("intercept"):
        mu = m.midpoint
        scores = discriminant_scores(mu, omega_sol.omega, dsol.delta, data.x)
        split = best_split(scores, (data.labels == 1).astype(np.int64))
    diagnostics = {
        "admm_iterations": omega_sol.iterations,
        "admm_converged": omega_sol.converged,
        "admm_primal_residual": omega_sol.primal_residual,
        "admm_dual_residual": omega_sol.dual_residual,
        "rho": omega_sol.rho,
        "cd_sweeps": dsol.iterations,
        "cd_converged": dsol.converged,
        "cd_kkt_residual": dsol.kkt_residual,
        "insample_errors": split.error_count,
        "insample_error": split.error,
        "n_train": data.n,
    }
    model = QudaModel(
        mu=mu,
        omega=omega_sol.omega,
        delta=dsol.delta,
        eta=split.eta,
        lam=omega_sol.lam,
        lambda_delta=float(lambda_delta),
        diagnostics=diagnostics,
    )
    return model, dsol


def fit(
    data: LabeledDataset, lam: float, lambda_delta: float, cfg: AdmmConfig | None = None
) -> QudaModel:
    """Moments, interaction matrix, linear index and intercept in sequence.

    Errors from any stage propagate with ``err.stage`` set to one of
    ``"moments"``, ``"omega"``, ``"delta"``, ``"intercept"``.
    """
    with _stage("moments"):
        m = estimate_moments(data)
    with _stage("omega"):
        omega_sol = OmegaSolver(m, cfg).solve(lam)
    model, _ = fit_from_parts(data, m, omega_sol, lambda_delta)
    return model


def analytic_eta(truth: SyntheticTruth) -> float:
    """``2 log(pi1/pi2) + dmu' W dmu / 4 + log|S2| - log|S1|``."""
    dmu = truth.mu1 - truth.mu2
    return float(
        2.0 * np.log(truth.pi1 / truth.pi2)
        + 0.25 * dmu @ truth.omega_true @ dmu
        + log_det_spd(truth.sigma2)
        - log_det_spd(truth.sigma1)
    )


def model_from_truth(truth: SyntheticTruth) -> QudaModel:
    """The Bayes rule written in the fitted-model parametrization."""
    omega = 0.5 * (truth.omega_true + truth.omega_true.T)
    return QudaModel(
        mu=0.5 * (truth.mu1 + truth.mu2),
        omega=omega,
        delta=truth.delta_true,
        eta=analytic_eta(truth),
    )


class _GaussianLogDensity:
    def __init__(self, mu, sigma):
        self.mu = np.asarray(mu, dtype=float)
        self.precision = mat_inverse_spd(sigma)
        self.half_logdet = 0.5 * log_det_spd(sigma)

    def __call__(self, x):
        w = x - self.mu
        return -self.half_logdet - 0.5 * np.einsum("ij,ij->i", w @ self.precision, w)


def oracle_predict(truth: SyntheticTruth, x) -> np.ndarray:
    """Bayes rule: class 1 iff ``log pi1 f1(z) > log pi2 f2(z)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != truth.p:
        raise ShapeMismatch(f"expected {truth.p} columns, got {x.shape[1]}")
    f1 = _GaussianLogDensity(truth.mu1, truth.sigma1)
    f2 = _GaussianLogDensity(truth.mu2, truth.sigma2)
    g1 = np.log(truth.pi1) + f1(x)
    g2 = np.log(truth.pi2) + f2(x)
    return np.where(g1 > g2, 1, 2)


def oracle_classify(truth: SyntheticTruth, z) -> int:
    z = np.asarray(z, dtype=float)
    if z.shape != (truth.p,):
        raise ShapeMismatch(f"z must have length {truth.p}, got shape {z.shape}")
    return int(oracle_predict(truth, z[None, :])[0])


# -- persistence -----------------------------------------------------------


def encode_array(a) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {
        "dtype": "<f8",
        "shape": list(a.shape),
        "data": base64.b64encode(a.tobytes()).decode("ascii"),
    }


def decode_array(obj) -> np.ndarray:
    try:
        if obj["dtype"] != "<f8":
            raise CorruptPayload(f"unsupported dtype {obj['dtype']!r}")
        shape = tuple(int(s) for s in obj["shape"])
        raw = base64.b64decode(obj["data"], validate=True)
    except (KeyError, TypeError, ValueError) as err:
        if isinstance(err, CorruptPayload):
            raise
        raise CorruptPayload(f"malformed array record: {err}") from err
    if len(raw) != 8 * int(np.prod(shape, dtype=np.int64)):
        raise CorruptPayload(f"array payload has {len(raw)} bytes, expected shape {shape}")
    return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(float)


def _json_safe(value):
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_json(path, schema):
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise CorruptPayload(f"{path}: not valid JSON ({err})") from err
    if not isinstance(doc, dict) or doc.get("schema") != schema:
        raise CorruptPayload(f"{path}: not a {schema} file")
    if doc.get("version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: schema version {doc.get('version')!r}, expected {SCHEMA_VERSION}"
        )
    return doc


def save_model(model: QudaModel, path) -> None:
    """Write ``model`` as versioned JSON; arrays and the intercept are
    stored as base64 little-endian float64 so the round trip is exact."""
    doc = {
        "schema": MODEL_SCHEMA,
        "version": SCHEMA_VERSION,
        "p": model.p,
        "arrays": {
            "mu": encode_array(model.mu),
            "omega": encode_array(model.omega),
            "delta": encode_array(model.delta),
            "scalars": encode_array([model.eta, model.lam, model.lambda_delta]),
        },
        "eta": model.eta,
        "lambda": model.lam,
        "lambda_delta": model.lambda_delta,
        "support": {
            "omega_unique_nonzeros": len(model.omega_support()),
            "delta_nonzeros": len(model.delta_support()),
        },
        "diagnostics": _json_safe(model.diagnostics),
    }
    _write_json(path, doc)


def load_model(path) -> QudaModel:
    doc = _read_json(path, MODEL_SCHEMA)
    try:
        arrays = doc["arrays"]
        mu = decode_array(arrays["mu"])
        omega = decode_array(arrays["omega"])
        delta = decode_array(arrays["delta"])
        eta, lam, lambda_delta = decode_array(arrays["scalars"])
        diagnostics = dict(doc.get("diagnostics", {}))
    except (KeyError, TypeError, ValueError) as err:
        if isinstance(err, QudaError):
            raise
        raise CorruptPayload(f"{path}: missing or malformed field ({err})") from err
    try:
        return QudaModel(mu, omega, delta, eta, lam, lambda_delta, diagnostics)
    except ShapeMismatch as err:
        raise CorruptPayload(f"{path}: {err}") from err


def save_truth(truth: SyntheticTruth, path, metadata: dict | None = None) -> None:
    doc = {
        "schema": TRUTH_SCHEMA,
        "version": SCHEMA_VERSION,
        "p": truth.p,
        "arrays": {
            name: encode_array(getattr(truth, name))
            for name in ("mu1", "mu2", "sigma1", "sigma2", "omega_true", "delta_true")
        },
        "priors": encode_array([truth.pi1, truth.pi2]),
        "omega_unique_nonzeros": len(truth.omega_support()),
        "metadata": _json_safe(metadata or {}),
    }
    _write_json(path, doc)


def load_truth(path) -> SyntheticTruth:
    doc = _read_json(path, TRUTH_SCHEMA)
    try:
        arrays = {k: decode_array(v) for k, v in doc["arrays"].items()}
        pi1, pi2 = decode_array(doc["priors"])
        return SyntheticTruth(pi1=float(pi1), pi2=float(pi2), **arrays)
    except (KeyError, TypeError, ValueError) as err:
        if isinstance(err, QudaError):
            raise
        raise CorruptPayload(f"{path}: missing or malformed field ({err})") from err
