"""Evaluation metrics and the replication harness behind the result tables.

Interaction counts (FP.inter, FN.inter) are taken over unique entries of
the symmetric matrix, i.e. the upper triangle with the diagonal. The true
main-effect support is the set of nonzeros of the true linear index.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .admm import AdmmConfig
from .errors import ConvergenceWarning, EmptyInput, QudaError, ShapeMismatch
from .model import QudaModel, fit, oracle_predict, predict
from .moments import LabeledDataset
from .synthgen import SyntheticSpec, SyntheticTruth, derive_seed, make_dataset, make_test_set
from .tuning import CvConfig, cv_select

__all__ = [
    "ReplicationResult",
    "EvalReport",
    "BenchmarkResult",
    "misclassification_rate",
    "support_metrics",
    "aggregate",
    "run_replication",
    "run_benchmark",
    "write_log",
    "read_log",
    "format_table",
]

COUNTING_CONVENTION = "interactions counted over unique entries (upper triangle incl. diagonal)"
_REPLICATION_KEY = 3


def misclassification_rate(model: QudaModel, test: LabeledDataset) -> float:
    if test.n == 0:
        raise EmptyInput("test set is empty")
    return float(np.mean(predict(model, test.x) != test.labels))


def _unique_pairs(support, p):
    out = set()
    for i, j in support:
        if not (0 <= i < p and 0 <= j < p):
            raise ShapeMismatch(f"index pair {(i, j)} out of range for p={p}")
        out.add((min(i, j), max(i, j)))
    return out


def support_metrics(omega_hat_support, delta_hat_support, truth: SyntheticTruth):
    """``(fp_inter, fn_inter, fp_main, fn_main)`` against the true supports.

    ``omega_hat_support`` holds index pairs (either triangle; they are
    folded onto the upper one), ``delta_hat_support`` holds coordinates.
    """
    p = truth.p
    est_pairs = _unique_pairs(omega_hat_support, p)
    est_main = {int(j) for j in delta_hat_support}
    if any(not 0 <= j < p for j in est_main):
        raise ShapeMismatch(f"main-effect index out of range for p={p}")
    true_pairs = set(truth.omega_support())
    true_main = set(truth.delta_support())
    return (
        len(est_pairs - true_pairs),
        len(true_pairs - est_pairs),
        len(est_main - true_main),
        len(true_main - est_main),
    )


@dataclass(frozen=True)
class ReplicationResult:
    rep: int
    seed: int
    lam: float
    lambda_delta: float
    mr: float
    oracle_mr: float
    fp_main: int
    fp_inter: int
    fn_main: int
    fn_inter: int


_FIELDS = ("mr", "oracle_mr", "fp_main", "fp_inter", "fn_main", "fn_inter")


@dataclass(frozen=True)
class EvalReport:
    """Mean and standard error (sd / sqrt(reps)) of each metric."""

    reps: int
    mean: dict
    se: dict


@dataclass(frozen=True)
class BenchmarkResult:
    spec: SyntheticSpec
    replications: tuple
    report: EvalReport
    metadata: dict = field(default_factory=dict)

    def table_row(self) -> str:
        return format_table([self])


def aggregate(reps) -> EvalReport:
    reps = list(reps)
    if len(reps) < 2:
        raise ValueError("need at least two replications for a standard error")
    mean, se = {}, {}
    for name in _FIELDS:
        vals = np.array([getattr(r, name) for r in reps], dtype=float)
        mean[name] = float(np.mean(vals))
        se[name] = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    return EvalReport(reps=len(reps), mean=mean, se=se)


def run_replication(
    spec: SyntheticSpec, rep: int, test_size: int, cv: CvConfig, admm: AdmmConfig | None
) -> ReplicationResult:
    """One dataset: draw, tune by CV, fit, evaluate on a fresh test draw."""
    seed = derive_seed(spec.seed, _REPLICATION_KEY, rep)
    rspec = SyntheticSpec(spec.model_id, spec.p, spec.n1, spec.n2, seed)
    try:
        train, truth = make_dataset(rspec)
        test = make_test_set(rspec, truth, test_size)
        rcv = CvConfig(
            folds=cv.folds,
            lambda_grid=cv.lambda_grid,
            lambda_delta_grid=cv.lambda_delta_grid,
            grid_size=cv.grid_size,
            decades=cv.decades,
            seed=derive_seed(seed, 0),
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            lam, ld, _ = cv_select(train, rcv, admm)
            model = fit(train, lam, ld, admm)
    except QudaError as err:
        raise type(err)(f"replication {rep}: {err}") from err
    fp_inter, fn_inter, fp_main, fn_main = support_metrics(
        model.omega_support(), model.delta_support(), truth
    )
    return ReplicationResult(
        rep=rep,
        seed=seed,
        lam=lam,
        lambda_delta=ld,
        mr=misclassification_rate(model, test),
        oracle_mr=float(np.mean(oracle_predict(truth, test.x) != test.labels)),
        fp_main=fp_main,
        fp_inter=fp_inter,
        fn_main=fn_main,
        fn_inter=fn_inter,
    )


def run_benchmark(
    spec: SyntheticSpec,
    reps: int,
    test_size: int = 1000,
    cv: CvConfig | None = None,
    admm: AdmmConfig | None = None,
    n_jobs: int = 1,
) -> BenchmarkResult:
    """Replicate the full pipeline ``reps`` times and aggregate.

    Replication ``r`` uses a seed derived from ``(spec.seed, r)``, so the
    result does not depend on ``n_jobs`` or scheduling. Any failing
    replication aborts the run.
    """
    if reps < 2:
        raise ValueError("reps must be at least 2 (standard errors need two replications)")
    cv = cv or CvConfig()
    args = [(spec, r, test_size, cv, admm) for r in range(reps)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run_replication, *zip(*args)))
    else:
        results = [run_replication(*a) for a in args]
    results.sort(key=lambda r: r.rep)
    metadata = {
        "counting": COUNTING_CONVENTION,
        "test_size_per_class": test_size,
        "folds": cv.folds,
        "grid_size": cv.grid_size,
        "master_seed": spec.seed,
    }
    return BenchmarkResult(spec, tuple(results), aggregate(results), metadata)


def write_log(result: BenchmarkResult, path) -> None:
    """Per-replication CSV; floats are written with ``repr`` so the
    aggregates can be recomputed bit-for-bit by :func:`read_log`."""
    names = list(ReplicationResult.__dataclass_fields__)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "p", "n1", "n2"] + names)
        for r in result.replications:
            row = asdict(r)
            w.writerow(
                [result.spec.model_id, result.spec.p, result.spec.n1, result.spec.n2]
                + [repr(row[k]) for k in names]
            )


def read_log(path) -> list[ReplicationResult]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            kwargs = {}
            for name, f in ReplicationResult.__dataclass_fields__.items():
                kwargs[name] = int(row[name]) if f.type == "int" else float(row[name])
            out.append(ReplicationResult(**kwargs))
    return out


def _fmt(mean, se, scale=1.0, digits=2):
    return f"{mean * scale:.{digits}f} ({se * scale:.{digits}f})"


def format_table(results) -> str:
    """Markdown table with the columns MR (%), FP.main, FP.inter, FN.main,
    FN.inter; one QUDA and one Oracle row per benchmark."""
    buf = io.StringIO()
    buf.write("| model | p | Method | MR (%) | FP.main | FP.inter | FN.main | FN.inter |\n")
    buf.write("|---|---|---|---|---|---|---|---|\n")
    for res in results:
        m, s = res.report.mean, res.report.se
        buf.write(
            f"| {res.spec.model_id} | {res.spec.p} | QUDA | {_fmt(m['mr'], s['mr'], 100)} "
            f"| {_fmt(m['fp_main'], s['fp_main'])} | {_fmt(m['fp_inter'], s['fp_inter'])} "
            f"| {_fmt(m['fn_main'], s['fn_main'])} | {_fmt(m['fn_inter'], s['fn_inter'])} |\n"
        )
        buf.write(
            f"| {res.spec.model_id} | {res.spec.p} | Oracle | "
            f"{_fmt(m['oracle_mr'], s['oracle_mr'], 100)} | -- | -- | -- | -- |\n"
        )
    buf.write(f"\n{res.report.reps} replications per row; {COUNTING_CONVENTION}.\n" if results else "")
    return buf.getvalue()
