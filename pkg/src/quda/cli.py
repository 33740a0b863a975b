"""Command-line interface: ``quda simulate | fit | predict | benchmark``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .admm import AdmmConfig
from .errors import ConvergenceWarning, DataError, DimensionMismatch, NumericalError
from .metrics import format_table, misclassification_rate, run_benchmark, write_log
from .model import decision_function, fit, load_model, save_model, save_truth
from .moments import LabeledDataset
from .synthgen import SyntheticSpec, make_dataset, make_test_set
from .tuning import CvConfig, cv_select

log = logging.getLogger("quda")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


class CsvError(DataError):
    pass


# -- CSV ------------------------------------------------------------------


def _resolve_label(header, label):
    if label in header:
        return header.index(label)
    if label.isdigit() and int(label) < len(header):
        return int(label)
    return None


def read_csv(path, label="label", require_label=True):
    """Read a headed CSV into ``(x, labels_or_None, feature_names)``."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvError(f"{path}: empty file (a header row is required)") from None
        header = [h.strip() for h in header]
        li = _resolve_label(header, label)
        if li is None and require_label:
            raise CsvError(f"{path}: label column {label!r} not found in header {header}")
        feat_idx = [i for i in range(len(header)) if i != li]
        rows, labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise CsvError(
                    f"{path}:{lineno}: expected {len(header)} fields, found {len(rec)}"
                )
            try:
                rows.append([float(rec[i]) for i in feat_idx])
            except ValueError as err:
                raise CsvError(f"{path}:{lineno}: {err}") from None
            if li is not None:
                raw = rec[li].strip()
                try:
                    lab = int(float(raw))
                except ValueError:
                    raise CsvError(f"{path}:{lineno}: label {raw!r} is not 1 or 2") from None
                if lab not in (1, 2) or float(raw) != lab:
                    raise CsvError(f"{path}:{lineno}: label {raw!r} is not 1 or 2")
                labels.append(lab)
    x = np.array(rows, dtype=float).reshape(len(rows), len(feat_idx))
    y = np.array(labels, dtype=np.int64) if li is not None else None
    return x, y, [header[i] for i in feat_idx]


def write_dataset_csv(path, data: LabeledDataset):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(data.p)] + ["label"])
        for row, lab in zip(data.x.tolist(), data.labels.tolist()):
            w.writerow([repr(v) for v in row] + [lab])


# -- commands -------------------------------------------------------------


def _admm_config(args):
    return AdmmConfig(rho=args.rho, max_iter=args.max_iter, tol_abs=args.tol_abs, tol_rel=args.tol_rel)


def cmd_simulate(args):
    spec = SyntheticSpec(args.model, args.p, args.n1, args.n2, args.seed)
    train, truth = make_dataset(spec)
    test = make_test_set(spec, truth, args.test_size)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "train.csv": lambda p: write_dataset_csv(p, train),
        "test.csv": lambda p: write_dataset_csv(p, test),
        "truth.json": lambda p: save_truth(
            truth,
            p,
            {"model": spec.model_id, "p": spec.p, "n1": spec.n1, "n2": spec.n2, "seed": spec.seed},
        ),
    }
    for name, writer in files.items():
        writer(out / name)
    print(f"{out / 'train.csv'}\t{train.n} rows")
    print(f"{out / 'test.csv'}\t{test.n} rows")
    print(f"{out / 'truth.json'}\t{len(truth.omega_support())} unique interaction nonzeros")
    return EXIT_OK


def _fit_report(model, data, chosen=None, cv_table=None):
    d = model.diagnostics
    lines = [
        f"n = {data.n} (class 1: {int(np.sum(data.labels == 1))}, class 2: {int(np.sum(data.labels == 2))}), p = {data.p}",
        f"lambda = {model.lam!r}",
        f"lambda_delta = {model.lambda_delta!r}",
        f"interaction support (unique entries) = {len(model.omega_support())}",
        f"main-effect support = {len(model.delta_support())}",
        f"eta = {model.eta!r}",
        f"in-sample error = {d['insample_errors']}/{d['n_train']} = {d['insample_error']!r}",
        f"admm: iterations = {d['admm_iterations']}, converged = {d['admm_converged']}, "
        f"rho = {d['rho']:.6g}, primal = {d['admm_primal_residual']:.3g}, dual = {d['admm_dual_residual']:.3g}",
        f"coordinate descent: sweeps = {d['cd_sweeps']}, converged = {d['cd_converged']}, "
        f"kkt = {d['cd_kkt_residual']:.3g}",
    ]
    if chosen is not None:
        best = min(cv_table.rows, key=lambda r: (r.mr_exact, r.lambda_index, r.lambda_delta_index))
        lines.append(
            f"cross-validation: {cv_table.metadata['folds']} folds, {len(cv_table)} grid points, "
            f"best cv error = {best.mr!r}"
        )
    return "\n".join(lines) + "\n"


def cmd_fit(args):
    x, y, _ = read_csv(args.data, args.label)
    data = LabeledDataset(x, y)
    admm = _admm_config(args)
    cv_result = None
    if args.cv:
        cv_cfg = CvConfig(folds=args.folds, grid_size=args.grid_size, seed=args.seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            cv_result = cv_select(data, cv_cfg, admm)
        lam, ld = cv_result.lambda_star, cv_result.lambda_delta_star
        if args.cv_table:
            Path(args.cv_table).write_text(cv_result.cv_table.to_csv(), encoding="utf-8")
    else:
        lam, ld = args.lam, args.lambda_delta
    model = fit(data, lam, ld, admm)
    save_model(model, args.out)
    report = _fit_report(
        model, data, chosen=cv_result and (lam, ld), cv_table=cv_result and cv_result.cv_table
    )
    if args.report:
        Path(args.report).write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    return EXIT_OK


def cmd_predict(args):
    model = load_model(args.model)
    x, y, names = read_csv(args.data, args.label, require_label=False)
    if x.shape[1] != model.p:
        raise DimensionMismatch(f"model expects p = {model.p} features, data has {x.shape[1]}")
    scores = decision_function(model, x) if x.shape[0] else np.zeros(0)
    pred = np.where(scores > 0, 1, 2)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["prediction", "score"] if args.scores else ["prediction"])
        for c, s in zip(pred.tolist(), scores.tolist()):
            w.writerow([c, repr(s)] if args.scores else [c])
    msg = f"{args.out}\t{x.shape[0]} predictions"
    if y is not None and y.size:
        errors = int(np.sum(pred != y))
        mr = misclassification_rate(model, LabeledDataset(x, y))
        msg += f"\nerror = {errors}/{y.size} = {mr!r}"
    print(msg)
    return EXIT_OK


def _int_list(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty list {text!r}")
    return out


def cmd_benchmark(args):
    if args.reps < 2:
        raise UsageError("--reps must be at least 2 (standard errors need two replications)")
    cv_cfg = CvConfig(folds=args.folds, grid_size=args.grid_size)
    admm = _admm_config(args)
    results = []
    for model_id in args.models:
        for p in args.p:
            spec = SyntheticSpec(model_id, p, args.n1, args.n2, args.seed)
            log.info("model %d, p = %d, %d replications", model_id, p, args.reps)
            results.append(run_benchmark(spec, args.reps, args.test_size, cv_cfg, admm, args.jobs))
    if args.log:
        logdir = Path(args.log)
        logdir.mkdir(parents=True, exist_ok=True)
        for res in results:
            write_log(res, logdir / f"model{res.spec.model_id}_p{res.spec.p}.csv")
    table = format_table(results)
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return EXIT_OK


# -- parser ---------------------------------------------------------------


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return v


def _add_admm_flags(p):
    g = p.add_argument_group("ADMM")
    g.add_argument("--rho", type=_positive_float, default=None, help="ADMM penalty (default: spectral heuristic)")
    g.add_argument("--max-iter", type=int, default=500)
    g.add_argument("--tol-abs", type=_positive_float, default=1e-5)
    g.add_argument("--tol-rel", type=_positive_float, default=1e-4)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="quda", description="Sparse quadratic discriminant analysis (QUDA)."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic train/test pair and its truth")
    p.add_argument("--model", type=int, required=True, choices=range(1, 6))
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n1", type=int, default=100)
    p.add_argument("--n2", type=int, default=100)
    p.add_argument("--test-size", type=int, default=1000, help="test rows per class")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a model on a labelled CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--label", default="label", help="label column name or index (values 1/2)")
    p.add_argument("--lambda", dest="lam", type=_nonneg_float)
    p.add_argument("--lambda-delta", type=_nonneg_float)
    p.add_argument("--cv", action="store_true", help="choose both penalties by cross-validation")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--grid-size", type=int, default=8)
    p.add_argument("--seed", type=int, default=0, help="fold assignment seed")
    p.add_argument("--cv-table", help="write the cross-validation surface as CSV")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--report", help="also write the text report here")
    _add_admm_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="classify the rows of a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label", default="label", help="label column to ignore (and score) if present")
    p.add_argument("--out", required=True)
    p.add_argument("--scores", action="store_true", help="add the raw discriminant score column")
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; prediction is deterministic")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("benchmark", help="replicated synthetic benchmark table")
    p.add_argument("--models", type=_int_list, default=[2], help="e.g. 2, 1,3 or 1..5")
    p.add_argument("--p", type=_int_list, default=[50], help="dimension(s), e.g. 50,200")
    p.add_argument("--n1", type=int, default=100)
    p.add_argument("--n2", type=int, default=100)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--test-size", type=int, default=1000, help="test rows per class")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--grid-size", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--log", help="directory for per-replication CSV logs")
    p.add_argument("--out", help="also write the table here")
    _add_admm_flags(p)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s"
    )
    if args.command == "fit" and not args.cv and (args.lam is None or args.lambda_delta is None):
        parser.error("fit needs --lambda and --lambda-delta, or --cv")
    try:
        return args.func(args)
    except UsageError as err:
        print(f"quda: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as err:
        print(f"quda: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError) as err:
        print(f"quda: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as err:
        print(f"quda: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
