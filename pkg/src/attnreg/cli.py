"""Command-line harness.

Subcommands: simulate (emit DGP CSVs), bench (Monte Carlo grid), fit (train on
a CSV), predict (apply a saved model), weights (export an attention weight
matrix).  Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import model as _attmodel
from .dgp import DGP_KINDS, DgpSpec, dataset_to_csv, generate
from .embeddings import Activation, attention_weights, linear_attention_predict, \
    ols_embedding, pcr_embedding, ridge_embedding
from .exceptions import (
    AttnRegError,
    MissingTargetError,
    NonNumericColumnError,
    ParseError,
)
from .experiment import (
    DESK_SAMPLE_SIZES,
    FULL_SAMPLE_SIZES,
    SNR_GRID,
    ExperimentConfig,
    out_of_sample_r2,
    run_experiment,
)
from .model import AttRegConfig

LINEAR_MODEL_FORMAT = "attnreg-linear"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def read_csv_numeric(path, columns=None):
    """Read a numeric CSV with a header row.

    Returns (header, array).  Raises ParseError naming the offending row and
    column on malformed input.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError(f"{path}: empty file") from None
            header = [h.strip() for h in header]
            if columns is not None:
                missing = [c for c in columns if c not in header]
                if missing:
                    raise MissingTargetError(
                        f"{path}: missing column(s) {missing}; header is {header}")
                idx = [header.index(c) for c in columns]
            else:
                idx = list(range(len(header)))
            rows = []
            for row_no, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(header):
                    raise ParseError(
                        f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}")
                values = []
                for j in idx:
                    cell = row[j].strip()
                    try:
                        values.append(float(cell))
                    except ValueError:
                        raise NonNumericColumnError(
                            f"{path}: row {row_no}, column {header[j]!r}: "
                            f"non-numeric value {cell!r}") from None
                rows.append(values)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: no data rows")
    selected = [header[j] for j in idx]
    return selected, np.asarray(rows, dtype=float)


def _fmt(v) -> str:
    return format(float(v), ".17g")


def write_matrix_csv(path, header, matrix):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in np.atleast_2d(matrix):
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------- simulate

def cmd_simulate(args):
    spec = DgpSpec(args.dgp)
    dataset = generate(spec, args.n, args.snr, args.seed)
    dataset_to_csv(dataset, args.out)
    print(f"wrote {args.n} rows of {args.dgp} (snr={args.snr}, seed={args.seed}) "
          f"to {args.out}")
    return EXIT_OK


# ------------------------------------------------------------------- bench

def _parse_config_file(path):
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ParseError(f"{path}: line {line_no}: expected key=value")
                key, _, value = line.partition("=")
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return values


def _split_list(value, cast):
    return tuple(cast(v.strip()) for v in str(value).split(",") if v.strip())


def cmd_bench(args):
    file_values = _parse_config_file(args.config) if args.config else {}

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        return file_values.get(key, default)

    full = args.full or str(file_values.get("full", "")).lower() in ("1", "true", "yes")
    default_sizes = FULL_SAMPLE_SIZES if full else DESK_SAMPLE_SIZES

    dgps = _split_list(pick(args.dgp, "dgp", ",".join(DGP_KINDS)), str)
    sizes = _split_list(pick(args.n, "n", ",".join(map(str, default_sizes))), int)
    snrs = _split_list(pick(args.snr, "snr", ",".join(map(str, SNR_GRID))), float)
    methods = _split_list(pick(args.method, "method", "ols"), str)
    reps = int(pick(args.reps, "reps", 10))
    seed = int(pick(args.seed, "seed", 0))
    threads = int(pick(args.threads, "threads", 1))
    out = pick(args.out, "out", None)
    if out is None:
        raise UsageError("bench requires --out (or out= in the config file)")

    attreg_cfg = AttRegConfig(
        heads=int(pick(args.heads, "heads", 5)),
        ridge_penalty=float(pick(args.ridge_penalty, "lambda", 1e-3)),
        diagonal_mask=bool(args.diagonal_mask
                           or str(file_values.get("diagonal_mask", "")).lower()
                           in ("1", "true", "yes")),
        max_iterations=int(pick(args.max_iterations, "max_iterations", 500)),
    )
    config = ExperimentConfig(
        dgps=dgps, sample_sizes=sizes, snrs=snrs, replications=reps,
        test_size=int(pick(None, "test_size", 1000)), methods=methods,
        base_seed=seed, output_path=out,
        ridge_penalty=float(pick(args.ridge_penalty, "lambda", 1.0)),
        pcr_rank=int(pick(args.rank, "rank", 3)),
        attreg=attreg_cfg, threads=threads,
    )
    result = run_experiment(config)
    errors = sum(1 for r in result.records if r.error)
    print(f"wrote {len(result.records)} records ({errors} failed cells) to {out}")
    for key in sorted(result.summary):
        entry = result.summary[key]
        mean = entry["mean_r2_test"]
        print(f"  {key}: mean R2 = {mean:.4f}" if mean is not None
              else f"  {key}: no successful cells")
    return EXIT_OK


# --------------------------------------------------------------------- fit

def _standardizer(X):
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=0)
    std = np.where(std > 0, std, 1.0)
    return mean, std


def _linear_artifact(method, features, target, X, y, args, scale):
    artifact = {
        "format": LINEAR_MODEL_FORMAT, "version": 1, "method": method,
        "features": features, "target": target, "fit_intercept": True,
        "penalty": args.ridge_penalty, "rank": args.rank,
        "standardize": scale,
        "train_x": [[_fmt(v) for v in row] for row in X],
        "train_y": [_fmt(v) for v in y],
    }
    return artifact


def _linear_predict_from_artifact(artifact, X):
    Xtr = np.array([[float(v) for v in row] for row in artifact["train_x"]])
    ytr = np.array([float(v) for v in artifact["train_y"]])
    Xi = np.column_stack([np.ones(Xtr.shape[0]), Xtr])
    Ti = np.column_stack([np.ones(X.shape[0]), X])
    method = artifact["method"]
    if method == "ols":
        omega = ols_embedding(Xi)
    elif method == "ridge":
        omega = ridge_embedding(Xi, float(artifact["penalty"]))
    elif method == "pcr":
        omega = pcr_embedding(Xi, min(int(artifact["rank"]), Xi.shape[1]))
    else:
        raise ValueError(f"unknown linear method {method!r}")
    return linear_attention_predict(Ti, Xi, ytr, omega, Activation("identity"))


def _apply_standardize(artifact, X):
    scale = artifact.get("standardize")
    if scale:
        mean = np.array([float(v) for v in scale["mean"]])
        std = np.array([float(v) for v in scale["std"]])
        return (X - mean) / std
    return X


def cmd_fit(args):
    header, data = read_csv_numeric(args.input)
    if args.target not in header:
        raise MissingTargetError(
            f"{args.input}: target column {args.target!r} not found in {header}")
    t_idx = header.index(args.target)
    features = [h for i, h in enumerate(header) if i != t_idx and h != "signal"]
    f_idx = [header.index(h) for h in features]
    X_all = data[:, f_idx]
    y_all = data[:, t_idx]

    if args.test_fraction is not None:
        if not 0.0 < args.test_fraction < 1.0:
            raise UsageError("--test-fraction must be in (0, 1)")
        n_test = max(1, int(round(args.test_fraction * X_all.shape[0])))
        if n_test >= X_all.shape[0]:
            raise UsageError("--test-fraction leaves no training rows")
        perm = np.random.Generator(np.random.Philox(key=args.seed)).permutation(
            X_all.shape[0])
        test_rows, train_rows = perm[:n_test], perm[n_test:]
        X, y = X_all[train_rows], y_all[train_rows]
        X_test, y_test = X_all[test_rows], y_all[test_rows]
    else:
        X, y = X_all, y_all
        X_test = y_test = None

    scale = None
    if args.standardize:
        mean, std = _standardizer(X)
        scale = {"mean": [_fmt(v) for v in mean], "std": [_fmt(v) for v in std]}
        X = (X - mean) / std
        if X_test is not None:
            X_test = (X_test - mean) / std

    if args.method == "attreg":
        cfg = AttRegConfig(heads=args.heads, ridge_penalty=args.ridge_penalty,
                           diagonal_mask=args.diagonal_mask, seed=args.seed,
                           max_iterations=args.max_iterations)
        fitted = _attmodel.fit(X, y, cfg)
        in_sample = _attmodel.predict(fitted, X)
        artifact = _attmodel.model_to_dict(fitted)
        artifact["features"] = features
        artifact["target"] = args.target
        artifact["standardize"] = scale
        test_pred = _attmodel.predict(fitted, X_test) if X_test is not None else None
    elif args.method in ("ols", "ridge", "pcr"):
        artifact = _linear_artifact(args.method, features, args.target, X, y,
                                    args, scale)
        in_sample = _linear_predict_from_artifact(artifact, X)
        test_pred = (_linear_predict_from_artifact(artifact, X_test)
                     if X_test is not None else None)
    else:
        raise UsageError(f"unknown method {args.method!r}")

    metrics = {"method": args.method, "n_train": int(X.shape[0]),
               "r2_in_sample": out_of_sample_r2(y, in_sample)}
    if test_pred is not None:
        metrics["n_test"] = int(X_test.shape[0])
        metrics["r2_test"] = out_of_sample_r2(y_test, test_pred)

    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(artifact, fh, indent=1)
        fh.write("\n")
    metrics_path = args.out + ".metrics.json"
    with open(metrics_path, "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(json.dumps(metrics, indent=1, sort_keys=True))
    return EXIT_OK


# ----------------------------------------------------------------- predict

def _load_artifact(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc


def cmd_predict(args):
    artifact = _load_artifact(args.model)
    features = artifact.get("features")
    if not features:
        raise ParseError(f"{args.model}: artifact lacks a feature list")
    _, X = read_csv_numeric(args.input, columns=features)
    X = _apply_standardize(artifact, X)
    if artifact.get("format") == _attmodel.MODEL_FORMAT:
        fitted = _attmodel.model_from_dict(artifact)
        pred = _attmodel.predict(fitted, X)
    elif artifact.get("format") == LINEAR_MODEL_FORMAT:
        pred = _linear_predict_from_artifact(artifact, X)
    else:
        raise ParseError(f"{args.model}: unknown artifact format "
                         f"{artifact.get('format')!r}")
    write_matrix_csv(args.out, ["prediction"], pred[:, None])
    print(f"wrote {pred.shape[0]} predictions to {args.out}")
    return EXIT_OK


# ----------------------------------------------------------------- weights

def cmd_weights(args):
    _, X_query = read_csv_numeric(args.query)
    _, X_key = read_csv_numeric(args.key)
    if args.model:
        artifact = _load_artifact(args.model)
        if artifact.get("format") != _attmodel.MODEL_FORMAT:
            raise ParseError(f"{args.model}: weights export needs an attention "
                             f"regression artifact")
        fitted = _attmodel.model_from_dict(artifact)
        X_query = _apply_standardize(artifact, X_query)
        weights = np.zeros((X_query.shape[0], fitted.train_x.shape[0]))
        for head in fitted.heads:
            weights += head.alpha * _attmodel._head_weights(
                head.factor, X_query, fitted.train_x, False)
        normalized = True
    else:
        if args.method == "ols":
            omega = ols_embedding(X_key)
        elif args.method == "ridge":
            omega = ridge_embedding(X_key, args.ridge_penalty)
        elif args.method == "pcr":
            omega = pcr_embedding(X_key, min(args.rank, X_key.shape[1]))
        else:
            raise UsageError(f"unknown method {args.method!r}")
        activation = Activation(kind=args.activation)
        weights = attention_weights(X_query, X_key, omega, activation)
        normalized = args.activation in ("softmax", "normalized_relu",
                                         "normalized_elu")

    header = ["query_index"] + [f"key_{i}" for i in range(weights.shape[1])]
    rows = np.column_stack([np.arange(weights.shape[0], dtype=float), weights])
    if normalized:
        sums = weights.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-8):
            raise AttnRegError(
                f"normalized weight rows deviate from sum 1 by up to "
                f"{np.max(np.abs(sums - 1.0)):g}")
        header.append("row_sum")
        rows = np.column_stack([rows, sums])
    write_matrix_csv(args.out, header, rows)
    print(f"wrote {weights.shape[0]}x{weights.shape[1]} weight matrix to {args.out}")
    return EXIT_OK


# -------------------------------------------------------------------- main

def build_parser():
    parser = _Parser(prog="attnreg",
                     description="Attention-view regression toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="emit a simulated dataset as CSV")
    p.add_argument("--dgp", required=True, choices=DGP_KINDS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--snr", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="run the Monte Carlo benchmark grid")
    p.add_argument("--config", help="flat key=value config file; flags override")
    p.add_argument("--dgp", help="comma-separated DGP names")
    p.add_argument("--n", help="comma-separated sample sizes")
    p.add_argument("--snr", help="comma-separated SNR values")
    p.add_argument("--reps", type=int)
    p.add_argument("--method", help="comma-separated: ols,ridge,pcr,attreg")
    p.add_argument("--heads", type=int)
    p.add_argument("--lambda", dest="ridge_penalty", type=float)
    p.add_argument("--rank", type=int)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--diagonal-mask", action="store_true")
    p.add_argument("--full", action="store_true",
                   help="use the full sample-size grid (500..5000)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("fit", help="fit a method to a CSV file")
    p.add_argument("input")
    p.add_argument("--target", default="y")
    p.add_argument("--method", default="ols",
                   choices=("ols", "ridge", "pcr", "attreg"))
    p.add_argument("--heads", type=int, default=5)
    p.add_argument("--lambda", dest="ridge_penalty", type=float, default=1e-3)
    p.add_argument("--rank", type=int, default=3)
    p.add_argument("--max-iterations", type=int, default=500)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--diagonal-mask", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="apply a saved model to a CSV file")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("weights", help="export an attention weight matrix")
    p.add_argument("--query", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--model", help="saved attention regression artifact")
    p.add_argument("--method", default="ols", choices=("ols", "ridge", "pcr"))
    p.add_argument("--activation", default="identity",
                   choices=("identity", "softmax", "normalized_relu",
                            "normalized_elu"))
    p.add_argument("--lambda", dest="ridge_penalty", type=float, default=1.0)
    p.add_argument("--rank", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_weights)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AttnRegError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
