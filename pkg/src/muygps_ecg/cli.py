"""Command-line entry point.

Subcommands: split, smote, train, predict, uq-report, evaluate, baseline-knn.
All randomness derives from ``--seed`` via fixed offsets, so identical flags
give byte-identical output files regardless of ``--threads``.
"""

import argparse
import csv
import json
import logging
import os
import shutil
import sys
import time

import numpy as np

from . import data as D
from . import model_io
from .evaluation import accuracy, confusion_matrix, emit_report
from .kernel import KernelParams
from .muygps import TrainConfig
from .pipeline import fit_gp, fit_muygps, knn_accuracy, knn_uq_report, summarize, uq_report
from .uq import TauGrid

log = logging.getLogger("muygps_ecg")

SEED_SPLIT, SEED_BATCH, SEED_CALIB, SEED_SMOTE, SEED_KNN = 0, 1, 2, 3, 4


class CliError(Exception):
    pass


def _add_common(p, data=True, model_opts=False):
    p.add_argument("--config", help="JSON file of option values; explicit flags win")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $MUYGPS_THREADS or CPU count)")
    if data:
        p.add_argument("--data", action="append", default=None,
                       help="input CSV; repeat to concatenate files")
        p.add_argument("--class-names", default=None, help="comma-separated class names")
        p.add_argument("--truncate", type=int, default=80,
                       help="keep the first N features (0 keeps all)")


def build_parser():
    parser = argparse.ArgumentParser(prog="muygps-ecg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="stratified train/test split")
    _add_common(p)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--out-train")
    p.add_argument("--out-test")

    p = sub.add_parser("smote", help="SMOTE oversampling of minority classes")
    _add_common(p)
    p.set_defaults(truncate=0)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out")
    p.add_argument("--provenance", help="JSON-lines sidecar recording each synthetic sample")

    p = sub.add_parser("train", help="fit a model and write a self-contained model file")
    _add_common(p)
    p.add_argument("--model", choices=("muygps", "gp", "knn"), default="muygps")
    p.add_argument("--nn", type=int, default=None, help="neighbors (default 50 binary / 35 multi-class)")
    p.add_argument("--nu", type=float, default=1.5)
    p.add_argument("--length-scale", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=1e-5)
    p.add_argument("--batch-size", type=int, default=500)
    p.add_argument("--max-evals", type=int, default=60)
    p.add_argument("--train-noise", action="store_true", help="also optimize the noise variance")
    p.add_argument("--no-optimize", action="store_true", help="keep the initial kernel parameters")
    p.add_argument("--positive-class", type=int, default=0)
    p.add_argument("--k", type=int, default=3, help="neighbors for --model knn")
    p.add_argument("--out")
    p.add_argument("--summary", help="JSON training summary (default: <out>.summary.json)")

    p = sub.add_parser("predict", help="predict a CSV with a model file")
    _add_common(p)
    p.add_argument("--model")
    p.add_argument("--no-labels", action="store_true", help="input rows carry no label column")
    p.add_argument("--out")

    p = sub.add_parser("uq-report", help="calibrate, predict and sweep tau on a labeled set")
    _add_common(p)
    p.add_argument("--model")
    p.add_argument("--taus", default=None, help="comma-separated tau values")
    p.add_argument("--calib-fraction", type=float, default=0.1)
    p.add_argument("--calib-tau", type=float, default=1.96)
    p.add_argument("--runs", type=int, default=30, help="bootstrap runs for knn models")
    p.add_argument("--out", help="JSON report path")
    p.add_argument("--out-csv", help="CSV report path")

    p = sub.add_parser("evaluate", help="accuracy and confusion matrix")
    _add_common(p)
    p.add_argument("--model")
    p.add_argument("--predictions", help="CSV written by predict (instead of --model)")
    p.add_argument("--out")

    p = sub.add_parser("baseline-knn", help="k-nearest-neighbor baseline")
    _add_common(p)
    p.add_argument("--test", action="append", default=None, help="labeled test CSV")
    p.add_argument("--test-fraction", type=float, default=0.2,
                   help="split --data when --test is not given")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--runs", type=int, default=0, help="bootstrap runs for an interval report")
    p.add_argument("--out", help="JSON metrics path")
    p.add_argument("--report", help="JSON tau-sweep report path (needs --runs >= 2)")
    return parser


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = json.load(fh)
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        sub = subparsers.choices[args.command]
        dests = {a.dest for a in sub._actions}
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = sorted(set(cfg) - dests)
        if unknown:
            parser.error(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        for key in ("data", "test"):
            if isinstance(cfg.get(key), str):
                cfg[key] = [cfg[key]]
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _require(args, *names):
    for n in names:
        if getattr(args, n, None) in (None, []):
            raise CliError(f"--{n.replace('_', '-')} is required")


def _class_names(args):
    return tuple(args.class_names.split(",")) if args.class_names else None


def _load(paths, class_names=None, truncate=0, labeled=True):
    parts = []
    for path in paths:
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        if labeled:
            parts.append(D.load_csv(path, class_names=class_names))
        else:
            parts.append(_load_unlabeled(path))
    if not labeled:
        X = np.vstack(parts)
        return X[:, :truncate] if truncate else X
    ds = parts[0] if len(parts) == 1 else D.concat(parts, class_names)
    if class_names is not None:
        ds = D.EcgDataset(ds.features, ds.labels, class_names, ds.source)
    return D.truncate(ds, truncate) if truncate else ds


def _load_unlabeled(path):
    with open(path) as fh:
        first = fh.readline()
    if not first.strip():
        return np.empty((0, 0))
    skip = 0 if all(D._is_number(c) for c in first.strip().split(",")) else 1
    return np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)


def _load_for_model(args, stored):
    """Features (and dataset if labeled) shaped for ``stored``."""
    _require(args, "data")
    trunc = args.truncate
    if getattr(args, "no_labels", False):
        X = _load(args.data, truncate=trunc, labeled=False)
        if X.size == 0:
            X = np.empty((0, stored.n_features))
        ds = None
    else:
        ds = _load_empty_ok(args.data, stored.class_names, trunc)
        X = ds.features if ds is not None else np.empty((0, stored.n_features))
    if X.shape[1] != stored.n_features:
        raise CliError(f"feature width {X.shape[1]} does not match model width {stored.n_features}")
    return X, ds


def _load_empty_ok(paths, class_names, trunc):
    try:
        return _load(paths, class_names, trunc)
    except D.DataError as exc:
        if "no samples" in str(exc):
            return None
        raise


def _kernel(args):
    return KernelParams(nu=args.nu, length_scale=args.length_scale, noise=args.noise)


def _write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_split(args):
    _require(args, "data", "out_train", "out_test")
    ds = _load(args.data, _class_names(args), args.truncate)
    train, test = D.stratified_split(ds, args.test_fraction, args.seed + SEED_SPLIT)
    D.save_csv(train, args.out_train)
    D.save_csv(test, args.out_test)
    print(f"train {train.n_samples} rows, test {test.n_samples} rows")


def cmd_smote(args):
    _require(args, "data", "out")
    ds = _load(args.data, _class_names(args), args.truncate)
    cfg = D.SmoteConfig(args.k, args.ratio, args.seed + SEED_SMOTE)
    out, prov = D.smote_oversample(ds, cfg, return_provenance=True)
    if len(prov) == 0 and len(args.data) == 1 and not args.truncate:
        shutil.copyfile(args.data[0], args.out)
    else:
        D.save_csv(out, args.out)
    if args.provenance:
        prov.write_jsonl(args.provenance)
    print(f"added {len(prov)} synthetic rows; class counts {out.class_counts().tolist()}")


def cmd_train(args):
    _require(args, "data", "out")
    ds = _load(args.data, _class_names(args), args.truncate)
    t0 = time.perf_counter()
    if args.model == "muygps":
        cfg = TrainConfig(batch_size=min(args.batch_size, ds.n_samples), seed=args.seed + SEED_BATCH,
                          noise_bounds=(1e-8, 1e-1) if args.train_noise else None,
                          max_evals=args.max_evals)
        clf = fit_muygps(ds, args.nn, _kernel(args), cfg, args.positive_class,
                         optimize=not args.no_optimize, threads=args.threads)
        stored = model_io.from_classifier(clf)
    elif args.model == "gp":
        clf = fit_gp(ds, _kernel(args), args.positive_class)
        stored = model_io.StoredModel("gp", clf.kernel_params(), 0, ds.features, ds.labels,
                                      ds.class_names, args.positive_class)
    else:
        stored = model_io.StoredModel("knn", [_kernel(args)], args.k, ds.features, ds.labels,
                                      ds.class_names, args.positive_class)
    model_io.save_model(stored, args.out)
    elapsed = time.perf_counter() - t0
    summary = {
        "model": args.model, "data": list(args.data), "truncate": args.truncate, "seed": args.seed,
        "n_train": stored.n_train, "n_features": stored.n_features,
        "class_names": list(stored.class_names), "nn_count": stored.nn_count,
        "kernel": [p.to_dict() for p in stored.kernels], "train_info": stored.train_info,
        "model_sha256": model_io.file_sha256(args.out),
    }
    _write_json(summary, args.summary or args.out + ".summary.json")
    log.info("trained %s in %.2fs", args.model, elapsed)
    print(f"wrote {args.out} ({args.model}, n_train={stored.n_train}, elapsed {elapsed:.2f}s)",
          file=sys.stderr)


def _predict_stored(stored, X, threads):
    """``(score, variance, labels)`` columns for any stored model kind."""
    if stored.kind == "knn":
        from .baseline_knn import KnnModel, knn_predict_batch
        from .nn_index import NnIndex
        model = KnnModel(stored.nn_count, NnIndex(stored.features), stored.labels,
                         len(stored.class_names))
        labels, frac = knn_predict_batch(model, X, threads)
        return frac[np.arange(len(labels)), labels], None, labels
    clf = _classifier(stored, threads)
    preds = clf.predict_latent(X)
    if clf.is_binary:
        return preds.mean, preds.variance, preds.labels
    lab = preds.labels
    rows = np.arange(len(lab))
    mean = np.column_stack([p.mean for p in preds.per_class])[rows, lab] if len(lab) else np.empty(0)
    var = np.column_stack([p.variance for p in preds.per_class])[rows, lab] if len(lab) else np.empty(0)
    return mean, var, lab


def _classifier(stored, threads=None):
    if stored.kind == "muygps":
        return model_io.to_classifier(stored, threads)
    if stored.kind == "gp":
        from .gp_exact import GpClassifier
        clf = GpClassifier(stored.kernels[0], stored.positive_class)
        clf.fit(D.EcgDataset(stored.features, stored.labels, stored.class_names))
        clf.params_list = list(stored.kernels)
        return clf
    raise CliError(f"model kind {stored.kind!r} has no latent predictor")


def cmd_predict(args):
    _require(args, "model", "out")
    stored = model_io.load_model(args.model)
    X, _ = _load_for_model(args, stored)
    score, var, labels = _predict_stored(stored, X, args.threads)
    score_col = "probability" if stored.kind == "knn" else "latent_mean"
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", score_col, "variance", "predicted_label"])
        for i in range(len(labels)):
            w.writerow([i, repr(float(score[i])), "" if var is None else repr(float(var[i])),
                        int(labels[i])])


def _grid(args):
    if not args.taus:
        return TauGrid()
    taus = tuple(float(t) for t in args.taus.split(","))
    default = TauGrid()
    if taus == default.taus:
        return default
    return TauGrid(taus, None)


def cmd_uq_report(args):
    _require(args, "model", "out")
    stored = model_io.load_model(args.model)
    X, ds = _load_for_model(args, stored)
    if ds is None:
        raise CliError("uq-report needs a non-empty labeled data set")
    meta = {"model_file": os.path.basename(args.model),
            "model_sha256": model_io.file_sha256(args.model), "model_kind": stored.kind,
            "data": list(args.data), "truncate": args.truncate, "seed": args.seed,
            "class_names": list(stored.class_names)}
    grid = _grid(args)
    if stored.kind == "knn":
        train = D.EcgDataset(stored.features, stored.labels, stored.class_names)
        report = knn_uq_report(train, ds, stored.nn_count, args.runs, args.seed + SEED_KNN,
                               grid=grid, metadata=meta, threads=args.threads)
    else:
        clf = _classifier(stored, args.threads)
        report, _ = uq_report(clf, ds, grid, args.calib_fraction, args.seed + SEED_CALIB,
                              args.calib_tau, meta)
    report.check_invariants()
    emit_report(report, args.out, "json")
    if args.out_csv:
        emit_report(report, args.out_csv, "csv")
    print(summarize(report))


def cmd_evaluate(args):
    _require(args, "data")
    if args.predictions:
        ds = _load(args.data, _class_names(args), args.truncate)
        with open(args.predictions, newline="") as fh:
            labels = np.array([int(r["predicted_label"]) for r in csv.DictReader(fh)], dtype=np.int64)
        n_classes = ds.n_classes
    else:
        _require(args, "model")
        stored = model_io.load_model(args.model)
        X, ds = _load_for_model(args, stored)
        _, _, labels = _predict_stored(stored, X, args.threads)
        n_classes = len(stored.class_names)
    acc = accuracy(labels, ds.labels)
    out = {"accuracy": acc, "n": int(len(labels)),
           "confusion": confusion_matrix(ds.labels, labels, n_classes).tolist()}
    if args.out:
        _write_json(out, args.out)
    print(f"accuracy {acc:.4f} on {len(labels)} samples")


def cmd_baseline_knn(args):
    _require(args, "data")
    names = _class_names(args)
    ds = _load(args.data, names, args.truncate)
    if args.test:
        train, test = ds, _load(args.test, names or ds.class_names, args.truncate)
    else:
        train, test = D.stratified_split(ds, args.test_fraction, args.seed + SEED_SPLIT)
    acc, _ = knn_accuracy(train, test, args.k, args.threads)
    out = {"model": "knn", "k": args.k, "accuracy": acc, "n_train": train.n_samples,
           "n_test": test.n_samples, "seed": args.seed}
    if args.report:
        if args.runs < 2:
            raise CliError("--report needs --runs >= 2")
        report = knn_uq_report(train, test, args.k, args.runs, args.seed + SEED_KNN,
                               metadata={"data": list(args.data)}, threads=args.threads)
        emit_report(report, args.report, "json")
    if args.out:
        _write_json(out, args.out)
    print(f"knn k={args.k} accuracy {acc:.4f} ({test.n_samples} test rows)")


COMMANDS = {
    "split": cmd_split, "smote": cmd_smote, "train": cmd_train, "predict": cmd_predict,
    "uq-report": cmd_uq_report, "evaluate": cmd_evaluate, "baseline-knn": cmd_baseline_knn,
}


def main(argv=None):
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc.args[0]}", file=sys.stderr)
        return 2
    except (CliError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
