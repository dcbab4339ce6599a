"""Command-line entry point.

Subcommands cover every pipeline: eval, rank, budget (ellipsoid or
cluster), conformal, calib, train-toy, and validate. Reports go to
--out or stdout as canonical JSON, so a fixed seed gives byte-identical
output. Exit codes: 0 success, 1 rejected input, 2 internal failure or
usage error.
"""

from __future__ import annotations

import argparse
import sys
import traceback

import numpy as np

from ._util import ordered_map
from .belief import MassFunction
from .budgeting import (
    EmbeddingSet,
    budget_by_clustering,
    fit_class_ellipsoids,
    overlap_ratio,
    select_budget,
)
from .calib import OodScores, ece, entropy_shift, pr_auc, roc_auc
from .config import MeasureConfig
from .conformal import calibrate, coverage_report
from .errors import CalculusError, LengthMismatch, ParseError
from .evalrank import evaluate_dataset, lift_prediction, rank_models, sweep_lambdas
from .frame import Budget, FocalSet, make_frame
from .io import (
    DatasetFile,
    read_budget_file,
    read_embeddings,
    read_labels,
    read_outcomes,
    read_predictions,
    read_scores,
    report_text,
    write_report,
)
from .rsloss import LossConfig, sample_class_clusters, train_toy

GRID_STOP_TOL = 1e-12
GRID_ROUND = 12


def parse_lambda_grid(text: str) -> list[float]:
    """start:stop:step, stop-inclusive within 1e-12, values rounded to 12 places."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ParseError(f"lambda grid must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ParseError(f"non-numeric lambda grid component in {text!r}") from None
    if step <= 0.0:
        raise ParseError(f"lambda grid step must be positive, got {step}")
    if start < 0.0:
        raise ParseError(f"lambda grid must be nonnegative, starts at {start}")
    values = []
    k = 0
    while True:
        value = round(start + k * step, GRID_ROUND)
        if value > stop + GRID_STOP_TOL:
            break
        values.append(value)
        k += 1
    if not values:
        raise ParseError(f"lambda grid {text!r} is empty")
    return values


def _config_overrides(ds: DatasetFile, args: argparse.Namespace) -> MeasureConfig:
    base = ds.config.as_dict()
    for key, flag in (
        ("divergence", "divergence"),
        ("entropy_log_base", "entropy_log_base"),
        ("ns_log_base", "ns_log_base"),
        ("kl_epsilon", "kl_epsilon"),
        ("vertex_mode", "vertex_mode"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            base[key] = value
    return MeasureConfig.from_dict(base)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--divergence", choices=["kl", "js"], default=None)
    parser.add_argument("--entropy-log-base", choices=["2", "e"], default=None)
    parser.add_argument("--ns-log-base", choices=["2", "e"], default=None)
    parser.add_argument("--kl-epsilon", type=float, default=None)
    parser.add_argument("--vertex-mode", choices=["exact", "approx"], default=None)


def _emit(payload: dict, out: str | None) -> None:
    if out is None:
        sys.stdout.write(report_text(payload))
    else:
        write_report(payload, out)


def _parse_model_flag(value: str) -> tuple[str, str]:
    name, sep, path = value.partition("=")
    if not sep or not name or not path:
        raise ParseError(f"--model expects NAME=PATH, got {value!r}")
    return name, path


# ---------------------------------------------------------------- commands

def _cmd_eval(args: argparse.Namespace) -> None:
    ds = read_predictions(args.predictions)
    labels = read_labels(args.labels, ds.frame)
    cfg = _config_overrides(ds, args)
    report = evaluate_dataset(
        ds, labels, args.lam, cfg, model=args.model, threads=args.threads
    )
    _emit(report.to_payload(), args.out)


def _cmd_rank(args: argparse.Namespace) -> None:
    grid = parse_lambda_grid(args.lambda_grid)
    models = dict(_parse_model_flag(value) for value in args.model)
    if len(models) != len(args.model):
        raise ParseError("duplicate model names in --model flags")
    reports = {}
    labels = None
    frame = None
    for name in sorted(models):
        ds = read_predictions(models[name])
        if frame is None:
            frame = ds.frame
            labels = read_labels(args.labels, frame)
        elif ds.frame.labels != frame.labels:
            raise LengthMismatch(f"model {name!r} uses a different frame")
        cfg = _config_overrides(ds, args)
        reports[name] = sweep_lambdas(
            ds, labels, grid, cfg, model=name, threads=args.threads
        )
    _emit(rank_models(reports, grid).to_payload(), args.out)


def _embedding_set(path: str) -> EmbeddingSet:
    ef = read_embeddings(path)
    frame = make_frame(sorted(set(ef.labels)))
    classes = np.array([frame.index(label) for label in ef.labels])
    return EmbeddingSet(frame, ef.points, classes)


def _budget_payload(kind: str, frame_labels: list[str], budget: Budget, extra: dict) -> dict:
    payload = {
        "kind": kind,
        "frame": frame_labels,
        "budget": [list(fs.indices()) for fs in budget],
    }
    payload.update(extra)
    return payload


def _cmd_budget_ellipsoid(args: argparse.Namespace) -> None:
    emb = _embedding_set(args.embeddings)
    ellipsoids = fit_class_ellipsoids(emb)
    budget = select_budget(ellipsoids, args.k, args.mc, args.seed, threads=args.threads)
    overlaps = {}
    for fs in budget:
        if fs.cardinality >= 2:
            overlaps[",".join(str(i) for i in fs.indices())] = overlap_ratio(
                ellipsoids, fs, args.mc, np.random.SeedSequence([args.seed, fs.bits])
            )
    extra = {"k": args.k, "mc": args.mc, "seed": args.seed, "overlaps": overlaps}
    _emit(_budget_payload("budget-ellipsoid", list(emb.frame.labels), budget, extra), args.out)


def _cmd_budget_cluster(args: argparse.Namespace) -> None:
    ef = read_embeddings(args.embeddings)
    frame = make_frame(ef.labels)
    budget = budget_by_clustering(ef.points, args.k)
    extra = {"k": args.k}
    _emit(_budget_payload("budget-cluster", list(frame.labels), budget, extra), args.out)


def _lifted_masses(ds: DatasetFile, threads: int | None) -> list[MassFunction]:
    return ordered_map(
        lambda r: lift_prediction(r, ds.frame, ds.budget, ds.config).mass,
        ds.records,
        threads,
    )


def _cmd_conformal(args: argparse.Namespace) -> None:
    cal_ds = read_predictions(args.calibration)
    cal_labels = read_labels(args.calibration_labels, cal_ds.frame)
    test_ds = read_predictions(args.predictions)
    if test_ds.frame.labels != cal_ds.frame.labels:
        raise LengthMismatch("calibration and test files use different frames")
    test_labels = read_labels(args.labels, test_ds.frame)
    cal = calibrate(_lifted_masses(cal_ds, args.threads), cal_labels)
    report = coverage_report(
        cal,
        _lifted_masses(test_ds, args.threads),
        test_labels,
        args.epsilon,
        args.seed,
    )
    _emit(report.to_payload(), args.out)


def _cmd_calib(args: argparse.Namespace) -> None:
    if args.metric == "ece":
        outcomes = read_outcomes(args.outcomes)
        payload = {
            "kind": "calib-ece",
            "bins": args.bins,
            "count": len(outcomes),
            "ece": ece(outcomes, args.bins),
        }
    else:
        scores = OodScores(read_scores(args.id_scores), read_scores(args.ood_scores))
        if args.metric == "auroc":
            payload = {"kind": "calib-auroc", "auroc": roc_auc(scores)}
        elif args.metric == "auprc":
            payload = {"kind": "calib-auprc", "auprc": pr_auc(scores)}
        else:
            payload = {"kind": "calib-entropy-shift"}
            payload.update(entropy_shift(scores.id_scores, scores.ood_scores))
    _emit(payload, args.out)


def _cmd_train_toy(args: argparse.Namespace) -> None:
    data = sample_class_clusters(args.classes, args.per_class, args.seed)
    frame = make_frame([f"class{i}" for i in range(args.classes)])
    pairs = [
        FocalSet((1 << i) | (1 << j), frame.n)
        for i in range(frame.n)
        for j in range(i + 1, frame.n)
    ]
    singletons = [FocalSet(1 << i, frame.n) for i in range(frame.n)]
    budget = Budget(tuple(singletons + pairs))
    cfg = LossConfig(args.alpha, args.beta)
    _, metrics = train_toy(
        data, budget, cfg, epochs=args.epochs, seed=args.seed,
        hidden=args.hidden, step=args.step,
    )
    payload = {
        "kind": "train-toy",
        "classes": args.classes,
        "per_class": args.per_class,
        "alpha": args.alpha,
        "beta": args.beta,
        "seed": args.seed,
        "budget": [list(fs.indices()) for fs in budget],
    }
    payload.update(metrics)
    _emit(payload, args.out)


def _cmd_validate(args: argparse.Namespace) -> None:
    checked = []
    frame = None
    budget = None
    if args.predictions is not None:
        ds = read_predictions(args.predictions)
        frame, budget = ds.frame, ds.budget
        checked.append(
            {
                "path": str(args.predictions),
                "role": "predictions",
                "records": len(ds.records),
                "status": "ok",
            }
        )
    if args.labels is not None:
        if frame is None:
            raise ParseError("--labels needs --predictions to supply the frame")
        labels = read_labels(args.labels, frame)
        checked.append(
            {
                "path": str(args.labels),
                "role": "labels",
                "records": len(labels),
                "status": "ok",
            }
        )
    if args.budget is not None:
        n = frame.n if frame is not None else 64
        parsed = read_budget_file(args.budget, n)
        checked.append(
            {
                "path": str(args.budget),
                "role": "budget",
                "records": parsed.size,
                "status": "ok",
            }
        )
    if args.embeddings is not None:
        ef = read_embeddings(args.embeddings)
        checked.append(
            {
                "path": str(args.embeddings),
                "role": "embeddings",
                "records": len(ef.ids),
                "status": "ok",
            }
        )
    if args.scores is not None:
        values = read_scores(args.scores)
        checked.append(
            {
                "path": str(args.scores),
                "role": "scores",
                "records": int(values.shape[0]),
                "status": "ok",
            }
        )
    if args.outcomes is not None:
        outcomes = read_outcomes(args.outcomes)
        checked.append(
            {
                "path": str(args.outcomes),
                "role": "outcomes",
                "records": len(outcomes),
                "status": "ok",
            }
        )
    if not checked:
        raise ParseError("validate needs at least one file flag")
    _emit({"kind": "validate", "files": checked}, args.out)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsnn-lab",
        description="Random-set uncertainty calculus: evaluation, budgeting, "
        "conformal sets, calibration metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="score one prediction file")
    p_eval.add_argument("--predictions", required=True)
    p_eval.add_argument("--labels", required=True)
    p_eval.add_argument("--lambda", dest="lam", type=float, required=True)
    p_eval.add_argument("--model", default="model")
    p_eval.add_argument("--threads", type=int, default=None)
    p_eval.add_argument("--out", default=None)
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=_cmd_eval)

    p_rank = sub.add_parser("rank", help="rank models over a lambda grid")
    p_rank.add_argument(
        "--model", action="append", required=True, metavar="NAME=PATH"
    )
    p_rank.add_argument("--labels", required=True)
    p_rank.add_argument("--lambda-grid", default="0.1:1.0:0.1")
    p_rank.add_argument("--threads", type=int, default=None)
    p_rank.add_argument("--out", default=None)
    _add_config_flags(p_rank)
    p_rank.set_defaults(func=_cmd_rank)

    p_budget = sub.add_parser("budget", help="derive a focal-set budget")
    budget_sub = p_budget.add_subparsers(dest="variant", required=True)
    p_ell = budget_sub.add_parser("ellipsoid", help="overlap-ranked sets")
    p_ell.add_argument("--embeddings", required=True)
    p_ell.add_argument("--k", type=int, required=True)
    p_ell.add_argument("--mc", type=int, default=100000)
    p_ell.add_argument("--seed", type=int, required=True)
    p_ell.add_argument("--threads", type=int, default=None)
    p_ell.add_argument("--out", default=None)
    p_ell.set_defaults(func=_cmd_budget_ellipsoid)
    p_clu = budget_sub.add_parser("cluster", help="clustering-derived sets")
    p_clu.add_argument("--embeddings", required=True)
    p_clu.add_argument("--k", type=int, required=True)
    p_clu.add_argument("--out", default=None)
    p_clu.set_defaults(func=_cmd_budget_cluster)

    p_conf = sub.add_parser("conformal", help="conformal prediction sets")
    p_conf.add_argument("--calibration", required=True)
    p_conf.add_argument("--calibration-labels", required=True)
    p_conf.add_argument("--predictions", required=True)
    p_conf.add_argument("--labels", required=True)
    p_conf.add_argument("--epsilon", type=float, required=True)
    p_conf.add_argument("--seed", type=int, required=True)
    p_conf.add_argument("--threads", type=int, default=None)
    p_conf.add_argument("--out", default=None)
    p_conf.set_defaults(func=_cmd_conformal)

    p_calib = sub.add_parser("calib", help="calibration and OoD metrics")
    calib_sub = p_calib.add_subparsers(dest="metric", required=True)
    p_ece = calib_sub.add_parser("ece", help="expected calibration error")
    p_ece.add_argument("--outcomes", required=True)
    p_ece.add_argument("--bins", type=int, default=10)
    p_ece.add_argument("--out", default=None)
    p_ece.set_defaults(func=_cmd_calib)
    for metric in ("auroc", "auprc", "entropy-shift"):
        p_m = calib_sub.add_parser(metric)
        p_m.add_argument("--id-scores", required=True)
        p_m.add_argument("--ood-scores", required=True)
        p_m.add_argument("--out", default=None)
        p_m.set_defaults(func=_cmd_calib)

    p_toy = sub.add_parser("train-toy", help="train the toy random-set model")
    p_toy.add_argument("--classes", type=int, default=3)
    p_toy.add_argument("--per-class", type=int, default=200)
    p_toy.add_argument("--epochs", type=int, default=2000)
    p_toy.add_argument("--seed", type=int, required=True)
    p_toy.add_argument("--alpha", type=float, default=1e-3)
    p_toy.add_argument("--beta", type=float, default=1e-3)
    p_toy.add_argument("--hidden", type=int, default=16)
    p_toy.add_argument("--step", type=float, default=5.0)
    p_toy.add_argument("--out", default=None)
    p_toy.set_defaults(func=_cmd_train_toy)

    p_val = sub.add_parser("validate", help="check files without computing")
    p_val.add_argument("--predictions", default=None)
    p_val.add_argument("--labels", default=None)
    p_val.add_argument("--budget", default=None)
    p_val.add_argument("--embeddings", default=None)
    p_val.add_argument("--scores", default=None)
    p_val.add_argument("--outcomes", default=None)
    p_val.add_argument("--out", default=None)
    p_val.set_defaults(func=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CalculusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
