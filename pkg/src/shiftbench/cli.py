"""Command-line interface.

Subcommands cover the full pipeline: ``fit`` a baseline curve from accuracy
records, score ``robustness`` and ``significance`` of interventions,
``curate`` class-balanced subsets, ``train`` classifier heads on frozen
embeddings, combine weights with ``soup`` and ``wise-ft``, and emit
``report`` documents and scatter ``plot`` files.

The environment variable ``RB_SEED`` overrides the default seed (0) of
every seeded operation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .blobio import (
    CLS_MAGIC,
    PRM_MAGIC,
    load_classifier,
    load_embedding_file,
    load_paramset,
    peek_magic,
    save_classifier,
    save_paramset,
)
from .classifiers import (
    BASELINEPP,
    CENTROID,
    LOGISTIC,
    LabelVector,
    TrainConfig,
    evaluate_accuracy,
    model_from_paramset,
    model_to_paramset,
    predict,
    train_baselinepp,
    train_logistic_regression,
    train_mean_centroid,
)
from .curation import (
    SubsetSpec,
    curate,
    read_manifest,
    write_manifest,
    write_subset_sidecar,
)
from .ensembles import (
    DEFAULT_SOUP_POOL_SIZE,
    SoupCandidate,
    greedy_soup,
    interpolate,
    sample_soup_config,
    uniform_soup,
)
from .metrics import SignificanceConfig, fit_beta
from .plotting import emit_scatter
from .records import (
    builtin_profile,
    load_accuracy_records,
    load_profile,
    standard_points,
)
from .report import (
    build_report,
    fit_to_json,
    format_report_table,
    load_fit_json,
    report_to_json,
)


def _default_seed() -> int:
    return int(os.environ.get("RB_SEED", "0"))


def _add_profile_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument(
        "--dataset",
        help="built-in dataset profile: imagenet, iwildcam, or camelyon",
    )
    group.add_argument("--profile", help="path to a dataset profile JSON")


def _profile(args: argparse.Namespace):
    if args.dataset:
        return builtin_profile(args.dataset)
    return load_profile(args.profile)


def _add_significance_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--lambda",
        dest="lam",
        type=float,
        default=1.0,
        help="shift of the baseline curve in residual deviations (default 1)",
    )
    parser.add_argument(
        "--gamma",
        type=float,
        default=0.0,
        help="margin over the reference OOD accuracy, percentage points "
        "(default 0)",
    )


def _read_labels(path: str | Path) -> np.ndarray:
    values = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            values.append(int(line))
        except ValueError as exc:
            raise ValueError(
                f"{path}:{lineno}: label {line!r} is not an integer"
            ) from exc
    return np.asarray(values, dtype=np.int64)


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_fit(args: argparse.Namespace) -> int:
    profile = _profile(args)
    records = load_accuracy_records(args.records)
    points = standard_points(records, profile)
    fit, stats = fit_beta(points)
    _write_or_print(
        fit_to_json(profile.name, fit, stats.d, stats.mae_pp, stats.r2), args.out
    )
    return 0


def _build_report_from_args(args: argparse.Namespace, lam: float, gamma: float):
    profile = _profile(args)
    fit, d = load_fit_json(args.fit)
    records = load_accuracy_records(args.records)
    cfg = SignificanceConfig(lam=lam, gamma=gamma)
    return build_report(
        fit, d, records, profile, cfg=cfg, reference_model=args.reference
    )


def cmd_robustness(args: argparse.Namespace) -> int:
    report = _build_report_from_args(args, lam=1.0, gamma=0.0)
    sys.stdout.write(format_report_table(report, include_significance=False))
    if args.out_json:
        Path(args.out_json).write_text(report_to_json(report), encoding="utf-8")
    return 0


def cmd_significance(args: argparse.Namespace) -> int:
    report = _build_report_from_args(args, lam=args.lam, gamma=args.gamma)
    sys.stdout.write(format_report_table(report))
    if args.out_json:
        Path(args.out_json).write_text(report_to_json(report), encoding="utf-8")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    report = _build_report_from_args(args, lam=args.lam, gamma=args.gamma)
    Path(args.out_json).write_text(report_to_json(report), encoding="utf-8")
    text = format_report_table(report)
    if args.out_text:
        Path(args.out_text).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_curate(args: argparse.Namespace) -> int:
    manifest = read_manifest(args.manifest, args.num_classes)
    spec = SubsetSpec(
        scheme=args.scheme,
        k=args.k,
        ratio=args.ratio,
        per_class_count=args.count,
        min_per_class=args.min_per_class,
        seed=args.seed,
    )
    subset = curate(manifest, spec)
    write_manifest(subset, args.out)
    write_subset_sidecar(str(args.out) + ".json", spec)
    print(f"selected {len(subset)} of {len(manifest)} items -> {args.out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    X = load_embedding_file(args.embeddings)
    y = _read_labels(args.labels)
    num_classes = args.num_classes or (int(y.max()) + 1 if y.size else 1)
    labels = LabelVector(y, num_classes)

    overrides = {
        key: value
        for key, value in {
            "epochs": args.epochs,
            "learning_rate": args.learning_rate,
            "batch_size": args.batch_size,
            "weight_decay": args.weight_decay,
            "momentum": args.momentum,
            "cosine_scale": args.cosine_scale,
        }.items()
        if value is not None
    }
    overrides["seed"] = args.seed

    if args.kind == LOGISTIC:
        cfg = TrainConfig.for_logistic(**overrides)
        model = train_logistic_regression(
            X, labels, cfg, l2_normalize=args.l2_normalize, layer_norm=args.layer_norm
        )
    elif args.kind == BASELINEPP:
        cfg = TrainConfig.for_baselinepp(**overrides)
        model = train_baselinepp(X, labels, cfg)
    else:
        model = train_mean_centroid(X, labels)

    save_classifier(model, args.out)
    metrics = {
        "kind": args.kind,
        "metric": args.metric,
        "train_accuracy": evaluate_accuracy(labels, predict(model, X), args.metric),
    }
    for prefix, emb_path, lbl_path in (
        ("eval", args.eval_embeddings, args.eval_labels),
        ("ood", args.ood_embeddings, args.ood_labels),
    ):
        if emb_path:
            X_eval = load_embedding_file(emb_path)
            y_eval = LabelVector(_read_labels(lbl_path), num_classes)
            metrics[f"{prefix}_accuracy"] = evaluate_accuracy(
                y_eval, predict(model, X_eval), args.metric
            )
    text = json.dumps(metrics, indent=2, sort_keys=True) + "\n"
    if args.out_metrics:
        Path(args.out_metrics).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_soup(args: argparse.Namespace) -> int:
    if args.emit_configs:
        lines = [
            sample_soup_config(seed=args.seed + i).to_record()
            for i in range(args.emit_configs)
        ]
        _write_or_print("\n".join(lines) + "\n", args.configs_out)
        return 0

    if not args.candidates:
        raise ValueError("soup requires candidate model blobs (or --emit-configs)")
    models = [load_classifier(p) for p in args.candidates]
    template = models[0]
    for path, model in zip(args.candidates, models):
        if model.kind != template.kind or model.weights.shape != template.weights.shape:
            raise ValueError(
                f"candidate {path} does not match the first candidate's "
                "kind/shape"
            )

    have_eval = bool(args.eval_embeddings and args.eval_labels)
    if not args.uniform and not have_eval:
        raise ValueError(
            "greedy soup needs --eval-embeddings and --eval-labels for its "
            "admission decisions (or pass --uniform)"
        )
    if have_eval:
        X_eval = load_embedding_file(args.eval_embeddings)
        y_eval = LabelVector(_read_labels(args.eval_labels), template.num_classes)

        def eval_params(ps) -> float:
            model = model_from_paramset(template, ps)
            return evaluate_accuracy(y_eval, predict(model, X_eval), args.metric)

    paramsets = [model_to_paramset(m) for m in models]
    if args.uniform:
        soup_ps = uniform_soup(paramsets)
        members = [Path(p).name for p in args.candidates]
    else:
        candidates = [
            SoupCandidate(
                params=ps, held_out_id_acc=eval_params(ps), tag=Path(path).name
            )
            for ps, path in zip(paramsets, args.candidates)
        ]
        soup_ps, members = greedy_soup(candidates, eval_params)

    soup_model = model_from_paramset(template, soup_ps)
    save_classifier(soup_model, args.out)
    summary = f"soup of {len(members)} member(s) [{', '.join(members)}]"
    if have_eval:
        summary += f" {args.metric}={eval_params(soup_ps):.4f}"
    print(f"{summary} -> {args.out}")
    return 0


def cmd_wise_ft(args: argparse.Namespace) -> int:
    magic0, magic1 = peek_magic(args.theta0), peek_magic(args.theta1)
    if magic0 != magic1:
        raise ValueError(
            f"blob types differ: {args.theta0} is {magic0!r}, "
            f"{args.theta1} is {magic1!r}"
        )
    if magic0 == CLS_MAGIC:
        m0, m1 = load_classifier(args.theta0), load_classifier(args.theta1)
        if m0.kind != m1.kind or m0.weights.shape != m1.weights.shape:
            raise ValueError("classifier blobs do not share kind/shape")
        mixed = interpolate(
            model_to_paramset(m0), model_to_paramset(m1), args.alpha
        )
        save_classifier(model_from_paramset(m0, mixed), args.out)
    elif magic0 == PRM_MAGIC:
        mixed = interpolate(
            load_paramset(args.theta0), load_paramset(args.theta1), args.alpha
        )
        save_paramset(mixed, args.out)
    else:
        raise ValueError(f"unsupported blob magic {magic0!r}")
    print(f"interpolated alpha={args.alpha:g} -> {args.out}")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    profile = _profile(args)
    fit, d = load_fit_json(args.fit)
    records = load_accuracy_records(args.records)
    cfg = SignificanceConfig(lam=args.lam, gamma=args.gamma)
    emit_scatter(
        fit, d, records, profile, args.out, regime=args.regime, cfg=cfg
    )
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shiftbench",
        description="Distribution-shift robustness evaluation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the baseline curve from accuracy records")
    p.add_argument("--records", required=True, help="accuracy-record CSV")
    _add_profile_args(p)
    p.add_argument("--out", help="write fit parameters JSON here (default stdout)")
    p.set_defaults(func=cmd_fit)

    for name, helptext, fn in (
        ("robustness", "effective/relative robustness table", cmd_robustness),
        ("significance", "robustness table with significance verdicts", cmd_significance),
        ("report", "full report as JSON plus text table", cmd_report),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--fit", required=True, help="fit parameters JSON")
        p.add_argument("--records", required=True, help="accuracy-record CSV")
        _add_profile_args(p)
        p.add_argument(
            "--reference",
            help="reference model name (default: the unique reference-role model)",
        )
        if name == "robustness":
            p.add_argument("--out-json", help="also write the report JSON here")
        else:
            _add_significance_args(p)
            if name == "significance":
                p.add_argument("--out-json", help="also write the report JSON here")
            else:
                p.add_argument("--out-json", required=True, help="report JSON path")
                p.add_argument(
                    "--out-text", help="write the text table here (default stdout)"
                )
        p.set_defaults(func=fn)

    p = sub.add_parser("curate", help="curate a class-balanced low-shot subset")
    p.add_argument("--manifest", required=True, help="item_id<TAB>class manifest")
    p.add_argument("--num-classes", type=int, help="class count (default inferred)")
    p.add_argument(
        "--scheme",
        required=True,
        choices=["k-per-class", "ratio", "fixed-per-class"],
    )
    p.add_argument("--k", type=int, help="items per class for k-per-class")
    p.add_argument("--ratio", type=float, help="per-class fraction for ratio")
    p.add_argument("--count", type=int, help="items per class for fixed-per-class")
    p.add_argument("--min-per-class", type=int, default=1)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True, help="subset manifest path")
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("train", help="train a classifier head on embeddings")
    p.add_argument("--embeddings", required=True, help="EMB1 embedding file")
    p.add_argument("--labels", required=True, help="one integer label per line")
    p.add_argument("--num-classes", type=int)
    p.add_argument(
        "--kind", required=True, choices=[LOGISTIC, CENTROID, BASELINEPP]
    )
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--weight-decay", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--cosine-scale", type=float)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--l2-normalize", action="store_true")
    p.add_argument("--layer-norm", action="store_true")
    p.add_argument(
        "--metric", choices=["top1", "per-class-average"], default="top1"
    )
    p.add_argument("--eval-embeddings", help="EMB1 file for held-out evaluation")
    p.add_argument("--eval-labels", help="labels for --eval-embeddings")
    p.add_argument("--ood-embeddings", help="EMB1 file for a shifted eval split")
    p.add_argument("--ood-labels", help="labels for --ood-embeddings")
    p.add_argument("--out", required=True, help="model blob path")
    p.add_argument("--out-metrics", help="write accuracy JSON here (default stdout)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("soup", help="weight-space soup of classifier blobs")
    p.add_argument("candidates", nargs="*", help="candidate model blobs")
    p.add_argument("--eval-embeddings", help="EMB1 file for soup decisions")
    p.add_argument("--eval-labels", help="labels for --eval-embeddings")
    p.add_argument(
        "--metric", choices=["top1", "per-class-average"], default="top1"
    )
    p.add_argument(
        "--uniform", action="store_true", help="uniform soup instead of greedy"
    )
    p.add_argument("--out", help="souped model blob path")
    p.add_argument(
        "--emit-configs",
        type=int,
        nargs="?",
        const=DEFAULT_SOUP_POOL_SIZE,
        metavar="N",
        help="emit N sampled soup training configs as JSON lines and exit "
        f"(default pool size {DEFAULT_SOUP_POOL_SIZE})",
    )
    p.add_argument("--configs-out", help="path for --emit-configs output")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_soup)

    p = sub.add_parser("wise-ft", help="interpolate two weight blobs")
    p.add_argument("--theta0", required=True, help="base blob (CLS1 or PRM1)")
    p.add_argument("--theta1", required=True, help="fine-tuned blob, same type")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_wise_ft)

    p = sub.add_parser("plot", help="scatter plot with baseline curves (SVG)")
    p.add_argument("--fit", required=True, help="fit parameters JSON")
    p.add_argument("--records", required=True, help="accuracy-record CSV")
    _add_profile_args(p)
    p.add_argument(
        "--regime",
        choices=["extreme", "low", "moderate", "high", "full"],
        default="full",
    )
    _add_significance_args(p)
    p.add_argument("--out", required=True, help="SVG path")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
