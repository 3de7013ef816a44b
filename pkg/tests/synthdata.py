"""Bundled synthetic dataset and end-to-end pipeline driver for tests.

The dataset is a deterministic set of Gaussian class blobs in embedding
space with a shifted out-of-distribution variant (moved means, extra
noise), sized so the whole pipeline runs in seconds.  ``run_pipeline``
drives it through the CLI: curate -> train -> evaluate -> fit ->
robustness -> significance -> report -> plot, materializing every artifact
under a work directory so reruns can be compared byte for byte.
"""

import json
from pathlib import Path

import numpy as np

from shiftbench.cli import main as cli_main

NUM_CLASSES = 4
DIMS = 16
TRAIN_PER_CLASS = 60
EVAL_PER_CLASS = 40
REGIME_SPECS = [
    ("extreme", ["--scheme", "k-per-class", "--k", "2"]),
    ("moderate", ["--scheme", "k-per-class", "--k", "10"]),
    ("high", ["--scheme", "k-per-class", "--k", "30"]),
    ("full", ["--scheme", "ratio", "--ratio", "1.0"]),
]


def make_blob_dataset(seed=0):
    """Class blobs plus a shifted variant; returns a dict of arrays."""
    rng = np.random.default_rng(seed)
    means = rng.normal(0.0, 1.0, size=(NUM_CLASSES, DIMS))
    shift = rng.normal(0.0, 0.6, size=(NUM_CLASSES, DIMS))

    def draw(per_class, offset, noise):
        X = np.vstack(
            [
                means[c] + offset[c] + rng.normal(0.0, noise, (per_class, DIMS))
                for c in range(NUM_CLASSES)
            ]
        )
        y = np.repeat(np.arange(NUM_CLASSES), per_class)
        return X, y

    zero = np.zeros_like(means)
    X_train, y_train = draw(TRAIN_PER_CLASS, zero, 0.9)
    X_val, y_val = draw(EVAL_PER_CLASS, zero, 0.9)
    X_ood, y_ood = draw(EVAL_PER_CLASS, shift, 1.3)
    return {
        "train": (X_train, y_train),
        "val": (X_val, y_val),
        "ood": (X_ood, y_ood),
    }


def write_labels(path, labels):
    Path(path).write_text("".join(f"{int(v)}\n" for v in labels))


def run_cli(*argv):
    code = cli_main([str(a) for a in argv])
    assert code == 0, f"CLI failed: {argv}"


def run_pipeline(workdir, seed=0):
    """Run the full CLI pipeline into ``workdir``; returns produced paths."""
    from shiftbench.blobio import load_classifier, write_embedding_file
    from shiftbench.classifiers import evaluate_accuracy, predict
    from shiftbench.curation import read_manifest
    from shiftbench.records import AccuracyRecord, write_accuracy_records

    work = Path(workdir)
    work.mkdir(parents=True, exist_ok=True)
    data = make_blob_dataset(seed)
    X_train, y_train = data["train"]
    X_val, y_val = data["val"]
    X_ood, y_ood = data["ood"]

    write_embedding_file(work / "train.emb", X_train)
    write_labels(work / "train.labels", y_train)
    write_embedding_file(work / "val.emb", X_val)
    write_labels(work / "val.labels", y_val)
    write_embedding_file(work / "ood.emb", X_ood)
    write_labels(work / "ood.labels", y_ood)
    manifest_path = work / "manifest.tsv"
    manifest_path.write_text(
        "".join(f"it{i:04d}\t{int(c)}\n" for i, c in enumerate(y_train))
    )

    profile_path = work / "profile.json"
    profile_path.write_text(
        json.dumps(
            {
                "name": "synthetic-blobs",
                "metric_mode": "top1",
                "ood_shifts": ["shifted"],
            }
        )
    )

    # -- curate each regime's subset and slice out its embeddings ----------
    for regime, scheme_args in REGIME_SPECS:
        subset_path = work / f"subset_{regime}.tsv"
        run_cli(
            "curate",
            "--manifest", manifest_path,
            *scheme_args,
            "--seed", "7",
            "--out", subset_path,
        )
        subset = read_manifest(subset_path)
        idx = [int(item_id[2:]) for item_id, _ in subset.items]
        write_embedding_file(work / f"train_{regime}.emb", X_train[idx])
        write_labels(work / f"train_{regime}.labels", y_train[idx])

    # -- train heads per regime; collect id/ood accuracies -----------------
    # standard cloud: three head variants; reference: centroid;
    # interventions: cosine head, an interpolated blob, and a greedy soup
    standard_variants = [
        ("std_logistic", "logistic", ["--epochs", "60"]),
        ("std_logistic_l2", "logistic", ["--epochs", "60", "--l2-normalize"]),
        ("std_centroid", "centroid", []),
        ("std_logistic_short", "logistic", ["--epochs", "8", "--learning-rate", "0.003"]),
    ]
    records = []

    def train_and_record(name, kind, extra, regime, role, out_blob):
        metrics_path = work / f"metrics_{name}_{regime}.json"
        run_cli(
            "train",
            "--embeddings", work / f"train_{regime}.emb",
            "--labels", work / f"train_{regime}.labels",
            "--num-classes", NUM_CLASSES,
            "--kind", kind,
            "--seed", "3",
            "--eval-embeddings", work / "val.emb",
            "--eval-labels", work / "val.labels",
            "--ood-embeddings", work / "ood.emb",
            "--ood-labels", work / "ood.labels",
            "--out", out_blob,
            "--out-metrics", metrics_path,
            *extra,
        )
        metrics = json.loads(metrics_path.read_text())
        records.append(
            AccuracyRecord(name, regime, role, "id", "val",
                           100 * metrics["eval_accuracy"])
        )
        records.append(
            AccuracyRecord(name, regime, role, "ood", "shifted",
                           100 * metrics["ood_accuracy"])
        )
        return metrics

    for regime, _ in REGIME_SPECS:
        for name, kind, extra in standard_variants:
            train_and_record(
                name, kind, extra, regime, "standard",
                work / f"model_{name}_{regime}.bin",
            )
        train_and_record(
            "ref_centroid", "centroid", [], regime, "reference",
            work / f"model_ref_{regime}.bin",
        )
        train_and_record(
            "cosine_head", "baselinepp", ["--epochs", "40"], regime,
            "intervention", work / f"model_cos_{regime}.bin",
        )

        # weight-space intervention: interpolate two logistic variants
        wiseft_blob = work / f"model_wiseft_{regime}.bin"
        run_cli(
            "wise-ft",
            "--theta0", work / f"model_std_logistic_{regime}.bin",
            "--theta1", work / f"model_std_logistic_l2_{regime}.bin",
            "--alpha", "0.5",
            "--out", wiseft_blob,
        )
        # soup of the logistic variants, greedy on the validation split
        soup_blob = work / f"model_soup_{regime}.bin"
        run_cli(
            "soup",
            work / f"model_std_logistic_{regime}.bin",
            work / f"model_std_logistic_l2_{regime}.bin",
            work / f"model_std_logistic_short_{regime}.bin",
            "--eval-embeddings", work / "val.emb",
            "--eval-labels", work / "val.labels",
            "--out", soup_blob,
        )
        for name, blob in (("wiseft_mix", wiseft_blob), ("greedy_soup", soup_blob)):
            model = load_classifier(blob)
            acc_id = evaluate_accuracy(y_val, predict(model, X_val).labels)
            acc_ood = evaluate_accuracy(y_ood, predict(model, X_ood).labels)
            records.append(
                AccuracyRecord(name, regime, "intervention", "id", "val",
                               100 * acc_id)
            )
            records.append(
                AccuracyRecord(name, regime, "intervention", "ood", "shifted",
                               100 * acc_ood)
            )

    records_path = work / "records.csv"
    write_accuracy_records(records_path, records)

    # -- fit, robustness, significance, report, plot -----------------------
    fit_path = work / "fit.json"
    run_cli("fit", "--records", records_path, "--profile", profile_path,
            "--out", fit_path)
    run_cli("robustness", "--fit", fit_path, "--records", records_path,
            "--profile", profile_path, "--out-json", work / "robustness.json")
    run_cli("significance", "--fit", fit_path, "--records", records_path,
            "--profile", profile_path, "--out-json", work / "significance.json")
    run_cli("report", "--fit", fit_path, "--records", records_path,
            "--profile", profile_path,
            "--out-json", work / "report.json",
            "--out-text", work / "report.txt")
    run_cli("plot", "--fit", fit_path, "--records", records_path,
            "--profile", profile_path, "--regime", "full",
            "--out", work / "scatter.svg")
    run_cli(
        "soup", "--emit-configs", "5", "--seed", "21",
        "--configs-out", work / "soup_configs.jsonl",
    )

    return sorted(p for p in work.iterdir() if p.is_file())
