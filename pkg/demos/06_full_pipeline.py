"""The full pipeline, end to end, through the command-line interface.

Synthesizes a small embedding dataset with a shifted evaluation split, then
drives the CLI: curate a low-shot subset, train heads on it, collect
accuracy records, fit the baseline curve, score robustness with
significance verdicts, and emit the report and scatter plot.

Outputs land in demos/output/.  Every step is seeded; rerunning the script
reproduces every file byte for byte.
"""

import json
from pathlib import Path

import numpy as np

from shiftbench.blobio import write_embedding_file
from shiftbench.cli import main as cli

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

# --- synthesize embeddings: 4-class blobs, shifted OOD variant ------------
rng = np.random.default_rng(11)
C, dims = 4, 16
means = rng.normal(0, 1.0, (C, dims))
shift = rng.normal(0, 0.6, (C, dims))


def sample(per_class, offset, noise):
    X = np.vstack([means[c] + offset[c] + rng.normal(0, noise, (per_class, dims))
                   for c in range(C)])
    return X, np.repeat(np.arange(C), per_class)


X_train, y_train = sample(60, np.zeros_like(means), 2.2)
X_val, y_val = sample(40, np.zeros_like(means), 2.2)
X_ood, y_ood = sample(40, shift, 2.8)

for stem, X, y in (("train", X_train, y_train), ("val", X_val, y_val),
                   ("ood", X_ood, y_ood)):
    write_embedding_file(out / f"{stem}.emb", X)
    (out / f"{stem}.labels").write_text("".join(f"{v}\n" for v in y))
(out / "manifest.tsv").write_text(
    "".join(f"it{i:04d}\t{c}\n" for i, c in enumerate(y_train))
)
(out / "profile.json").write_text(json.dumps(
    {"name": "blobs", "metric_mode": "top1", "ood_shifts": ["shifted"]}
))

# --- 1. curate a 10-shot subset -------------------------------------------
cli(["curate", "--manifest", str(out / "manifest.tsv"),
     "--scheme", "k-per-class", "--k", "10", "--seed", "7",
     "--out", str(out / "subset.tsv")])
subset_idx = [int(line.split("\t")[0][2:])
              for line in (out / "subset.tsv").read_text().splitlines() if line]
write_embedding_file(out / "subset.emb", X_train[subset_idx])
(out / "subset.labels").write_text(
    "".join(f"{y_train[i]}\n" for i in subset_idx)
)

# --- 2. train heads; gather (ID, OOD) accuracies as records ---------------
rows = ["model,regime,role,split,shift,accuracy_pct"]


def train(name, kind, role, extra=()):
    metrics_path = out / f"{name}.metrics.json"
    cli(["train", "--embeddings", str(out / "subset.emb"),
         "--labels", str(out / "subset.labels"), "--num-classes", str(C),
         "--kind", kind, "--seed", "3",
         "--eval-embeddings", str(out / "val.emb"),
         "--eval-labels", str(out / "val.labels"),
         "--ood-embeddings", str(out / "ood.emb"),
         "--ood-labels", str(out / "ood.labels"),
         "--out", str(out / f"{name}.bin"),
         "--out-metrics", str(metrics_path), *extra])
    m = json.loads(metrics_path.read_text())
    rows.append(f"{name},full,{role},id,val,{100 * m['eval_accuracy']:.4f}")
    rows.append(f"{name},full,{role},ood,shifted,{100 * m['ood_accuracy']:.4f}")


# a ladder of training budgets gives the cloud a real spread in ID accuracy
for name, kind, extra in [
    ("std_tiny", "logistic", ["--epochs", "2", "--learning-rate", "0.002"]),
    ("std_short", "logistic", ["--epochs", "5", "--learning-rate", "0.003"]),
    ("std_mid", "logistic", ["--epochs", "15", "--learning-rate", "0.005"]),
    ("std_long", "logistic", ["--epochs", "60"]),
    ("std_l2", "logistic", ["--epochs", "60", "--l2-normalize"]),
    ("std_centroid", "centroid", []),
]:
    train(name, kind, "standard", extra)
train("reference", "centroid", "reference")
train("cosine_head", "baselinepp", "intervention", ["--epochs", "40"])
(out / "records.csv").write_text("\n".join(rows) + "\n")

# --- 3. fit the baseline curve, score, report, plot ------------------------
cli(["fit", "--records", str(out / "records.csv"),
     "--profile", str(out / "profile.json"), "--out", str(out / "fit.json")])
print()
cli(["significance", "--fit", str(out / "fit.json"),
     "--records", str(out / "records.csv"),
     "--profile", str(out / "profile.json")])
cli(["report", "--fit", str(out / "fit.json"),
     "--records", str(out / "records.csv"),
     "--profile", str(out / "profile.json"),
     "--out-json", str(out / "report.json"),
     "--out-text", str(out / "report.txt")])
cli(["plot", "--fit", str(out / "fit.json"),
     "--records", str(out / "records.csv"),
     "--profile", str(out / "profile.json"),
     "--out", str(out / "scatter.svg")])

print(f"\nartifacts in {out}:")
for path in sorted(out.iterdir()):
    print(f"  {path.name}")
