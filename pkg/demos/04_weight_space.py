"""Weight-space ensembling: interpolation, uniform and greedy soups.

Averaging the *weights* of multiple fine-tuned models (rather than their
predictions) costs nothing at inference time.  This script shows:

* linear interpolation between two heads with a mixing coefficient,
* the uniform soup (mean of all candidates),
* the greedy soup, which admits candidates in descending held-out accuracy
  order only while validation accuracy strictly improves,
* seeded sampling of the soup training configurations.
"""

import numpy as np

from shiftbench import (
    SoupCandidate,
    evaluate_accuracy,
    greedy_soup,
    interpolate,
    model_from_paramset,
    model_to_paramset,
    predict,
    sample_soup_config,
    train_logistic_regression,
    uniform_soup,
    TrainConfig,
)

rng = np.random.default_rng(3)
C, dims = 3, 12
means = rng.normal(0, 1.2, size=(C, dims))


def sample(per_class, noise):
    X = np.vstack([means[c] + rng.normal(0, noise, (per_class, dims))
                   for c in range(C)])
    return X, np.repeat(np.arange(C), per_class)


X_val, y_val = sample(80, 1.5)


def val_accuracy(ps, template):
    return evaluate_accuracy(y_val, predict(model_from_paramset(template, ps), X_val))


# --- candidates: the same head trained on different low-shot draws ---------
candidates = []
template = None
for i in range(9):
    X_i, y_i = sample(6, 1.5)  # a fresh tiny training draw per candidate
    model = train_logistic_regression(
        X_i, y_i, TrainConfig.for_logistic(epochs=120, seed=i)
    )
    template = template or model
    ps = model_to_paramset(model)
    candidates.append(
        SoupCandidate(ps, held_out_id_acc=val_accuracy(ps, template), tag=f"run{i}")
    )

print("candidate validation accuracies:")
for c in sorted(candidates, key=lambda c: -c.held_out_id_acc):
    print(f"  {c.tag}: {100 * c.held_out_id_acc:.1f}%")

# --- interpolation sweep between the best and worst candidate --------------
ranked = sorted(candidates, key=lambda c: -c.held_out_id_acc)
best, worst = ranked[0], ranked[-1]
print(f"\ninterpolating {worst.tag} (alpha=0) -> {best.tag} (alpha=1):")
for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
    mixed = interpolate(worst.params, best.params, alpha)
    print(f"  alpha={alpha:4.2f}  val {100 * val_accuracy(mixed, template):5.1f}%")

# --- uniform vs greedy soup -------------------------------------------------
uniform = uniform_soup([c.params for c in candidates])
greedy, members = greedy_soup(candidates, lambda ps: val_accuracy(ps, template))
print(f"\nuniform soup (all 9):        val {100 * val_accuracy(uniform, template):5.1f}%")
print(f"greedy soup  ({len(members)} members):  val "
      f"{100 * val_accuracy(greedy, template):5.1f}%   members: {', '.join(members)}")
print(f"best single candidate:       val {100 * best.held_out_id_acc:5.1f}%")

# --- sampled soup training configurations -----------------------------------
print("\nsampled soup training configurations (seeded, log-uniform lr/wd):")
for seed in range(3):
    print(f"  {sample_soup_config(seed=seed).to_record()}")
