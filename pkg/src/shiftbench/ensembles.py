"""Weight-space operations over named parameter collections.

A ``ParamSet`` is an ordered mapping from parameter names to flat float64
arrays.  Two sets are compatible when they carry the same names with the
same per-name lengths.  On top of that sit:

* linear interpolation between two sets with a mixing coefficient,
* the uniform soup (elementwise mean of many sets),
* the greedy soup, which admits candidates in descending held-out accuracy
  order only while a user-supplied evaluation strictly improves,
* seeded random sampling of soup training configurations over fixed
  hyperparameter ranges.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DEFAULT_SOUP_POOL_SIZE",
    "ParamSet",
    "ParamSetMismatchError",
    "SoupCandidate",
    "SoupConfigRanges",
    "SoupConfig",
    "interpolate",
    "uniform_soup",
    "greedy_soup",
    "sample_soup_config",
]

#: Conventional number of candidates trained for a greedy soup.
DEFAULT_SOUP_POOL_SIZE = 9


class ParamSetMismatchError(ValueError):
    """Raised when an operation mixes incompatible ParamSets."""


@dataclass(frozen=True)
class ParamSet:
    """Ordered map from parameter name to a flat float64 array."""

    entries: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        cleaned: dict[str, np.ndarray] = {}
        for name, arr in self.entries.items():
            a = np.ascontiguousarray(np.asarray(arr, dtype=np.float64)).ravel()
            if not np.all(np.isfinite(a)):
                raise ValueError(f"non-finite values in parameter {name!r}")
            cleaned[str(name)] = a
        object.__setattr__(self, "entries", cleaned)

    def names(self) -> tuple[str, ...]:
        return tuple(self.entries)

    def copy(self) -> "ParamSet":
        return ParamSet({k: v.copy() for k, v in self.entries.items()})

    def allclose(self, other: "ParamSet", atol: float = 0.0) -> bool:
        if set(self.entries) != set(other.entries):
            return False
        return all(
            np.allclose(self.entries[k], other.entries[k], rtol=0.0, atol=atol)
            for k in self.entries
        )


def _check_compatible(sets: Sequence[ParamSet]) -> None:
    ref = sets[0]
    ref_shapes = {k: v.size for k, v in ref.entries.items()}
    for i, ps in enumerate(sets[1:], start=1):
        shapes = {k: v.size for k, v in ps.entries.items()}
        if shapes != ref_shapes:
            missing = sorted(set(ref_shapes) - set(shapes))
            extra = sorted(set(shapes) - set(ref_shapes))
            wrong = sorted(
                k
                for k in set(shapes) & set(ref_shapes)
                if shapes[k] != ref_shapes[k]
            )
            parts = []
            if missing:
                parts.append(f"missing names {missing}")
            if extra:
                parts.append(f"unexpected names {extra}")
            if wrong:
                parts.append(
                    "length mismatches "
                    + str({k: (ref_shapes[k], shapes[k]) for k in wrong})
                )
            raise ParamSetMismatchError(
                f"ParamSet {i} incompatible with ParamSet 0: " + "; ".join(parts)
            )


@dataclass(frozen=True)
class SoupCandidate:
    """A candidate's parameters plus its held-out in-domain accuracy."""

    params: ParamSet
    held_out_id_acc: float
    tag: str

    def __post_init__(self) -> None:
        acc = float(self.held_out_id_acc)
        if not (0.0 <= acc <= 1.0):
            raise ValueError(f"held_out_id_acc must lie in [0, 1], got {acc!r}")
        object.__setattr__(self, "held_out_id_acc", acc)


def interpolate(theta0: ParamSet, theta1: ParamSet, alpha: float) -> ParamSet:
    """Elementwise (1 - alpha) * theta0 + alpha * theta1 for alpha in [0, 1].

    The endpoints short-circuit to copies of the inputs so that alpha of
    exactly 0 or 1 is bit-identical even for payloads containing -0.0.
    """
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    _check_compatible([theta0, theta1])
    if alpha == 0.0:
        return theta0.copy()
    if alpha == 1.0:
        return theta1.copy()
    return ParamSet(
        {
            k: (1.0 - alpha) * theta0.entries[k] + alpha * theta1.entries[k]
            for k in theta0.entries
        }
    )


def uniform_soup(candidates: Sequence[ParamSet]) -> ParamSet:
    """Elementwise arithmetic mean of one or more compatible ParamSets."""
    if not candidates:
        raise ValueError("uniform_soup requires at least one ParamSet")
    _check_compatible(candidates)
    ref = candidates[0]
    return ParamSet(
        {
            k: np.mean([ps.entries[k] for ps in candidates], axis=0)
            for k in ref.entries
        }
    )


def greedy_soup(
    candidates: Sequence[SoupCandidate],
    eval_fn: Callable[[ParamSet], float],
) -> tuple[ParamSet, list[str]]:
    """Build a soup greedily, keeping members only when evaluation improves.

    Candidates are visited in descending held-out accuracy (stable order on
    ties).  The soup starts from the best candidate; each later candidate
    is tentatively averaged in (uniform over current members plus it) and
    kept iff ``eval_fn`` of the tentative soup strictly exceeds the current
    soup's score.  ``eval_fn`` is called sequentially, never concurrently.

    Returns the final averaged ParamSet and the tags of admitted members.
    By construction the returned soup scores at least as high under
    ``eval_fn`` as the first (best held-out accuracy) candidate alone.
    """
    if not candidates:
        raise ValueError("greedy_soup requires at least one candidate")
    _check_compatible([c.params for c in candidates])
    order = sorted(candidates, key=lambda c: -c.held_out_id_acc)
    members = [order[0]]
    soup = uniform_soup([order[0].params])
    score = float(eval_fn(soup))
    for cand in order[1:]:
        trial = uniform_soup([m.params for m in members] + [cand.params])
        trial_score = float(eval_fn(trial))
        if trial_score > score:
            members.append(cand)
            soup = trial
            score = trial_score
    return soup, [m.tag for m in members]


@dataclass(frozen=True)
class SoupConfigRanges:
    """Inclusive value ranges for randomly sampled soup training configs.

    Learning rate and weight decay span orders of magnitude and are sampled
    log-uniformly; the augmentation strengths are sampled and recorded only,
    never applied here.
    """

    epochs: tuple[int, int] = (4, 16)
    learning_rate: tuple[float, float] = (1e-6, 1e-4)
    weight_decay: tuple[float, float] = (1e-4, 10 ** -0.2)
    label_smoothing: tuple[float, float] = (0.0, 0.25)
    mixup: tuple[float, float] = (0.0, 0.9)
    randaug_m: tuple[int, int] = (0, 20)
    randaug_n: tuple[int, int] = (0, 2)

    def __post_init__(self) -> None:
        for name in (
            "epochs",
            "learning_rate",
            "weight_decay",
            "label_smoothing",
            "mixup",
            "randaug_m",
            "randaug_n",
        ):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValueError(f"invalid range for {name}: ({lo!r}, {hi!r})")
        for name in ("learning_rate", "weight_decay"):
            lo, _ = getattr(self, name)
            if lo <= 0.0:
                raise ValueError(f"{name} range must be positive (log-uniform)")


@dataclass(frozen=True)
class SoupConfig:
    """One sampled training configuration for a soup candidate."""

    epochs: int
    learning_rate: float
    weight_decay: float
    label_smoothing: float
    mixup: float
    randaug_m: int
    randaug_n: int
    seed: int

    def to_record(self) -> str:
        """Single-line JSON record, stable key order."""
        return json.dumps(
            {
                "epochs": self.epochs,
                "learning_rate": self.learning_rate,
                "weight_decay": self.weight_decay,
                "label_smoothing": self.label_smoothing,
                "mixup": self.mixup,
                "randaug_m": self.randaug_m,
                "randaug_n": self.randaug_n,
                "seed": self.seed,
            },
            sort_keys=True,
        )


def sample_soup_config(
    ranges: SoupConfigRanges | None = None, seed: int = 0
) -> SoupConfig:
    """Draw one training configuration, deterministically per seed.

    Integer fields are uniform over their inclusive range; learning rate
    and weight decay are log-uniform; the remaining real fields uniform.
    """
    ranges = ranges or SoupConfigRanges()
    rng = np.random.default_rng(seed)
    epochs = int(rng.integers(ranges.epochs[0], ranges.epochs[1] + 1))
    lr = float(
        np.exp(
            rng.uniform(
                math.log(ranges.learning_rate[0]),
                math.log(ranges.learning_rate[1]),
            )
        )
    )
    wd = float(
        np.exp(
            rng.uniform(
                math.log(ranges.weight_decay[0]),
                math.log(ranges.weight_decay[1]),
            )
        )
    )
    smoothing = float(rng.uniform(*ranges.label_smoothing))
    mixup = float(rng.uniform(*ranges.mixup))
    randaug_m = int(rng.integers(ranges.randaug_m[0], ranges.randaug_m[1] + 1))
    randaug_n = int(rng.integers(ranges.randaug_n[0], ranges.randaug_n[1] + 1))
    return SoupConfig(
        epochs=epochs,
        learning_rate=lr,
        weight_decay=wd,
        label_smoothing=smoothing,
        mixup=mixup,
        randaug_m=randaug_m,
        randaug_n=randaug_n,
        seed=seed,
    )
