"""Accuracy-record ingestion and dataset profiles.

Records arrive as comma-separated text with the header
``model,regime,role,split,shift,accuracy_pct``.  Accuracies are percentages
at this boundary and fractions everywhere downstream.  A dataset profile
pins the evaluation metric and the set of OOD shifts to average over, so
the harness applies the right metric automatically.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .metrics import AccuracyPoint

__all__ = [
    "REGIMES",
    "ROLES",
    "SPLITS",
    "LOW_SHOT_REGIMES",
    "AccuracyRecord",
    "DatasetProfile",
    "builtin_profile",
    "load_profile",
    "load_accuracy_records",
    "write_accuracy_records",
    "average_ood",
    "select",
    "id_fraction",
    "model_point",
    "standard_points",
]

REGIMES = ("extreme", "low", "moderate", "high", "full")
LOW_SHOT_REGIMES = ("extreme", "low", "moderate", "high")
ROLES = ("standard", "reference", "intervention")
SPLITS = ("id", "ood")

CSV_HEADER = ["model", "regime", "role", "split", "shift", "accuracy_pct"]


@dataclass(frozen=True)
class AccuracyRecord:
    """One accuracy measurement for (model, regime, split, shift)."""

    model: str
    regime: str
    role: str
    split: str
    shift: str
    accuracy_pct: float

    def __post_init__(self) -> None:
        if self.regime not in REGIMES:
            raise ValueError(
                f"unknown regime {self.regime!r}; expected one of {REGIMES}"
            )
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}; expected one of {ROLES}")
        if self.split not in SPLITS:
            raise ValueError(
                f"unknown split {self.split!r}; expected one of {SPLITS}"
            )
        if not math.isfinite(self.accuracy_pct) or not (
            0.0 <= self.accuracy_pct <= 100.0
        ):
            raise ValueError(
                f"accuracy_pct must lie in [0, 100], got {self.accuracy_pct!r}"
            )

    @property
    def fraction(self) -> float:
        return self.accuracy_pct / 100.0

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.model, self.regime, self.split, self.shift)


@dataclass(frozen=True)
class DatasetProfile:
    """Evaluation conventions of one dataset.

    ``metric_mode`` picks top-1 or per-class-average accuracy for classifier
    evaluation and soup decisions; ``ood_shifts`` is the non-empty list of
    shifts whose accuracies are averaged into the single OOD number.
    """

    name: str
    metric_mode: str
    ood_shifts: tuple[str, ...]
    regimes: tuple[str, ...] = REGIMES

    def __post_init__(self) -> None:
        if self.metric_mode not in ("top1", "per-class-average"):
            raise ValueError(f"unknown metric mode {self.metric_mode!r}")
        if not self.ood_shifts:
            raise ValueError("profile needs at least one OOD shift")
        for regime in self.regimes:
            if regime not in REGIMES:
                raise ValueError(f"unknown regime {regime!r} in profile")


_BUILTIN = {
    "imagenet": DatasetProfile(
        name="imagenet",
        metric_mode="top1",
        ood_shifts=(
            "imagenet-r",
            "imagenet-s",
            "imagenet-a",
            "imagenet-v2",
            "objectnet",
        ),
    ),
    "iwildcam": DatasetProfile(
        name="iwildcam", metric_mode="per-class-average", ood_shifts=("val-ood",)
    ),
    "camelyon": DatasetProfile(
        name="camelyon", metric_mode="per-class-average", ood_shifts=("val-ood",)
    ),
}


def builtin_profile(name: str) -> DatasetProfile:
    try:
        return _BUILTIN[name]
    except KeyError:
        raise ValueError(
            f"unknown dataset {name!r}; built-ins: {sorted(_BUILTIN)}"
        ) from None


def load_profile(path: str | Path) -> DatasetProfile:
    """Load a profile from JSON: {name, metric_mode, ood_shifts[, regimes]}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return DatasetProfile(
        name=data["name"],
        metric_mode=data["metric_mode"],
        ood_shifts=tuple(data["ood_shifts"]),
        regimes=tuple(data.get("regimes", REGIMES)),
    )


def load_accuracy_records(path: str | Path) -> list[AccuracyRecord]:
    """Parse an accuracy-record CSV, rejecting duplicates and bad values."""
    records: list[AccuracyRecord] = []
    seen: dict[tuple, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise ValueError(
                f"{path}: header must be {','.join(CSV_HEADER)!r}, "
                f"got {','.join(header)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            model, regime, role, split, shift = (f.strip() for f in row[:5])
            try:
                pct = float(row[5])
            except ValueError as exc:
                raise ValueError(
                    f"{path}:{lineno}: accuracy_pct {row[5]!r} is not a number"
                ) from exc
            try:
                rec = AccuracyRecord(model, regime, role, split, shift, pct)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            if rec.key in seen:
                raise ValueError(
                    f"{path}:{lineno}: duplicate (model, regime, split, shift) "
                    f"key {rec.key}, first seen on line {seen[rec.key]}"
                )
            seen[rec.key] = lineno
            records.append(rec)
    return records


def write_accuracy_records(
    path: str | Path, records: Sequence[AccuracyRecord]
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow(
                [
                    rec.model,
                    rec.regime,
                    rec.role,
                    rec.split,
                    rec.shift,
                    f"{rec.accuracy_pct:.4f}",
                ]
            )


def select(
    records: Iterable[AccuracyRecord],
    *,
    model: str | None = None,
    regime: str | None = None,
    role: str | None = None,
    split: str | None = None,
) -> list[AccuracyRecord]:
    """Filter records on any combination of fields."""
    out = []
    for rec in records:
        if model is not None and rec.model != model:
            continue
        if regime is not None and rec.regime != regime:
            continue
        if role is not None and rec.role != role:
            continue
        if split is not None and rec.split != split:
            continue
        out.append(rec)
    return out


def average_ood(
    records: Iterable[AccuracyRecord], profile: DatasetProfile
) -> float:
    """Unweighted mean OOD fraction over the profile's shifts.

    ``records`` should already be narrowed to one model and regime; every
    profile shift must appear exactly once among their OOD rows.
    """
    by_shift: dict[str, float] = {}
    for rec in records:
        if rec.split != "ood":
            continue
        if rec.shift in by_shift:
            raise ValueError(f"shift {rec.shift!r} appears more than once")
        by_shift[rec.shift] = rec.fraction
    missing = [s for s in profile.ood_shifts if s not in by_shift]
    if missing:
        raise ValueError(f"missing OOD shifts: {missing}")
    return sum(by_shift[s] for s in profile.ood_shifts) / len(profile.ood_shifts)


def id_fraction(
    records: Iterable[AccuracyRecord], model: str, regime: str
) -> float:
    """The unique in-domain accuracy fraction for (model, regime)."""
    rows = select(records, model=model, regime=regime, split="id")
    if not rows:
        raise ValueError(f"no id record for model {model!r}, regime {regime!r}")
    if len(rows) > 1:
        raise ValueError(
            f"expected one id record for model {model!r}, regime {regime!r}, "
            f"got {len(rows)}"
        )
    return rows[0].fraction


def model_point(
    records: Iterable[AccuracyRecord],
    model: str,
    regime: str,
    profile: DatasetProfile,
) -> AccuracyPoint:
    """The (ID, averaged OOD) accuracy point for one model and regime."""
    records = list(records)
    rows = select(records, model=model, regime=regime)
    return AccuracyPoint(
        acc_id=id_fraction(records, model, regime),
        acc_ood=average_ood(rows, profile),
    )


def standard_points(
    records: Iterable[AccuracyRecord], profile: DatasetProfile
) -> list[AccuracyPoint]:
    """Accuracy points of every standard-model (model, regime) pair.

    This is the pooled cloud the baseline curve is fitted on: one point per
    standard model per regime, regimes pooled into a single fit.
    """
    records = list(records)
    pairs: list[tuple[str, str]] = []
    for rec in select(records, role="standard"):
        pair = (rec.model, rec.regime)
        if pair not in pairs:
            pairs.append(pair)
    return [
        model_point(records, model, regime, profile) for model, regime in pairs
    ]
