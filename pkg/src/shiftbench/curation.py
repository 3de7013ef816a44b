"""Deterministic curation of class-balanced low-shot subsets.

A manifest lists (item id, class index) pairs.  Three curation schemes:

* ``k-per-class``: exactly min(k, n_c) items from every class,
* ``ratio``: max(min_per_class, round(ratio * n_c)) items per class, capped
  at n_c, so rare classes keep at least ``min_per_class`` items,
* ``fixed-per-class``: exactly min(count, n_c) items per class.

Within-class selection is a seeded shuffle keyed by (seed, class index), so
selections are reproducible and adding or editing one class never perturbs
another class's picks.  Manifests round-trip through a line-delimited
``item_id<TAB>class_index`` text format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "K_PER_CLASS",
    "RATIO",
    "FIXED_PER_CLASS",
    "Manifest",
    "SubsetSpec",
    "Diagnostic",
    "VerificationReport",
    "target_count",
    "curate",
    "verify_subset",
    "read_manifest",
    "write_manifest",
    "write_subset_sidecar",
]

K_PER_CLASS = "k-per-class"
RATIO = "ratio"
FIXED_PER_CLASS = "fixed-per-class"

_SCHEMES = (K_PER_CLASS, RATIO, FIXED_PER_CLASS)


@dataclass(frozen=True)
class Manifest:
    """Labeled item population: unique item ids with class indices < C."""

    items: tuple[tuple[str, int], ...]
    num_classes: int

    def __post_init__(self) -> None:
        items = tuple((str(i), int(c)) for i, c in self.items)
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")
        seen: set[str] = set()
        for item_id, cls in items:
            if item_id in seen:
                raise ValueError(f"duplicate item id {item_id!r}")
            seen.add(item_id)
            if not (0 <= cls < self.num_classes):
                raise ValueError(
                    f"class index {cls} of item {item_id!r} outside "
                    f"[0, {self.num_classes})"
                )
        object.__setattr__(self, "items", items)

    def __len__(self) -> int:
        return len(self.items)

    def class_counts(self) -> list[int]:
        counts = [0] * self.num_classes
        for _, cls in self.items:
            counts[cls] += 1
        return counts


@dataclass(frozen=True)
class SubsetSpec:
    """Which curation scheme to apply, its size parameter, and the seed."""

    scheme: str
    k: int | None = None
    ratio: float | None = None
    per_class_count: int | None = None
    min_per_class: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.scheme not in _SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.min_per_class < 0:
            raise ValueError(f"min_per_class must be >= 0, got {self.min_per_class}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.scheme == K_PER_CLASS:
            if self.k is None or self.k < 1:
                raise ValueError(f"{K_PER_CLASS} requires k >= 1, got {self.k!r}")
        elif self.scheme == RATIO:
            if self.ratio is None or not (0.0 < self.ratio <= 1.0):
                raise ValueError(
                    f"{RATIO} requires ratio in (0, 1], got {self.ratio!r}"
                )
        else:
            if self.per_class_count is None or self.per_class_count < 1:
                raise ValueError(
                    f"{FIXED_PER_CLASS} requires per_class_count >= 1, "
                    f"got {self.per_class_count!r}"
                )

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "k": self.k,
            "ratio": self.ratio,
            "per_class_count": self.per_class_count,
            "min_per_class": self.min_per_class,
            "seed": self.seed,
        }


def target_count(spec: SubsetSpec, class_size: int) -> int:
    """Items to select from a class of ``class_size`` under ``spec``.

    This single rule backs both curation and verification.  Ratio rounding
    is round-half-even (Python's ``round``).
    """
    if spec.scheme == K_PER_CLASS:
        return min(spec.k, class_size)
    if spec.scheme == FIXED_PER_CLASS:
        return min(spec.per_class_count, class_size)
    return min(class_size, max(spec.min_per_class, round(spec.ratio * class_size)))


def _requires_nonempty(spec: SubsetSpec) -> bool:
    if spec.scheme in (K_PER_CLASS, FIXED_PER_CLASS):
        return True
    return spec.min_per_class >= 1


def curate(manifest: Manifest, spec: SubsetSpec) -> Manifest:
    """Select a class-balanced subset of ``manifest`` under ``spec``.

    Selection within each class is a seeded shuffle keyed by
    (spec.seed, class index); the returned subset preserves the manifest's
    item order.  Classes that must contribute at least one item but are
    empty raise.
    """
    counts = manifest.class_counts()
    if _requires_nonempty(spec):
        empty = [c for c, n in enumerate(counts) if n == 0]
        if empty:
            raise ValueError(
                f"classes with no items cannot satisfy {spec.scheme}: {empty}"
            )

    by_class: list[list[int]] = [[] for _ in range(manifest.num_classes)]
    for pos, (_, cls) in enumerate(manifest.items):
        by_class[cls].append(pos)

    selected: set[int] = set()
    for cls in range(manifest.num_classes):
        positions = by_class[cls]
        want = target_count(spec, len(positions))
        if want == 0:
            continue
        rng = np.random.default_rng(
            np.random.SeedSequence((spec.seed, cls))
        )
        order = rng.permutation(len(positions))[:want]
        selected.update(positions[i] for i in order)

    return Manifest(
        items=tuple(
            manifest.items[pos]
            for pos in range(len(manifest.items))
            if pos in selected
        ),
        num_classes=manifest.num_classes,
    )


@dataclass(frozen=True)
class Diagnostic:
    """One verification failure: a short code plus human-readable detail."""

    code: str
    message: str
    class_index: int | None = None


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    diagnostics: tuple[Diagnostic, ...]


def verify_subset(
    manifest: Manifest, subset_items: Sequence[tuple[str, int]], spec: SubsetSpec
) -> VerificationReport:
    """Check a claimed subset against its manifest and spec.

    Validates: item ids unique; every item present in the manifest with the
    same class; per-class counts equal to :func:`target_count`; and the
    minimum-per-class guarantee.  Failures are collected as diagnostics,
    never raised.
    """
    diags: list[Diagnostic] = []
    by_id = dict(manifest.items)

    seen: set[str] = set()
    items: list[tuple[str, int]] = []
    for item_id, cls in subset_items:
        item_id = str(item_id)
        cls = int(cls)
        if item_id in seen:
            diags.append(
                Diagnostic("duplicate", f"item id {item_id!r} appears twice")
            )
            continue
        seen.add(item_id)
        if item_id not in by_id:
            diags.append(
                Diagnostic("not-in-manifest", f"item id {item_id!r} unknown")
            )
            continue
        if by_id[item_id] != cls:
            diags.append(
                Diagnostic(
                    "class-mismatch",
                    f"item {item_id!r} has class {by_id[item_id]} in the "
                    f"manifest but {cls} in the subset",
                )
            )
            continue
        items.append((item_id, cls))

    pool_counts = manifest.class_counts()
    sub_counts = [0] * manifest.num_classes
    for _, cls in items:
        sub_counts[cls] += 1

    for cls in range(manifest.num_classes):
        want = target_count(spec, pool_counts[cls])
        got = sub_counts[cls]
        if got == 0 and want > 0 and spec.min_per_class >= 1:
            diags.append(
                Diagnostic(
                    "class-empty",
                    f"class {cls} has no items but requires {want}",
                    class_index=cls,
                )
            )
        elif got != want:
            diags.append(
                Diagnostic(
                    "count-mismatch",
                    f"class {cls} has {got} items, expected {want}",
                    class_index=cls,
                )
            )

    return VerificationReport(passed=not diags, diagnostics=tuple(diags))


def read_manifest(path: str | Path, num_classes: int | None = None) -> Manifest:
    """Read a ``item_id<TAB>class_index`` manifest file.

    When ``num_classes`` is omitted it is inferred as max class index + 1.
    """
    pairs: list[tuple[str, int]] = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(
                f"{path}:{lineno}: expected 'item_id<TAB>class_index', "
                f"got {line!r}"
            )
        try:
            cls = int(parts[1])
        except ValueError as exc:
            raise ValueError(
                f"{path}:{lineno}: class index {parts[1]!r} is not an integer"
            ) from exc
        pairs.append((parts[0], cls))
    if num_classes is None:
        if not pairs:
            raise ValueError(f"{path}: empty manifest and no num_classes given")
        num_classes = max(cls for _, cls in pairs) + 1
    return Manifest(items=tuple(pairs), num_classes=num_classes)


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    lines = [f"{item_id}\t{cls}" for item_id, cls in manifest.items]
    Path(path).write_text(
        "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
    )


def write_subset_sidecar(path: str | Path, spec: SubsetSpec) -> None:
    """Record the curation spec (including the seed) next to a subset file."""
    Path(path).write_text(
        json.dumps({"spec": spec.to_dict()}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
