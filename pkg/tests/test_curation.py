"""Subset-curation tests: counting rules, determinism, verification."""

import numpy as np
import pytest

from shiftbench.curation import (
    FIXED_PER_CLASS,
    K_PER_CLASS,
    RATIO,
    Manifest,
    SubsetSpec,
    curate,
    read_manifest,
    target_count,
    verify_subset,
    write_manifest,
)


def manifest_with_counts(counts):
    items = []
    for cls, n in enumerate(counts):
        items.extend((f"item_{cls}_{i}", cls) for i in range(n))
    return Manifest(items=tuple(items), num_classes=len(counts))


def random_manifest(rng, max_classes=8, max_per_class=60):
    counts = rng.integers(1, max_per_class, size=int(rng.integers(2, max_classes)))
    return manifest_with_counts([int(c) for c in counts])


def subset_class_counts(subset):
    counts = [0] * subset.num_classes
    for _, cls in subset.items:
        counts[cls] += 1
    return counts


class TestTargetCount:
    def test_ratio_rounding_example(self):
        spec = SubsetSpec(scheme=RATIO, ratio=0.10, min_per_class=1)
        assert [target_count(spec, n) for n in (100, 3, 50)] == [10, 1, 5]

    def test_k_capped_by_class_size(self):
        spec = SubsetSpec(scheme=K_PER_CLASS, k=5)
        assert target_count(spec, 3) == 3
        assert target_count(spec, 10) == 5

    def test_fixed_capped_by_class_size(self):
        spec = SubsetSpec(scheme=FIXED_PER_CLASS, per_class_count=1500)
        assert target_count(spec, 900) == 900
        assert target_count(spec, 4000) == 1500


class TestCurate:
    def test_ratio_example_totals(self):
        manifest = manifest_with_counts([100, 3, 50])
        spec = SubsetSpec(scheme=RATIO, ratio=0.10, min_per_class=1, seed=0)
        subset = curate(manifest, spec)
        assert subset_class_counts(subset) == [10, 1, 5]
        assert len(subset) == 16

    def test_two_class_fixed_counts(self):
        manifest = manifest_with_counts([2000, 1800])
        spec = SubsetSpec(scheme=FIXED_PER_CLASS, per_class_count=1500, seed=1)
        subset = curate(manifest, spec)
        assert subset_class_counts(subset) == [1500, 1500]
        assert len(subset) == 3000

    def test_one_per_class_on_thousand_classes(self):
        manifest = manifest_with_counts([3] * 1000)
        spec = SubsetSpec(scheme=K_PER_CLASS, k=1, seed=2)
        subset = curate(manifest, spec)
        assert len(subset) == 1000
        assert subset_class_counts(subset) == [1] * 1000

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(0)
        manifest = random_manifest(rng)
        spec = SubsetSpec(scheme=RATIO, ratio=0.3, seed=17)
        assert curate(manifest, spec) == curate(manifest, spec)

    def test_seeds_change_membership_not_counts(self):
        manifest = manifest_with_counts([40, 25, 33])
        spec_a = SubsetSpec(scheme=RATIO, ratio=0.25, seed=1)
        spec_b = SubsetSpec(scheme=RATIO, ratio=0.25, seed=2)
        sub_a, sub_b = curate(manifest, spec_a), curate(manifest, spec_b)
        assert subset_class_counts(sub_a) == subset_class_counts(sub_b)
        assert sub_a.items != sub_b.items

    def test_counts_match_bruteforce_recount_on_random_manifests(self):
        rng = np.random.default_rng(42)
        for trial in range(100):
            manifest = random_manifest(rng)
            ratio = float(rng.uniform(0.05, 1.0))
            spec = SubsetSpec(scheme=RATIO, ratio=ratio, seed=trial)
            subset = curate(manifest, spec)
            pool = [0] * manifest.num_classes
            for _, cls in manifest.items:
                pool[cls] += 1
            got = subset_class_counts(subset)
            for cls, n in enumerate(pool):
                expected = min(n, max(1, round(ratio * n)))
                assert got[cls] == expected
                assert got[cls] >= 1  # min-per-class guarantee

    def test_subset_is_subset_preserving_order(self):
        manifest = manifest_with_counts([20, 20])
        subset = curate(manifest, SubsetSpec(scheme=K_PER_CLASS, k=7, seed=3))
        positions = {item: i for i, item in enumerate(manifest.items)}
        assert all(item in positions for item in subset.items)
        idx = [positions[item] for item in subset.items]
        assert idx == sorted(idx)

    def test_other_classes_unperturbed_by_new_class(self):
        base = manifest_with_counts([30, 30])
        extended = Manifest(
            items=base.items + tuple((f"new_{i}", 2) for i in range(30)),
            num_classes=3,
        )
        spec = SubsetSpec(scheme=K_PER_CLASS, k=5, seed=11)
        sub_base = curate(base, spec)
        sub_ext = curate(extended, spec)
        kept = [item for item in sub_ext.items if item[1] < 2]
        assert kept == list(sub_base.items)

    def test_empty_class_rejected(self):
        manifest = Manifest(items=(("a", 0),), num_classes=2)
        with pytest.raises(ValueError, match="no items"):
            curate(manifest, SubsetSpec(scheme=K_PER_CLASS, k=1))

    def test_ratio_domain(self):
        with pytest.raises(ValueError, match="ratio"):
            SubsetSpec(scheme=RATIO, ratio=1.5)
        with pytest.raises(ValueError, match="ratio"):
            SubsetSpec(scheme=RATIO, ratio=0.0)


class TestVerifySubset:
    def test_curate_output_passes_its_spec(self):
        rng = np.random.default_rng(9)
        for trial in range(20):
            manifest = random_manifest(rng)
            spec = SubsetSpec(
                scheme=RATIO, ratio=float(rng.uniform(0.1, 1.0)), seed=trial
            )
            subset = curate(manifest, spec)
            report = verify_subset(manifest, subset.items, spec)
            assert report.passed, report.diagnostics

    def test_duplicate_diagnostic(self):
        manifest = manifest_with_counts([2, 2])
        spec = SubsetSpec(scheme=K_PER_CLASS, k=1, seed=0)
        subset = curate(manifest, spec)
        doubled = list(subset.items) + [subset.items[0]]
        report = verify_subset(manifest, doubled, spec)
        assert not report.passed
        assert any(d.code == "duplicate" for d in report.diagnostics)

    def test_class_empty_diagnostic(self):
        manifest = manifest_with_counts([2, 2])
        spec = SubsetSpec(scheme=K_PER_CLASS, k=1, min_per_class=1, seed=0)
        subset = curate(manifest, spec)
        only_class0 = [item for item in subset.items if item[1] == 0]
        report = verify_subset(manifest, only_class0, spec)
        assert not report.passed
        assert any(d.code == "class-empty" for d in report.diagnostics)

    def test_foreign_item_diagnostic(self):
        manifest = manifest_with_counts([2, 2])
        spec = SubsetSpec(scheme=K_PER_CLASS, k=1, seed=0)
        subset = list(curate(manifest, spec).items)
        subset[0] = ("stranger", 0)
        report = verify_subset(manifest, subset, spec)
        assert any(d.code == "not-in-manifest" for d in report.diagnostics)

    def test_count_mismatch_diagnostic(self):
        manifest = manifest_with_counts([4, 4])
        spec = SubsetSpec(scheme=K_PER_CLASS, k=2, seed=0)
        subset = curate(manifest, spec)
        short = [item for item in subset.items][:-1]
        report = verify_subset(manifest, short, spec)
        assert any(d.code == "count-mismatch" for d in report.diagnostics)


class TestManifestIO:
    def test_roundtrip(self, tmp_path):
        manifest = manifest_with_counts([3, 2, 4])
        path = tmp_path / "manifest.tsv"
        write_manifest(manifest, path)
        back = read_manifest(path)
        assert back == manifest

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("id_only_line\n")
        with pytest.raises(ValueError, match="item_id<TAB>class_index"):
            read_manifest(path)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError, match="duplicate item id"):
            Manifest(items=(("a", 0), ("a", 1)), num_classes=2)
