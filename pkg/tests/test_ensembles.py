"""Weight-ensembling tests: interpolation, soups, config sampling."""

import math

import numpy as np
import pytest

from shiftbench.ensembles import (
    ParamSet,
    ParamSetMismatchError,
    SoupCandidate,
    SoupConfigRanges,
    greedy_soup,
    interpolate,
    sample_soup_config,
    uniform_soup,
)


def random_paramset(rng, names=("layer0", "layer1"), size=7):
    return ParamSet({n: rng.normal(size=size) for n in names})


def simulate_greedy(candidates, eval_fn):
    """Step-by-step reimplementation of the greedy procedure.

    Uses plain-Python running sums instead of the library's vectorized
    mean, so it is an independent check of the membership decisions.
    """
    order = sorted(range(len(candidates)), key=lambda i: -candidates[i].held_out_id_acc)
    members = [order[0]]

    def mean_of(idxs):
        entries = {}
        for name in candidates[0].params.entries:
            total = np.zeros_like(candidates[0].params.entries[name])
            for i in idxs:
                total = total + candidates[i].params.entries[name]
            entries[name] = total / len(idxs)
        return ParamSet(entries)

    score = eval_fn(mean_of(members))
    for i in order[1:]:
        trial = mean_of(members + [i])
        s = eval_fn(trial)
        if s > score:
            members.append(i)
            score = s
    return [candidates[i].tag for i in members], score


class TestInterpolate:
    def test_endpoints_bit_exact(self):
        rng = np.random.default_rng(0)
        t0, t1 = random_paramset(rng), random_paramset(rng)
        # -0.0 payloads are the nasty case for endpoint identity
        t0.entries["layer0"][0] = -0.0
        out0 = interpolate(t0, t1, 0.0)
        out1 = interpolate(t0, t1, 1.0)
        for name in t0.entries:
            assert np.array_equal(out0.entries[name], t0.entries[name])
            assert np.array_equal(out1.entries[name], t1.entries[name])
        assert math.copysign(1.0, out0.entries["layer0"][0]) == -1.0

    def test_midpoint(self):
        t0 = ParamSet({"w": np.array([1.0])})
        t1 = ParamSet({"w": np.array([3.0])})
        assert interpolate(t0, t1, 0.5).entries["w"][0] == 2.0

    def test_linearity(self):
        rng = np.random.default_rng(1)
        t0, t1 = random_paramset(rng), random_paramset(rng)
        for alpha in (0.125, 0.3, 0.5, 0.75):
            mixed = interpolate(t0, t1, alpha)
            for name in t0.entries:
                expected = t0.entries[name] + alpha * (
                    t1.entries[name] - t0.entries[name]
                )
                np.testing.assert_allclose(
                    mixed.entries[name], expected, rtol=0.0, atol=1e-15
                )

    def test_self_interpolation_fixed_point(self):
        rng = np.random.default_rng(2)
        t = random_paramset(rng)
        for alpha in (0.0, 0.25, 0.7, 1.0):
            out = interpolate(t, t, alpha)
            for name in t.entries:
                np.testing.assert_allclose(
                    out.entries[name], t.entries[name], rtol=0.0, atol=1e-15
                )

    def test_alpha_domain(self):
        rng = np.random.default_rng(3)
        t0, t1 = random_paramset(rng), random_paramset(rng)
        with pytest.raises(ValueError, match="alpha"):
            interpolate(t0, t1, 1.5)

    def test_incompatibility_error_lists_names(self):
        t0 = ParamSet({"a": np.zeros(3), "b": np.zeros(2)})
        t1 = ParamSet({"a": np.zeros(3), "c": np.zeros(2)})
        with pytest.raises(ParamSetMismatchError, match="'b'"):
            interpolate(t0, t1, 0.5)
        t2 = ParamSet({"a": np.zeros(4), "b": np.zeros(2)})
        with pytest.raises(ParamSetMismatchError, match="length"):
            interpolate(t0, t2, 0.5)


class TestUniformSoup:
    def test_mean_of_identical(self):
        rng = np.random.default_rng(4)
        t = random_paramset(rng)
        soup = uniform_soup([t, t.copy(), t.copy()])
        for name in t.entries:
            np.testing.assert_allclose(
                soup.entries[name], t.entries[name], rtol=0.0, atol=1e-15
            )

    def test_two_point_mean(self):
        a = ParamSet({"w": np.array([0.0])})
        b = ParamSet({"w": np.array([2.0])})
        assert uniform_soup([a, b]).entries["w"][0] == 1.0

    def test_matches_summation_oracle(self):
        rng = np.random.default_rng(5)
        sets = [random_paramset(rng) for _ in range(5)]
        soup = uniform_soup(sets)
        for name in sets[0].entries:
            total = np.zeros_like(sets[0].entries[name])
            for ps in sets:
                total += ps.entries[name]
            np.testing.assert_allclose(
                soup.entries[name], total / 5, rtol=0.0, atol=1e-12
            )

    def test_permutation_invariant(self):
        rng = np.random.default_rng(6)
        sets = [random_paramset(rng) for _ in range(6)]
        base = uniform_soup(sets)
        perm = uniform_soup([sets[i] for i in rng.permutation(6)])
        for name in base.entries:
            np.testing.assert_allclose(
                base.entries[name], perm.entries[name], rtol=0.0, atol=1e-12
            )

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            uniform_soup([])


class TestGreedySoup:
    def test_single_candidate(self):
        cand = SoupCandidate(ParamSet({"w": np.array([5.0])}), 0.7, "only")
        soup, tags = greedy_soup([cand], lambda ps: 0.7)
        assert tags == ["only"]
        assert soup.entries["w"][0] == 5.0

    def test_hand_simulated_example(self):
        # A(0.90), B(0.85), C(0.80); synthetic eval keyed off the soup mean:
        # {A} -> 0.90, {A,B} -> 0.92, {A,B,C} -> 0.91, so B joins and C does not
        A = SoupCandidate(ParamSet({"w": np.array([1.0])}), 0.90, "A")
        B = SoupCandidate(ParamSet({"w": np.array([2.0])}), 0.85, "B")
        C = SoupCandidate(ParamSet({"w": np.array([4.0])}), 0.80, "C")

        def eval_fn(ps):
            value = ps.entries["w"][0]
            table = {1.0: 0.90, 1.5: 0.92, 7.0 / 3.0: 0.91}
            for key, score in table.items():
                if abs(value - key) < 1e-12:
                    return score
            raise AssertionError(f"unexpected soup mean {value}")

        soup, tags = greedy_soup([A, B, C], eval_fn)
        assert tags == ["A", "B"]
        assert soup.entries["w"][0] == pytest.approx(1.5, abs=1e-15)

    def test_ties_keep_input_order(self):
        a = SoupCandidate(ParamSet({"w": np.array([1.0])}), 0.5, "first")
        b = SoupCandidate(ParamSet({"w": np.array([2.0])}), 0.5, "second")
        _, tags = greedy_soup([a, b], lambda ps: 0.0)
        assert tags[0] == "first"

    def test_equal_score_additions_rejected(self):
        a = SoupCandidate(ParamSet({"w": np.array([1.0])}), 0.9, "a")
        b = SoupCandidate(ParamSet({"w": np.array([1.0])}), 0.8, "b")
        _, tags = greedy_soup([a, b], lambda ps: 0.5)  # constant eval
        assert tags == ["a"]

    def test_matches_independent_simulator(self):
        rng = np.random.default_rng(7)
        for trial in range(50):
            k = int(rng.integers(2, 9))
            candidates = [
                SoupCandidate(
                    random_paramset(rng, size=5),
                    float(rng.uniform(0, 1)),
                    f"cand{idx}",
                )
                for idx in range(k)
            ]
            probe = rng.normal(size=5)

            def eval_fn(ps):
                flat = np.concatenate(list(ps.entries.values()))
                return float(
                    1.0 / (1.0 + math.exp(-float(flat[:5] @ probe)))
                )

            soup, tags = greedy_soup(candidates, eval_fn)
            sim_tags, sim_score = simulate_greedy(candidates, eval_fn)
            assert tags == sim_tags
            # never below the best single candidate under eval_fn
            best = max(candidates, key=lambda c: c.held_out_id_acc)
            assert eval_fn(soup) >= eval_fn(best.params)
            assert eval_fn(soup) == pytest.approx(sim_score, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            greedy_soup([], lambda ps: 0.0)

    def test_held_out_accuracy_validated(self):
        with pytest.raises(ValueError, match="held_out_id_acc"):
            SoupCandidate(ParamSet({"w": np.array([1.0])}), 1.5, "bad")


class TestSampleSoupConfig:
    def test_range_containment(self):
        ranges = SoupConfigRanges()
        for seed in range(10_000):
            cfg = sample_soup_config(ranges, seed)
            assert 4 <= cfg.epochs <= 16
            assert 1e-6 <= cfg.learning_rate <= 1e-4
            assert 1e-4 <= cfg.weight_decay <= 10 ** -0.2
            assert 0.0 <= cfg.label_smoothing <= 0.25
            assert 0.0 <= cfg.mixup <= 0.9
            assert 0 <= cfg.randaug_m <= 20
            assert 0 <= cfg.randaug_n <= 2

    def test_same_seed_is_deterministic(self):
        assert sample_soup_config(seed=123) == sample_soup_config(seed=123)

    def test_log_uniform_learning_rate_median(self):
        rates = [sample_soup_config(seed=s).learning_rate for s in range(10_000)]
        median = float(np.median(rates))
        # geometric midpoint of [1e-6, 1e-4] is 1e-5
        assert 1e-5 / 1.2 <= median <= 1e-5 * 1.2

    def test_record_is_stable_json(self):
        rec = sample_soup_config(seed=1).to_record()
        assert rec == sample_soup_config(seed=1).to_record()
        assert rec.startswith("{") and '"epochs"' in rec
