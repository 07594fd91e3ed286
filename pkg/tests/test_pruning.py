import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prunekit.data_io import ClassManifest, FeatureSet, ScoreVector
from prunekit.errors import DataError
from prunekit.pruning import apply_plan, compact_classes, keep_samples, make_plan


def sv(values, granularity="class", method="lm"):
    return ScoreVector(method, granularity, np.asarray(values, np.float64))


def sort_and_slice(scores, ratio, order):
    """Independent oracle: full sort with the documented tie rule, then slice."""
    import math

    n = len(scores)
    n_keep = max(1, math.ceil((1.0 - ratio) * n))
    if order == "ordered":
        ranked = sorted(range(n), key=lambda i: (-scores[i], i))
    else:
        ranked = sorted(range(n), key=lambda i: (scores[i], i))
    return sorted(ranked[:n_keep]), sorted(ranked[n_keep:])


class TestMakePlan:
    def test_ordered_example(self):
        plan = make_plan(sv([5, 3, 9, 1]), 0.5, "ordered")
        assert plan.kept == [0, 2] and plan.dropped == [1, 3]

    def test_reversed_example(self):
        plan = make_plan(sv([5, 3, 9, 1]), 0.5, "reversed")
        assert plan.kept == [1, 3]

    def test_ratio_zero_keeps_all(self):
        plan = make_plan(sv([5, 3, 9, 1]), 0.0, "ordered")
        assert plan.kept == [0, 1, 2, 3] and plan.dropped == []

    def test_ties_prefer_lower_index(self):
        plan = make_plan(sv([1, 1, 1, 1]), 0.5, "ordered")
        assert plan.kept == [0, 1]
        plan = make_plan(sv([1, 1, 1, 1]), 0.5, "reversed")
        assert plan.kept == [0, 1]

    def test_floor_of_one(self):
        plan = make_plan(sv([2, 1, 3]), 0.99, "ordered")
        assert plan.kept == [2]

    def test_granularity_copied(self):
        assert make_plan(sv([1, 2], "sample"), 0.0, "ordered").granularity == "sample"

    def test_errors(self):
        with pytest.raises(DataError):
            make_plan(sv([1, 2]), 1.0, "ordered")
        with pytest.raises(DataError):
            make_plan(sv([1, 2]), -0.1, "ordered")
        with pytest.raises(DataError):
            make_plan(sv([1, 2]), 0.5, "sideways")

    @settings(max_examples=60, deadline=None)
    @given(
        scores=st.lists(st.integers(0, 5), min_size=1, max_size=30),
        ratio=st.floats(0.0, 0.99),
        order=st.sampled_from(["ordered", "reversed"]),
    )
    def test_matches_oracle(self, scores, ratio, order):
        plan = make_plan(sv(scores), ratio, order)
        kept, dropped = sort_and_slice(scores, ratio, order)
        assert plan.kept == kept and plan.dropped == dropped

    @settings(max_examples=40, deadline=None)
    @given(scores=st.lists(st.integers(0, 4), min_size=2, max_size=25))
    def test_monotone_nesting(self, scores):
        ladder = [0.0, 0.2, 0.4, 0.6, 0.8]
        keeps = [set(make_plan(sv(scores), r, "ordered").kept) for r in ladder]
        for bigger, smaller in zip(keeps, keeps[1:]):
            assert smaller <= bigger

    @settings(max_examples=40, deadline=None)
    @given(
        scores=st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=20),
        ratio=st.floats(0.0, 0.99),
    )
    def test_partition_property(self, scores, ratio):
        plan = make_plan(sv(scores), ratio, "ordered")
        assert sorted(plan.kept + plan.dropped) == list(range(len(scores)))
        assert not set(plan.kept) & set(plan.dropped)


class TestApplyPlan:
    def fixture(self):
        feats = np.arange(12, dtype=np.float32).reshape(6, 2)
        labels = np.array([0, 0, 1, 1, 2, 2], np.uint32)
        return FeatureSet(feats, labels), ClassManifest(3, [2, 2, 2], ["a", "b", "c"])

    def test_ratio_zero_is_identity(self):
        fs, manifest = self.fixture()
        plan = make_plan(sv([3, 2, 1]), 0.0, "ordered")
        out_fs, out_m = apply_plan(fs, manifest, plan)
        assert out_fs == fs and out_m == manifest

    def test_drop_middle_class_remaps(self):
        fs, manifest = self.fixture()
        plan = make_plan(sv([3, 0, 2]), 1 / 3, "ordered")  # drops class 1
        assert plan.dropped == [1]
        out_fs, out_m = apply_plan(fs, manifest, plan)
        assert out_fs.n_samples == 4
        assert out_fs.labels.tolist() == [0, 0, 1, 1]  # 0 -> 0, 2 -> 1
        assert out_m.n_classes == 2 and out_m.per_class_counts == [2, 2]
        assert out_m.class_names == ["a", "c"]
        assert np.array_equal(out_fs.features, fs.features[[0, 1, 4, 5]])

    def test_sample_plan_preserves_order(self):
        fs = FeatureSet(np.arange(8, dtype=np.float32).reshape(4, 2),
                        np.array([0, 1, 0, 1], np.uint32))
        manifest = ClassManifest(2, [2, 2])
        plan = make_plan(sv([0, 5, 0, 6], "sample"), 0.5, "ordered")  # drops {0, 2}
        assert plan.dropped == [0, 2]
        out_fs, out_m = apply_plan(fs, manifest, plan)
        assert np.array_equal(out_fs.features, fs.features[[1, 3]])
        assert out_fs.labels.tolist() == [1, 1]  # labels unchanged, not remapped
        assert out_m.per_class_counts == [0, 2]

    def test_population_mismatch_rejected(self):
        fs, manifest = self.fixture()
        plan = make_plan(sv([1, 2, 3, 4]), 0.5, "ordered")
        with pytest.raises(DataError):
            apply_plan(fs, manifest, plan)
        plan = make_plan(sv([1, 2, 3], "sample"), 0.0, "ordered")
        with pytest.raises(DataError):
            apply_plan(fs, manifest, plan)

    def test_remap_round_trips(self):
        fs, manifest = self.fixture()
        plan = make_plan(sv([3, 0, 2]), 1 / 3, "ordered")
        remap = plan.label_remap
        inverse = {v: k for k, v in remap.items()}
        assert all(inverse[remap[c]] == c for c in plan.kept)

    def test_sample_count_matches_kept_classes(self):
        fs, manifest = self.fixture()
        for ratio in (0.0, 1 / 3, 0.6):
            plan = make_plan(sv([3, 1, 2]), ratio, "ordered")
            out_fs, out_m = apply_plan(fs, manifest, plan)
            assert out_fs.n_samples == sum(manifest.per_class_counts[c] for c in plan.kept)
            assert sum(out_m.per_class_counts) == out_fs.n_samples


class TestCompact:
    def test_drops_empty_classes(self):
        fs = FeatureSet(np.zeros((3, 2), np.float32), np.array([0, 2, 2], np.uint32))
        manifest = ClassManifest(4, [1, 0, 2, 0])
        out_fs, out_m, remap = compact_classes(fs, manifest)
        assert out_m.n_classes == 2 and out_m.per_class_counts == [1, 2]
        assert out_fs.labels.tolist() == [0, 1, 1]
        assert remap == {0: 0, 2: 1}

    def test_keep_samples_mask(self):
        fs = FeatureSet(np.arange(6, dtype=np.float32).reshape(3, 2),
                        np.array([0, 1, 0], np.uint32))
        out_fs, out_m = keep_samples(fs, ClassManifest(2, [2, 1]), [True, False, True])
        assert out_fs.n_samples == 2 and out_m.per_class_counts == [2, 0]
