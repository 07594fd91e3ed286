import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prunekit import data_io as io
from prunekit.errors import (
    BadFlagsError,
    BadMagicError,
    LengthMismatchError,
    NonFiniteError,
    SchemaError,
    TruncatedFileError,
    UnsupportedVersionError,
)


def small_fs(labels=True):
    feats = np.arange(6, dtype=np.float32).reshape(2, 3)
    return io.FeatureSet(feats, np.array([0, 1], dtype=np.uint32) if labels else None)


class TestFeatureFile:
    def test_byte_layout(self, tmp_path):
        # 24-byte header + 2*3*4 feature bytes + 2*4 label bytes
        path = tmp_path / "a.dpf"
        io.write_featureset(small_fs(), path)
        blob = path.read_bytes()
        assert len(blob) == 24 + 24 + 8
        magic, version, flags, n, dim, reserved = struct.unpack_from("<4sHHQII", blob)
        assert (magic, version, flags, n, dim, reserved) == (b"DPTL", 1, 1, 2, 3, 0)
        assert np.frombuffer(blob, "<f4", 6, 24).tolist() == [0, 1, 2, 3, 4, 5]
        assert np.frombuffer(blob, "<u4", 2, 48).tolist() == [0, 1]

    def test_round_trip(self, tmp_path):
        path = tmp_path / "a.dpf"
        for labels in (True, False):
            fs = small_fs(labels)
            io.write_featureset(fs, path)
            assert io.read_featureset(path) == fs

    def test_empty_set_round_trips(self, tmp_path):
        fs = io.FeatureSet(np.zeros((0, 4), dtype=np.float32))
        path = tmp_path / "e.dpf"
        io.write_featureset(fs, path)
        back = io.read_featureset(path)
        assert back.n_samples == 0 and back.dim == 4 and back.labels is None

    def test_write_is_deterministic(self, tmp_path):
        p1, p2 = tmp_path / "1.dpf", tmp_path / "2.dpf"
        io.write_featureset(small_fs(), p1)
        io.write_featureset(small_fs(), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "a.dpf"
        io.write_featureset(small_fs(), path)
        blob = path.read_bytes()
        path.write_bytes(b"DPTX" + blob[4:])
        with pytest.raises(BadMagicError):
            io.read_featureset(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "a.dpf"
        io.write_featureset(small_fs(), path)
        blob = bytearray(path.read_bytes())
        blob[4:6] = struct.pack("<H", 9)
        path.write_bytes(bytes(blob))
        with pytest.raises(UnsupportedVersionError):
            io.read_featureset(path)

    def test_unknown_flags(self, tmp_path):
        path = tmp_path / "a.dpf"
        io.write_featureset(small_fs(), path)
        blob = bytearray(path.read_bytes())
        blob[6:8] = struct.pack("<H", 3)
        path.write_bytes(bytes(blob))
        with pytest.raises(BadFlagsError):
            io.read_featureset(path)

    def test_truncation_names_byte_counts(self, tmp_path):
        path = tmp_path / "a.dpf"
        io.write_featureset(small_fs(), path)
        path.write_bytes(path.read_bytes()[:40])
        with pytest.raises(TruncatedFileError) as err:
            io.read_featureset(path)
        assert "56" in str(err.value) and "40" in str(err.value)

    def test_trailing_bytes_are_length_mismatch(self, tmp_path):
        path = tmp_path / "a.dpf"
        io.write_featureset(small_fs(), path)
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(LengthMismatchError):
            io.read_featureset(path)

    def test_non_finite_payload_rejected(self, tmp_path):
        path = tmp_path / "a.dpf"
        io.write_featureset(small_fs(), path)
        blob = bytearray(path.read_bytes())
        blob[24:28] = struct.pack("<f", float("nan"))
        path.write_bytes(bytes(blob))
        with pytest.raises(NonFiniteError):
            io.read_featureset(path)

    def test_non_finite_rejected_before_write(self):
        with pytest.raises(NonFiniteError):
            io.FeatureSet(np.array([[np.inf, 0.0]], dtype=np.float32))

    @settings(max_examples=40, deadline=None)
    @given(
        n=st.integers(0, 12),
        dim=st.integers(1, 6),
        labels=st.booleans(),
        seed=st.integers(0, 2**31),
    )
    def test_round_trip_property(self, tmp_path_factory, n, dim, labels, seed):
        rng = np.random.default_rng(seed)
        fs = io.FeatureSet(
            rng.standard_normal((n, dim)).astype(np.float32),
            rng.integers(0, 5, n).astype(np.uint32) if labels else None,
        )
        path = tmp_path_factory.mktemp("rt") / "x.dpf"
        io.write_featureset(fs, path)
        assert io.read_featureset(path) == fs


class TestManifest:
    def test_consistent_counts_accepted(self):
        fs = io.FeatureSet(np.zeros((15, 2), np.float32), np.repeat([0, 1, 2], 5).astype(np.uint32))
        io.validate_against_manifest(fs, io.ClassManifest(3, [5, 5, 5]))

    def test_count_sum_mismatch_rejected(self):
        fs = io.FeatureSet(np.zeros((15, 2), np.float32), np.repeat([0, 1, 2], 5).astype(np.uint32))
        with pytest.raises(SchemaError):
            io.validate_against_manifest(fs, io.ClassManifest(3, [5, 5, 4]))

    def test_label_out_of_range_rejected(self):
        fs = io.FeatureSet(np.zeros((2, 2), np.float32), np.array([0, 3], np.uint32))
        with pytest.raises(SchemaError):
            io.validate_against_manifest(fs, io.ClassManifest(2, [1, 1]))

    def test_round_trip(self, tmp_path):
        m = io.ClassManifest(3, [4, 0, 2], ["a", "b", "c"])
        io.write_manifest(m, tmp_path / "m.json")
        assert io.read_manifest(tmp_path / "m.json") == m

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text('{"n_classes": 1, "class_names": null, "per_class_counts": [1], "x": 1}')
        with pytest.raises(SchemaError):
            io.read_manifest(path)


class TestScoresPlanReport:
    def test_scores_round_trip_and_determinism(self, tmp_path):
        sv = io.ScoreVector("lm", "class", np.array([3.0, 1.5, 0.25]), seed=None)
        p1, p2 = tmp_path / "1.json", tmp_path / "2.json"
        io.write_scores(sv, p1)
        io.write_scores(sv, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert io.read_scores(p1) == sv

    def test_scores_reject_nan(self):
        with pytest.raises(NonFiniteError):
            io.ScoreVector("lm", "class", np.array([np.nan]))

    def test_plan_round_trip(self, tmp_path):
        plan = io.PruningPlan("sample", 0.25, "reversed", [0, 1, 3], [2])
        io.write_plan(plan, tmp_path / "p.json")
        assert io.read_plan(tmp_path / "p.json") == plan

    def test_plan_invariants_enforced(self):
        with pytest.raises(SchemaError):
            io.PruningPlan("class", 0.5, "ordered", [0, 1], [1, 2])  # overlap
        with pytest.raises(SchemaError):
            io.PruningPlan("class", 0.5, "ordered", [0, 1, 2], [3])  # wrong kept size
        with pytest.raises(SchemaError):
            io.PruningPlan("class", 1.0, "ordered", [0], [1])  # ratio out of range

    def test_plan_label_remap(self):
        plan = io.PruningPlan("class", 0.5, "ordered", [1, 3], [0, 2])
        assert plan.label_remap == {1: 0, 3: 1}

    def test_report_round_trip(self, tmp_path):
        rep = io.TrajectoryReport(
            [0.0, 0.5], [0.9, 0.95], 0.9, [0.0, 0.5], 0.5,
            {"method": "lm", "mode": "lp", "seeds": [1], "epsilon": 0.0, "cells": []},
        )
        io.write_report(rep, tmp_path / "r.json")
        assert io.read_report(tmp_path / "r.json") == rep

    def test_report_winning_invariant_enforced(self):
        with pytest.raises(SchemaError):
            io.TrajectoryReport([0.0, 0.5], [0.9, 0.8], 0.9, [0.0, 0.5], 0.5, {})

    def test_winning_example(self):
        # accuracy {0: 90.0, 0.2: 90.5, 0.4: 89.0}, baseline 90.0
        winning, best = io.compute_winning([0.0, 0.2, 0.4], [90.0, 90.5, 89.0], 90.0)
        assert winning == [0.0, 0.2] and best == 0.2

    def test_json_files_end_with_newline(self, tmp_path):
        io.write_manifest(io.ClassManifest(1, [3]), tmp_path / "m.json")
        raw = (tmp_path / "m.json").read_bytes()
        assert raw.endswith(b"\n")
        json.loads(raw)
