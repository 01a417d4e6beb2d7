import json
import struct

import numpy as np
import pytest

from weakaudit.data import (
    FORMAT_VERSION,
    MAGIC,
    ClassVocabulary,
    EmbeddingStore,
    ObjectTag,
    Record,
    Scene,
    augmentation_fraction,
    bind,
    load_embedding_store,
    load_manifest,
    merge,
    save_embedding_store,
    save_manifest,
)
from weakaudit.errors import (
    BadMagic,
    BadVersion,
    DimMismatch,
    DuplicateId,
    InvalidRecord,
    LengthMismatch,
    NonFiniteValue,
    TruncatedPayload,
    ZeroBase,
)

from conftest import make_bundle, make_records


def write_store_bytes(path, count, dim, payload, magic=MAGIC, version=FORMAT_VERSION):
    path.write_bytes(struct.pack("<4sIII", magic, version, count, dim) + payload)


class TestStoreFormat:
    def test_empty_store_loads(self, tmp_path):
        path = tmp_path / "empty.wsem"
        write_store_bytes(path, 0, 4, b"")
        store = load_embedding_store(path)
        assert store.count == 0
        assert store.dim == 4

    def test_identity_rows_decode(self, tmp_path):
        path = tmp_path / "id.wsem"
        payload = struct.pack("<4f", 1.0, 0.0, 0.0, 1.0)
        write_store_bytes(path, 2, 2, payload)
        store = load_embedding_store(path)
        assert store.rows.tolist() == [[1.0, 0.0], [0.0, 1.0]]

    def test_short_payload_rejected(self, tmp_path):
        path = tmp_path / "short.wsem"
        write_store_bytes(path, 2, 2, struct.pack("<3f", 1.0, 0.0, 0.0))
        with pytest.raises(TruncatedPayload):
            load_embedding_store(path)

    def test_oversized_payload_rejected(self, tmp_path):
        path = tmp_path / "long.wsem"
        write_store_bytes(path, 1, 1, struct.pack("<2f", 1.0, 2.0))
        with pytest.raises(TruncatedPayload):
            load_embedding_store(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.wsem"
        write_store_bytes(path, 0, 1, b"", magic=b"NOPE")
        with pytest.raises(BadMagic):
            load_embedding_store(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "v9.wsem"
        write_store_bytes(path, 0, 1, b"", version=9)
        with pytest.raises(BadVersion):
            load_embedding_store(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "hdr.wsem"
        path.write_bytes(MAGIC + b"\x01\x00")
        with pytest.raises(TruncatedPayload):
            load_embedding_store(path)

    def test_nan_payload_rejected_on_load(self, tmp_path):
        path = tmp_path / "nan.wsem"
        write_store_bytes(path, 1, 2, struct.pack("<2f", float("nan"), 0.0))
        with pytest.raises(NonFiniteValue):
            load_embedding_store(path)

    def test_nan_store_rejected_before_write(self, tmp_path):
        store = EmbeddingStore(rows=np.array([[np.nan, 1.0]], dtype=np.float32))
        with pytest.raises(NonFiniteValue):
            save_embedding_store(store, tmp_path / "nan.wsem")
        assert not (tmp_path / "nan.wsem").exists()

    def test_round_trip_bytes_identical(self, tmp_path, rng):
        store = EmbeddingStore.of(rng.normal(size=(1000, 16)).astype(np.float32))
        first = tmp_path / "a.wsem"
        second = tmp_path / "b.wsem"
        save_embedding_store(store, first)
        loaded = load_embedding_store(first)
        assert np.array_equal(loaded.rows, store.rows)
        save_embedding_store(loaded, second)
        assert first.read_bytes() == second.read_bytes()


class TestRecordValidation:
    def test_minimal_record_round_trips(self):
        record = Record(id="a", split="train", true_class="doctor")
        assert Record.from_json_dict(record.to_json_dict()) == record

    def test_full_record_round_trips(self):
        record = Record(
            id="b",
            split="test",
            true_class="tennis_player",
            attributes={"gender": "female"},
            caption="a person on a court",
            scene=Scene(environment="outdoor", venue="tennis_court"),
            objects=(ObjectTag("tennis racket", 0.9), ObjectTag("person", 0.8)),
            provenance="original",
        )
        assert Record.from_json_dict(record.to_json_dict()) == record

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"id": ""},
            {"split": "validation"},
            {"true_class": ""},
            {"provenance": "scraped"},
            {"objects": (ObjectTag("x", 1.5),)},
            {"objects": (ObjectTag("", 0.5),)},
            {"scene": Scene(environment="space")},
        ],
    )
    def test_invalid_records_rejected(self, kwargs):
        base = dict(id="a", split="train", true_class="doctor")
        base.update(kwargs)
        with pytest.raises(InvalidRecord):
            Record(**base).validate()

    def test_manifest_round_trip(self, tmp_path):
        records = [
            Record(id="a", split="train", true_class="nurse",
                   attributes={"gender": "male"}),
            Record(id="b", split="test", true_class="doctor",
                   caption="someone in a corridor",
                   scene=Scene(environment="indoor", venue="hospital_room")),
        ]
        path = tmp_path / "m.jsonl"
        save_manifest(records, path)
        assert load_manifest(path) == records
        # one JSON object per line
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert all(json.loads(line)["id"] in ("a", "b") for line in lines)

    def test_manifest_survives_unicode_line_separators_in_text(self, tmp_path):
        # U+0085 / U+2028 are line boundaries to str.splitlines but legal raw
        # characters inside a JSON string; they must not split a record
        records = [
            Record(id="a", split="train", true_class="nurse",
                   caption="before\x85after"),
            Record(id="b", split="train", true_class="nurse",
                   caption="left right end"),
        ]
        path = tmp_path / "m.jsonl"
        save_manifest(records, path)
        assert load_manifest(path) == records


class TestBind:
    def test_bind_derives_vocabulary_in_first_appearance_order(self):
        bundle = make_bundle(np.zeros((3, 2)), ["b_class", "a_class", "b_class"])
        assert bundle.vocabulary.labels == ("b_class", "a_class")

    def test_length_mismatch(self):
        store = EmbeddingStore.of(np.zeros((3, 2), dtype=np.float32))
        with pytest.raises(LengthMismatch):
            bind(store, make_records(["x", "y"]))

    def test_duplicate_id(self):
        store = EmbeddingStore.of(np.zeros((2, 2), dtype=np.float32))
        records = make_records(["x", "y"])
        records[1] = Record(id="r0", split="train", true_class="y")
        with pytest.raises(DuplicateId):
            bind(store, records)

    def test_bound_bundle_rejects_non_finite(self):
        store = EmbeddingStore(rows=np.array([[np.inf, 0.0]], dtype=np.float32))
        with pytest.raises(NonFiniteValue):
            bind(store, make_records(["x"]))

    def test_vector_lookup(self):
        bundle = make_bundle([[1, 2], [3, 4]], ["x", "y"])
        assert bundle.vector("r1").tolist() == [3.0, 4.0]
        with pytest.raises(KeyError):
            bundle.row_of("missing")

    def test_restrict_keeps_vocabulary(self):
        bundle = make_bundle(np.arange(6).reshape(3, 2), ["x", "y", "x"])
        sub = bundle.restrict(lambda r: r.true_class == "x")
        assert sub.count == 2
        assert sub.vocabulary.labels == bundle.vocabulary.labels
        assert sub.store.rows.tolist() == [[0.0, 1.0], [4.0, 5.0]]


class TestMerge:
    def test_merge_counts_match_paper_sizes(self):
        # 64,516 + 2,144 = 66,660 — checked on the arithmetic itself; the
        # matrix stays tiny here.
        assert 64516 + 2144 == 66660
        base = make_bundle(np.zeros((4, 2)), ["a", "b", "a", "b"], prefix="base")
        added = make_bundle(np.ones((2, 2)), ["b", "c"], prefix="new")
        merged = merge(base, added)
        assert merged.count == base.count + added.count
        assert merged.vocabulary.labels == ("a", "b", "c")
        assert [r.id for r in merged.records][:4] == ["base0", "base1", "base2", "base3"]

    def test_merge_with_empty_is_identity(self):
        base = make_bundle([[1, 2]], ["a"])
        empty = make_bundle(np.zeros((0, 2)), [], prefix="e")
        merged = merge(base, empty)
        assert merged.count == 1
        assert merged.vocabulary.labels == ("a",)
        assert np.array_equal(merged.store.rows, base.store.rows)

    def test_dim_mismatch(self):
        base = make_bundle(np.zeros((1, 16)), ["a"])
        added = make_bundle(np.zeros((1, 8)), ["a"], prefix="n")
        with pytest.raises(DimMismatch):
            merge(base, added)

    def test_overlapping_ids_rejected(self):
        base = make_bundle([[1.0]], ["a"])
        added = make_bundle([[2.0]], ["b"])  # same default prefix/ids
        with pytest.raises(DuplicateId):
            merge(base, added)


class TestAugmentationFraction:
    def test_paper_value(self):
        assert augmentation_fraction(2144, 64516) == pytest.approx(3.32, abs=0.01)

    def test_zero_added(self):
        assert augmentation_fraction(0, 123) == 0.0

    def test_equal_counts(self):
        assert augmentation_fraction(50, 50) == 100.0

    def test_zero_base_rejected(self):
        with pytest.raises(ZeroBase):
            augmentation_fraction(1, 0)


class TestVocabulary:
    def test_duplicate_labels_rejected(self):
        with pytest.raises(DuplicateId):
            ClassVocabulary.from_labels(["a", "b", "a"])

    def test_positions(self):
        vocab = ClassVocabulary.from_labels(["z", "a"])
        assert vocab.position("z") == 0
        assert vocab.position("a") == 1
        assert "a" in vocab and "missing" not in vocab
        with pytest.raises(InvalidRecord):
            vocab.position("missing")
