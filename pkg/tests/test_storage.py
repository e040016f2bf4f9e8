"""
Tests for the corpus binary format and the local store
"""
import struct

import numpy as np
import pytest

from airsubspace.constants import AIRS_HEADER_FORMAT
from airsubspace.models import FrameConfig
from airsubspace.storage import CorpusStore, decode_training_set, encode_training_set
from airsubspace.subspace import Provenance, TrainingSet


@pytest.fixture
def training(rng):
    frame = FrameConfig(filter_length=4, frame_shift=4, num_channels=2, fs=8000)
    return TrainingSet(rng.standard_normal((3, 8)), frame, Provenance(seed=42, geometry_hash="abc"))


class TestBinaryFormat:
    """Test encode/decode of the AIRS layout"""

    def test_header(self, training):
        """Test header fields and payload size"""
        data = encode_training_set(training)
        magic, version, k, b, l, fs, seed = struct.unpack_from(AIRS_HEADER_FORMAT, data)
        assert (magic, version, k, b, l, fs, seed) == (b"AIRS", 1, 3, 2, 4, 8000, 42)
        assert len(data) == struct.calcsize(AIRS_HEADER_FORMAT) + 3 * 8 * 8

    def test_decode(self, training):
        """Test values, frame and seed survive"""
        decoded = decode_training_set(encode_training_set(training), frame_shift=2, geometry_hash="abc")
        assert np.array_equal(decoded.vectors, training.vectors)
        assert decoded.frame.frame_shift == 2
        assert decoded.frame.num_channels == 2
        assert decoded.provenance.seed == 42
        assert decoded.provenance.geometry_hash == "abc"

    def test_frame_shift_defaults_to_filter_length(self, training):
        """Test R defaults to L"""
        assert decode_training_set(encode_training_set(training)).frame.frame_shift == 4

    def test_bad_magic(self, training):
        """Test magic check"""
        data = b"NOPE" + encode_training_set(training)[4:]
        with pytest.raises(ValueError, match="bad magic"):
            decode_training_set(data)

    def test_unsupported_version(self, training):
        """Test version check"""
        data = bytearray(encode_training_set(training))
        struct.pack_into("<H", data, 4, 2)
        with pytest.raises(ValueError, match="unsupported version"):
            decode_training_set(bytes(data))

    def test_truncated(self, training):
        """Test short header and short payload"""
        data = encode_training_set(training)
        with pytest.raises(ValueError, match="truncated header"):
            decode_training_set(data[:10])
        with pytest.raises(ValueError, match="truncated payload"):
            decode_training_set(data[:-8])

    def test_fractional_fs(self, rng):
        """Test non-integer sampling rates cannot be written"""
        frame = FrameConfig(filter_length=2, frame_shift=2, num_channels=1, fs=8000.5)
        with pytest.raises(ValueError, match="integer"):
            encode_training_set(TrainingSet(rng.standard_normal((1, 2)), frame))


class TestCorpusStore:
    """Test CorpusStore file operations"""

    def test_write_read(self, tmp_path, training):
        """Test corpus plus sidecar round trip"""
        store = CorpusStore(tmp_path)
        path = store.write_training_set("corpus.airs", training, extra={"note": "x"})
        assert path == tmp_path / "corpus.airs"
        sidecar = store.read_json("corpus.airs.json")
        assert sidecar["geometry_hash"] == "abc"
        assert sidecar["note"] == "x"
        loaded = store.read_training_set("corpus.airs")
        assert np.array_equal(loaded.vectors, training.vectors)
        assert loaded.frame == training.frame
        assert loaded.provenance == training.provenance

    def test_frame_shift_argument_wins(self, tmp_path, training):
        """Test explicit R overrides the sidecar"""
        store = CorpusStore(tmp_path)
        store.write_training_set("c.airs", training)
        assert store.read_training_set("c.airs", frame_shift=1).frame.frame_shift == 1

    def test_missing_corpus(self, tmp_path):
        """Test missing files raise FileNotFoundError"""
        with pytest.raises(FileNotFoundError):
            CorpusStore(tmp_path).read_training_set("absent.airs")

    def test_corrupt_corpus(self, tmp_path):
        """Test corrupt files raise ValueError"""
        (tmp_path / "bad.airs").write_bytes(b"garbage")
        with pytest.raises(ValueError):
            CorpusStore(tmp_path).read_training_set("bad.airs")

    def test_json_helpers(self, tmp_path):
        """Test JSON read/write and existence checks"""
        store = CorpusStore(tmp_path)
        assert store.read_json("missing.json") is None
        store.write_json("runs/a.json", {"b": 1, "a": 2})
        assert store.read_json("runs/a.json") == {"a": 2, "b": 1}
        assert store.file_exists("runs/a.json")
        assert not store.file_exists("runs/b.json")

    def test_default_root_from_env(self, tmp_path, monkeypatch):
        """Test AIRSUBSPACE_DATA_DIR sets the default root"""
        monkeypatch.setenv("AIRSUBSPACE_DATA_DIR", str(tmp_path))
        assert CorpusStore().root == tmp_path
