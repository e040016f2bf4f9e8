"""
Corpus Storage for airsubspace

Provides a unified interface for reading and writing training corpora, run
manifests and other artifacts below one data directory. The training-set
binary layout is frozen:

    magic "AIRS" | u16 version=1 | u32 K | u16 B | u32 L | u32 fs | u64 seed
    followed by K*B*L little-endian float64 ordered (sample, channel, tap)

A JSON sidecar next to each corpus carries provenance the header has no room for.
"""
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from .constants import AIRS_HEADER_FORMAT, AIRS_MAGIC, AIRS_SIDECAR_SUFFIX, AIRS_VERSION
from .env import get_runtime_config
from .models import FrameConfig
from .subspace import Provenance, TrainingSet

logger = logging.getLogger(__name__)

HEADER_SIZE = struct.calcsize(AIRS_HEADER_FORMAT)


def encode_training_set(training: TrainingSet) -> bytes:
    """Serialize a training set to the AIRS binary layout."""
    frame = training.frame
    if float(frame.fs) != int(frame.fs):
        raise ValueError(f"fs must be an integer number of Hz to serialize, got {frame.fs}")
    header = struct.pack(
        AIRS_HEADER_FORMAT,
        AIRS_MAGIC,
        AIRS_VERSION,
        training.count,
        frame.num_channels,
        frame.filter_length,
        int(frame.fs),
        int(training.provenance.seed),
    )
    return header + np.ascontiguousarray(training.vectors, dtype="<f8").tobytes()


def decode_training_set(data: bytes, frame_shift: Optional[int] = None, geometry_hash: str = "") -> TrainingSet:
    """
    Parse the AIRS binary layout.

    Args:
        data: Raw file contents
        frame_shift: Frame shift R of the returned frame config (defaults to L)
        geometry_hash: Provenance hash taken from the sidecar, if any

    Raises:
        ValueError: On bad magic, unsupported version or a truncated payload
    """
    if len(data) < HEADER_SIZE:
        raise ValueError("truncated header")
    magic, version, k, b, l, fs, seed = struct.unpack_from(AIRS_HEADER_FORMAT, data, 0)
    if magic != AIRS_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != AIRS_VERSION:
        raise ValueError(f"unsupported version {version}")
    expected = k * b * l * 8
    payload = data[HEADER_SIZE:]
    if len(payload) != expected:
        raise ValueError(f"truncated payload: expected {expected} bytes, got {len(payload)}")
    vectors = np.frombuffer(payload, dtype="<f8").reshape(k, b * l).astype(float)
    frame = FrameConfig(filter_length=l, frame_shift=frame_shift or l, num_channels=b, fs=fs)
    return TrainingSet(vectors, frame, Provenance(seed=seed, geometry_hash=geometry_hash))


class CorpusStore:
    """Local directory holding corpora, sidecars and run outputs"""

    def __init__(self, root: Optional[Union[str, Path]] = None):
        """
        Initialize the store

        Args:
            root: Base directory (defaults to AIRSUBSPACE_DATA_DIR or ./data)
        """
        self.root = Path(root or get_runtime_config()["data_dir"])
        logger.debug("CorpusStore initialized: root=%s", self.root)

    def _path(self, key: Union[str, Path]) -> Path:
        path = Path(key)
        return path if path.is_absolute() else self.root / path

    def file_exists(self, key: Union[str, Path]) -> bool:
        return self._path(key).is_file()

    def read_json(self, key: Union[str, Path]) -> Optional[Dict[str, Any]]:
        """
        Read a JSON file

        Returns:
            Parsed JSON data as dict, or None if the file doesn't exist

        Raises:
            json.JSONDecodeError: If the file exists but isn't valid JSON
        """
        path = self._path(key)
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            logger.warning(f"File not found: {path}")
            return None
        except json.JSONDecodeError as e:
            logger.error(f"Invalid JSON in {path}: {e}")
            raise

    def write_json(self, key: Union[str, Path], data: Dict[str, Any], indent: int = 2) -> Path:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=indent, sort_keys=True) + "\n", encoding="utf-8")
        logger.debug(f"Wrote {path}")
        return path

    def write_training_set(self, key: Union[str, Path], training: TrainingSet,
                           extra: Optional[Dict[str, Any]] = None) -> Path:
        """Write the binary corpus and its JSON sidecar; returns the corpus path."""
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_training_set(training))
        sidecar = {
            "geometry_hash": training.provenance.geometry_hash,
            "source": training.provenance.source,
            "seed": training.provenance.seed,
            "frame": training.frame.model_dump(mode="json"),
        }
        sidecar.update(extra or {})
        self.write_json(path.with_name(path.name + AIRS_SIDECAR_SUFFIX), sidecar)
        logger.info("Wrote training set %s (K=%d)", path, training.count)
        return path

    def read_training_set(self, key: Union[str, Path], frame_shift: Optional[int] = None) -> TrainingSet:
        """
        Load a corpus; the frame shift comes from the argument, then the sidecar, then L.

        Raises:
            FileNotFoundError: If the corpus file doesn't exist
            ValueError: If the file is corrupt
        """
        path = self._path(key)
        if not self.file_exists(path):
            raise FileNotFoundError(f"training set not found: {path}")
        sidecar_path = path.with_name(path.name + AIRS_SIDECAR_SUFFIX)
        sidecar = self.read_json(sidecar_path) if self.file_exists(sidecar_path) else {}
        if frame_shift is None:
            frame_shift = (sidecar.get("frame") or {}).get("frame_shift")
        try:
            training = decode_training_set(path.read_bytes(), frame_shift, sidecar.get("geometry_hash", ""))
        except ValueError as e:
            logger.error(f"Corrupt training set {path}: {e}")
            raise
        source = sidecar.get("source")
        if source:
            training = TrainingSet(
                training.vectors, training.frame,
                Provenance(training.provenance.seed, training.provenance.geometry_hash, source),
            )
        return training
