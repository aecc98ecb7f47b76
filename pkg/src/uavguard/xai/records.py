"""Attribution record files: a JSON header then flat little-endian float32
records. Header carries model hash, background hash, explained head, per
record dims and the record count."""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from ..nn import Network, save_weights


def model_hash(net: Network) -> str:
    return hashlib.sha256(save_weights(net)).hexdigest()[:16]


def array_hash(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype="<f4").tobytes()).hexdigest()[:16]


def write_records(path, records: np.ndarray, header: dict):
    """records: (N, *dims) float array; header is extended with count/dims."""
    path = Path(path)
    records = np.asarray(records)
    doc = dict(header)
    doc["count"] = int(records.shape[0])
    doc["dims"] = list(records.shape[1:])
    blob = json.dumps(doc).encode("utf-8")
    with path.open("wb") as fh:
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(records, dtype="<f4").tobytes())
    return path


def read_records(path) -> tuple[dict, np.ndarray]:
    data = Path(path).read_bytes()
    (hlen,) = struct.unpack("<I", data[:4])
    header = json.loads(data[4:4 + hlen].decode("utf-8"))
    payload = np.frombuffer(data[4 + hlen:], dtype="<f4")
    shape = (header["count"], *header["dims"])
    expected = int(np.prod(shape)) if header["count"] else 0
    if payload.size != expected:
        raise ValueError(f"record payload holds {payload.size} floats, header says {expected}")
    return header, payload.reshape(shape).copy()
