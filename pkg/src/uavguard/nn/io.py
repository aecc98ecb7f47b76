"""Weight-file serialization.

Binary stream layout (all integers unsigned 32-bit little-endian):

    magic  b"UAVW"
    version (currently 1)
    tensor count
    per tensor: name length, UTF-8 name, rank, dims..., raw float32 LE data

A JSON sidecar (``<file>.json``) records the architecture spec plus the
init/optimizer config, which is what load_network uses to rebuild the
graph before pouring the tensors back in. Values are stored as float32,
so round-trips are bit-exact for float32 networks (the training/inference
dtype); float64 oracle builds lose precision on save by design.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .graph import Network, network_from_spec

MAGIC = b"UAVW"
VERSION = 1


class WeightFormatError(ValueError):
    pass


def save_weights(net: Network) -> bytes:
    params = net.parameters()
    out = [MAGIC, struct.pack("<II", VERSION, len(params))]
    for name, value in params.items():
        raw = name.encode("utf-8")
        out.append(struct.pack("<I", len(raw)))
        out.append(raw)
        out.append(struct.pack("<I", value.ndim))
        out.append(struct.pack(f"<{value.ndim}I", *value.shape))
        out.append(np.ascontiguousarray(value, dtype="<f4").tobytes())
    return b"".join(out)


def read_weight_stream(data: bytes) -> dict[str, np.ndarray]:
    if data[:4] != MAGIC:
        raise WeightFormatError(f"bad magic {data[:4]!r} at offset 0, expected {MAGIC!r}")
    off = 4

    def take(n: int, what: str) -> bytes:
        nonlocal off
        if off + n > len(data):
            raise WeightFormatError(f"truncated file at offset {off}: missing {what}")
        chunk = data[off:off + n]
        off += n
        return chunk

    version, count = struct.unpack("<II", take(8, "header"))
    if version != VERSION:
        raise WeightFormatError(f"unsupported version {version} at offset 4")
    tensors: dict[str, np.ndarray] = {}
    for i in range(count):
        (nlen,) = struct.unpack("<I", take(4, f"name length of tensor {i}"))
        name = take(nlen, f"name of tensor {i}").decode("utf-8")
        (rank,) = struct.unpack("<I", take(4, f"rank of tensor '{name}'"))
        dims = struct.unpack(f"<{rank}I", take(4 * rank, f"dims of tensor '{name}'"))
        n = int(np.prod(dims)) if rank else 1
        raw = take(4 * n, f"data of tensor '{name}'")
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
    return tensors


def load_weights(data: bytes, arch_spec: dict) -> Network:
    net = network_from_spec(arch_spec)
    tensors = read_weight_stream(data)
    own = net.parameters()
    missing = set(own) - set(tensors)
    if missing:
        raise WeightFormatError(f"stream lacks tensors {sorted(missing)}")
    net.set_parameters({k: tensors[k] for k in own})
    return net


def save_network(path, net: Network, config: dict | None = None):
    """Write the weight file plus its JSON sidecar; returns the weight path."""
    path = Path(path)
    path.write_bytes(save_weights(net))
    sidecar = {"architecture": net.to_spec(), "config": config or {}}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=1))
    return path


def load_network(path) -> tuple[Network, dict]:
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    net = load_weights(path.read_bytes(), sidecar["architecture"])
    return net, sidecar.get("config", {})
