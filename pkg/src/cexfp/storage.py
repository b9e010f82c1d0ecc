"""Deterministic binary containers for checkpoints and other artifacts.

Layout: 4-byte magic ``CXF1``, a little-endian uint64 header length, a
canonical JSON header (sorted keys, compact separators), then the raw
row-major bytes of each array in the order listed by ``header["arrays"]``.
Canonical JSON plus raw float64 bytes make rewrites byte-identical, so
artifact hashes are stable across reruns; no timestamps are embedded.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .errors import CorruptFileError, ParameterError
from .layers import layer_from_spec, LayerSpec
from .nn import Network
from .util import DTYPE

MAGIC = b"CXF1"
FORMAT_VERSION = 1


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      allow_nan=False).encode()


def write_container(path: str, header: dict, arrays: dict) -> None:
    """Write header + named arrays; array order is sorted by name."""
    names = sorted(arrays)
    head = dict(header)
    head["format"] = FORMAT_VERSION
    head["arrays"] = [{"name": n,
                       "dtype": str(arrays[n].dtype),
                       "shape": list(arrays[n].shape)} for n in names]
    blob = canonical_json(head)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for n in names:
            f.write(np.ascontiguousarray(arrays[n]).tobytes())
    os.replace(tmp, path)


def read_container(path: str):
    """Read back (header, arrays).  Truncation or bad magic raises."""
    try:
        with open(path, "rb") as f:
            magic = f.read(4)
            if magic != MAGIC:
                raise CorruptFileError(f"{path}: not a CXF1 container")
            raw_len = f.read(8)
            if len(raw_len) != 8:
                raise CorruptFileError(f"{path}: truncated header length")
            (hlen,) = struct.unpack("<Q", raw_len)
            blob = f.read(hlen)
            if len(blob) != hlen:
                raise CorruptFileError(f"{path}: truncated header")
            try:
                header = json.loads(blob)
            except ValueError as e:
                raise CorruptFileError(f"{path}: bad header JSON: {e}") from e
            if header.get("format") != FORMAT_VERSION:
                raise CorruptFileError(
                    f"{path}: unsupported format {header.get('format')!r}")
            arrays = {}
            for spec in header.get("arrays", []):
                dt = np.dtype(spec["dtype"])
                shape = tuple(spec["shape"])
                count = int(np.prod(shape, dtype=np.int64)) if shape else 1
                buf = f.read(count * dt.itemsize)
                if len(buf) != count * dt.itemsize:
                    raise CorruptFileError(
                        f"{path}: truncated array {spec['name']!r}")
                arrays[spec["name"]] = np.frombuffer(buf, dtype=dt).reshape(shape).copy()
            return header, arrays
    except OSError as e:
        raise CorruptFileError(f"{path}: {e}") from e


def save_checkpoint(path: str, net: Network, extras: dict | None = None,
                    extra_arrays: dict | None = None) -> None:
    """Self-describing checkpoint: layer specs plus raw parameter arrays.

    ``extra_arrays`` ride along under their own names (for example sparsity
    masks); loaders that do not know them simply ignore them.
    """
    header = {
        "kind": "checkpoint",
        "arch_id": net.arch_id,
        "input_shape": list(net.input_shape),
        "classes": net.classes,
        "init_seed": net.init_seed,
        "layers": [{"kind": l.spec().kind, "hyper": l.spec().hyper}
                   for l in net.layers],
    }
    if extras:
        header["extras"] = extras
    arrays = {}
    for i, name, arr in net.param_items():
        arrays[f"layer{i}.{name}"] = np.ascontiguousarray(arr, dtype=DTYPE)
    for name in sorted(extra_arrays or {}):
        if name in arrays:
            raise ParameterError(f"extra array name collides: {name}")
        arrays[name] = np.ascontiguousarray(extra_arrays[name])
    write_container(path, header, arrays)


def load_checkpoint(path: str):
    """Rebuild the network from a checkpoint; returns (net, extras dict)."""
    header, arrays = read_container(path)
    if header.get("kind") != "checkpoint":
        raise CorruptFileError(f"{path}: not a checkpoint "
                               f"(kind={header.get('kind')!r})")
    layers = []
    for i, spec in enumerate(header["layers"]):
        layer = layer_from_spec(LayerSpec(spec["kind"], dict(spec["hyper"])))
        for name in list(layer.params):
            key = f"layer{i}.{name}"
            if key not in arrays:
                raise CorruptFileError(f"{path}: missing parameter {key}")
            layer.params[name] = arrays[key].astype(DTYPE)
        layers.append(layer)
    net = Network(header["arch_id"], tuple(header["input_shape"]),
                  header["classes"], layers, init_seed=header.get("init_seed"))
    return net, header.get("extras", {})


def write_json(path: str, obj) -> None:
    """Stable human-readable JSON (sorted keys, trailing newline)."""
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        json.dump(obj, f, sort_keys=True, indent=2, allow_nan=False)
        f.write("\n")
    os.replace(tmp, path)


def read_json(path: str):
    with open(path) as f:
        return json.load(f)
