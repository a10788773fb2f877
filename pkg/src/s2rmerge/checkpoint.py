"""Checkpoint storage: named tensor maps with bit-exact binary serialization.

A checkpoint file is laid out as:

    bytes 0-3    magic "TVC1"
    bytes 4-7    header length H, unsigned 32-bit little-endian
    bytes 8..8+H UTF-8 JSON header:
                 {"tensors": [{"name", "dtype", "shape", "offset"}, ...],
                  "metadata": {str: str}}
                 tensors sorted by name, offsets relative to the end of
                 the header
    remainder    payload: each tensor contiguous, little-endian, row-major

Serialization is a pure function of the ParameterSet (fixed key order, no
timestamps), so saving the same set twice produces byte-identical files.
All in-memory arithmetic uses float64; f32 checkpoints are widened on load
and narrowed on save.
"""

from __future__ import annotations

import json
import struct
from typing import Iterator, Mapping

import numpy as np

MAGIC = b"TVC1"

# storage tag -> little-endian numpy dtype
DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}


class CheckpointError(Exception):
    """Base class for checkpoint storage and compatibility errors."""


class MagicMismatch(CheckpointError):
    """File does not start with the checkpoint magic bytes."""


class HeaderCorrupt(CheckpointError):
    """JSON header is unparsable, malformed, or declares bad offsets."""


class DtypeUnsupported(CheckpointError):
    """Tensor dtype is not one of f32/f64."""


class IoFailure(CheckpointError):
    """Underlying file I/O failed."""


class CompatibilityError(CheckpointError):
    """Two parameter sets cannot participate in the same arithmetic."""


class KeySetMismatch(CompatibilityError):
    """Tensor name sets differ."""


class ShapeMismatch(CompatibilityError):
    """A tensor with the same name has different shapes."""


class DtypeMismatch(CompatibilityError):
    """Declared storage dtypes differ."""


class ParameterSet:
    """Immutable named map of dense tensors plus free-form string metadata.

    Entries are held as C-contiguous float64 arrays in lexicographic name
    order regardless of the declared storage dtype; sets tagged "f32" have
    their values snapped to f32 precision at construction so the in-memory
    state always equals what a save/load round trip would produce.

    Metadata keys "role" (ancestor|syn|real|merged), "lang" and "domain"
    are conventional tags only, never interpreted by the arithmetic.
    """

    __slots__ = ("entries", "dtype", "metadata")

    def __init__(
        self,
        entries: Mapping[str, np.ndarray],
        dtype: str = "f64",
        metadata: Mapping[str, str] | None = None,
    ):
        if dtype not in DTYPES:
            raise DtypeUnsupported(f"unsupported dtype {dtype!r}; expected one of {sorted(DTYPES)}")
        normalized: dict[str, np.ndarray] = {}
        for name in sorted(entries):
            if not isinstance(name, str) or not name:
                raise CheckpointError(f"tensor names must be non-empty strings, got {name!r}")
            arr = np.array(entries[name], dtype=np.float64, order="C")
            if dtype == "f32":
                arr = arr.astype(np.float32).astype(np.float64)
            arr.flags.writeable = False
            normalized[name] = arr
        self.entries = normalized
        self.dtype = dtype
        self.metadata = {str(k): str(v) for k, v in sorted((metadata or {}).items())}

    def names(self) -> list[str]:
        return list(self.entries)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        """Bitwise equality: same names, dtype, metadata, and buffer bytes."""
        if not isinstance(other, ParameterSet):
            return NotImplemented
        if self.dtype != other.dtype or self.metadata != other.metadata:
            return False
        if self.names() != other.names():
            return False
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self.entries.values(), other.entries.values())
        )

    def __repr__(self) -> str:
        return f"ParameterSet({len(self.entries)} tensors, dtype={self.dtype})"

    def with_metadata(self, **updates: str) -> "ParameterSet":
        meta = dict(self.metadata)
        meta.update({k: str(v) for k, v in updates.items()})
        return ParameterSet(self.entries, dtype=self.dtype, metadata=meta)

    def num_elements(self) -> int:
        return sum(a.size for a in self.entries.values())


def check_compatible(a, b) -> None:
    """Verify two tensor maps can enter elementwise arithmetic together.

    Succeeds iff name sets, per-name shapes, and declared dtypes all match.
    Accepts anything exposing ``entries`` and ``dtype`` (ParameterSet or
    TaskVector). Reflexive and symmetric.
    """
    a_names, b_names = set(a.entries), set(b.entries)
    if a_names != b_names:
        missing = sorted(a_names - b_names)
        extra = sorted(b_names - a_names)
        raise KeySetMismatch(f"tensor name sets differ: missing={missing} extra={extra}")
    for name, arr in a.entries.items():
        other = b.entries[name]
        if arr.shape != other.shape:
            raise ShapeMismatch(f"tensor {name!r}: shape {list(arr.shape)} vs {list(other.shape)}")
    if a.dtype != b.dtype:
        raise DtypeMismatch(f"dtype {a.dtype} vs {b.dtype}")


def save_checkpoint(p: ParameterSet, path) -> None:
    """Write a ParameterSet to ``path`` in the TVC1 format.

    Deterministic: byte-identical output for equal parameter sets.
    """
    storage = DTYPES[p.dtype]
    tensor_meta = []
    offset = 0
    buffers = []
    for name, arr in p.entries.items():
        raw = np.ascontiguousarray(arr, dtype=np.float64).astype(storage).tobytes()
        tensor_meta.append(
            {"name": name, "dtype": p.dtype, "shape": list(arr.shape), "offset": offset}
        )
        buffers.append(raw)
        offset += len(raw)
    header = json.dumps(
        {"tensors": tensor_meta, "metadata": p.metadata},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    ).encode("utf-8")
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            for raw in buffers:
                fh.write(raw)
    except OSError as exc:
        raise IoFailure(f"cannot write checkpoint {path}: {exc}") from exc


def load_checkpoint(path) -> ParameterSet:
    """Read a TVC1 checkpoint file back into a ParameterSet."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read checkpoint {path}: {exc}") from exc
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise MagicMismatch(f"{path} is not a checkpoint file (bad magic)")
    (header_len,) = struct.unpack("<I", blob[4:8])
    if 8 + header_len > len(blob):
        raise HeaderCorrupt(f"{path}: header length {header_len} exceeds file size")
    try:
        header = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderCorrupt(f"{path}: unparsable header: {exc}") from exc
    payload = blob[8 + header_len :]
    if not isinstance(header, dict) or "tensors" not in header or "metadata" not in header:
        raise HeaderCorrupt(f"{path}: header missing required keys")
    tensors = header["tensors"]
    if not isinstance(tensors, list):
        raise HeaderCorrupt(f"{path}: 'tensors' is not a list")

    names = [t.get("name") for t in tensors if isinstance(t, dict)]
    if len(names) != len(tensors) or any(not isinstance(n, str) or not n for n in names):
        raise HeaderCorrupt(f"{path}: malformed tensor records")
    if names != sorted(names) or len(set(names)) != len(names):
        raise HeaderCorrupt(f"{path}: tensor names must be unique and sorted")

    dtype = None
    entries: dict[str, np.ndarray] = {}
    for rec in tensors:
        tag = rec.get("dtype")
        if tag not in DTYPES:
            raise DtypeUnsupported(f"{path}: tensor {rec['name']!r} has dtype {tag!r}")
        if dtype is None:
            dtype = tag
        elif tag != dtype:
            raise HeaderCorrupt(f"{path}: mixed dtypes in one checkpoint")
        shape = rec.get("shape")
        offset = rec.get("offset")
        if (
            not isinstance(shape, list)
            or any(not isinstance(d, int) or d < 0 for d in shape)
            or not isinstance(offset, int)
            or offset < 0
        ):
            raise HeaderCorrupt(f"{path}: bad shape/offset for tensor {rec['name']!r}")
        count = 1
        for d in shape:
            count *= d
        nbytes = count * DTYPES[tag].itemsize
        if offset + nbytes > len(payload):
            raise HeaderCorrupt(
                f"{path}: tensor {rec['name']!r} extends beyond end of file "
                f"(offset {offset}, {nbytes} bytes, payload {len(payload)})"
            )
        arr = np.frombuffer(payload, dtype=DTYPES[tag], count=count, offset=offset)
        entries[rec["name"]] = arr.astype(np.float64).reshape(shape)

    metadata = header["metadata"]
    if not isinstance(metadata, dict):
        raise HeaderCorrupt(f"{path}: 'metadata' is not an object")
    return ParameterSet(entries, dtype=dtype or "f64", metadata=metadata)
