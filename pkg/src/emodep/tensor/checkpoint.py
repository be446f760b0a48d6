"""Named-tensor checkpoint container.

Layout::

    b"EMDPCKPT" | u32 format version | u32 header length | JSON header | payload

The header lists ``{name, shape, offset, nbytes}`` per tensor plus the SHA-256
of the payload; the payload is little-endian float32, row-major.
"""

import hashlib
import json
import struct

import numpy as np

from ..errors import ChecksumError, CheckpointMismatch, IoError, MissingFile

MAGIC = b"EMDPCKPT"
FORMAT_VERSION = 1
_LE_F32 = np.dtype("<f4")


def encode(tensors, meta=None):
    """Serialise a name -> array mapping (sorted by name) to bytes."""
    entries, chunks, offset = [], [], 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(np.asarray(tensors[name]), dtype=_LE_F32)
        raw = arr.tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    payload = b"".join(chunks)
    header = {
        "format_version": FORMAT_VERSION,
        "dtype": "float32-le",
        "tensors": entries,
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
        "meta": meta or {},
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<II", FORMAT_VERSION, len(hbytes)) + hbytes + payload


def decode(blob, expected_shapes=None):
    """Inverse of :func:`encode`; returns ``(tensors, meta)``."""
    if len(blob) < len(MAGIC) + 8 or blob[: len(MAGIC)] != MAGIC:
        raise ChecksumError("not a checkpoint: bad magic or truncated preamble")
    version, hlen = struct.unpack_from("<II", blob, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ChecksumError(f"unsupported checkpoint format version {version}")
    start = len(MAGIC) + 8
    if len(blob) < start + hlen:
        raise ChecksumError("checkpoint header truncated")
    try:
        header = json.loads(blob[start:start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ChecksumError(f"checkpoint header unreadable: {exc}") from None
    payload = blob[start + hlen:]
    if hashlib.sha256(payload).hexdigest() != header.get("payload_sha256"):
        raise ChecksumError("checkpoint payload checksum mismatch (truncated or corrupt)")
    tensors = {}
    for e in header["tensors"]:
        raw = payload[e["offset"]:e["offset"] + e["nbytes"]]
        arr = np.frombuffer(raw, dtype=_LE_F32).astype(np.float32).reshape(e["shape"])
        tensors[e["name"]] = arr
    if expected_shapes is not None:
        verify_shapes(tensors, expected_shapes)
    return tensors, header.get("meta", {})


def verify_shapes(tensors, expected_shapes):
    missing = sorted(set(expected_shapes) - set(tensors))
    extra = sorted(set(tensors) - set(expected_shapes))
    if missing or extra:
        raise CheckpointMismatch(f"checkpoint names differ: missing {missing}, unexpected {extra}")
    for name, shape in expected_shapes.items():
        if tuple(tensors[name].shape) != tuple(shape):
            raise CheckpointMismatch(f"{name}: checkpoint shape {tensors[name].shape} != expected {tuple(shape)}")


def save(path, tensors, meta=None):
    blob = encode(tensors, meta)
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except OSError as exc:
        raise IoError(f"cannot write checkpoint {path}: {exc}") from None
    return hashlib.sha256(blob).hexdigest()


def load(path, expected_shapes=None):
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except FileNotFoundError:
        raise MissingFile(f"checkpoint not found: {path}") from None
    return decode(blob, expected_shapes)
