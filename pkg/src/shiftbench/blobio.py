"""Binary file formats: embeddings, classifier models, parameter sets.

All formats are little-endian with a 4-byte magic:

* ``EMB1`` embeddings: magic, u32 row count, u32 dim count, u32 dtype code
  (0 = float32, 1 = float64), then the row-major payload.  Float32 payloads
  are upcast to float64 on load (lossless widening).
* ``CLS1`` classifier models: magic, u32 kind code, u32 class count,
  u32 dim count, u32 flag bits (1 = l2-normalize, 2 = layer-norm,
  4 = has bias), f64 cosine scale, then the float64 weight matrix and, if
  flagged, the bias vector.  The per-epoch training-loss trace is a runtime
  diagnostic and is not serialized.
* ``PRM1`` parameter sets: magic, u32 entry count, a name table of
  (u32 name length, UTF-8 name, u64 array length) records, then the
  concatenated float64 payloads in name-table order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .classifiers import BASELINEPP, CENTROID, LOGISTIC, ClassifierModel, EmbeddingMatrix
from .ensembles import ParamSet

__all__ = [
    "BlobFormatError",
    "BadMagicError",
    "TruncatedPayloadError",
    "NonFiniteValueError",
    "write_embedding_file",
    "load_embedding_file",
    "save_classifier",
    "load_classifier",
    "save_paramset",
    "load_paramset",
    "peek_magic",
]

EMB_MAGIC = b"EMB1"
CLS_MAGIC = b"CLS1"
PRM_MAGIC = b"PRM1"

DTYPE_F32 = 0
DTYPE_F64 = 1

_KIND_CODES = {LOGISTIC: 0, CENTROID: 1, BASELINEPP: 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}

_FLAG_L2 = 1
_FLAG_LAYERNORM = 2
_FLAG_BIAS = 4


class BlobFormatError(ValueError):
    """Base class for malformed blob files."""


class BadMagicError(BlobFormatError):
    """File does not start with the expected magic bytes."""


class TruncatedPayloadError(BlobFormatError):
    """Payload shorter (or longer) than the header promises."""


class NonFiniteValueError(BlobFormatError):
    """Payload contains NaN or infinity."""


def peek_magic(path: str | Path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read(4)


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise TruncatedPayloadError(
            f"truncated {what}: wanted {n} bytes, got {len(buf)}"
        )
    return buf


def write_embedding_file(
    path: str | Path, data, dtype_code: int = DTYPE_F64
) -> None:
    """Write a (rows, dims) float array in the ``EMB1`` format."""
    arr = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
    if arr.ndim != 2:
        raise ValueError(f"embeddings must be 2-D, got shape {arr.shape}")
    if dtype_code not in (DTYPE_F32, DTYPE_F64):
        raise ValueError(f"unknown dtype code {dtype_code}")
    payload_dtype = "<f4" if dtype_code == DTYPE_F32 else "<f8"
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC)
        fh.write(struct.pack("<III", arr.shape[0], arr.shape[1], dtype_code))
        fh.write(arr.astype(payload_dtype).tobytes(order="C"))


def load_embedding_file(path: str | Path) -> EmbeddingMatrix:
    """Load an ``EMB1`` file, upcasting float32 payloads to float64.

    Raises :class:`BadMagicError`, :class:`TruncatedPayloadError`, or
    :class:`NonFiniteValueError` for the respective defects.
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != EMB_MAGIC:
            raise BadMagicError(
                f"{path}: expected magic {EMB_MAGIC!r}, got {magic!r}"
            )
        rows, dims, dtype_code = struct.unpack(
            "<III", _read_exact(fh, 12, "embedding header")
        )
        if dtype_code not in (DTYPE_F32, DTYPE_F64):
            raise BlobFormatError(f"{path}: unknown dtype code {dtype_code}")
        itemsize = 4 if dtype_code == DTYPE_F32 else 8
        expected = rows * dims * itemsize
        payload = fh.read()
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"{path}: payload has {len(payload)} bytes, header promises {expected}"
        )
    dt = np.dtype("<f4") if dtype_code == DTYPE_F32 else np.dtype("<f8")
    arr = np.frombuffer(payload, dtype=dt).reshape(rows, dims).astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError(f"{path}: payload contains non-finite values")
    return EmbeddingMatrix(arr)


def save_classifier(model: ClassifierModel, path: str | Path) -> None:
    """Write a classifier model in the ``CLS1`` format."""
    flags = 0
    if model.l2_normalize:
        flags |= _FLAG_L2
    if model.layer_norm:
        flags |= _FLAG_LAYERNORM
    if model.bias is not None:
        flags |= _FLAG_BIAS
    with open(path, "wb") as fh:
        fh.write(CLS_MAGIC)
        fh.write(
            struct.pack(
                "<IIII",
                _KIND_CODES[model.kind],
                model.num_classes,
                model.dims,
                flags,
            )
        )
        fh.write(struct.pack("<d", float(model.cosine_scale)))
        fh.write(model.weights.astype("<f8").tobytes(order="C"))
        if model.bias is not None:
            fh.write(model.bias.astype("<f8").tobytes(order="C"))


def load_classifier(path: str | Path) -> ClassifierModel:
    """Load a ``CLS1`` classifier model."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CLS_MAGIC:
            raise BadMagicError(
                f"{path}: expected magic {CLS_MAGIC!r}, got {magic!r}"
            )
        kind_code, C, dims, flags = struct.unpack(
            "<IIII", _read_exact(fh, 16, "classifier header")
        )
        if kind_code not in _KIND_NAMES:
            raise BlobFormatError(f"{path}: unknown kind code {kind_code}")
        (cosine_scale,) = struct.unpack("<d", _read_exact(fh, 8, "cosine scale"))
        n_weights = C * dims
        has_bias = bool(flags & _FLAG_BIAS)
        expected = 8 * (n_weights + (C if has_bias else 0))
        payload = fh.read()
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"{path}: payload has {len(payload)} bytes, header promises {expected}"
        )
    values = np.frombuffer(payload, dtype="<f8")
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError(f"{path}: payload contains non-finite values")
    weights = values[:n_weights].reshape(C, dims).copy()
    bias = values[n_weights:].copy() if has_bias else None
    return ClassifierModel(
        kind=_KIND_NAMES[kind_code],
        weights=weights,
        bias=bias,
        l2_normalize=bool(flags & _FLAG_L2),
        layer_norm=bool(flags & _FLAG_LAYERNORM),
        cosine_scale=float(cosine_scale),
    )


def save_paramset(ps: ParamSet, path: str | Path) -> None:
    """Write a ParamSet in the ``PRM1`` format (name table + payload)."""
    with open(path, "wb") as fh:
        fh.write(PRM_MAGIC)
        fh.write(struct.pack("<I", len(ps.entries)))
        for name, arr in ps.entries.items():
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<Q", arr.size))
        for arr in ps.entries.values():
            fh.write(arr.astype("<f8").tobytes(order="C"))


def load_paramset(path: str | Path) -> ParamSet:
    """Load a ``PRM1`` ParamSet."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != PRM_MAGIC:
            raise BadMagicError(
                f"{path}: expected magic {PRM_MAGIC!r}, got {magic!r}"
            )
        (n_entries,) = struct.unpack("<I", _read_exact(fh, 4, "entry count"))
        names: list[str] = []
        lengths: list[int] = []
        for _ in range(n_entries):
            (name_len,) = struct.unpack("<I", _read_exact(fh, 4, "name length"))
            names.append(_read_exact(fh, name_len, "name").decode("utf-8"))
            (length,) = struct.unpack("<Q", _read_exact(fh, 8, "array length"))
            lengths.append(length)
        payload = fh.read()
    expected = 8 * sum(lengths)
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"{path}: payload has {len(payload)} bytes, header promises {expected}"
        )
    values = np.frombuffer(payload, dtype="<f8")
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError(f"{path}: payload contains non-finite values")
    entries: dict[str, np.ndarray] = {}
    offset = 0
    for name, length in zip(names, lengths):
        entries[name] = values[offset : offset + length].copy()
        offset += length
    return ParamSet(entries)
