"""On-disk formats: sampled functions, bitmask sets, canonical JSON.

Sampled-function binary layout (little-endian), 32-byte header:

    offset  size  field
    0       4     magic b"FLAG"
    4       4     n   (uint32)
    8       4     m   (uint32)
    12      4     L   (uint32)
    16      4     tag (uint32: 0 = base, 1 = lifted)
    20      8     side (float64)
    28      4     reserved, zero

followed by the complex values as (re, im) float64 pairs in row-major
order.  A sidecar ``<path>.json`` descriptor repeats the metadata.

Bitmask sets are stored as run-length-encoded JSON together with their
measure record.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .grid import Grid, SampledFunction, TAG_BASE, TAG_LIFTED, make_grid

MAGIC = b"FLAG"
_HEADER = struct.Struct("<4sIIIId4x")
_TAG_CODE = {TAG_BASE: 0, TAG_LIFTED: 1}
_TAG_NAME = {v: k for k, v in _TAG_CODE.items()}


class StorageError(IOError):
    """Malformed or missing artifact file."""


def canonical_json(obj) -> str:
    """Deterministic JSON encoding (sorted keys, no whitespace)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_json(path: Path | str, obj) -> None:
    Path(path).write_text(canonical_json(obj) + "\n")


def read_json(path: Path | str):
    p = Path(path)
    if not p.exists():
        raise StorageError(f"missing artifact: {p}")
    return json.loads(p.read_text())


def sha256_of(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def write_function(path: Path | str, f: SampledFunction, extra: dict | None = None) -> None:
    path = Path(path)
    g = f.grid
    header = _HEADER.pack(MAGIC, g.n, g.m, g.L, _TAG_CODE[f.tag], g.side)
    flat = np.ascontiguousarray(f.values, dtype=np.complex128)
    pairs = flat.view(np.float64).astype("<f8", copy=False)
    path.write_bytes(header + pairs.tobytes())
    sidecar = {
        "magic": "FLAG",
        "n": g.n,
        "m": g.m,
        "L": g.L,
        "side": g.side,
        "tag": f.tag,
        "shape": list(f.values.shape),
        "dtype": "complex128 as little-endian float64 (re, im) pairs, row-major",
    }
    if extra:
        sidecar.update(extra)
    write_json(path.with_name(path.name + ".json"), sidecar)


def read_function(path: Path | str) -> SampledFunction:
    path = Path(path)
    if not path.exists():
        raise StorageError(f"missing artifact: {path}")
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise StorageError(f"truncated header in {path}")
    magic, n, m, L, tag_code, side = _HEADER.unpack(raw[: _HEADER.size])
    if magic != MAGIC:
        raise StorageError(f"bad magic in {path}: {magic!r}")
    if tag_code not in _TAG_NAME:
        raise StorageError(f"unknown tag code {tag_code} in {path}")
    tag = _TAG_NAME[tag_code]
    grid = make_grid(n, m, L, side)
    shape = grid.shape if tag == TAG_BASE else grid.lifted_shape
    count = int(np.prod(shape))
    expected = _HEADER.size + 16 * count
    if len(raw) != expected:
        raise StorageError(f"payload size mismatch in {path}: {len(raw)} != {expected}")
    pairs = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    vals = pairs.view(np.complex128).reshape(shape)
    return SampledFunction(grid, vals.copy(), tag)


def mask_to_rle(mask: np.ndarray) -> list[list[int]]:
    """Row-major run-length encoding as [value, count] pairs."""
    flat = np.asarray(mask, dtype=np.uint8).ravel()
    if flat.size == 0:
        return []
    edges = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], edges))
    ends = np.concatenate((edges, [flat.size]))
    return [[int(flat[s]), int(e - s)] for s, e in zip(starts, ends)]


def rle_to_mask(runs: list[list[int]], shape: tuple[int, ...]) -> np.ndarray:
    total = int(np.prod(shape))
    flat = np.empty(total, dtype=bool)
    pos = 0
    for value, count in runs:
        flat[pos : pos + count] = bool(value)
        pos += count
    if pos != total:
        raise StorageError(f"RLE length {pos} does not match shape {shape}")
    return flat.reshape(shape)


def write_set(path: Path | str, grid: Grid, mask: np.ndarray) -> None:
    cellvol = grid.cell ** mask.ndim
    record = {
        "shape": list(mask.shape),
        "grid": {"n": grid.n, "m": grid.m, "L": grid.L, "side": grid.side},
        "cell_count": int(np.count_nonzero(mask)),
        "measure": float(np.count_nonzero(mask) * cellvol),
        "runs": mask_to_rle(mask),
    }
    write_json(path, record)


def read_set(path: Path | str) -> tuple[Grid, np.ndarray]:
    record = read_json(path)
    g = record["grid"]
    grid = make_grid(g["n"], g["m"], g["L"], g["side"])
    mask = rle_to_mask(record["runs"], tuple(record["shape"]))
    return grid, mask
