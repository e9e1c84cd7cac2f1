"""FMAP1 feature-map files.

    b"FMAP1" | u32 W | u32 H | u32 N | W*H*N float32, w-major then h then channel
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from errors import FormatError
from model.decoupling import FeatureMap

FMAP_MAGIC = b"FMAP1"
HEADER_SIZE = len(FMAP_MAGIC) + 3 * 4


def encode_feature_map(fm: FeatureMap) -> bytes:
    header = np.array([fm.width, fm.height, fm.channels], dtype="<u4").tobytes()
    return FMAP_MAGIC + header + fm.values.astype("<f4").tobytes(order="C")


def decode_feature_map(payload: bytes) -> FeatureMap:
    if len(payload) < len(FMAP_MAGIC) or payload[: len(FMAP_MAGIC)] != FMAP_MAGIC:
        raise FormatError(f"bad magic {payload[: len(FMAP_MAGIC)]!r}, expected {FMAP_MAGIC!r}", offset=0)
    if len(payload) < HEADER_SIZE:
        raise FormatError("truncated header", offset=len(payload))
    width, height, channels = (int(v) for v in np.frombuffer(payload, dtype="<u4", count=3, offset=len(FMAP_MAGIC)))
    if min(width, height, channels) < 1:
        raise FormatError(
            f"extents must be >= 1, got W={width} H={height} N={channels}", offset=len(FMAP_MAGIC)
        )

    count = width * height * channels
    expected = HEADER_SIZE + 4 * count
    if len(payload) < expected:
        raise FormatError(
            f"truncated payload: {count} values need {expected} bytes, file has {len(payload)}",
            offset=len(payload),
        )
    if len(payload) > expected:
        raise FormatError(f"{len(payload) - expected} trailing bytes after payload", offset=expected)
    values = np.frombuffer(payload, dtype="<f4", count=count, offset=HEADER_SIZE)
    return FeatureMap(values.astype(np.float64).reshape(width, height, channels))


def load_feature_map(path: Path) -> FeatureMap:
    return decode_feature_map(Path(path).read_bytes())


def save_feature_map(fm: FeatureMap, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "wb") as handle:
        handle.write(encode_feature_map(fm))
    os.replace(tmp_path, path)
    return path
