"""Binary checkpoint codec.

Layout (little-endian):
    b"SSGRL1"
    12 x int64: C, W, H, N, d_s, d1, d2, d_h, d_o, T, variant code, seed
    per parameter, in canonical order until end of file:
        u32 name length, UTF-8 name, u32 rank, rank x u32 extents, float64 payload
"""
from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import List, Tuple

import numpy as np

from errors import ConfigurationError, FormatError

from .models import ModelConfig, Variant
from .params import ParameterSet

logger = logging.getLogger("SSGRL.Checkpoint")

MAGIC = b"SSGRL1"
CONFIG_FIELDS = ("C", "W", "H", "N", "d_s", "d1", "d2", "d_h", "d_o", "T", "variant", "seed")
VARIANT_CODES = {
    Variant.FULL: 0,
    Variant.NO_SD: 1,
    Variant.NO_SD_CONCAT: 2,
    Variant.NO_SI: 3,
    Variant.BASELINE: 4,
}
CODE_VARIANTS = {code: variant for variant, code in VARIANT_CODES.items()}


def encode_checkpoint(config: ModelConfig, params: ParameterSet) -> bytes:
    params.check_layout(config)
    header = [
        VARIANT_CODES[config.variant] if name == "variant" else getattr(config, name) for name in CONFIG_FIELDS
    ]
    chunks: List[bytes] = [MAGIC, np.array(header, dtype="<i8").tobytes()]
    for name, param in params.items():
        encoded = name.encode("utf-8")
        chunks.append(np.array([len(encoded)], dtype="<u4").tobytes())
        chunks.append(encoded)
        chunks.append(np.array([param.ndim] + list(param.shape), dtype="<u4").tobytes())
        chunks.append(param.data.astype("<f8").tobytes())
    return b"".join(chunks)


def save_checkpoint(path: Path, config: ModelConfig, params: ParameterSet) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = encode_checkpoint(config, params)
    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "wb") as handle:
        handle.write(payload)
    os.replace(tmp_path, path)
    logger.info("💾 [CKPT] 检查点已写入 %s (%d 个张量, %d 字节)", path, len(params), len(payload))
    return path


class _Reader:
    def __init__(self, payload: bytes):
        self.payload = payload
        self.offset = 0

    @property
    def exhausted(self) -> bool:
        return self.offset >= len(self.payload)

    def take(self, count: int, what: str) -> bytes:
        end = self.offset + count
        if end > len(self.payload):
            raise FormatError(
                f"truncated {what}: need {count} bytes, {len(self.payload) - self.offset} left",
                offset=self.offset,
            )
        chunk = self.payload[self.offset:end]
        self.offset = end
        return chunk

    def array(self, dtype: str, count: int, what: str) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(itemsize * count, what), dtype=dtype, count=count)


def decode_checkpoint(payload: bytes) -> Tuple[ModelConfig, ParameterSet]:
    reader = _Reader(payload)
    magic = reader.take(len(MAGIC), "magic")
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)

    config_offset = reader.offset
    values = reader.array("<i8", len(CONFIG_FIELDS), "configuration block")
    raw = dict(zip(CONFIG_FIELDS, (int(value) for value in values)))
    code = raw.pop("variant")
    if code not in CODE_VARIANTS:
        raise FormatError(f"unknown variant code {code}", offset=config_offset)
    try:
        config = ModelConfig.create(variant=CODE_VARIANTS[code], **raw)
    except ConfigurationError as exc:
        raise FormatError(f"invalid configuration block: {exc}", offset=config_offset) from None

    expected = ParameterSet.zeros(config)
    expected_layout = list(expected.shapes().items())
    position = 0
    while not reader.exhausted:
        start = reader.offset
        name_length = int(reader.array("<u4", 1, "name length")[0])
        name = reader.take(name_length, "parameter name").decode("utf-8", errors="replace")
        rank = int(reader.array("<u4", 1, "rank")[0])
        shape = tuple(int(extent) for extent in reader.array("<u4", rank, "extents"))
        if position >= len(expected_layout):
            raise FormatError(f"unexpected extra parameter '{name}'", offset=start)
        expected_name, expected_shape = expected_layout[position]
        if name != expected_name or shape != expected_shape:
            raise FormatError(
                f"parameter {position} is '{name}' {shape}, expected '{expected_name}' {expected_shape}",
                offset=start,
            )
        count = int(np.prod(shape)) if shape else 1
        data = reader.array("<f8", count, f"payload of '{name}'")
        expected[name].data[...] = data.reshape(shape).astype(np.float64)
        position += 1

    if position != len(expected_layout):
        missing = [name for name, _ in expected_layout[position:]]
        raise FormatError(f"checkpoint ends before parameters {missing}", offset=reader.offset)
    return config, expected


def load_checkpoint(path: Path) -> Tuple[ModelConfig, ParameterSet]:
    path = Path(path)
    config, params = decode_checkpoint(path.read_bytes())
    logger.info("📂 [CKPT] 检查点已加载 %s (variant=%s, C=%d)", path, config.variant.value, config.C)
    return config, params
