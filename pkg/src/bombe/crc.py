"""CRC attachment with the 3GPP 38.212 generator polynomials.

Registers start at zero and there is no final XOR, so the CRC is a linear map
of the payload; the batched path multiplies by a cached GF(2) matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class CRCSpec:
    name: str
    poly: int  # generator including the leading x^width term
    width: int

    def __post_init__(self):
        if self.poly.bit_length() - 1 != self.width:
            raise ValueError(f"{self.name}: polynomial degree != width")


def _poly(*exps: int) -> int:
    return sum(1 << e for e in exps)


CRC6 = CRCSpec("CRC6", _poly(6, 5, 0), 6)
CRC11 = CRCSpec("CRC11", _poly(11, 10, 9, 5, 0), 11)
CRC16 = CRCSpec("CRC16", _poly(16, 12, 5, 0), 16)
CRC24A = CRCSpec("CRC24A", _poly(24, 23, 18, 17, 14, 11, 10, 7, 6, 5, 4, 3, 1, 0), 24)
CRC24B = CRCSpec("CRC24B", _poly(24, 23, 6, 5, 1, 0), 24)
CRC24C = CRCSpec("CRC24C", _poly(24, 23, 21, 20, 17, 15, 13, 12, 8, 4, 2, 1, 0), 24)

BY_NAME = {c.name: c for c in (CRC6, CRC11, CRC16, CRC24A, CRC24B, CRC24C)}


def crc_bits_reference(spec: CRCSpec, bits) -> np.ndarray:
    """Bit-serial long division; MSB of the remainder first."""
    reg = 0
    top = 1 << spec.width
    for b in bits:
        reg = (reg << 1) | int(b)
        if reg & top:
            reg ^= spec.poly
    for _ in range(spec.width):
        reg <<= 1
        if reg & top:
            reg ^= spec.poly
    return np.array([(reg >> (spec.width - 1 - i)) & 1 for i in range(spec.width)], dtype=np.uint8)


@lru_cache(maxsize=64)
def _crc_matrix(spec: CRCSpec, k: int) -> np.ndarray:
    """Row i is the CRC of the unit payload e_i, i.e. x^(k-1-i+width) mod g."""
    top = 1 << spec.width
    rems = []
    reg = 1  # x^0 mod g, stepped to x^(j + width) below
    for _ in range(spec.width):
        reg <<= 1
        if reg & top:
            reg ^= spec.poly
    for _ in range(k):
        rems.append(reg)
        reg <<= 1
        if reg & top:
            reg ^= spec.poly
    shifts = spec.width - 1 - np.arange(spec.width)
    r = np.array(rems[::-1], dtype=np.int64)
    return ((r[:, None] >> shifts) & 1).astype(np.uint8)


def crc_bits(spec: CRCSpec, bits) -> np.ndarray:
    """Batched CRC over the last axis of ``bits``."""
    bits = np.asarray(bits, dtype=np.uint8)
    k = bits.shape[-1]
    if k == 0:
        return np.zeros(bits.shape[:-1] + (spec.width,), dtype=np.uint8)
    G = _crc_matrix(spec, k)
    return ((bits.astype(np.int64) @ G.astype(np.int64)) & 1).astype(np.uint8)


def crc_check(spec: CRCSpec, bits_with_crc) -> np.ndarray:
    x = np.asarray(bits_with_crc, dtype=np.uint8)
    k = x.shape[-1] - spec.width
    return np.all(crc_bits(spec, x[..., :k]) == x[..., k:], axis=-1)


def crc_for_payload(k: int) -> CRCSpec | None:
    """5G control-channel style choice by payload size."""
    if k <= 0:
        return None
    if k < 20:
        return CRC6
    if k <= 200:
        return CRC11
    return CRC24C
