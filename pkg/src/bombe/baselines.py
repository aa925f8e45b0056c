"""Comparison schemes on 16-QAM at the same spectral efficiency.

* BICM polar: one binary CA-SCL polar code, a seeded interleaver and Gray
  labels on each 4-PAM rail.
* MLC polar: the coset machinery with the scalar lattice Z, r = 4, on each
  4-PAM rail of 16-QAM (natural set-partition labels). Two polar levels of
  length ``n_b / 2``. A Z^2 variant with 2-bit symbols is also provided.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import BombeCode, decode_frames, encode_frame
from .constellation import build
from .lattice import integer_lattice
from .polar import PolarLevelCode, decode_batch, encode, genie_sc, polar_transform

PAM4 = np.array([-1.5, -0.5, 0.5, 1.5])
# Gray labels (msb, lsb) for the PAM4 amplitudes above
GRAY4 = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.uint8)


def pam4_constellation():
    return build(integer_lattice(1), 4, (-1.5,))


def qam16_constellation():
    return build(integer_lattice(2), 4, (-1.5, -1.5))


def interleaver(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(np.random.SeedSequence([int(seed), 0x1A7E])).permutation(n)


def gray_map(bits) -> np.ndarray:
    """Bits ``(..., n)`` with n divisible by 4 -> real pairs ``(..., n/4, 2)``."""
    bits = np.asarray(bits, dtype=np.int64)
    b = bits.reshape(bits.shape[:-1] + (-1, 2, 2))  # (..., sym, rail, bit)
    # GRAY4 inverse: amplitude index from (msb, lsb)
    amp_idx = np.array([[0, 1], [3, 2]])[b[..., 0], b[..., 1]]
    return PAM4[amp_idx]


def gray_bit_pmfs(rx, sigma: float) -> np.ndarray:
    """Exact per-bit posteriors ``(..., n, 2)`` from received pairs ``(..., n/4, 2)``."""
    rx = np.asarray(rx, dtype=float)
    e = (rx[..., None] - PAM4) ** 2  # (..., sym, rail, 4)
    e -= e.min(axis=-1, keepdims=True)
    w = np.exp(-e / (2.0 * sigma * sigma))
    out = np.empty(rx.shape + (2, 2))
    for k in range(2):
        one = GRAY4[:, k] == 1
        p1 = w[..., one].sum(-1)
        p0 = w[..., ~one].sum(-1)
        tot = p0 + p1
        out[..., k, 0] = p0 / tot
        out[..., k, 1] = p1 / tot
    return out.reshape(rx.shape[:-2] + (-1, 2))


def gray_llr(rx, sigma: float) -> np.ndarray:
    p = gray_bit_pmfs(rx, sigma)
    return np.log(np.maximum(p[..., 0], 1e-300)) - np.log(np.maximum(p[..., 1], 1e-300))


@dataclass(frozen=True, eq=False)
class BicmCode:
    code: PolarLevelCode  # d = 1, n_l = n_b
    perm: np.ndarray

    def __post_init__(self):
        if self.code.d != 1 or self.code.n_l % 4:
            raise ValueError("BICM needs a binary code with n_b divisible by 4")

    @property
    def n_b(self) -> int:
        return self.code.n_l

    @property
    def k_b(self) -> int:
        return self.code.k_b


def bicm_encode(bc: BicmCode, payload) -> np.ndarray:
    cw = encode(bc.code, payload)
    return gray_map(cw[..., bc.perm])


def bicm_channel(bc: BicmCode, received, sigma: float) -> np.ndarray:
    p_int = gray_bit_pmfs(received, sigma)
    p = np.empty_like(p_int)
    p[..., bc.perm, :] = p_int
    return p


def bicm_decode(bc: BicmCode, received, sigma: float, list_size: int = 8, **kw):
    rx = np.asarray(received, dtype=float)
    single = rx.ndim == 2
    rx = rx[None] if single else rx
    res = decode_batch(bc.code, bicm_channel(bc, rx, sigma), list_size, **kw)
    best = np.where(res.crc_ok.any(axis=1), np.argmax(res.crc_ok, axis=1), 0)
    info = res.info[np.arange(len(rx)), best]
    ok = res.crc_ok[np.arange(len(rx)), best]
    return (info[0], ok[0]) if single else (info, ok)


@dataclass(frozen=True, eq=False)
class BicmSystem:
    """Construction view of BICM: one level of ``n_b`` binary positions."""

    n_b: int
    perm: np.ndarray
    s: int = 1
    d: int = 1
    es_dim: float = 1.25

    @property
    def n_l(self) -> int:
        return self.n_b

    def rate_dim(self, rate: float) -> float:
        return 2.0 * rate

    def genie_batch(self, sigma: float, trials: int, rng: np.random.Generator):
        u = rng.integers(0, 2, size=(trials, self.n_b))
        cw = polar_transform(u)
        tx = gray_map(cw[:, self.perm])
        rx = tx + sigma * rng.standard_normal(tx.shape)
        bc = BicmCode(PolarLevelCode(self.n_b, 1, np.ones((self.n_b, 1), bool)), self.perm)
        err, nll = genie_sc(bicm_channel(bc, rx, sigma), u)
        return err[:, None], nll[:, None]


# common transceiver surface used by the simulator


@dataclass(frozen=True, eq=False)
class MultilevelTransceiver:
    code: BombeCode
    maxlog: bool = False
    propagate: bool = True

    @property
    def k_b(self):
        return self.code.k_b

    @property
    def n_b(self):
        return self.code.n_b

    @property
    def es_dim(self):
        return self.code.constellation.es_dim

    @property
    def rate_dim(self):
        return self.code.bits_per_dim

    def encode(self, payload):
        return encode_frame(self.code, payload)

    def decode(self, received, sigma, list_size):
        out = decode_frames(self.code, received, sigma, list_size, maxlog=self.maxlog, propagate=self.propagate)
        return out.payload, out.valid


@dataclass(frozen=True, eq=False)
class BicmTransceiver:
    bicm: BicmCode
    maxlog: bool = False

    @property
    def k_b(self):
        return self.bicm.k_b

    @property
    def n_b(self):
        return self.bicm.n_b

    @property
    def es_dim(self):
        return float(np.mean(PAM4**2))

    @property
    def rate_dim(self):
        return 2.0 * self.k_b / self.n_b

    def encode(self, payload):
        return bicm_encode(self.bicm, payload)

    def decode(self, received, sigma, list_size):
        return bicm_decode(self.bicm, received, sigma, list_size, maxlog=self.maxlog)


def mlc_qam_baseline(levels, crc=None, *, maxlog: bool = False, propagate: bool = True) -> MultilevelTransceiver:
    """MLC polar on 16-QAM rails; binary levels use Z, 2-bit levels use Z^2."""
    c = pam4_constellation() if levels[0].d == 1 else qam16_constellation()
    return MultilevelTransceiver(BombeCode(c, tuple(levels), crc), maxlog, propagate)
