"""Multilevel coset encoding, demodulation and multistage list decoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import ShapedConstellation
from .crc import CRCSpec, crc_bits, crc_check
from .lattice import PartitionChain
from .pmf import DegenerateEvidence
from .polar import PolarLevelCode, decode_batch, encode


@dataclass(frozen=True, eq=False)
class BombeCode:
    constellation: ShapedConstellation
    levels: tuple[PolarLevelCode, ...]
    crc: CRCSpec | None = None  # one CRC over the whole payload, sent on the last levels

    def __post_init__(self):
        c = self.constellation
        object.__setattr__(self, "levels", tuple(self.levels))
        if len(self.levels) != c.s:
            raise ValueError(f"need {c.s} level codes, got {len(self.levels)}")
        n_l = {lv.n_l for lv in self.levels}
        if len(n_l) != 1 or any(lv.d != c.d for lv in self.levels):
            raise ValueError("all levels must share n_l and d")
        if self.k_b < 0:
            raise ValueError("levels carry fewer bits than the payload CRC")

    @property
    def chain(self) -> PartitionChain:
        return self.constellation.chain

    @property
    def s(self) -> int:
        return self.constellation.s

    @property
    def d(self) -> int:
        return self.constellation.d

    @property
    def n_l(self) -> int:
        return self.levels[0].n_l

    @property
    def k_b(self) -> int:
        return self.k_carried - self.crc_width

    @property
    def k_carried(self) -> int:
        """Payload plus whole-payload CRC bits carried by the level codes."""
        return sum(lv.k_b for lv in self.levels)

    @property
    def crc_width(self) -> int:
        return 0 if self.crc is None else self.crc.width

    @property
    def n_b(self) -> int:
        return self.s * self.d * self.n_l

    @property
    def rate(self) -> float:
        return self.k_b / self.n_b

    @property
    def level_rates(self) -> list[float]:
        return [lv.rate for lv in self.levels]

    @property
    def bits_per_dim(self) -> float:
        return self.s * self.rate

    def split_payload(self, payload) -> list[np.ndarray]:
        """Append the whole-payload CRC (if any) and cut into level payloads."""
        payload = np.asarray(payload, dtype=np.uint8)
        if payload.shape[-1] != self.k_b:
            raise ValueError(f"expected {self.k_b} payload bits, got {payload.shape[-1]}")
        if self.crc is not None:
            payload = np.concatenate([payload, crc_bits(self.crc, payload)], axis=-1)
        cuts = np.cumsum([lv.k_b for lv in self.levels])[:-1]
        return np.split(payload, cuts, axis=-1)


def encode_labels(code: BombeCode, payload) -> np.ndarray:
    """Per-level codeword labels, shape ``(..., n_l, s)``."""
    parts = code.split_payload(payload)
    return np.stack([encode(lv, part) for lv, part in zip(code.levels, parts)], axis=-1)


def encode_frame(code: BombeCode, payload) -> np.ndarray:
    """Map payload bit(s) to ``n_l`` shaped lattice points, shape ``(..., n_l, d)``."""
    labels = encode_labels(code, payload)
    idx = np.sum(labels << (code.d * np.arange(code.s)), axis=-1)
    return code.constellation.points[idx]


def demod_full(c: ShapedConstellation, mu, sigma: float) -> np.ndarray:
    """Normalized exp(-|x - mu|^2 / 2 sigma^2) over every constellation point.

    ``mu`` has shape ``(..., d)``; output ``(..., r^d)`` in level-index order.
    """
    mu = np.asarray(mu, dtype=float)
    if not np.all(np.isfinite(mu)):
        raise ValueError("received points must be finite")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    pts = c.points
    # |x|^2 - 2<x, mu> ; the |mu|^2 term cancels in the normalization
    e = np.sum(pts * pts, axis=1) - 2.0 * (mu @ pts.T)
    e -= e.min(axis=-1, keepdims=True)
    p = np.exp(-e / (2.0 * sigma * sigma))
    return p / p.sum(axis=-1, keepdims=True)


def marginalize_level_batch(full, q: int, s: int, level: int, h=None, *, maxlog: bool = False):
    """Level-``level`` symbol PMFs given lower-level hypotheses ``h``.

    ``full``: ``(B, N, q^s)``; ``h``: ``(B, P, N)`` integer codes
    ``sum_{j<level} label_j q^j`` (ignored for level 0). Returns
    ``(pmfs (B, P, N, q), degenerate (B, P, N))``.
    """
    full = np.asarray(full, dtype=float)
    B, N, M = full.shape
    low = q**level
    high = M // low
    t = full.reshape(B, N, high, low)
    if level == 0:
        sel = t[:, None, :, :, 0]  # (B, 1, N, high)
    else:
        h = np.asarray(h, dtype=np.int64)
        idx = np.broadcast_to(h[..., None, None], h.shape + (high, 1))
        sel = np.take_along_axis(t[:, None], idx, axis=-1)[..., 0]  # (B, P, N, high)
    sel = sel.reshape(sel.shape[:-1] + (high // q, q))
    out = sel.max(axis=-2) if maxlog else sel.sum(axis=-2)
    tot = out.sum(axis=-1, keepdims=True)
    bad = tot[..., 0] <= 0
    out = np.where(tot > 0, out / np.where(tot > 0, tot, 1.0), 1.0 / q)
    return out, bad


def marginalize_level(full_pmf, c: ShapedConstellation, level: int, h_labels=(), *, maxlog=False) -> np.ndarray:
    """Single-point form: ``h_labels`` are the decided labels of levels below ``level``."""
    q = c.q
    code = sum(int(lab) * q**j for j, lab in enumerate(h_labels))
    out, bad = marginalize_level_batch(np.asarray(full_pmf)[None, None], q, c.s, level, np.array([[[code]]]), maxlog=maxlog)
    if bad.any():
        raise DegenerateEvidence("no constellation mass is consistent with the lower-level hypothesis")
    return out[0, 0, 0]


@dataclass
class FrameDecode:
    payload: np.ndarray  # (B, k_b)
    crc_ok: np.ndarray  # (B, s) per-level CRC flags of the selected path
    metric: np.ndarray  # (B,)
    valid: np.ndarray  # (B,) all level CRCs and the payload CRC valid on the selected path
    labels: np.ndarray  # (B, n_l, s) decided codeword labels


def decode_frames(
    code: BombeCode,
    received,
    sigma: float,
    list_size: int = 8,
    *,
    maxlog: bool = False,
    propagate: bool = True,
    kernel: str = "fwht",
) -> FrameDecode:
    """Multistage CA-SCL decoding of a batch of frames ``(B, n_l, d)``.

    Every surviving path of stage ``i`` conditions the stage ``i+1`` channel
    on its own decisions. With ``propagate=False`` only the best path (CRC
    valid preferred) is handed to the next stage.
    """
    rx = np.asarray(received, dtype=float)
    if rx.ndim == 2:
        rx = rx[None]
    c = code.constellation
    q, s = c.q, c.s
    B = rx.shape[0]
    full = demod_full(c, rx, sigma)

    metric = np.zeros((B, 1))
    hcode = np.zeros((B, 1, code.n_l), dtype=np.int64)
    x_hist: list[np.ndarray] = []
    info_hist: list[np.ndarray] = []
    ok_hist: list[np.ndarray] = []
    bidx = np.arange(B)[:, None]

    for i, lv in enumerate(code.levels):
        pmfs, bad = marginalize_level_batch(full, q, s, i, hcode, maxlog=maxlog)
        metric = metric + np.log(q) * bad.sum(axis=-1)
        res = decode_batch(lv, pmfs, list_size, metric, maxlog=maxlog, kernel=kernel)
        o = res.origin
        x_hist = [xh[bidx, o] for xh in x_hist] + [res.x]
        info_hist = [ih[bidx, o] for ih in info_hist] + [res.info]
        ok_hist = [oh[bidx, o] for oh in ok_hist] + [res.crc_ok]
        hcode = hcode[bidx, o] + res.x * q**i
        metric = res.metric
        if not propagate and i < s - 1:
            keep = _best_index(res.crc_ok, metric)[:, None]
            x_hist = [xh[bidx, keep] for xh in x_hist]
            info_hist = [ih[bidx, keep] for ih in info_hist]
            ok_hist = [oh[bidx, keep] for oh in ok_hist]
            hcode = hcode[bidx, keep]
            metric = metric[bidx, keep]

    ok = np.stack(ok_hist, axis=-1)  # (B, P, s)
    valid = ok.all(axis=-1)
    carried = np.concatenate(info_hist, axis=-1)
    if code.crc is not None:
        valid &= crc_check(code.crc, carried)
    best = _best_index(valid, metric)
    sel = lambda a: a[np.arange(B), best]  # noqa: E731
    payload = sel(carried)[:, : code.k_b]
    labels = np.stack([sel(xh) for xh in x_hist], axis=-1)
    return FrameDecode(payload, sel(ok), sel(metric), sel(valid), labels)


def _best_index(valid, metric):
    """Lowest-metric valid path per frame, else the lowest-metric path."""
    m = np.where(valid, metric, np.inf)
    best = np.argmin(m, axis=1)
    none = ~valid.any(axis=1)
    return np.where(none, np.argmin(metric, axis=1), best)


def decode_frame(code: BombeCode, received, sigma: float, list_size: int = 8, **kw):
    out = decode_frames(code, np.asarray(received)[None], sigma, list_size, **kw)
    return out.payload[0], out.crc_ok[0], float(out.metric[0])
