"""Polar codes over (Z/2Z)^d: systematic encoding and CRC-aided list decoding.

Symbols are d-bit integer labels; lane ``j`` is bit ``j``. The transform is
the Arikan kernel [[1, 0], [1, 1]] applied to every lane in natural
(non-bit-reversed) order, so a length-N block maps ``u -> x`` with
``x[:N/2] = T(u[:N/2]) ^ T(u[N/2:])`` and ``x[N/2:] = T(u[N/2:])``.

The list decoder runs a batch of frames and all their paths at once. Stored
messages are addressed through per-layer index maps, so cloning a path costs
an integer gather instead of a copy of its message arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .crc import CRCSpec, crc_bits, crc_check
from .pmf import FLOOR, bit_masks, condition_product_batch, xor_convolve


def polar_transform(u) -> np.ndarray:
    """x = u G_N with G_N the n-fold Kronecker power of [[1,0],[1,1]] (last axis)."""
    x = np.array(u, dtype=np.int64, copy=True)
    N = x.shape[-1]
    lead = x.shape[:-1]
    h = 1
    while h < N:
        v = x.reshape(lead + (N // (2 * h), 2, h))
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x


def _gf2_inverse_unitriangular(M: np.ndarray) -> np.ndarray:
    M = M.astype(bool).copy()
    K = M.shape[0]
    inv = np.eye(K, dtype=bool)
    for c in range(K):
        rows = np.flatnonzero(M[c + 1 :, c]) + c + 1
        if rows.size:
            M[rows] ^= M[c]
            inv[rows] ^= inv[c]
    return inv


@dataclass(frozen=True, eq=False)
class PolarLevelCode:
    """One multilevel component: ``n_l`` symbols of ``d`` bit lanes.

    ``frozen[t, j]`` marks lane ``j`` of input symbol ``t`` as frozen to zero.
    ``order`` lists the unfrozen ``(t, j)`` positions most reliable first;
    payload bits fill it first and CRC bits follow.
    """

    n_l: int
    d: int
    frozen: np.ndarray
    crc: CRCSpec | None = None
    order: np.ndarray | None = field(default=None)

    def __post_init__(self):
        n = self.n_l.bit_length() - 1
        if self.n_l < 1 or (1 << n) != self.n_l:
            raise ValueError("n_l must be a power of two")
        frozen = np.asarray(self.frozen, dtype=bool)
        if frozen.shape != (self.n_l, self.d):
            raise ValueError(f"frozen mask must have shape ({self.n_l}, {self.d})")
        frozen = frozen.copy()
        frozen.setflags(write=False)
        object.__setattr__(self, "frozen", frozen)
        free = np.argwhere(~frozen)
        if self.order is None:
            order = free
        else:
            order = np.asarray(self.order, dtype=np.int64).reshape(-1, 2)
            if sorted(map(tuple, order.tolist())) != sorted(map(tuple, free.tolist())):
                raise ValueError("order must list exactly the unfrozen positions")
        order = order.astype(np.int64)
        order.setflags(write=False)
        object.__setattr__(self, "order", order)
        if self.k_b < 0:
            raise ValueError("not enough unfrozen positions for the CRC")

    @property
    def q(self) -> int:
        return 1 << self.d

    @property
    def n_unfrozen(self) -> int:
        return int(self.order.shape[0])

    @property
    def crc_width(self) -> int:
        return 0 if self.crc is None else self.crc.width

    @property
    def k_b(self) -> int:
        return self.n_unfrozen - self.crc_width

    @property
    def n_b(self) -> int:
        return self.n_l * self.d

    @property
    def rate(self) -> float:
        return self.k_b / self.n_b

    @cached_property
    def _lane_solvers(self):
        """Per lane: unfrozen symbol indices and the GF(2) inverse of G restricted to them."""
        out = []
        for j in range(self.d):
            A = np.flatnonzero(~self.frozen[:, j])
            # G[a, b] = 1 iff b's bits are a subset of a's bits
            G = (A[None, :] & ~A[:, None]) == 0
            out.append((A, _gf2_inverse_unitriangular(G).astype(np.int64)))
        return out

    def attach_crc(self, info) -> np.ndarray:
        info = np.asarray(info, dtype=np.uint8)
        if self.crc is None:
            return info
        return np.concatenate([info, crc_bits(self.crc, info)], axis=-1)

    def read_bits(self, x) -> np.ndarray:
        """Bits at the unfrozen codeword positions, in ``order``."""
        x = np.asarray(x, dtype=np.int64)
        return ((x[..., self.order[:, 0]] >> self.order[:, 1]) & 1).astype(np.uint8)


def encode(code: PolarLevelCode, info) -> np.ndarray:
    """Systematic encoding of ``info`` (last axis k_b) to ``n_l`` symbol labels."""
    info = np.asarray(info, dtype=np.uint8)
    if info.shape[-1] != code.k_b:
        raise ValueError(f"expected {code.k_b} info bits, got {info.shape[-1]}")
    lead = info.shape[:-1]
    bits = code.attach_crc(info)
    w = np.zeros(lead + (code.n_l, code.d), dtype=np.int64)
    w[..., code.order[:, 0], code.order[:, 1]] = bits
    labels = np.zeros(lead + (code.n_l,), dtype=np.int64)
    for j, (A, inv) in enumerate(code._lane_solvers):
        if A.size:
            uA = (w[..., A, j] @ inv) & 1
            labels[..., A] |= uA << j
    return polar_transform(labels)


def encode_nonsystematic(code: PolarLevelCode, u) -> np.ndarray:
    return polar_transform(u)


@dataclass
class DecoderPath:
    """One list-decoder hypothesis for a single frame."""

    u: np.ndarray  # decided input symbols
    x: np.ndarray  # re-encoded codeword symbols
    metric: float
    info_bits: np.ndarray
    crc_ok: bool
    origin: int = 0


@dataclass
class ListResult:
    """Batched list-decoder output, paths sorted by metric within each frame."""

    u: np.ndarray  # (B, P, N)
    x: np.ndarray  # (B, P, N)
    metric: np.ndarray  # (B, P)
    origin: np.ndarray  # (B, P) index of the incoming path each survivor extends
    bits: np.ndarray  # (B, P, k_b + crc)
    crc_ok: np.ndarray  # (B, P)
    k_b: int

    @property
    def info(self) -> np.ndarray:
        return self.bits[..., : self.k_b]


def _nlog(p):
    return -np.log(np.maximum(p, FLOOR))


class _ListDecoder:
    def __init__(self, code: PolarLevelCode, channel, metric0, list_size, maxlog, kernel):
        self.code = code
        self.L = int(list_size)
        self.maxlog = maxlog
        self.kernel = kernel
        self.penalty = np.log(code.q)
        B, P, N, q = channel.shape
        self.B, self.P, self.N, self.n = B, P, N, N.bit_length() - 1
        self.bidx = np.arange(B)[:, None]
        self.alpha = [None] * (self.n + 1)
        self.amap = [None] * (self.n + 1)
        self.left = [None] * (self.n + 1)
        self.lmap = [None] * (self.n + 1)
        self.alpha[0] = channel
        self.amap[0] = self._ident()
        self.u = np.zeros((B, P, N), dtype=np.int64)
        self.metric = np.array(metric0, dtype=float)
        self.origin = self._ident()
        self.masks = bit_masks(q)

    def _ident(self):
        return np.broadcast_to(np.arange(self.P), (self.B, self.P))

    def _read(self, store, maps, k):
        return store[k][self.bidx, maps[k]]

    def _reindex(self, parent):
        take = lambda a: np.take_along_axis(a, parent, axis=1)  # noqa: E731
        for k in range(self.n + 1):
            if self.amap[k] is not None:
                self.amap[k] = take(self.amap[k])
            if self.lmap[k] is not None:
                self.lmap[k] = take(self.lmap[k])
        self.u = self.u[self.bidx, parent]
        self.origin = take(self.origin)
        self.P = parent.shape[1]

    def run(self):
        x = self._node(0, 0)
        return x

    def _node(self, k, t0):
        if k == self.n:
            self._leaf(t0)
            return self.u[:, :, t0 : t0 + 1]
        a = self._read(self.alpha, self.amap, k)
        h = a.shape[2] // 2
        self.alpha[k + 1] = xor_convolve(a[:, :, :h], a[:, :, h:], method=self.kernel, maxlog=self.maxlog)
        self.amap[k + 1] = self._ident()
        bl = self._node(k + 1, t0)
        self.left[k + 1] = bl
        self.lmap[k + 1] = self._ident()
        a = self._read(self.alpha, self.amap, k)
        g, bad = condition_product_batch(a[:, :, :h], a[:, :, h:], bl)
        if bad.any():
            self.metric = self.metric + self.penalty * bad.sum(axis=-1)
        self.alpha[k + 1] = g
        self.amap[k + 1] = self._ident()
        br = self._node(k + 1, t0 + h)
        bl = self._read(self.left, self.lmap, k + 1)
        self.left[k + 1] = self.lmap[k + 1] = None
        return np.concatenate([bl ^ br, br], axis=-1)

    def _lane_probs(self, c, j):
        m = self.masks[j]
        if self.maxlog:
            p1 = np.max(np.where(m, c, 0.0), axis=-1)
            p0 = np.max(np.where(m, 0.0, c), axis=-1)
        else:
            p1 = np.sum(c[..., m], axis=-1)
            p0 = np.sum(c[..., ~m], axis=-1)
        tot = p0 + p1
        tot = np.where(tot > 0, tot, 1.0)
        return p0 / tot, p1 / tot

    def _condition(self, c, j, bit):
        keep = self.masks[j][None, None, :] == (np.asarray(bit)[..., None] == 1)
        c = np.where(keep, c, 0.0)
        tot = c.sum(axis=-1, keepdims=True)
        bad = tot[..., 0] <= 0
        if bad.any():
            c = np.where(bad[..., None], keep / keep.sum(axis=-1, keepdims=True), c)
            tot = np.where(bad[..., None], 1.0, tot)
        return c / tot

    def _leaf(self, t):
        c = self._read(self.alpha, self.amap, self.n)[:, :, 0, :]
        label = np.zeros((self.B, self.P), dtype=np.int64)
        for j in range(self.code.d):
            p0, p1 = self._lane_probs(c, j)
            if self.code.frozen[t, j]:
                self.metric = self.metric + _nlog(p0) + self.penalty * (p0 <= 0)
                c = self._condition(c, j, np.zeros_like(label))
                continue
            m2 = np.stack(
                (self.metric + _nlog(p0) + self.penalty * (p0 <= 0), self.metric + _nlog(p1) + self.penalty * (p1 <= 0)),
                axis=-1,
            ).reshape(self.B, 2 * self.P)
            if 2 * self.P <= self.L:
                sel = np.broadcast_to(np.arange(2 * self.P), (self.B, 2 * self.P))
            else:
                sel = np.argsort(m2, axis=1, kind="stable")[:, : self.L]
            parent = sel // 2
            bit = sel % 2
            self.metric = np.take_along_axis(m2, sel, axis=1)
            self._reindex(parent)
            c = c[self.bidx, parent]
            label = np.take_along_axis(label, parent, axis=1) | (bit << j)
            c = self._condition(c, j, bit)
        self.u[:, :, t] = label


def decode_batch(
    code: PolarLevelCode,
    channel,
    list_size: int = 8,
    metrics=None,
    *,
    maxlog: bool = False,
    kernel: str = "fwht",
) -> ListResult:
    """CA-SCL decoding of a batch of frames.

    ``channel`` holds per-symbol PMFs, shape ``(B, N, q)`` or ``(B, P0, N, q)``
    when each of ``P0`` incoming paths carries its own channel view; ``metrics``
    ``(B, P0)`` are the incoming path metrics.
    """
    ch = np.asarray(channel, dtype=float)
    if ch.ndim == 3:
        ch = ch[:, None]
    B, P0, N, q = ch.shape
    if N != code.n_l or q != code.q:
        raise ValueError(f"channel shape {ch.shape} does not match code ({code.n_l}, {code.q})")
    if list_size < 1:
        raise ValueError("list size must be >= 1")
    m0 = np.zeros((B, P0)) if metrics is None else np.asarray(metrics, dtype=float).reshape(B, P0)
    dec = _ListDecoder(code, ch, m0, list_size, maxlog, kernel)
    x = dec.run()
    # the incoming list may exceed L when no info lane ever branched
    order = np.argsort(dec.metric, axis=1, kind="stable")
    x = np.take_along_axis(x, order[..., None], axis=1)
    u = np.take_along_axis(dec.u, order[..., None], axis=1)
    metric = np.take_along_axis(dec.metric, order, axis=1)
    origin = np.take_along_axis(np.asarray(dec.origin), order, axis=1)
    bits = code.read_bits(x)
    ok = crc_check(code.crc, bits) if code.crc is not None else np.ones(metric.shape, dtype=bool)
    return ListResult(u, x, metric, origin, bits, ok, code.k_b)


def decode_scl(code: PolarLevelCode, channel_pmfs, list_size: int = 8, incoming_metrics=None, **kw):
    """Single-frame convenience wrapper returning :class:`DecoderPath` objects.

    ``channel_pmfs`` is ``(N, q)``, or ``(P0, N, q)`` together with
    ``incoming_metrics`` of length ``P0`` for multistage propagation.
    """
    ch = np.asarray(channel_pmfs, dtype=float)
    ch = ch[None] if ch.ndim == 2 else ch
    m0 = None if incoming_metrics is None else np.asarray(incoming_metrics, dtype=float)[None]
    res = decode_batch(code, ch[None], list_size, m0, **kw)
    return [
        DecoderPath(res.u[0, p], res.x[0, p], float(res.metric[0, p]), res.info[0, p], bool(res.crc_ok[0, p]), int(res.origin[0, p]))
        for p in range(res.metric.shape[1])
    ]


def decode_sc(code: PolarLevelCode, channel_pmfs, **kw) -> DecoderPath:
    return decode_scl(code, channel_pmfs, 1, **kw)[0]


def genie_sc(channel, u_true, *, maxlog: bool = False, kernel: str = "fwht"):
    """Genie-aided SC pass used for reliability estimation.

    At every (symbol, lane) the hard decision from the conditioned PMF is
    compared with the truth, then the true value is forced. Returns boolean
    errors and ``-log2 P(true bit)``, both of shape ``(B, N, d)``.
    """
    ch = np.asarray(channel, dtype=float)
    u_true = np.asarray(u_true, dtype=np.int64)
    B, N, q = ch.shape
    d = q.bit_length() - 1
    n = N.bit_length() - 1
    masks = bit_masks(q)
    err = np.zeros((B, N, d), dtype=bool)
    nll = np.zeros((B, N, d))

    def node(a, t0):
        size = a.shape[1]
        if size == 1:
            c = a[:, 0, :]
            ut = u_true[:, t0]
            for j in range(d):
                m = masks[j]
                p1 = np.max(np.where(m, c, 0.0), -1) if maxlog else c[:, m].sum(-1)
                p0 = np.max(np.where(m, 0.0, c), -1) if maxlog else c[:, ~m].sum(-1)
                tot = p0 + p1
                p1n = np.where(tot > 0, p1 / np.where(tot > 0, tot, 1), 0.5)
                b = (ut >> j) & 1
                err[:, t0, j] = (p1n > 0.5) != (b == 1)
                pt = np.where(b == 1, p1n, 1 - p1n)
                nll[:, t0, j] = -np.log2(np.maximum(pt, FLOOR))
                keep = m[None, :] == (b[:, None] == 1)
                c = np.where(keep, c, 0.0)
                s = c.sum(-1, keepdims=True)
                c = np.where(s > 0, c / np.where(s > 0, s, 1), keep / keep.sum(-1, keepdims=True))
            return ut[:, None]
        h = size // 2
        bl = node(xor_convolve(a[:, :h], a[:, h:], method=kernel, maxlog=maxlog), t0)
        g, _ = condition_product_batch(a[:, :h], a[:, h:], bl)
        br = node(g, t0 + h)
        return np.concatenate([bl ^ br, br], axis=-1)

    assert N == 1 << n
    node(ch, 0)
    return err, nll
