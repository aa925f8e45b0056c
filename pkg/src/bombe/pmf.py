"""PMF algebra over the group (Z/2Z)^d.

All functions broadcast over leading axes; the last axis has length q = 2^d
and is indexed by the integer label of the group element. PMFs stay in the
linear domain and are renormalized after every operation.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

FLOOR = 1e-300


class DegenerateEvidence(ArithmeticError):
    """All probability mass was removed by a conditioning step."""


def _bits(q: int) -> int:
    d = q.bit_length() - 1
    if q < 2 or (1 << d) != q:
        raise ValueError(f"PMF length {q} is not a power of two")
    return d


@lru_cache(maxsize=None)
def xor_table(q: int) -> np.ndarray:
    a = np.arange(q)
    return a[:, None] ^ a[None, :]


@lru_cache(maxsize=None)
def bit_masks(q: int) -> np.ndarray:
    """(d, q) array: entry [j, a] is bit j of label a."""
    d = _bits(q)
    return ((np.arange(q)[None, :] >> np.arange(d)[:, None]) & 1).astype(bool)


def normalize(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    tot = p.sum(axis=-1, keepdims=True)
    if np.any(tot <= 0):
        raise DegenerateEvidence("cannot normalize an all-zero PMF")
    return p / tot


def uniform(d: int) -> np.ndarray:
    q = 1 << d
    return np.full(q, 1.0 / q)


def point_mass(d: int, a: int) -> np.ndarray:
    p = np.zeros(1 << d)
    p[a] = 1.0
    return p


def fwht(a) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis."""
    a = np.asarray(a, dtype=float)
    q = a.shape[-1]
    d = _bits(q)
    lead = a.shape[:-1]
    x = a.reshape(lead + (2,) * d)
    for ax in range(len(lead), len(lead) + d):
        x0 = np.take(x, 0, axis=ax)
        x1 = np.take(x, 1, axis=ax)
        x = np.stack((x0 + x1, x0 - x1), axis=ax)
    return x.reshape(a.shape)


def xor_convolve_direct(p, q) -> np.ndarray:
    """out(a) = sum_b p(a^b) q(b), by the O(4^d) definition."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    T = xor_table(p.shape[-1])
    return np.einsum("...ab,...b->...a", p[..., T], q)


def xor_convolve_max(p, q) -> np.ndarray:
    T = xor_table(np.shape(p)[-1])
    return np.max(np.asarray(p)[..., T] * np.asarray(q)[..., None, :], axis=-1)


def xor_convolve(p, q, *, method: str = "fwht", maxlog: bool = False) -> np.ndarray:
    """XOR convolution of two PMFs (the upper channel-splitting kernel).

    ``method="fwht"`` uses the fast transform, ``"direct"`` the quadratic
    definition. ``maxlog`` replaces the sum over pairs with a max. The result
    is normalized and floored at ``FLOOR``.
    """
    if maxlog:
        out = xor_convolve_max(p, q)
    elif method == "fwht":
        q_len = np.shape(p)[-1]
        out = fwht(fwht(p) * fwht(q)) / q_len
        np.maximum(out, 0.0, out=out)
    elif method == "direct":
        out = xor_convolve_direct(p, q)
    else:
        raise ValueError(f"unknown method {method!r}")
    tot = out.sum(axis=-1, keepdims=True)
    out = out / np.where(tot > 0, tot, 1.0)
    return np.maximum(out, FLOOR)


def condition_product_batch(p, q, u):
    """out(b) ∝ p(u^b) q(b); returns ``(out, degenerate)``.

    Rows whose product is identically zero come back uniform and are flagged.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = p.shape[-1]
    u = np.asarray(u, dtype=np.int64)
    idx = u[..., None] ^ np.arange(n)
    out = np.take_along_axis(p, np.broadcast_to(idx, p.shape), axis=-1) * q
    tot = out.sum(axis=-1, keepdims=True)
    bad = tot[..., 0] <= 0
    out = np.where(tot > 0, out / np.where(tot > 0, tot, 1.0), 1.0 / n)
    return out, bad


def condition_product(p, q, u: int) -> np.ndarray:
    """Conditional PMF of the second input given the decided XOR ``u``."""
    out, bad = condition_product_batch(p, q, u)
    if np.any(bad):
        raise DegenerateEvidence("product of PMFs is identically zero")
    return out


def marginalize_bit(p, lane: int, *, maxlog: bool = False) -> np.ndarray:
    """Binary PMF ``[P(bit=0), P(bit=1)]`` of one lane (bit) of the label."""
    p = np.asarray(p, dtype=float)
    mask = bit_masks(p.shape[-1])[lane]
    if maxlog:
        one = np.max(np.where(mask, p, 0.0), axis=-1)
        zero = np.max(np.where(mask, 0.0, p), axis=-1)
    else:
        one = np.sum(p[..., mask], axis=-1)
        zero = np.sum(p[..., ~mask], axis=-1)
    tot = zero + one
    if np.any(tot <= 0):
        raise DegenerateEvidence("cannot marginalize an all-zero PMF")
    return np.stack((zero / tot, one / tot), axis=-1)


def condition_bit(p, lane: int, value: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    mask = bit_masks(p.shape[-1])[lane] == bool(value)
    out = np.where(mask, p, 0.0)
    tot = out.sum(axis=-1, keepdims=True)
    if np.any(tot <= 0):
        raise DegenerateEvidence(f"no mass on lane {lane} = {value}")
    return out / tot
