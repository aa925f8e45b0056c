import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bombe.crc import CRC6
from bombe.polar import PolarLevelCode, decode_batch, decode_sc, decode_scl, encode, genie_sc, polar_transform


def kron_matrix(n):
    F = np.array([[1, 0], [1, 1]])
    G = np.ones((1, 1), dtype=int)
    for _ in range(n):
        G = np.kron(G, F)
    return G


def random_code(rng, n_l, d, k, crc=None):
    frozen = np.ones((n_l, d), dtype=bool)
    pos = rng.choice(n_l * d, k, replace=False)
    frozen.flat[pos] = False
    return PolarLevelCode(n_l, d, frozen, crc)


def noisy_pmfs(rng, x, q, flip=0.1):
    """Symmetric channel: true label keeps 1 - flip, the rest share flip."""
    p = np.full(x.shape + (q,), flip / (q - 1))
    np.put_along_axis(p, x[..., None], 1 - flip, axis=-1)
    return p


@given(st.integers(0, 5), st.integers(0, 2**32 - 1))
def test_transform_is_kronecker_power(n, seed):
    u = np.random.default_rng(seed).integers(0, 2, 1 << n)
    np.testing.assert_array_equal(polar_transform(u), (u @ kron_matrix(n)) % 2)


def test_transform_involution_and_linearity(rng):
    u = rng.integers(0, 16, (10, 32))
    v = rng.integers(0, 16, (10, 32))
    np.testing.assert_array_equal(polar_transform(polar_transform(u)), u)
    np.testing.assert_array_equal(polar_transform(u ^ v), polar_transform(u) ^ polar_transform(v))


@given(st.integers(0, 2**32 - 1), st.sampled_from([(8, 1), (8, 2), (16, 4), (32, 2)]))
def test_systematic_roundtrip(seed, shape):
    rng = np.random.default_rng(seed)
    n_l, d = shape
    k = int(rng.integers(1, n_l * d))
    code = random_code(rng, n_l, d, k)
    info = rng.integers(0, 2, (3, code.k_b), dtype=np.uint8)
    x = encode(code, info)
    np.testing.assert_array_equal(code.read_bits(x), info)
    # codeword really is u G with u frozen to zero at frozen positions
    u = polar_transform(x)
    lanes = (u[..., None] >> np.arange(d)) & 1
    assert not lanes[:, code.frozen].any()


def test_systematic_with_crc_and_order(rng):
    frozen = np.ones((16, 2), dtype=bool)
    frozen[8:] = False
    order = np.argwhere(~frozen)[::-1]
    code = PolarLevelCode(16, 2, frozen, CRC6, order)
    assert code.k_b == 10 and code.rate == pytest.approx(10 / 32)
    info = rng.integers(0, 2, code.k_b, dtype=np.uint8)
    x = encode(code, info)
    np.testing.assert_array_equal(code.read_bits(x)[:10], info)
    with pytest.raises(ValueError):
        PolarLevelCode(16, 2, frozen, None, order[:-1])
    with pytest.raises(ValueError):
        PolarLevelCode(12, 2, np.ones((12, 2), bool))
    with pytest.raises(ValueError):
        encode(code, info[:-1])


def test_two_symbol_path_metrics():
    code = PolarLevelCode(2, 1, np.zeros((2, 1), dtype=bool))
    paths = decode_scl(code, [[0.9, 0.1], [0.8, 0.2]], list_size=4)
    probs = sorted(np.exp(-p.metric) for p in paths)[::-1]
    np.testing.assert_allclose(probs, [0.72, 0.18, 0.08, 0.02], atol=1e-12)
    assert decode_sc(code, [[0.9, 0.1], [0.8, 0.2]]).x.tolist() == [0, 0]


def llr_sc(llr, frozen):
    """Textbook binary SC in natural order with exact box-plus."""
    N = len(llr)
    if N == 1:
        u = 0 if frozen[0] else int(llr[0] < 0)
        return np.array([u]), np.array([u])
    h = N // 2
    a, b = llr[:h], llr[h:]
    f = 2 * np.arctanh(np.clip(np.tanh(a / 2) * np.tanh(b / 2), -1 + 1e-15, 1 - 1e-15))
    u1, x1 = llr_sc(f, frozen[:h])
    g = b + (1 - 2 * x1) * a
    u2, x2 = llr_sc(g, frozen[h:])
    return np.concatenate([u1, u2]), np.concatenate([x1 ^ x2, x2])


@pytest.mark.parametrize("seed", range(20))
def test_binary_reduction_matches_llr_sc(seed):
    rng = np.random.default_rng(seed)
    code = random_code(rng, 32, 1, 16)
    x = encode(code, rng.integers(0, 2, 16, dtype=np.uint8))
    p1 = 1 / (1 + np.exp(-(1 - 2.0 * x) * 0 - rng.normal(2 * (1 - 2.0 * x), 2)))
    llr = np.log(p1 / (1 - p1))
    pm = np.stack([p1, 1 - p1], axis=-1)
    ref_u, _ = llr_sc(llr, code.frozen[:, 0])
    np.testing.assert_array_equal(decode_sc(code, pm).u, ref_u)


def ml_decode(code, pm):
    best, arg = -np.inf, None
    for bits in itertools.product([0, 1], repeat=code.k_b):
        x = encode(code, np.array(bits, dtype=np.uint8))
        ll = np.sum(np.log(pm[np.arange(code.n_l), x]))
        if ll > best:
            best, arg = ll, x
    return arg


@pytest.mark.parametrize("seed", range(10))
def test_full_list_is_maximum_likelihood(seed):
    rng = np.random.default_rng(seed)
    code = random_code(rng, 8, 2, 6)
    x = encode(code, rng.integers(0, 2, 6, dtype=np.uint8))
    pm = noisy_pmfs(rng, x, 4, 0.35) * rng.uniform(0.5, 1.5, (8, 4))
    pm /= pm.sum(-1, keepdims=True)
    paths = decode_scl(code, pm, list_size=64)
    np.testing.assert_array_equal(paths[0].x, ml_decode(code, pm))
    # metric is -log of the path likelihood
    ll = np.sum(np.log(pm[np.arange(8), paths[0].x]))
    assert paths[0].metric == pytest.approx(-ll, abs=1e-9)


def test_list_sorted_and_l1_equals_sc(rng):
    code = random_code(rng, 16, 4, 30)
    x = encode(code, rng.integers(0, 2, 30, dtype=np.uint8))
    pm = noisy_pmfs(rng, x, 16, 0.5)
    paths = decode_scl(code, pm, list_size=8)
    m = [p.metric for p in paths]
    assert m == sorted(m) and len(paths) == 8
    np.testing.assert_array_equal(decode_scl(code, pm, 1)[0].u, decode_sc(code, pm).u)


def test_noiseless_decoding_and_crc(rng):
    frozen = np.ones((16, 4), dtype=bool)
    frozen[4:] = False
    code = PolarLevelCode(16, 4, frozen, CRC6)
    info = rng.integers(0, 2, (5, code.k_b), dtype=np.uint8)
    x = encode(code, info)
    res = decode_batch(code, noisy_pmfs(rng, x, 16, 1e-6), 4)
    np.testing.assert_array_equal(res.info[:, 0], info)
    assert res.crc_ok[:, 0].all()


def test_incoming_paths_keep_origin(rng):
    code = random_code(rng, 8, 2, 8)
    x = encode(code, rng.integers(0, 2, 8, dtype=np.uint8))
    good = noisy_pmfs(rng, x, 4, 0.01)
    bad = np.full((8, 4), 0.25)
    paths = decode_scl(code, np.stack([bad, good]), 4, incoming_metrics=[0.0, 0.5])
    assert paths[0].origin == 1
    np.testing.assert_array_equal(paths[0].x, x)


def test_genie_sc_nll_matches_decoder_path(rng):
    code = PolarLevelCode(8, 2, np.zeros((8, 2), dtype=bool))
    u = rng.integers(0, 4, (1, 8))
    x = polar_transform(u)
    pm = noisy_pmfs(rng, x, 4, 0.3)
    err, nll = genie_sc(pm, u)
    # sum of per-bit -log2 P along the true path is -log2 P(x | y) under the product channel
    ll = np.sum(np.log2(pm[0, np.arange(8), x[0]]))
    assert nll.sum() == pytest.approx(-ll, abs=1e-9)
    assert err.shape == (1, 8, 2)


def test_decode_batch_shape_errors():
    code = PolarLevelCode(8, 1, np.zeros((8, 1), dtype=bool))
    with pytest.raises(ValueError):
        decode_batch(code, np.full((1, 4, 2), 0.5))
    with pytest.raises(ValueError):
        decode_batch(code, np.full((1, 8, 2), 0.5), 0)
