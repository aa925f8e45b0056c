import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bombe.pmf import (
    FLOOR,
    DegenerateEvidence,
    condition_bit,
    condition_product,
    fwht,
    marginalize_bit,
    normalize,
    point_mass,
    uniform,
    xor_convolve,
    xor_convolve_direct,
)


def rand_pmf(rng, d, n=None):
    shape = (1 << d,) if n is None else (n, 1 << d)
    return normalize(rng.random(shape))


def loop_xor(p, q):
    out = np.zeros_like(p)
    for a in range(len(p)):
        for b in range(len(p)):
            out[a ^ b] += p[a] * q[b]
    return out


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_fwht_matches_loop_definition(d, seed):
    rng = np.random.default_rng(seed)
    p, q = rand_pmf(rng, d), rand_pmf(rng, d)
    np.testing.assert_allclose(xor_convolve(p, q), loop_xor(p, q), atol=1e-13)
    np.testing.assert_allclose(xor_convolve(p, q, method="direct"), loop_xor(p, q), atol=1e-13)


def test_fwht_is_self_inverse(rng):
    a = rng.standard_normal((7, 16))
    np.testing.assert_allclose(fwht(fwht(a)) / 16, a, atol=1e-12)


@given(st.integers(1, 4), st.integers(0, 15), st.integers(0, 15))
def test_point_masses_convolve_to_xor(d, a, b):
    q = 1 << d
    a, b = a % q, b % q
    np.testing.assert_allclose(xor_convolve(point_mass(d, a), point_mass(d, b)), np.maximum(point_mass(d, a ^ b), FLOOR))


def test_uniform_is_absorbing(rng):
    p = rand_pmf(rng, 3)
    np.testing.assert_allclose(xor_convolve(uniform(3), p), uniform(3))


def test_convolution_commutes_and_associates(rng):
    p, q, r = (rand_pmf(rng, 4) for _ in range(3))
    np.testing.assert_allclose(xor_convolve(p, q), xor_convolve(q, p), atol=1e-14)
    np.testing.assert_allclose(xor_convolve(xor_convolve(p, q), r), xor_convolve(p, xor_convolve(q, r)), atol=1e-14)


def test_maxlog_kernel(rng):
    p, q = rand_pmf(rng, 2), rand_pmf(rng, 2)
    out = xor_convolve(p, q, maxlog=True)
    ref = np.array([max(p[a ^ b] * q[b] for b in range(4)) for a in range(4)])
    np.testing.assert_allclose(out, ref / ref.sum())


def test_batched_and_direct_agree(rng):
    p, q = rand_pmf(rng, 4, 50), rand_pmf(rng, 4, 50)
    assert np.max(np.abs(xor_convolve(p, q) - xor_convolve_direct(p, q))) < 1e-12


def test_condition_product_example():
    out = condition_product([0.9, 0.1], [0.8, 0.2], 0)
    np.testing.assert_allclose(out, [0.72 / 0.74, 0.02 / 0.74])
    out = condition_product([0.9, 0.1], [0.8, 0.2], 1)
    np.testing.assert_allclose(out, [0.08 / 0.26, 0.18 / 0.26])


def test_condition_product_degenerate():
    with pytest.raises(DegenerateEvidence):
        condition_product([1.0, 0.0], [0.0, 1.0], 0)


def test_marginalize_and_condition_bit(rng):
    p = rand_pmf(rng, 3)
    for lane in range(3):
        m = marginalize_bit(p, lane)
        ones = sum(p[a] for a in range(8) if (a >> lane) & 1)
        np.testing.assert_allclose(m, [1 - ones, ones])
        c = condition_bit(p, lane, 1)
        assert c.sum() == pytest.approx(1.0)
        assert all(c[a] == 0 for a in range(8) if not (a >> lane) & 1)
    with pytest.raises(DegenerateEvidence):
        condition_bit(point_mass(2, 0), 0, 1)


def test_normalize_rejects_zero():
    with pytest.raises(DegenerateEvidence):
        normalize(np.zeros(4))
    with pytest.raises(ValueError):
        xor_convolve(np.ones(3) / 3, np.ones(3) / 3)
