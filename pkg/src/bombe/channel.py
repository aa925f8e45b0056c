"""AWGN channel, SNR bookkeeping and per-frame random streams.

Every frame draws from its own generator seeded by
``(master_seed, frame_index, stream)``, so results do not depend on how
frames are scheduled across workers. Gaussian samples come from numpy's
ziggurat sampler on a PCG64 stream.
"""

from __future__ import annotations

import math

import numpy as np

NOISE_STREAM = 1
PAYLOAD_STREAM = 2
GAUSSIAN_METHOD = "numpy-pcg64-ziggurat"


def ebn0_to_sigma(ebn0_db: float, es_dim: float, rate_dim: float) -> float:
    """Noise std per real dimension for a given Eb/N0 in dB.

    ``es_dim`` is the mean symbol energy per real dimension and ``rate_dim``
    the information bits carried per real dimension.
    """
    if rate_dim <= 0:
        raise ValueError("rate_dim must be positive")
    return math.sqrt(es_dim / (2.0 * rate_dim * 10.0 ** (ebn0_db / 10.0)))


def sigma_to_ebn0(sigma: float, es_dim: float, rate_dim: float) -> float:
    if rate_dim <= 0 or sigma <= 0:
        raise ValueError("sigma and rate_dim must be positive")
    return 10.0 * math.log10(es_dim / (2.0 * rate_dim * sigma * sigma))


def ebn0_to_esn0(ebn0_db: float, rate_dim: float) -> float:
    """Es/N0 per real dimension pair (complex symbol) in dB."""
    return ebn0_db + 10.0 * math.log10(2.0 * rate_dim)


def frame_rng(seed: int, frame_index: int, stream: int) -> np.random.Generator:
    """Independent generator for one (frame, stream) pair of a run."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(frame_index), int(stream)]))


def transmit(points, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Add N(0, sigma^2) noise to every real coordinate."""
    points = np.asarray(points, dtype=float)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return points.copy()
    return points + sigma * rng.standard_normal(points.shape)


def transmit_frames(points, sigma: float, seed: int, frame_indices) -> np.ndarray:
    """Noisy copies of a batch ``(B, ...)``; frame ``b`` uses stream ``frame_indices[b]``."""
    points = np.asarray(points, dtype=float)
    out = np.empty_like(points)
    for b, f in enumerate(frame_indices):
        out[b] = transmit(points[b], sigma, frame_rng(seed, f, NOISE_STREAM))
    return out
