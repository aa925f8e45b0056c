"""Voronoi-shaped quotient constellations  L / rL.

Point ``p`` of a constellation is addressed by its *level index*
``p = sum_i label_i * 2^(d*i)`` where ``label_i`` is the d-bit symbol of level
``i`` (bit ``j`` of ``label_i`` is bit ``i`` of coefficient ``x_j``). This
makes per-level conditioning a reshape instead of a gather.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .lattice import Lattice, LatticeName, PartitionChain, decompose_coeffs, quantize, short_vectors

D4_DITHER = (0.50, 0.25, 0.125, 0.0625)


class DitherError(ValueError):
    """A shaped representative landed on a Voronoi boundary."""


def labels_from_coeffs(x, s: int) -> np.ndarray:
    """Per-level d-bit labels for coefficient vectors ``x`` (last axis = d)."""
    x = np.asarray(x, dtype=np.int64)
    planes = decompose_coeffs(x, s)  # (s, ..., d)
    d = x.shape[-1]
    weights = 1 << np.arange(d)
    return np.moveaxis(planes @ weights, 0, -1)  # (..., s)


def level_index(labels, d: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    s = labels.shape[-1]
    return np.sum(labels << (d * np.arange(s)), axis=-1)


@dataclass(frozen=True, eq=False)
class ShapedConstellation:
    lattice: Lattice
    r: int
    dither: np.ndarray
    points: np.ndarray  # (r^d, d) ambient, level-index order
    coeffs: np.ndarray  # (r^d, d) integer coefficient vectors in [0, r)
    margin: float

    @property
    def d(self) -> int:
        return self.lattice.dimension

    @property
    def s(self) -> int:
        return self.r.bit_length() - 1

    @property
    def q(self) -> int:
        return 1 << self.d

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @cached_property
    def chain(self) -> PartitionChain:
        return PartitionChain(self.lattice, self.s)

    @cached_property
    def es(self) -> float:
        """Mean squared norm per lattice symbol."""
        return float(np.mean(np.sum(self.points**2, axis=1)))

    @property
    def es_dim(self) -> float:
        return self.es / self.d

    @cached_property
    def coset_index(self) -> np.ndarray:
        """(r^d, s) table of level residues x^(i) encoded as d-bit labels."""
        return labels_from_coeffs(self.coeffs, self.s)

    def index_of(self, x) -> np.ndarray:
        return level_index(labels_from_coeffs(np.asarray(x) % self.r, self.s), self.d)

    def to_csv(self, path) -> None:
        d = self.d
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index"] + [f"x_{j}" for j in range(d)] + [f"y_{j}" for j in range(d)])
            for i in range(self.size):
                w.writerow([i, *self.coeffs[i].tolist(), *[repr(float(v)) for v in self.points[i]]])


def default_dither(lattice: Lattice, r: int) -> np.ndarray:
    if lattice.name is LatticeName.D4:
        return np.array(D4_DITHER)
    return np.full(lattice.dimension, -(r - 1) / 2)


def voronoi_margin(lattice: Lattice, scale: float, y) -> np.ndarray:
    """Signed distance of each point in ``y`` to the boundary of Vor(scale * lattice).

    Uses every short vector of the scaled lattice as a candidate facet normal;
    positive means strictly inside.
    """
    v = short_vectors(lattice, bound=2) * scale
    y = np.atleast_2d(y)
    nv = np.sqrt(np.sum(v * v, axis=1))
    # distance to bisector of 0 and v: (|v|^2/2 - <y, v>) / |v|
    return np.min((0.5 * nv**2 - y @ v.T) / nv, axis=1)


def build(lattice: Lattice, r: int, dither=None, tol: float = 1e-9) -> ShapedConstellation:
    s = r.bit_length() - 1
    if r < 2 or (1 << s) != r:
        raise ValueError("r must be a power of two >= 2")
    d = lattice.dimension
    delta = default_dither(lattice, r) if dither is None else np.asarray(dither, dtype=float)
    if delta.shape != (d,):
        raise ValueError(f"dither must have shape ({d},)")

    coeffs = np.array(list(itertools.product(range(r), repeat=d)), dtype=np.int64)[:, ::-1]
    shifted = lattice.to_ambient(coeffs) + delta
    nearest, _ = quantize(lattice, shifted, scale=r)
    reps = shifted - nearest

    margin = voronoi_margin(lattice, r, reps)
    if np.any(margin <= tol):
        raise DitherError(
            f"{int(np.sum(margin <= tol))} representatives lie on the Voronoi boundary; choose another dither"
        )

    order = np.argsort(level_index(labels_from_coeffs(coeffs, s), d))
    points = reps[order]
    coeffs = coeffs[order]
    points.setflags(write=False)
    coeffs.setflags(write=False)
    return ShapedConstellation(lattice, r, delta, points, coeffs, float(np.min(margin)))


def modulate(c: ShapedConstellation, x) -> np.ndarray:
    """Shaped representative(s) of coefficient vector(s) ``x``."""
    return c.points[c.index_of(x)]


def level_residue(c: ShapedConstellation, point_index, level: int):
    return c.coset_index[point_index, level]


def unshaped_energy(lattice: Lattice, r: int) -> float:
    coeffs = np.array(list(itertools.product(range(r), repeat=lattice.dimension)))
    pts = lattice.to_ambient(coeffs)
    return float(np.mean(np.sum(pts**2, axis=1)))
