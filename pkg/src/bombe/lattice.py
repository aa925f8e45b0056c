"""Lattices, nearest-point quantizers and the unit-step partition chain.

Only the integer lattice Z^d and the checkerboard lattice D4 are supported.
Generator matrices store basis vectors as rows, so a coefficient row vector
``c`` maps to the ambient point ``c @ M``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np


class LatticeName(str, Enum):
    INTEGER = "IntegerZd"
    D4 = "D4"


D4_GENERATOR = np.array(
    [
        [1, -1, 0, 0],
        [0, 1, -1, 0],
        [0, 0, 1, -1],
        [0, 1, 1, 0],
    ],
    dtype=float,
)


@dataclass(frozen=True, eq=False)
class Lattice:
    name: LatticeName
    generator: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.generator, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("generator must be a square matrix")
        if abs(np.linalg.det(M)) < 1e-12:
            raise ValueError("generator must be full rank")
        M.setflags(write=False)
        object.__setattr__(self, "generator", M)

    @property
    def dimension(self) -> int:
        return self.generator.shape[0]

    @cached_property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.generator)

    def to_ambient(self, coeffs) -> np.ndarray:
        return np.asarray(coeffs, dtype=float) @ self.generator

    def to_coeffs(self, points) -> np.ndarray:
        """Lattice coordinates of ambient lattice points (rounded to integers)."""
        return np.rint(np.asarray(points, dtype=float) @ self.inverse).astype(np.int64)

    def __repr__(self):
        return f"Lattice({self.name.value}, d={self.dimension})"


def integer_lattice(d: int) -> Lattice:
    return Lattice(LatticeName.INTEGER, np.eye(d))


def d4_lattice() -> Lattice:
    return Lattice(LatticeName.D4, D4_GENERATOR)


def _round_half_down(x):
    # ties go to the smaller integer: the lexicographically smallest choice on Z^n
    return np.ceil(x - 0.5)


def _quantize_zn(x):
    return _round_half_down(x)


def _quantize_dn(x):
    """Conway-Sloane D_n decoder: round, then fix parity on the worst coordinate."""
    f = _round_half_down(x)
    err = x - f
    k = np.argmax(np.abs(err), axis=-1)
    g = f.copy()
    ek = np.take_along_axis(err, k[..., None], axis=-1)[..., 0]
    step = np.where(ek > 0, 1.0, -1.0)
    # zero rounding error on the worst coordinate means x is already integral there
    step = np.where(ek == 0, 1.0, step)
    np.put_along_axis(
        g, k[..., None], (np.take_along_axis(f, k[..., None], -1)[..., 0] + step)[..., None], -1
    )
    odd = (np.sum(f, axis=-1) % 2) != 0
    return np.where(odd[..., None], g, f)


def _d4_tie_vectors() -> np.ndarray:
    # every D4 vector of squared norm <= 4; nearest points of any input are this close to each other
    v = np.array(list(itertools.product(range(-2, 3), repeat=4)), dtype=float)
    n = np.sum(v * v, axis=1)
    return v[(np.sum(v, axis=1) % 2 == 0) & (n > 0) & (n <= 4)]


_D4_TIES = _d4_tie_vectors()


def _lexmin_ties(x, z, neighbours, tol=1e-12):
    """Replace ``z`` by the lexicographically smallest equally near lattice point."""
    cands = z[:, None, :] + np.vstack([np.zeros((1, x.shape[-1])), neighbours])[None]
    dist = np.sum((cands - x[:, None, :]) ** 2, axis=-1)
    tied = dist <= dist[:, :1] + tol
    if np.count_nonzero(tied) == len(z):
        return z
    out = z.copy()
    for i in np.flatnonzero(tied.sum(axis=1) > 1):
        c = cands[i, tied[i]]
        out[i] = c[np.lexsort(c.T[::-1])[0]]
    return out


def quantize(lat: Lattice, points, scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nearest point of ``scale * lat`` to each row of ``points``.

    Returns ``(ambient, coeffs)`` where ``coeffs`` are the integer coordinates
    with respect to the scaled basis ``scale * M``.
    """
    x = np.asarray(points, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    x = x / scale
    if lat.name is LatticeName.INTEGER:
        z = _quantize_zn(x @ lat.inverse) @ lat.generator
    elif lat.name is LatticeName.D4:
        flat = x.reshape(-1, 4)
        z = _lexmin_ties(flat, _quantize_dn(flat), _D4_TIES).reshape(x.shape)
    else:  # pragma: no cover
        raise NotImplementedError(lat.name)
    return z * scale, lat.to_coeffs(z)


def brute_force_nearest(lat: Lattice, points, radius: int = 3) -> np.ndarray:
    """Exhaustive nearest-point search over candidates of ``lat`` near each point.

    Independent of the fast quantizers: enumerates integer coefficient offsets
    around the rounded coefficient vector and keeps the closest ambient point.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    d = lat.dimension
    base = np.rint(x @ lat.inverse)
    offsets = np.array(list(itertools.product(range(-radius, radius + 1), repeat=d)), dtype=float)
    out = np.empty_like(x)
    for i in range(len(x)):
        cands = (base[i] + offsets) @ lat.generator
        dist = np.sum((cands - x[i]) ** 2, axis=1)
        out[i] = cands[np.argmin(dist)]
    return out


def short_vectors(lat: Lattice, bound: int = 2) -> np.ndarray:
    """All nonzero lattice vectors with coefficients in [-bound, bound]."""
    d = lat.dimension
    coeffs = np.array(list(itertools.product(range(-bound, bound + 1), repeat=d)), dtype=float)
    coeffs = coeffs[np.any(coeffs != 0, axis=1)]
    return coeffs @ lat.generator


def min_distance(lat: Lattice, scale: float = 1.0) -> float:
    """Minimum distance of ``scale * lat`` by bounded coefficient search."""
    v = short_vectors(lat, bound=2)
    return float(scale * np.sqrt(np.min(np.sum(v * v, axis=1))))


def decompose_coeffs(x, s: int) -> np.ndarray:
    """Split coefficient vectors with entries in [0, 2^s) into s bit planes.

    Returns an array of shape ``(s,) + x.shape`` where plane ``i`` holds bit ``i``.
    """
    x = np.asarray(x, dtype=np.int64)
    if np.any(x < 0) or np.any(x >= (1 << s)):
        raise ValueError(f"coefficient entries must lie in [0, {1 << s})")
    return np.stack([(x >> i) & 1 for i in range(s)])


def recompose_coeffs(planes) -> np.ndarray:
    planes = np.asarray(planes, dtype=np.int64)
    return sum(planes[i] << i for i in range(planes.shape[0]))


@dataclass(frozen=True)
class PartitionChain:
    """Unit-step chain  L > 2L > 4L > ... > 2^s L."""

    base: Lattice
    levels: int
    steps: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be positive")
        steps = self.steps or tuple(range(self.levels + 1))
        if steps != tuple(range(self.levels + 1)):
            raise NotImplementedError("only the unit step chain a_i = i is supported")
        object.__setattr__(self, "steps", steps)

    @property
    def r(self) -> int:
        return 1 << self.levels

    @property
    def scales(self) -> list[int]:
        return [1 << a for a in self.steps]

    def quotient_size(self, i: int) -> int:
        return 1 << (self.base.dimension * (self.steps[i + 1] - self.steps[i]))

    def level_min_distance(self, i: int) -> float:
        """Distance between points that agree on every level below ``i``."""
        return min_distance(self.base, self.scales[i])
