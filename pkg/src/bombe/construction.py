"""Code construction: Monte Carlo reliability ranking and rate allocation.

Reliabilities come from genie-aided multistage SC passes over random input
words (every position frozen to a value the genie knows). A single ranking
covers all (level, symbol, lane) positions, so picking the top positions does
both per-level code design and rate allocation across levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ebn0_to_sigma
from .codec import demod_full, marginalize_level_batch
from .constellation import ShapedConstellation
from .crc import BY_NAME, CRCSpec, crc_for_payload
from .polar import PolarLevelCode, genie_sc, polar_transform


@dataclass(frozen=True, eq=False)
class MultilevelSystem:
    """Coset code geometry: a shaped constellation and ``n_l`` points per frame."""

    constellation: ShapedConstellation
    n_l: int

    @property
    def s(self) -> int:
        return self.constellation.s

    @property
    def d(self) -> int:
        return self.constellation.d

    @property
    def es_dim(self) -> float:
        return self.constellation.es_dim

    def rate_dim(self, rate: float) -> float:
        return self.s * rate

    def genie_batch(self, sigma: float, trials: int, rng: np.random.Generator):
        c = self.constellation
        q, s, N = c.q, c.s, self.n_l
        u = rng.integers(0, q, size=(trials, s, N))
        x = polar_transform(u)
        idx = np.sum(x << (c.d * np.arange(s))[None, :, None], axis=1)
        y = c.points[idx] + sigma * rng.standard_normal((trials, N, c.d))
        full = demod_full(c, y, sigma)
        err = np.zeros((trials, s, N, c.d), dtype=bool)
        nll = np.zeros((trials, s, N, c.d))
        h = np.zeros((trials, 1, N), dtype=np.int64)
        for i in range(s):
            pm, _ = marginalize_level_batch(full, q, s, i, h)
            err[:, i], nll[:, i] = genie_sc(pm[:, 0], u[:, i])
            h = h + x[:, None, i] * q**i
        return err, nll


@dataclass
class ReliabilitySequence:
    entries: np.ndarray  # (n, 3) rows (level, symbol, lane), most reliable first
    design_snr: float
    trials: int
    errors: np.ndarray  # (n,) error counts of each entry at the design point
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int, int]:
        s, n_l, d = (int(v) + 1 for v in self.entries.max(axis=0))
        return s, n_l, d

    def ranks(self) -> np.ndarray:
        """(s, n_l, d) array of ranks, 0 = most reliable."""
        out = np.empty(self.shape, dtype=np.int64)
        e = self.entries
        out[e[:, 0], e[:, 1], e[:, 2]] = np.arange(len(e))
        return out


@dataclass
class GridEstimate:
    """Raw Monte Carlo counts on an SNR grid, before choosing a design point."""

    grid: np.ndarray  # (G,) Eb/N0 in dB
    errors: np.ndarray  # (G, s, n_l, d)
    nll: np.ndarray  # (G, s, n_l, d) mean -log2 P(true bit)
    trials: int
    capacity: np.ndarray  # (G,) mean synthetic bit capacity


def tie_break_keys(s: int, n_l: int, d: int):
    """Declared order for equal counts: higher level, then symbol, then lane first."""
    lv, t, j = np.meshgrid(np.arange(s), np.arange(n_l), np.arange(d), indexing="ij")
    return -lv.ravel(), -t.ravel(), -j.ravel()


def run_grid(system, ebn0_grid, trials: int, rate: float, seed: int = 0, batch: int = 1000) -> GridEstimate:
    if trials < 1:
        raise ValueError("trials must be positive")
    grid = np.asarray(ebn0_grid, dtype=float)
    if not np.all(np.isfinite(grid)):
        raise ValueError("SNR grid must be finite")
    shape = (system.s, system.n_l, system.d)
    errors = np.zeros((len(grid),) + shape, dtype=np.int64)
    nll = np.zeros((len(grid),) + shape)
    for g, snr in enumerate(grid):
        sigma = ebn0_to_sigma(snr, system.es_dim, system.rate_dim(rate))
        done = 0
        b = 0
        while done < trials:
            n = min(batch, trials - done)
            rng = np.random.default_rng(np.random.SeedSequence([seed, g, b]))
            e, ll = system.genie_batch(sigma, n, rng)
            errors[g] += e.sum(axis=0)
            nll[g] += ll.sum(axis=0)
            done += n
            b += 1
    nll /= trials
    capacity = np.clip(1.0 - nll, 0.0, 1.0).mean(axis=(1, 2, 3))
    return GridEstimate(grid, errors, nll, trials, capacity)


def rank_from_grid(est: GridEstimate, rate: float) -> ReliabilitySequence:
    """Rank at the grid point whose estimated capacity is closest to ``rate``."""
    g = int(np.argmin(np.abs(est.capacity - rate)))
    G = len(est.grid)
    s, n_l, d = est.errors.shape[1:]
    keys = [est.errors[g].ravel()]
    for nb in (g - 1, g + 1):
        if 0 <= nb < G:
            keys.append(est.errors[nb].ravel())
    keys.extend(tie_break_keys(s, n_l, d))
    order = np.lexsort(keys[::-1])
    flat = np.array(np.unravel_index(order, (s, n_l, d))).T
    meta = {
        "grid": est.grid.tolist(),
        "capacity": est.capacity.tolist(),
        "design_index": g,
        "target_rate": rate,
    }
    return ReliabilitySequence(flat, float(est.grid[g]), est.trials, est.errors[g].ravel()[order], meta)


def estimate_reliabilities(system, ebn0_grid, trials: int, rate: float, seed: int = 0, batch: int = 1000) -> ReliabilitySequence:
    """Unified reliability ranking over every (level, symbol, lane) position."""
    est = run_grid(system, ebn0_grid, trials, rate, seed, batch)
    seq = rank_from_grid(est, rate)
    seq.meta["seed"] = seed
    return seq


def global_crc(crc_policy, k_b: int) -> CRCSpec | None:
    """The single whole-payload CRC implied by ``crc_policy`` (None if per-level or absent)."""
    if crc_policy in (None, "none", "per-level"):
        return None
    if crc_policy == "5g":
        return crc_for_payload(k_b)
    return BY_NAME[crc_policy] if isinstance(crc_policy, str) else crc_policy


def allocate(seq: ReliabilitySequence, k_b: int, crc_policy="5g"):
    """Unfrozen count and CRC of each level for ``k_b`` payload bits.

    Policies: ``"5g"`` one 5G CRC sized by the whole payload, a CRC name such
    as ``"CRC11"`` for a fixed whole-payload CRC, ``"per-level"`` a 5G CRC per
    level sized by that level's payload, ``"none"``. Returns
    ``(counts, per_level_crcs, whole_payload_crc)``.
    """
    s, n_l, d = seq.shape
    total = s * n_l * d
    levels = seq.entries[:, 0]
    if crc_policy != "per-level":
        g = global_crc(crc_policy, k_b)
        U = k_b + (g.width if g else 0)
        if U > total:
            raise ValueError(f"k_b={k_b} plus CRC does not fit in {total} positions")
        return np.bincount(levels[:U], minlength=s), [None] * s, g
    # level CRC widths depend on the level payloads, so iterate to a fixed point
    widths = [0] * s
    seen = []
    for _ in range(50):
        U = k_b + sum(widths)
        if U > total:
            raise ValueError(f"k_b={k_b} plus CRC does not fit in {total} positions")
        counts = np.bincount(levels[:U], minlength=s)
        crcs = [crc_for_payload(int(counts[i]) - widths[i]) for i in range(s)]
        new = [0 if c is None else c.width for c in crcs]
        # a level with no room for payload beyond its CRC drops the CRC
        new = [w if counts[i] > w else 0 for i, w in enumerate(new)]
        crcs = [c if w else None for c, w in zip(crcs, new)]
        if new == widths:
            return counts, crcs, None
        if new in seen:
            widths = [max(a, b) for a, b in zip(new, widths)]
        else:
            seen.append(widths)
            widths = new
    raise RuntimeError("CRC allocation did not converge")


def select_frozen(seq: ReliabilitySequence, k_b: int, crc_policy="5g") -> list[PolarLevelCode]:
    """Unfreeze the most reliable positions; one :class:`PolarLevelCode` per level.

    Under a whole-payload CRC the level codes carry no CRC of their own and
    their ``k_b`` values add up to ``k_b`` plus the CRC width.
    """
    if k_b < 0:
        raise ValueError("k_b must be nonnegative")
    s, n_l, d = seq.shape
    counts, crcs, g = allocate(seq, k_b, crc_policy)
    U = int(counts.sum())
    top = seq.entries[:U]
    codes = []
    for i in range(s):
        mine = top[top[:, 0] == i][:, 1:]
        frozen = np.ones((n_l, d), dtype=bool)
        frozen[mine[:, 0], mine[:, 1]] = False
        codes.append(PolarLevelCode(n_l, d, frozen, crcs[i], mine))
    if sum(c.k_b for c in codes) != k_b + (g.width if g else 0):
        raise ValueError("infeasible allocation")
    return codes


def level_rates(codes: list[PolarLevelCode]) -> list[float]:
    return [c.rate for c in codes]


# capacity rule


def level_mutual_information(c: ShapedConstellation, sigma: float, trials: int, seed: int = 0, batch: int = 20000) -> np.ndarray:
    """Monte Carlo I(level i; y | levels < i) in bits, one entry per level."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    rng = np.random.default_rng(seed)
    q, s = c.q, c.s
    acc = np.zeros(s)
    done = 0
    while done < trials:
        n = min(batch, trials - done)
        idx = rng.integers(0, c.size, n)
        noise = rng.standard_normal((n, c.d))
        acc += _level_nll_sum(c, idx, noise, sigma)
        done += n
    return c.d - acc / trials


def _level_nll_sum(c, idx, noise, sigma):
    q, s = c.q, c.s
    y = c.points[idx] + sigma * noise
    full = demod_full(c, y[None], sigma)
    labels = c.coset_index[idx]  # (n, s)
    out = np.zeros(s)
    h = np.zeros((1, 1, len(idx)), dtype=np.int64)
    for i in range(s):
        pm, _ = marginalize_level_batch(full, q, s, i, h)
        pt = pm[0, 0, np.arange(len(idx)), labels[:, i]]
        out[i] = np.sum(-np.log2(np.maximum(pt, 1e-300)))
        h = h + labels[None, None, :, i] * q**i
    return out


def capacity_rule_rates(c: ShapedConstellation, sigma: float, trials: int = 100_000, seed: int = 0) -> np.ndarray:
    """Per-level rates I^(i)/d assigned by the capacity rule."""
    return np.clip(level_mutual_information(c, sigma, trials, seed) / c.d, 0.0, 1.0)


def rate_matched_design(c: ShapedConstellation, rate: float, trials: int = 100_000, seed: int = 0, tol: float = 1e-4):
    """Eb/N0 (dB) at which the mean capacity-rule level rate equals ``rate``.

    Uses common random numbers across the bisection so the estimate is a
    smooth monotone function of the SNR. Returns ``(ebn0_db, sigma, rates)``.
    """
    if not 0 < rate < 1:
        raise ValueError("rate must be in (0, 1)")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, c.size, trials)
    noise = rng.standard_normal((trials, c.d))
    rate_dim = c.s * rate

    def rates_at(ebn0):
        sigma = ebn0_to_sigma(ebn0, c.es_dim, rate_dim)
        acc = np.zeros(c.s)
        for a in range(0, trials, 20000):
            acc += _level_nll_sum(c, idx[a : a + 20000], noise[a : a + 20000], sigma)
        return sigma, np.clip((c.d - acc / trials) / c.d, 0.0, 1.0)

    lo, hi = -10.0, 30.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        _, r = rates_at(mid)
        if r.mean() < rate:
            lo = mid
        else:
            hi = mid
    ebn0 = 0.5 * (lo + hi)
    sigma, r = rates_at(ebn0)
    return ebn0, sigma, r


# persistence


def save_sequence(seq: ReliabilitySequence, path, **meta) -> None:
    info = dict(seq.meta)
    info.update(meta)
    info.update(design_snr=seq.design_snr, trials=seq.trials)
    with open(path, "w") as fh:
        fh.write("# bombe reliability sequence\n")
        for k in sorted(info):
            fh.write(f"# {k} = {info[k]}\n")
        fh.write("# level symbol lane rank errors trials\n")
        for rank, (e, n) in enumerate(zip(seq.entries, seq.errors)):
            fh.write(f"{e[0]} {e[1]} {e[2]} {rank} {int(n)} {seq.trials}\n")


def load_sequence(path) -> ReliabilitySequence:
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    k, v = line[1:].split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            rows.append([int(v) for v in line.split()])
    if not rows:
        raise ValueError(f"{path}: no entries")
    a = np.array(rows, dtype=np.int64)
    a = a[np.argsort(a[:, 3])]
    if not np.array_equal(a[:, 3], np.arange(len(a))):
        raise ValueError(f"{path}: ranks are not a permutation")
    design = float(meta.pop("design_snr", "nan"))
    trials = int(meta.pop("trials", a[0, 5]))
    return ReliabilitySequence(a[:, :3], design, trials, a[:, 4], meta)


def save_frozen(codes: list[PolarLevelCode], path) -> None:
    with open(path, "w") as fh:
        fh.write("# level symbol lane frozen\n")
        for i, c in enumerate(codes):
            for t in range(c.n_l):
                for j in range(c.d):
                    fh.write(f"{i} {t} {j} {int(c.frozen[t, j])}\n")


def load_frozen(path) -> list[np.ndarray]:
    rows = np.loadtxt(path, dtype=np.int64, comments="#", ndmin=2)
    s, n_l, d = (int(v) + 1 for v in rows[:, :3].max(axis=0))
    masks = np.zeros((s, n_l, d), dtype=bool)
    masks[rows[:, 0], rows[:, 1], rows[:, 2]] = rows[:, 3].astype(bool)
    return list(masks)


def snr_grid_around(center: float, half_width: float = 1.5, step: float = 0.25) -> np.ndarray:
    n = int(math.floor(half_width / step + 1e-9))
    return center + step * np.arange(-n, n + 1)
