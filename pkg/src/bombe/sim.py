"""Monte Carlo BER/BLER sweeps over AWGN.

Frames are simulated in fixed-size blocks. Block ``k`` always covers the same
frame indices, and the stopping rule is evaluated after each block in order,
so a sweep's counts depend only on the configuration and the master seed.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import baselines
from .baselines import BicmCode, BicmSystem, BicmTransceiver, MultilevelTransceiver, interleaver
from .channel import GAUSSIAN_METHOD, PAYLOAD_STREAM, ebn0_to_esn0, ebn0_to_sigma, frame_rng, transmit_frames
from .codec import BombeCode
from .constellation import build
from .construction import (
    MultilevelSystem,
    ReliabilitySequence,
    estimate_reliabilities,
    global_crc,
    load_sequence,
    run_grid,
    save_sequence,
    select_frozen,
)
from .lattice import d4_lattice
from .polar import PolarLevelCode

log = logging.getLogger(__name__)

SCHEMES = ("bombe-d4", "mlc-qam16", "mlc-qam16-z2", "bicm-qam16")
# coded bits per level-code position
GEOMETRY = {"bombe-d4": 8, "mlc-qam16": 2, "mlc-qam16-z2": 4, "bicm-qam16": 1}


@dataclass
class SimConfig:
    scheme: str = "bombe-d4"
    n_b: int = 256
    rate: str = "11/16"
    list_size: int = 8
    crc: str = "5g"
    snr_start: float = 2.0
    snr_stop: float = 6.0
    snr_step: float = 0.5
    min_frame_errors: int = 100
    max_frames: int = 1_000_000
    seed: int = 0
    workers: int = 1
    block: int = 200
    reliability: str | None = None
    construct_trials: int = 2000
    maxlog: bool = False
    propagate: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        geom = GEOMETRY[self.scheme]
        n_l = self.n_b // geom
        if self.n_b % geom or n_l & (n_l - 1) or n_l < 1 or self.n_b % 4:
            raise ValueError(f"n_b={self.n_b} is not {geom} times a power of two for {self.scheme}")
        if not 0 < self.rate_value < 1:
            raise ValueError("rate must lie in (0, 1)")
        if self.k_b != self.rate_value * self.n_b:
            raise ValueError(f"rate {self.rate} times n_b={self.n_b} is not an integer")
        if self.snr_step <= 0 or self.snr_stop < self.snr_start:
            raise ValueError("bad SNR sweep")
        if self.list_size < 1 or self.block < 1 or self.workers < 1:
            raise ValueError("list_size, block and workers must be positive")

    @property
    def rate_value(self) -> Fraction:
        return Fraction(self.rate).limit_denominator(1 << 20)

    @property
    def k_b(self) -> int:
        return int(self.rate_value * self.n_b)

    @property
    def snrs(self) -> list[float]:
        n = int(math.floor((self.snr_stop - self.snr_start) / self.snr_step + 1e-9)) + 1
        return [round(self.snr_start + i * self.snr_step, 10) for i in range(n)]

    def config_hash(self) -> str:
        skip = {"workers", "reliability"}
        items = [(f.name, getattr(self, f.name)) for f in dataclasses.fields(self) if f.name not in skip]
        return hashlib.sha256(repr(items).encode()).hexdigest()[:12]

    @classmethod
    def from_mapping(cls, values: dict) -> "SimConfig":
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        kw = {}
        for k, v in values.items():
            k = k.replace("-", "_")
            if k not in types:
                raise ValueError(f"unknown config key {k!r}")
            kw[k] = _coerce(types[k], v)
        return cls(**kw)


def _coerce(tp: str, v):
    if not isinstance(v, str):
        return v
    if tp == "int":
        return int(float(v)) if "e" in v.lower() else int(v)
    if tp == "float":
        return float(v)
    if tp == "bool":
        return v.strip().lower() in ("1", "true", "yes", "on")
    if tp.startswith("str | None"):
        return None if v.strip().lower() in ("", "none") else v
    return v


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


@dataclass
class CurvePoint:
    snr_db: float
    esn0_db: float
    frames: int
    bit_errors: int
    frame_errors: int
    k_b: int
    wall_time: float = field(default=0.0, compare=False)

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.k_b) if self.frames else float("nan")

    @property
    def bler(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")


# scheme construction


def scheme_system(cfg: SimConfig):
    if cfg.scheme == "bombe-d4":
        return MultilevelSystem(build(d4_lattice(), 4), cfg.n_b // 8)
    if cfg.scheme == "mlc-qam16":
        return MultilevelSystem(baselines.pam4_constellation(), cfg.n_b // 2)
    if cfg.scheme == "mlc-qam16-z2":
        return MultilevelSystem(baselines.qam16_constellation(), cfg.n_b // 4)
    return BicmSystem(cfg.n_b, interleaver(cfg.n_b, cfg.seed))


def auto_grid(system, rate: float, seed: int, trials: int = 100) -> np.ndarray:
    """Fine Eb/N0 grid around the point where the estimated capacity meets ``rate``."""
    coarse = np.arange(-2.0, 16.0, 1.0)
    est = run_grid(system, coarse, trials, rate, seed=seed + 7919)
    above = np.flatnonzero(est.capacity >= rate)
    g = coarse[above[0]] if above.size else coarse[-1]
    return g - 1.0 + 0.25 * np.arange(9)


def construct(cfg: SimConfig, path=None, trials: int | None = None, grid=None) -> ReliabilitySequence:
    """Reliability sequence for ``cfg``; persisted to ``path`` when given."""
    system = scheme_system(cfg)
    rate = float(cfg.rate_value)
    trials = trials or cfg.construct_trials
    grid = auto_grid(system, rate, cfg.seed) if grid is None else np.asarray(grid, dtype=float)
    seq = estimate_reliabilities(system, grid, trials, rate, seed=cfg.seed)
    if path is not None:
        save_sequence(seq, path, scheme=cfg.scheme, n_b=cfg.n_b, rate=cfg.rate)
    return seq


def make_transceiver(cfg: SimConfig, seq: ReliabilitySequence | None = None):
    if seq is None:
        seq = load_sequence(cfg.reliability) if cfg.reliability else construct(cfg)
    system = scheme_system(cfg)
    if seq.shape != (system.s, system.n_l, system.d):
        raise ValueError(f"reliability sequence shape {seq.shape} does not fit {cfg.scheme} at n_b={cfg.n_b}")
    levels = select_frozen(seq, cfg.k_b, cfg.crc)
    crc = global_crc(cfg.crc, cfg.k_b)
    if cfg.scheme == "bicm-qam16":
        lv = levels[0]
        code = PolarLevelCode(lv.n_l, 1, lv.frozen, crc if crc is not None else lv.crc, lv.order)
        return BicmTransceiver(BicmCode(code, system.perm), cfg.maxlog)
    return MultilevelTransceiver(BombeCode(system.constellation, tuple(levels), crc), cfg.maxlog, cfg.propagate)


# simulation

_WORKER = {}


def _init_worker(trx):
    _WORKER["trx"] = trx


def simulate_block(trx, seed: int, frames: range, sigma: float, list_size: int):
    """(bit_errors, frame_errors) for a contiguous range of frame indices."""
    payload = np.stack([frame_rng(seed, f, PAYLOAD_STREAM).integers(0, 2, trx.k_b, dtype=np.uint8) for f in frames])
    tx = trx.encode(payload)
    rx = transmit_frames(tx, sigma, seed, frames)
    est, _ = trx.decode(rx, sigma, list_size)
    wrong = est != payload
    return int(wrong.sum()), int(wrong.any(axis=1).sum())


def _block_task(args):
    return simulate_block(_WORKER["trx"], *args)


def run_point(trx, cfg: SimConfig, snr: float, pool=None) -> CurvePoint:
    sigma = ebn0_to_sigma(snr, trx.es_dim, trx.rate_dim)
    t0 = time.perf_counter()
    frames = bit_err = frame_err = 0
    start = 0
    done = False
    width = cfg.workers if pool is not None else 1
    while not done:
        tasks = []
        for _ in range(width):
            n = min(cfg.block, cfg.max_frames - start)
            if n <= 0:
                break
            tasks.append((cfg.seed, range(start, start + n), sigma, cfg.list_size))
            start += n
        if not tasks:
            break
        results = pool.map(_block_task, tasks) if pool is not None else [simulate_block(trx, *t) for t in tasks]
        for (_, rng_frames, *_), (be, fe) in zip(tasks, results):
            frames += len(rng_frames)
            bit_err += be
            frame_err += fe
            if frame_err >= cfg.min_frame_errors or frames >= cfg.max_frames:
                done = True
                break
    return CurvePoint(snr, ebn0_to_esn0(snr, trx.rate_dim), frames, bit_err, frame_err, trx.k_b, time.perf_counter() - t0)


CSV_FIELDS = ["snr_db", "esn0_db", "frames", "bit_errors", "frame_errors", "ber", "bler", "config_hash"]


def run_sweep(cfg: SimConfig, out=None, trx=None, stop_below: float | None = None) -> list[CurvePoint]:
    """Simulate every SNR point of ``cfg``; optionally write the CSV ``out``.

    ``stop_below`` ends the sweep after the first point whose BLER falls
    below it (the remaining points would only cost time).
    """
    trx = trx if trx is not None else make_transceiver(cfg)
    points = []
    pool = None
    if cfg.workers > 1:
        pool = ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(trx,))
    try:
        for snr in cfg.snrs:
            pt = run_point(trx, cfg, snr, pool)
            log.info("%s n_b=%d R=%s  %.2f dB  frames=%d  BER=%.3e  BLER=%.3e", cfg.scheme, cfg.n_b, cfg.rate, snr, pt.frames, pt.ber, pt.bler)
            points.append(pt)
            if stop_below is not None and pt.bler < stop_below:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    if out is not None:
        write_csv(points, cfg, out)
    return points


def write_csv(points, cfg: SimConfig, path) -> None:
    h = cfg.config_hash()
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for p in points:
            w.writerow([repr(p.snr_db), repr(round(p.esn0_db, 10)), p.frames, p.bit_errors, p.frame_errors, repr(p.ber), repr(p.bler), h])
    # wall-clock times and run metadata go to a sidecar so reruns of the CSV stay byte-identical
    with open(meta_path(path), "w") as fh:
        fh.write(f"config_hash = {h}\n")
        fh.write(f"gaussian = {GAUSSIAN_METHOD}\n")
        for f in dataclasses.fields(cfg):
            fh.write(f"{f.name} = {getattr(cfg, f.name)}\n")
        for p in points:
            fh.write(f"wall_time[{p.snr_db!r}] = {p.wall_time:.3f}\n")


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.txt")


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return {k: np.array([float(r[k]) for r in rows]) for k in ("snr_db", "ber", "bler", "frames", "frame_errors", "bit_errors")}


def snr_at(snr, values, target: float) -> float:
    """SNR where ``values`` first falls to ``target``, interpolating log10(values) linearly."""
    snr = np.asarray(snr, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = v > 0
    s, lv = snr[keep], np.log10(v[keep])
    lt = math.log10(target)
    for i in range(len(s) - 1):
        if lv[i] >= lt >= lv[i + 1]:
            if lv[i] == lv[i + 1]:
                return float(s[i])
            return float(s[i] + (lt - lv[i]) * (s[i + 1] - s[i]) / (lv[i + 1] - lv[i]))
    raise ValueError(f"target {target:g} is outside the curve's range")


def compare_curves(csv_a, csv_b, target_error_rate: float, metric: str = "bler") -> float:
    """SNR_b - SNR_a at ``target_error_rate``; positive means curve a is better."""
    a = read_csv(csv_a) if not isinstance(csv_a, dict) else csv_a
    b = read_csv(csv_b) if not isinstance(csv_b, dict) else csv_b
    return snr_at(b["snr_db"], b[metric], target_error_rate) - snr_at(a["snr_db"], a[metric], target_error_rate)
