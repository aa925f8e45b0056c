"""Sweep several schemes at one (n_b, rate) and report SNR gaps at a target error rate.

Example:
    python3 scripts/compare_schemes.py --n-b 256 --rate 11/16 --snr-start 4.5 --snr-stop 7 --out-dir results/n256_r11-16
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from bombe import sim


def tag(scheme: str, n_b: int, rate: str) -> str:
    return f"{scheme}_n{n_b}_r{rate.replace('/', '-')}"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--schemes", default="bombe-d4,mlc-qam16,bicm-qam16")
    ap.add_argument("--n-b", type=int, default=256)
    ap.add_argument("--rate", default="11/16")
    ap.add_argument("--snr-start", type=float, default=4.0)
    ap.add_argument("--snr-stop", type=float, default=7.0)
    ap.add_argument("--snr-step", type=float, default=0.25)
    ap.add_argument("--min-frame-errors", type=int, default=100)
    ap.add_argument("--max-frames", type=int, default=100_000)
    ap.add_argument("--construct-trials", type=int, default=2000)
    ap.add_argument("--stop-below", type=float, default=None, help="end a sweep once BLER drops below this")
    ap.add_argument("--target", type=float, default=1e-2)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for scheme in args.schemes.split(","):
        name = tag(scheme, args.n_b, args.rate)
        rel = out / f"{name}.reliability.txt"
        cfg = sim.SimConfig(
            scheme=scheme,
            n_b=args.n_b,
            rate=args.rate,
            snr_start=args.snr_start,
            snr_stop=args.snr_stop,
            snr_step=args.snr_step,
            min_frame_errors=args.min_frame_errors,
            max_frames=args.max_frames,
            construct_trials=args.construct_trials,
            workers=args.workers,
            seed=args.seed,
        )
        if not rel.exists():
            sim.construct(cfg, rel)
        cfg.reliability = str(rel)
        files[scheme] = out / f"{name}.csv"
        sim.run_sweep(cfg, files[scheme], stop_below=args.stop_below)

    names = list(files)
    for metric in ("bler", "ber"):
        for other in names[1:]:
            try:
                gain = sim.compare_curves(files[names[0]], files[other], args.target, metric)
                print(f"{metric.upper()} {args.target:g}: {names[0]} vs {other}: {gain:+.3f} dB")
            except ValueError as exc:
                print(f"{metric.upper()} {args.target:g}: {names[0]} vs {other}: {exc}")


if __name__ == "__main__":
    main()
