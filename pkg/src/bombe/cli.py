"""Command line: ``bombe {construct,sweep,compare,dump-constellation}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

import numpy as np

from . import sim
from .constellation import DitherError, build
from .lattice import d4_lattice, integer_lattice


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; flags override it")
    for f in dataclasses.fields(sim.SimConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool":
            p.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        else:
            p.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper())


def _config(args) -> sim.SimConfig:
    values = sim.read_config_file(args.config) if args.config else {}
    for f in dataclasses.fields(sim.SimConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v if isinstance(v, bool) else str(v)
    return sim.SimConfig.from_mapping(values)


def cmd_construct(args) -> int:
    cfg = _config(args)
    grid = None
    if args.grid:
        grid = [float(v) for v in args.grid.split(",")]
    seq = sim.construct(cfg, args.out, trials=args.trials, grid=grid)
    print(f"design Eb/N0 {seq.design_snr:.2f} dB, {seq.trials} trials, wrote {args.out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    points = sim.run_sweep(cfg, args.out, stop_below=args.stop_below)
    for p in points:
        print(f"{p.snr_db:6.2f} dB  frames={p.frames:8d}  BER={p.ber:.3e}  BLER={p.bler:.3e}")
    return 0


def cmd_compare(args) -> int:
    gain = sim.compare_curves(args.csv_a, args.csv_b, args.target, args.metric)
    print(f"{gain:.4f}")
    return 0


def cmd_dump(args) -> int:
    lat = d4_lattice() if args.lattice == "D4" else integer_lattice(int(args.lattice.lstrip("Z")))
    dither = None if args.dither is None else [float(v) for v in args.dither.split(",")]
    c = build(lat, args.r, dither)
    c.to_csv(args.out)
    print(f"{c.size} points, Es = {c.es:.6f}, margin = {c.margin:.6f}, wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bombe", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="estimate and save a reliability sequence")
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--grid", help="comma separated Eb/N0 values in dB (default: automatic)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("sweep", help="BER/BLER sweep over Eb/N0")
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--stop-below", type=float, help="stop after the first point with BLER below this")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="SNR gap between two curves at a target error rate")
    p.add_argument("csv_a")
    p.add_argument("csv_b")
    p.add_argument("--target", type=float, default=1e-2)
    p.add_argument("--metric", choices=("bler", "ber"), default="bler")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("dump-constellation", help="write a shaped constellation as CSV")
    p.add_argument("--lattice", default="D4", help="D4 or Zd, e.g. Z2")
    p.add_argument("--r", type=int, default=4)
    p.add_argument("--dither", help="comma separated dither vector")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dump)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, DitherError) as exc:
        print(f"bombe: error: {exc}", file=sys.stderr)
        return 2
