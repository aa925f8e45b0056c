"""Per-level rates of the D4 / r=4 code at several overall rates.

Prints the capacity-rule split (level mutual information at the rate-matched
Eb/N0) next to the split produced by the Monte Carlo reliability ranking.

    python3 scripts/level_rates.py --n-b 1024 --trials 2000
"""

from __future__ import annotations

import argparse
from fractions import Fraction

import numpy as np

from bombe import sim
from bombe.constellation import build
from bombe.construction import rate_matched_design
from bombe.lattice import d4_lattice


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--rates", default="7/16,11/16,15/16")
    ap.add_argument("--n-b", type=int, default=1024)
    ap.add_argument("--trials", type=int, default=2000, help="construction trials per SNR point")
    ap.add_argument("--mi-trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    c = build(d4_lattice(), 4)
    print(f"{'rate':>6} {'Eb/N0':>7} {'cap LSB':>8} {'cap MSB':>8} {'design':>7} {'num LSB':>8} {'num MSB':>8}")
    for rate in args.rates.split(","):
        R = float(Fraction(rate))
        ebn0, _, cap = rate_matched_design(c, R, trials=args.mi_trials, seed=args.seed)
        cfg = sim.SimConfig(n_b=args.n_b, rate=rate, construct_trials=args.trials, seed=args.seed)
        seq = sim.construct(cfg)
        top = seq.entries[: cfg.k_b, 0]
        half = args.n_b // 2
        num = [np.sum(top == i) / half for i in range(2)]
        print(f"{rate:>6} {ebn0:7.2f} {cap[0]:8.3f} {cap[1]:8.3f} {seq.design_snr:7.2f} {num[0]:8.3f} {num[1]:8.3f}")


if __name__ == "__main__":
    main()
