"""Empirical probability of the exceptional set against ``exp(-1/delta)``."""

import argparse
import math

from rogueqp.lattice import TruncationBox
from rogueqp.random_field import SeedSpec, exceptional_mask, exceptional_tail_bound, sample_fields


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=float, nargs="+", default=[0.5, 0.33, 0.25, 0.2])
    ap.add_argument("--N", type=int, default=8)
    ap.add_argument("--nu", type=int, default=2)
    ap.add_argument("--kappa", type=float, default=1.0)
    ap.add_argument("--n", type=int, default=100000)
    ap.add_argument("--seed", type=int, default=77)
    args = ap.parse_args()

    box = TruncationBox(args.N, args.nu)
    kappa = [args.kappa] * args.nu
    chunk = 10000
    print(f"{'delta':>6} {'p_hat':>10} {'p*e^(1/d)':>10} {'outside-box bound':>18}")
    for d in args.delta:
        hits = sum(int(exceptional_mask(sample_fields(SeedSpec(args.seed), box, s, min(chunk, args.n - s)),
                                        box, d, kappa).sum()) for s in range(0, args.n, chunk))
        p = hits / args.n
        print(f"{d:6.3f} {p:10.4e} {p * math.exp(1 / d):10.4f} {exceptional_tail_bound(box, d, kappa):18.3e}")


if __name__ == "__main__":
    main()
