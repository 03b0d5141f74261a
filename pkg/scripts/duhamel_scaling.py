"""Duhamel gap at half the admissible horizon, averaged over a few fields."""

import argparse

import numpy as np

from rogueqp.lattice import DecayProfile, FrequencyMatrix, TruncationBox
from rogueqp.random_field import SeedSpec, make_initial_state, sample_field
from rogueqp.solver import SolverConfig, duhamel_gap, integrate
from rogueqp.trees import horizon


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025])
    ap.add_argument("--eta", type=float, default=0.5)
    ap.add_argument("--rho", type=float, default=5.0)
    ap.add_argument("--N", type=int, default=2)
    ap.add_argument("--fields", type=int, default=8)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    om, p = FrequencyMatrix([[1.0]]), DecayProfile([args.rho], [1.0])
    box = TruncationBox(args.N, 1)
    print(f"{'eps':>7} {'T':>9} {'mean gap*eps^1/2':>17} {'mean l1 gap':>12}")
    for eps in args.eps:
        T = 0.5 * horizon(eps, args.eta, p, 1).T_eps
        sup, l1 = [], []
        for k in range(args.fields):
            s0 = make_initial_state(p, sample_field(SeedSpec(args.seed), box, k), eps)
            gap = duhamel_gap(integrate(s0, T, SolverConfig(), om, eps, n_snapshots=2), s0, om, eps, args.eta)
            sup.append(gap.sup[-1] * eps ** 0.5)
            l1.append(gap.l1[-1])
        print(f"{eps:7.4f} {T:9.4f} {np.mean(sup):17.4e} {np.mean(l1):12.4e}")


if __name__ == "__main__":
    main()
