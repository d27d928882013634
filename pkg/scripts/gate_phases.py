"""Closed-form vs numeric gate angles over a range of loop heights theta0.

Also prints the commutator norm of the two gates, which vanishes only when
sin(beta2) = 0 or beta1 is a multiple of 2 pi.
"""

import argparse

import numpy as np

from holoq import serialize, tripod


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--n-steps", type=int, default=1000)
    ap.add_argument("--alpha", type=float, default=0.6)
    ap.add_argument("--csv", default=None)
    args = ap.parse_args()

    rows = []
    print(f"{'theta0':>7} {'beta1':>9} {'err1':>8} {'beta2':>9} {'err2':>8} {'[U1,U2]':>8}")
    for th in np.linspace(0.1, np.pi - 0.1, args.points):
        loop = tripod.chart_rectangle(th)
        r1 = tripod.gate_u1(loop, args.alpha, 1.0, n_steps=args.n_steps)
        r2 = tripod.gate_u2(loop, args.alpha, 1.0, n_steps=args.n_steps)
        comm = tripod.commutator_norm(r1.beta, r2.beta)
        rows.append([th, r1.beta, r1.discrepancy, r2.beta, r2.discrepancy, comm])
        print(f"{th:>7.3f} {r1.beta:>9.4f} {r1.discrepancy:>8.1e} {r2.beta:>9.4f} {r2.discrepancy:>8.1e} {comm:>8.3f}")
    if args.csv:
        serialize.write_csv(args.csv, ["theta0", "beta1", "err1", "beta2", "err2", "commutator"], rows)


if __name__ == "__main__":
    main()
