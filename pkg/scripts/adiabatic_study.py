"""Gate extracted from full time evolution around the U2 rectangle vs loop duration.

For each duration T the dark frame at the base point is evolved with the
metric-corrected generator; the printed columns are the gate error against the
numeric holonomy, the peak excited weight along the way (measured against the
instantaneous dark level) and the eta-norm drift.
"""

import argparse

import numpy as np

from holoq import dynamics, serialize, tripod


def run(theta0, T, n_steps, alpha, delta, stride=200):
    fam = tripod.chart_family("u2", alpha, delta)
    loop = tripod.chart_rectangle(theta0)
    dark = tripod.dark_frame("u2", alpha, delta)
    R = dark(loop.points[0])
    eta = fam.metric(loop.points[0])
    traj = dynamics.evolve(dynamics.loop_system(fam, loop, T), R, n_steps)
    # the leakage guard is off: short loops are far from adiabatic on purpose
    G = dynamics.adiabatic_gate_extract(traj, R, eta @ R, eta, error=np.inf)
    pts = dynamics.LoopSchedule(loop, T).points(traj.times[::stride])
    peak = max(float(np.max(dynamics.leakage(s, dark(p), eta @ dark(p), eta)))
               for s, p in zip(traj.states[::stride], pts))
    return G, peak, dynamics.norm_conservation_drift(traj)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--theta0", type=float, default=np.pi / 4)
    ap.add_argument("--T", type=float, nargs="+", default=[25, 50, 100, 200, 400])
    ap.add_argument("--n-steps", type=int, default=200_000)
    ap.add_argument("--alpha", type=float, default=0.6)
    ap.add_argument("--delta", type=float, default=1.0)
    ap.add_argument("--csv", default=None)
    args = ap.parse_args()

    hol = tripod.gate_u2(tripod.chart_rectangle(args.theta0), args.alpha, args.delta).numeric_holonomy
    rows = []
    print(f"{'T':>7} {'gate error':>11} {'peak leak':>10} {'drift':>9}")
    for T in args.T:
        G, peak, drift = run(args.theta0, T, args.n_steps, args.alpha, args.delta)
        err = float(np.linalg.norm(G - hol))
        rows.append([T, err, peak, drift])
        print(f"{T:>7.1f} {err:>11.3e} {peak:>10.3e} {drift:>9.1e}")
    if args.csv:
        serialize.write_csv(args.csv, ["T", "gate_error", "peak_leakage", "norm_drift"], rows)


if __name__ == "__main__":
    main()
