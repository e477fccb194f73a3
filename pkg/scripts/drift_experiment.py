"""Drift of first integrals along the benchmark flow, for raw mu and K = 1..3.

Prints the direct drift max |K(z(tau)) - K(z0)| and the bracket-quadrature
estimate, with log2 slopes under halving of z0.

    python3 scripts/drift_experiment.py [--step 1e-3] [--z0 0.1]
"""
import argparse

from singkam.checks import benchmark_runs
from singkam.flow import FlowConfig, drift_report, quadrature_drift
from singkam.kam import transformed_integrals
from singkam.series import TransformChain, mu


def fmt(xs):
    return "[" + ", ".join("-" if x is None else f"{x:.3g}" for x in xs) + "]"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("--z0", type=float, default=0.1)
    ap.add_argument("--horizon", type=float, default=1.0)
    args = ap.parse_args()

    H, (chain, _, _), _ = benchmark_runs()
    cfg = FlowConfig([0.0, 0.0], [args.z0] * 4, horizon=args.horizon, step=args.step)
    sets = {"raw": [mu(H, 0), mu(H, 1)]}
    for K in range(1, len(chain.steps) + 1):
        sets[f"K={K}"] = transformed_integrals(TransformChain(chain.steps[:K]), H)
    for name, ints in sets.items():
        rep = drift_report(H, ints, cfg)
        quad = quadrature_drift(H, ints, cfg)
        print(f"{name:5s} direct drift {fmt(r[0] for r in rep.drift)} slopes {fmt(rep.slopes[0])}")
        print(f"{'':5s} quadrature   {fmt(r[0] for r in quad['drift'])} slopes {fmt(quad['slopes'][0])}")


if __name__ == "__main__":
    main()
