"""Grid convergence of the cubic N=3, p=2 minimum against the shooting oracle.

For each cell count the solver runs on [-L, L]^3; the table shows T, its
error against T_ref, the Galerkin multiplier of the rescaled solution (1 for
an exact solution) and the largest verdict metric relative to its threshold.
Doubling L checks that the box does not bias T (required change < 1%).
"""
import argparse
import time

from leastenergy.field import Grid
from leastenergy.functionals import ProblemSpec
from leastenergy.nonlinearity import make
from leastenergy.oracle import ground_state
from leastenergy.solver import SolverConfig, galerkin_multiplier, solve_least_energy


def run(spec, L, n, cfg):
    t0 = time.perf_counter()
    res = solve_least_energy(spec, cfg, Grid(spec.N, L, n))
    worst = max(res.verdicts, key=lambda v: v.metric / v.threshold)
    return res, time.perf_counter() - t0, worst


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--cells", type=int, nargs="+", default=[32, 48, 64])
    ap.add_argument("--L", type=float, default=8.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    spec = ProblemSpec(3, 2.0, make("cubic"))
    cfg = SolverConfig(seed=args.seed)
    ref = ground_state(spec)
    print(f"T_ref = {ref.T_ref:.6f}")
    print(f"{'L':>5} {'n':>4} {'T':>10} {'err':>8} {'galerkin':>9} {'its':>5} {'sec':>6}  worst verdict")
    T_by_L = {}
    for n in args.cells:
        res, sec, worst = run(spec, args.L, n, cfg)
        T_by_L[args.L] = res.T
        g = galerkin_multiplier(res.solution, spec)
        print(f"{args.L:>5g} {n:>4} {res.T:>10.5f} {(res.T - ref.T_ref) / ref.T_ref:>+8.4f} {g:>9.5f} "
              f"{res.iterations:>5} {sec:>6.1f}  {worst.name} {worst.metric:.2e}/{worst.threshold:g}")
    n = args.cells[-1]
    res, sec, _ = run(spec, 2 * args.L, 2 * n, cfg)
    change = abs(res.T - T_by_L[args.L]) / T_by_L[args.L]
    print(f"{2 * args.L:>5g} {2 * n:>4} {res.T:>10.5f}  box doubling changes T by {change:.2e}"
          f" ({'ok' if change < 0.01 else 'too large'})")


if __name__ == "__main__":
    main()
