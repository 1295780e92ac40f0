"""Solve the cubic model, compare with the shooting oracle and print the verdicts."""
import argparse

from leastenergy.field import Grid
from leastenergy.functionals import ProblemSpec, solution_targets
from leastenergy.nonlinearity import make
from leastenergy.oracle import ground_state
from leastenergy.solver import SolverConfig, solve_least_energy
from leastenergy.verify import summary_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--L", type=float, default=8.0)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    spec = ProblemSpec(args.N, args.p, make("cubic"))
    res = solve_least_energy(spec, SolverConfig(seed=args.seed), Grid(args.N, args.L, args.n))
    ref = ground_state(spec)
    print(f"{res.regime}: T = {res.T:.6f}, oracle T_ref = {ref.T_ref:.6f} "
          f"({(res.T - ref.T_ref) / ref.T_ref:+.2%}), iterations {res.iterations} ({res.stop_reason})")
    if spec.regime == "subcritical":
        t = solution_targets(res.T, args.N, args.p)
        print(f"alpha = {res.alpha:.6f}, sigma0 = {res.sigma0:.6f}, lambda = {res.lam:.6f}")
        print(f"solution J = {res.energy.J:.6f} (target {t['J']:.6f}), "
              f"V = {res.energy.V:.6f} (target {t['V']:.6f}), S = {res.energy.S:.6f}")
    print(summary_table(res.verdicts))


if __name__ == "__main__":
    main()
