"""Print shooting-oracle reference values for the scalar test problems."""
import argparse

from leastenergy.functionals import ProblemSpec
from leastenergy.nonlinearity import make
from leastenergy.oracle import ground_state

CASES = [(3, 2.0, "cubic", {}), (2, 2.0, "cubic", {}), (3, 2.5, "cubic", {}),
         (3, 2.0, "double_power", {"q": 3.0, "r": 2.0})]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dr", type=float, default=1e-3)
    args = ap.parse_args()
    print(f"{'N':>2} {'p':>4} {'model':<14} {'u0':>14} {'J_ref':>12} {'V_ref':>12} {'T_ref':>12} "
          f"{'pohozaev':>9} {'T_ref(dr/2)':>12}")
    for N, p, name, params in CASES:
        spec = ProblemSpec(N, p, make(name, **params))
        res = ground_state(spec, dr=args.dr)
        half = ground_state(spec, dr=args.dr / 2)
        print(f"{N:>2} {p:>4g} {name:<14} {res.u0:>14.10f} {res.J_ref:>12.6f} {res.V_ref:>12.6f} "
              f"{res.T_ref:>12.6f} {res.pohozaev_relative(N, p):>9.1e} {half.T_ref:>12.6f}")


if __name__ == "__main__":
    main()
