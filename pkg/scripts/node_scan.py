"""Scan the strength of an attractive exponential inner potential.

For V1 = lam e^{-r} the inner regular solution is a Bessel J0/Y0 combination
in z = 2 sqrt(|lam|) e^{-r/2}; its node count is the number of J0 zeros
below z0 = 2 sqrt(|lam|). The scan checks that the composed solution over a
repulsive base has the same count and that both stay under the Bargmann
bound |lam|.

    python scripts/node_scan.py --base rational --lam-max 40 --steps 16
"""

import argparse
import math

import numpy as np
from scipy.special import jn_zeros

from zeropot.analysis import bargmann_bound, count_nodes
from zeropot.catalog import FamilyId, make_pair, potential
from zeropot.numerics import RegularSolution
from zeropot.transform import compose


def bessel_oracle(lam: float) -> int:
    z0 = 2 * math.sqrt(-lam)
    return int(np.sum(jn_zeros(0, 50) < z0))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--base", default="rational")
    ap.add_argument("--lam-max", type=float, default=40.0)
    ap.add_argument("--steps", type=int, default=16)
    args = ap.parse_args()
    fid = FamilyId.parse(args.base)
    base = make_pair(fid.id, **fid.params)
    print(f"{'lambda':>9} {'oracle':>6} {'inner':>5} {'composed':>8} {'bargmann':>9}")
    bad = 0
    for lam in -np.linspace(0.5, args.lam_max, args.steps):
        V1 = potential("exponential-70", **{"lambda": float(lam), "mu": 1.0})
        inner = count_nodes(RegularSolution(V1, 60.0), (0.0, 60.0))
        sys = compose(base, V1)
        comp = count_nodes(sys.phi, (0.0, 0.999 * sys.r_max))
        bound = bargmann_bound(V1)
        oracle = bessel_oracle(lam)
        ok = inner == comp == oracle and comp <= bound
        bad += not ok
        print(f"{lam:9.3f} {oracle:6d} {inner:5d} {comp:8d} {bound:9.4f}{'' if ok else '  MISMATCH'}")
    raise SystemExit(1 if bad else 0)


if __name__ == "__main__":
    main()
