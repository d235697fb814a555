"""Fit the zero-energy tail phi ~ A r + B for every s-wave catalog pair.

Prints A, B, chi(inf) A and the sign rule: repulsive potentials give A > 1
and B < 0.

    python scripts/tail_coefficients.py
"""

from zeropot.analysis import asymptotic_fit
from zeropot.catalog import FAMILIES, make_pair
from zeropot.errors import NotAdmissible


def main():
    print(f"{'family':<28} {'A':>18} {'B':>18} {'chi(inf) A - 1':>15}")
    for fid in FAMILIES:
        try:
            pair = make_pair(fid)
        except NotAdmissible:
            continue
        if pair.ell != 0 or pair.potential.tail_class != "short-range":
            continue
        fit = asymptotic_fit(pair.phi, 0)
        dev = float(pair.chi(1e4)) * fit.A - 1
        print(f"{fid:<28} {fit.A:18.12g} {fit.B:18.12g} {dev:15.2e}")


if __name__ == "__main__":
    main()
