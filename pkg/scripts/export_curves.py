"""Export plot-ready curves: base pairs, their mappings and a few composed systems.

    python scripts/export_curves.py --out curves/

Writes one CSV per subject with the same header convention as the CLI.
"""

import argparse
from pathlib import Path

import numpy as np

from zeropot.catalog import make_pair, potential
from zeropot.cli import to_csv
from zeropot.transform import build_mapping, compose

PAIRS = [
    ("free", {}),
    ("rational-exp-22", {"lambda": 1.0, "a": 1.0}),
    ("inverse-square-quartic-23", {"g": 4.0, "b": 1.0}),
    ("exponential-70", {"lambda": 1.0, "mu": 1.0}),
    ("inverse-quartic-74", {"g": 1.0}),
    ("coulomb-72p", {"alpha": 1.0}),
    ("chi-exponential-82", {"mu": 1.0}),
]

SYSTEMS = [
    ("eq22_attractive_exp", ("rational-exp-22", {}), ("exponential-70", {"lambda": -5.0, "mu": 1.0})),
    ("eq22_eq23", ("rational-exp-22", {}), ("inverse-square-quartic-23", {"g": 4.0, "b": 1.0})),
    ("eq25_eq22", ("inverse-square-quartic-23", {"g": 4.0, "b": 1.0}), ("rational-exp-22", {})),
]


def pair_curves(fid, params, r):
    pair = make_pair(fid, **params)
    r = r[(r > pair.domain[0]) & (r < pair.domain[1])]
    with np.errstate(all="ignore"):
        cols = {"r": r, "V": pair.potential(r), "phi": pair.phi(r), "chi": pair.chi(r)}
        cols["x"] = build_mapping(pair, min(r[-1], pair.domain[1])).forward(r)
    return cols


def system_curves(base, inner, r):
    sys = compose(make_pair(base[0], **base[1]), potential(inner[0], **inner[1]))
    r = r[r <= sys.r_max]
    return {"r": r, "V": sys.potential_value(r), "phi": sys.phi(r), "x": sys.mapping.forward(r),
            "V_inner": sys.inner(sys.mapping.forward(r))}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="curves")
    ap.add_argument("--points", type=int, default=400)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    r = np.geomspace(1e-2, 30.0, args.points)
    for fid, params in PAIRS:
        (out / f"pair_{fid}.csv").write_text(to_csv(pair_curves(fid, params, r)))
        print(f"wrote pair_{fid}.csv")
    for label, base, inner in SYSTEMS:
        (out / f"composed_{label}.csv").write_text(to_csv(system_curves(base, inner, r)))
        print(f"wrote composed_{label}.csv")


if __name__ == "__main__":
    main()
