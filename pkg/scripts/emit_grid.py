"""Write dispersion, skewness and kurtosis grids as CSV for contour plots.

    python scripts/emit_grid.py --out grids/ --n 10 --psi 0 -1
"""

from __future__ import annotations

import argparse
import csv
import pathlib

from mcmpb.cli import grid_values

INDICES = ("dispersion", "skewness", "kurtosis")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("grids"))
    ap.add_argument("--n", type=int, nargs="+", default=[10])
    ap.add_argument("--psi", type=float, nargs="+", default=[0.0])
    ap.add_argument("--lo", type=float, default=-2.0)
    ap.add_argument("--hi", type=float, default=2.0)
    ap.add_argument("--step", type=float, default=0.05)
    a = ap.parse_args()
    a.out.mkdir(parents=True, exist_ok=True)
    for n in a.n:
        for psi in a.psi:
            for index in INDICES:
                rows = grid_values(n, psi, (a.lo, a.hi), (a.lo, a.hi), a.step, index)
                path = a.out / f"{index}_n{n}_psi{psi:g}.csv"
                with path.open("w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(["alpha", "beta", index])
                    w.writerows((f"{x:.6g}", f"{y:.6g}", f"{v:.12g}") for x, y, v in rows)
                print(f"wrote {path} ({len(rows)} rows)")


if __name__ == "__main__":
    main()
