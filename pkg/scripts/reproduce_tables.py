"""Fit every bundled dataset with MCMPB and the four competitors.

    python scripts/reproduce_tables.py [--out results/]
"""

from __future__ import annotations

import argparse
import pathlib
import time
from dataclasses import dataclass

from mcmpb import competitors, report
from mcmpb.datasets import FIXTURES
from mcmpb.inference import fit_fixed_n, fit_profile_n


@dataclass(frozen=True)
class TableConfig:
    dataset: str
    fixed_n: int | None = None  # None profiles n over [max, max + 30]
    competitors: bool = False


TABLES = (
    TableConfig("bacterial"),
    TableConfig("saxony", fixed_n=12),
    TableConfig("linnet", competitors=True),
    TableConfig("trip", competitors=True),
)


def fit_all(cfg: TableConfig):
    data = FIXTURES[cfg.dataset]
    if cfg.fixed_n is None:
        reports = [fit_profile_n(data)]
    else:
        reports = [fit_fixed_n(data, cfg.fixed_n)]
    if cfg.competitors:
        reports += [competitors.fit_cmpb(data), competitors.fit_bb(data),
                    competitors.fit_nb(data), competitors.fit_cmp(data)]
        # beta-binomial with n pinned at the largest count, for comparison
        reports.append(competitors.fit_bb(data, n=data.max_value))
    return reports


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=pathlib.Path, help="directory for JSON reports")
    args = ap.parse_args()
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
    for cfg in TABLES:
        t0 = time.perf_counter()
        reports = fit_all(cfg)
        print(f"==== {cfg.dataset} ({time.perf_counter() - t0:.1f} s)")
        for r in reports:
            print(report.render_table(r))
            print()
        if args.out:
            (args.out / f"{cfg.dataset}.json").write_text(report.dumps(reports))


if __name__ == "__main__":
    main()
