"""Write the standard result tables through the CLI into one directory.

    python scripts/make_tables.py --out results

Each table is a CSV whose first line holds the run configuration and input
hashes, so reruns with the same inputs are byte-identical.
"""
from __future__ import annotations

import argparse
from pathlib import Path

from wlab import cli

RUNS = {
    "local_table.csv": ["local"],
    "h_table.csv": ["h-table"],
    "arch_discrete.csv": ["arch", "--series", "discrete", "--grid", "2", "1000", "12"],
    "arch_principal.csv": ["arch", "--series", "principal"],
    "arch_principal_nt.csv": ["arch", "--series", "principal-nt", "--grid", "20", "150", "8"],
    "certify.csv": ["certify"],
    "mvalue_25_4.csv": ["mvalue", "--level", "25", "--chi", "4", "--points", "zchi,grid"],
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--data", default="data")
    ap.add_argument("--only", nargs="*", help="subset of table names")
    args = ap.parse_args(argv)
    out = Path(args.out)
    worst = 0
    for name, argv_ in RUNS.items():
        if args.only and name not in args.only:
            continue
        extra = ["--data", args.data] if argv_[0] in ("certify", "mvalue") else []
        code = cli.main(["--out", str(out / name), *argv_, *extra])
        print(f"{name}: exit {code}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
