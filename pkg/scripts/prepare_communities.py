"""Convert the raw UCI Communities and Crime files into a headered CSV.

Usage::

    python scripts/prepare_communities.py communities.data communities.names communities.csv

The output keeps every column (missing values written as ``NA``) so the
standard ingestion rules apply unchanged, e.g.::

    nvsd select --alpha 0.001 --response ViolentCrimesPerPop \\
        --exclude state --exclude county --exclude community \\
        --exclude communityname --exclude fold communities.csv
"""

from __future__ import annotations

import argparse

from nvsd.io import read_communities_raw


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("data")
    ap.add_argument("names")
    ap.add_argument("out")
    args = ap.parse_args()
    frame = read_communities_raw(args.data, args.names)
    frame.to_csv(args.out, index=False, na_rep="NA", float_format="%.17g")


if __name__ == "__main__":
    main()
