#!/usr/bin/env python3
"""Generate a synthetic fixture dataset (JSON-lines, one unit per line).

Examples:
    python3 scripts/make_dataset.py --kind planted --units 20 --out planted.jsonl
    python3 scripts/make_dataset.py --kind cbfs --units 30 --out cbfs.jsonl
"""

import argparse

from essrank.synth import make_cbfs_units, make_icr_units, make_planted_units
from essrank.textproc import save_units


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--kind", choices=("planted", "cbfs", "icr"), default="planted")
    parser.add_argument("--units", type=int, default=20)
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()

    if args.kind == "planted":
        units = make_planted_units(args.units, args.seed)
    elif args.kind == "cbfs":
        units = [f.unit for f in make_cbfs_units(args.units, args.seed)]
    else:
        units = [f.unit for f in make_icr_units(args.units, args.seed)]
    save_units(args.out, units)
    print(f"wrote {len(units)} units to {args.out}")


if __name__ == "__main__":
    main()
