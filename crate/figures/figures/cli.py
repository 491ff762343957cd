"""figures <kind> --in CSV [CSV ...] --out IMAGE [--label NAME ...]"""

from __future__ import annotations

import argparse
import sys

from .plots import MissingColumn, plot_mass_ledger, plot_schlieren, plot_sod_profiles

KINDS = ("mass_ledger", "sod_profiles", "schlieren")


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="figures", description="Render plots from ebamr CSV output.")
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--in", dest="inputs", nargs="+", required=True, help="input CSV files")
    ap.add_argument("--out", required=True, help="output image path")
    ap.add_argument("--label", dest="labels", nargs="+", help="curve labels, in input order")
    args = ap.parse_args(argv)
    try:
        if args.kind == "mass_ledger":
            out = plot_mass_ledger(args.inputs, args.out, args.labels)
        elif args.kind == "sod_profiles":
            out = plot_sod_profiles(args.inputs, args.out, args.labels)
        else:
            if len(args.inputs) != 1:
                ap.error("schlieren takes one input")
            out = plot_schlieren(args.inputs[0], args.out)
    except (MissingColumn, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0
