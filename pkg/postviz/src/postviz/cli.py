"""Command line: regenerate energy and slice figures from run outputs."""

import argparse
import glob
import sys

from .plots import PlotSpec, run_plots


def cli(argv=None):
    parser = argparse.ArgumentParser(
        prog="postviz",
        description="plot energy curves and magnetization slices from "
                    "simulation outputs")
    parser.add_argument("--csv", default=None, help="energy trace CSV")
    parser.add_argument("--vtk-glob", default=None,
                        help="glob pattern for snapshot VTK files")
    parser.add_argument("--plane", type=float, default=0.5,
                        help="x3 value of the slice plane (default 0.5)")
    parser.add_argument("--field", default="m",
                        help="point vector field to slice (default m)")
    parser.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)

    vtk_paths = sorted(glob.glob(args.vtk_glob)) if args.vtk_glob else []
    if args.csv is None and not vtk_paths:
        # nothing matched, nothing requested: no-op by design
        print("nothing to plot")
        return 0
    try:
        spec = PlotSpec(csv_path=args.csv, vtk_paths=vtk_paths,
                        plane=args.plane, field=args.field, out_dir=args.out)
        written = run_plots(spec)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in written:
        print(p)
    return 0


def main():
    sys.exit(cli())
