"""`plot hist|convergence|ranking <csv> -o <png>`"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .charts import ChartError, ChartSpec, render

_KINDS = {"hist": "histogram-overlay",
          "convergence": "convergence",
          "ranking": "ranking"}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="plot", description="Render sbpq CSV outputs as figures")
    sub = ap.add_subparsers(dest="kind", required=True)
    for name in _KINDS:
        p = sub.add_parser(name)
        p.add_argument("csv", type=Path)
        p.add_argument("-o", "--out", type=Path, required=True)
        if name == "hist":
            p.add_argument("--head", type=int, default=None,
                           help="head-zoom window size (queue-length units)")
            p.add_argument("--tail-quantile", type=float, default=0.9)
    args = ap.parse_args(argv)
    spec = ChartSpec(kind=_KINDS[args.kind], csv_path=args.csv,
                     out_path=args.out,
                     head_window=getattr(args, "head", None),
                     tail_quantile=getattr(args, "tail_quantile", 0.9))
    try:
        out = render(spec)
    except ChartError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
