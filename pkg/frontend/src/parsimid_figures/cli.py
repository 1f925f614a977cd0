"""Script interface: render --kind {sweetspot,kappa,poles} --in f --out f."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureError, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="render")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="in_path", required=True,
                        help="summary CSV from the benchmark harness")
    parser.add_argument("--out", dest="out_path", required=True,
                        help="output image path (PNG)")
    parser.add_argument("--linear-x", action="store_true",
                        help="disable the log sample axis")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(kind=args.kind, in_path=args.in_path,
                      out_path=args.out_path, log_x=not args.linear_x)
    try:
        out = render(spec)
    except FileNotFoundError as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 1
    except FigureError as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
