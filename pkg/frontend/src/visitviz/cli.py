"""Command line: render figures from a solver run directory.

    visitviz render --run <dir> --what values|transport|trajectory \
        [--times all|k1,k2,...] [--out <dir>]

--times takes time-level indices matching the _k<level> suffix of the CSV
slices (default: every level present for the chosen kind). Values render
one level per invocation since their filenames carry only the state.
Output defaults to <run>/figures. Exit code 2 flags bad input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .manifest import VizError, load_run
from .render import render_trajectory, render_transport, render_values


def _parse_times(raw: str, available: list[int]) -> list[int]:
    if raw == "all":
        return available
    try:
        levels = sorted({int(tok) for tok in raw.split(",") if tok.strip()})
    except ValueError:
        raise VizError(f"bad --times value '{raw}': use 'all' or "
                       "comma-separated level indices")
    missing = [k for k in levels if k not in available]
    if missing:
        raise VizError(f"levels {missing} not in the run (available: "
                       f"{available})")
    if not levels:
        raise VizError("--times selected no levels")
    return levels


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="visitviz",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render PNG figures from a run")
    r.add_argument("--run", required=True, help="run directory")
    r.add_argument("--what", required=True,
                   choices=("values", "transport", "trajectory"))
    r.add_argument("--times", default="all",
                   help="'all' or comma-separated time-level indices")
    r.add_argument("--out", default=None,
                   help="output directory (default <run>/figures)")
    return parser


def cmd_render(args) -> int:
    manifest = load_run(args.run)
    out = Path(args.out) if args.out else Path(args.run) / "figures"
    if args.what == "values":
        levels = _parse_times(args.times, manifest.levels_of("values"))
        if len(levels) != 1:
            raise VizError("values render one level per invocation; pass "
                           "--times with a single level index")
        written = render_values(manifest, levels[0], out)
    elif args.what == "transport":
        levels = _parse_times(args.times, manifest.levels_of("density"))
        written = render_transport(manifest, levels, out)
    else:
        written = render_trajectory(manifest, out)
    for path in written:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return cmd_render(args)
    except VizError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
