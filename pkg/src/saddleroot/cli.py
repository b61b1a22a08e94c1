"""Command-line driver: ``simulate``, ``pvalue`` and ``table``."""

from __future__ import annotations

import argparse
import logging
import secrets
import sys
from pathlib import Path

from .approx import FORMATS, SingularityPolicy
from .expratio import EXP_RATIO
from .inference import ROWS, pvalue_suite
from .mcsim import SimConfig, run_simulation
from .results import (
    SchemaError,
    parse_data_csv,
    read_results_csv,
    render_tables,
    write_pvalue_csv,
    write_results_csv,
)

log = logging.getLogger("saddleroot")


def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{s!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _positive_float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{s!r} is not a number") from None
    if not v > 0 or v == float("inf"):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {s}")
    return v


def _alpha(s: str) -> float:
    v = _positive_float(s)
    if not v < 1:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {s}")
    return v


def _seed(s: str) -> int:
    try:
        v = int(s, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{s!r} is not an integer") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _choices(allowed):
    def parse(s: str) -> tuple[str, ...]:
        items = tuple(i.strip() for i in s.split(",") if i.strip())
        bad = [i for i in items if i not in allowed]
        if bad or not items:
            raise argparse.ArgumentTypeError(f"choose from {','.join(allowed)}; got {s!r}")
        return items

    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="saddleroot", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="Type I error simulation for the exponential ratio")
    s.add_argument("--n", type=_positive_int, default=10, help="pairs per data set")
    s.add_argument("--reps", type=_positive_int, default=10_000, help="replicates per round")
    s.add_argument("--rounds", type=_positive_int, default=100)
    s.add_argument("--alpha", type=_alpha, default=0.05)
    s.add_argument("--psi0", type=_positive_float, default=1.0)
    s.add_argument("--seed", type=_seed, default=None, help="master seed (default: random, logged)")
    s.add_argument("--rows", type=_choices(ROWS), default=ROWS)
    s.add_argument("--formats", type=_choices(FORMATS), default=FORMATS)
    s.add_argument("--workers", type=_positive_int, default=1)
    s.add_argument("-o", "--output", type=Path, help="write CSV here instead of stdout")

    v = sub.add_parser("pvalue", help="p-value grid for an x,y data file")
    v.add_argument("--data", type=Path, required=True)
    v.add_argument("--psi0", type=_positive_float, required=True)
    v.add_argument("-o", "--output", type=Path)

    t = sub.add_parser("table", help="render a results CSV as text tables")
    t.add_argument("--in", dest="input", type=Path, required=True)
    t.add_argument("-o", "--output", type=Path)
    return p


def _emit(text_writer, output: Path | None) -> None:
    if output is None:
        text_writer(sys.stdout)
        return
    with output.open("w", encoding="utf-8", newline="") as fh:
        text_writer(fh)


def cmd_simulate(args) -> int:
    seed = args.seed
    if seed is None:
        seed = secrets.randbits(64)
        log.warning("no --seed given; using master seed %d", seed)
    cfg = SimConfig(
        n=args.n,
        reps_per_round=args.reps,
        rounds=args.rounds,
        alpha=args.alpha,
        psi0=args.psi0,
        master_seed=seed,
        rows=args.rows,
        formats=args.formats,
        policy=SingularityPolicy(),
    )
    report = run_simulation(cfg, workers=args.workers)
    _emit(lambda fh: write_results_csv(report, fh), args.output)
    return 0


def cmd_pvalue(args) -> int:
    sample = parse_data_csv(args.data)
    grid = pvalue_suite(EXP_RATIO, sample, args.psi0)
    _emit(lambda fh: write_pvalue_csv(grid, fh), args.output)
    return 0


def cmd_table(args) -> int:
    text = args.input.read_text(encoding="utf-8")
    rendered = render_tables(read_results_csv(text))
    _emit(lambda fh: fh.write(rendered), args.output)
    return 0


COMMANDS = {"simulate": cmd_simulate, "pvalue": cmd_pvalue, "table": cmd_table}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (SchemaError, FileNotFoundError, IsADirectoryError, UnicodeDecodeError) as exc:
        print(f"saddleroot {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        log.exception("internal failure")
        return 1


if __name__ == "__main__":
    sys.exit(main())
