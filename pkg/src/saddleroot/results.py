"""Results CSV (``kind,row,format,sidedness,round,value``), data CSV and tables."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal, InvalidOperation
from pathlib import Path

from .approx import FORMATS
from .expratio import PairedSample
from .inference import ROWS, PValueGrid
from .mcsim import SIDES, SimReport

RESULTS_HEADER = ("kind", "row", "format", "sidedness", "round", "value")
KINDS = ("round", "average", "stderr", "diagnostics")


class SchemaError(ValueError):
    """Input file does not follow the expected schema."""


def fmt6(v: float) -> str:
    return format(v, ".6g")


def report_rows(report: SimReport) -> list[tuple]:
    cfg = report.config
    out: list[tuple] = []
    for rr in report.rounds:
        for (row, fmt, side), v in rr.q_star.items():
            out.append(("round", row, fmt, side, str(rr.round_index), fmt6(v)))
    for (row, fmt, side), v in report.averages.items():
        out.append(("average", row, fmt, side, "", fmt6(v)))
    for (row, fmt, side), v in report.stderrs.items():
        out.append(("stderr", row, fmt, side, "", fmt6(v)))
    # seed and counters are written exactly; six digits would lose the seed
    diag = [
        ("master_seed", str(cfg.master_seed)),
        ("n", str(cfg.n)),
        ("reps_per_round", str(cfg.reps_per_round)),
        ("rounds", str(cfg.rounds)),
        ("alpha", fmt6(cfg.alpha)),
        ("psi0", fmt6(cfg.psi0)),
        ("r_threshold", fmt6(cfg.policy.r_threshold)),
        ("singularity_count", str(report.singularity_count)),
        ("fallback_count", str(report.fallback_count)),
    ]
    out.extend(("diagnostics", name, "", "", "", v) for name, v in diag)
    for rr in report.rounds:
        out.append(("diagnostics", "singularity_count", "", "", str(rr.round_index), str(rr.singularity_count)))
        out.append(("diagnostics", "fallback_count", "", "", str(rr.round_index), str(rr.fallback_count)))
    totals: dict[tuple[str, str], int] = {}
    for rr in report.rounds:
        for key, c in rr.fallback_by_cell.items():
            totals[key] = totals.get(key, 0) + c
    for (row, fmt), c in totals.items():
        out.append(("diagnostics", f"fallback:{row}", fmt, "", "", str(c)))
    return out


def write_results_csv(report: SimReport, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(RESULTS_HEADER)
    w.writerows(report_rows(report))


def results_csv_text(report: SimReport) -> str:
    buf = io.StringIO()
    write_results_csv(report, buf)
    return buf.getvalue()


@dataclass
class ResultsTable:
    averages: dict[tuple[str, str, str], str]
    stderrs: dict[tuple[str, str, str], str]
    diagnostics: dict[str, str]


def read_results_csv(text: str) -> ResultsTable:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise SchemaError("results file is empty")
    if tuple(h.strip() for h in header) != RESULTS_HEADER:
        raise SchemaError(f"expected header {','.join(RESULTS_HEADER)!r}, got {','.join(header)!r}")
    averages, stderrs, diags = {}, {}, {}
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(RESULTS_HEADER):
            raise SchemaError(f"line {lineno}: expected {len(RESULTS_HEADER)} fields, got {len(rec)}")
        kind, row, fmt, side, rnd, value = (f.strip() for f in rec)
        if kind not in KINDS:
            raise SchemaError(f"line {lineno}: unknown kind {kind!r}")
        if kind == "diagnostics":
            if not rnd and not fmt:
                diags[row] = value
            continue
        if row not in ROWS or fmt not in FORMATS or side not in SIDES:
            raise SchemaError(f"line {lineno}: bad cell ({row!r}, {fmt!r}, {side!r})")
        try:
            v = Decimal(value)
        except InvalidOperation:
            raise SchemaError(f"line {lineno}: value {value!r} is not a decimal") from None
        if not v.is_finite():
            raise SchemaError(f"line {lineno}: value {value!r} is not finite")
        if kind == "average":
            averages[row, fmt, side] = value
        elif kind == "stderr":
            stderrs[row, fmt, side] = value
    if not averages:
        raise SchemaError("results file has no average rows")
    return ResultsTable(averages, stderrs, diags)


def round3(value: str | float) -> str:
    return str(Decimal(str(value)).quantize(Decimal("0.001"), rounding=ROUND_HALF_EVEN))


_ROOT = {"R": "R", "Rbar": "Rbar"}
_CORR = {
    "U_bn": ("R", "U"),
    "U_sev": ("R", "Uhat"),
    "T_match": ("R", "T"),
    "T_unif": ("R", "T_u"),
    "Tbar_match": ("Rbar", "Tbar"),
    "Tbar_unif": ("Rbar", "Tbar_u"),
}


def row_label(row: str, fmt: str) -> str:
    if row in _ROOT:
        return f"Phi({_ROOT[row]})"
    r, u = _CORR[row]
    if fmt == "BN":
        return f"Phi({r} + {r}^-1 log({u}/{r}))"
    return f"Phi({r}) + phi({r})({r}^-1 - {u}^-1)"


def render_tables(table: ResultsTable) -> str:
    blocks = []
    for fmt in FORMATS:
        rows = [r for r in ROWS if any((r, fmt, s) in table.averages for s in SIDES)]
        if not rows:
            continue
        labels = [row_label(r, fmt) for r in rows]
        width = max(len("Approximation"), *(len(lb) for lb in labels))
        lines = [
            f"Type I error probability ({fmt})",
            f"{'Approximation':<{width}}  {'One-sided':>10}  {'Two-sided':>10}",
        ]
        for r, lb in zip(rows, labels):
            vals = [table.averages.get((r, fmt, s)) for s in SIDES]
            cells = [round3(v) if v is not None else "-" for v in vals]
            lines.append(f"{lb:<{width}}  {cells[0]:>10}  {cells[1]:>10}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def parse_data_csv(path: str | Path) -> PairedSample:
    """Read an ``x,y`` data file; errors cite the offending line number."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "y"]:
            raise SchemaError(f"{path}: line 1: expected header 'x,y'")
        xs, ys = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not f.strip() for f in rec):
                continue
            if len(rec) != 2:
                raise SchemaError(f"{path}: line {lineno}: expected 2 fields, got {len(rec)}")
            vals = []
            for name, field in zip("xy", rec):
                try:
                    v = float(field)
                except ValueError:
                    raise SchemaError(f"{path}: line {lineno}: {name}={field.strip()!r} is not a number") from None
                if not math.isfinite(v) or v <= 0:
                    raise SchemaError(f"{path}: line {lineno}: {name}={field.strip()!r} must be positive and finite")
                vals.append(v)
            xs.append(vals[0])
            ys.append(vals[1])
    if len(xs) < 2:
        raise SchemaError(f"{path}: at least 2 data rows are required, got {len(xs)}")
    return PairedSample(xs, ys)


PVALUE_HEADER = ("row", "format", "cdf", "one_sided", "two_sided", "fallback_used")


def write_pvalue_csv(grid: PValueGrid, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(PVALUE_HEADER)
    for (row, fmt), cell in grid:
        w.writerow(
            (
                row,
                fmt,
                format(cell.cdf, ".10g"),
                format(cell.one_sided, ".10g"),
                format(cell.two_sided, ".10g"),
                "true" if cell.fallback_used else "false",
            )
        )
