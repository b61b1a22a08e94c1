"""Monte-Carlo estimation of Type I error for every (row, format) cell.

Each replicate draws its data from its own Philox stream keyed by
``(master_seed, round_index, rep_index)``, so results do not depend on how
rounds are scheduled across worker processes.
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .approx import FORMATS, Format, SingularityPolicy
from .expratio import EXP_RATIO, PairedSample
from .inference import ROWS, Model, PValueGrid, pvalue_suite
from .numeric import DEFAULT_KIT, NumericKitConfig

SIDES = ("one", "two")
Cell = tuple[str, str, str]


@dataclass(frozen=True)
class SimConfig:
    n: int = 10
    reps_per_round: int = 10_000
    rounds: int = 100
    alpha: float = 0.05
    psi0: float = 1.0
    master_seed: int = 0
    rows: tuple[str, ...] = ROWS
    formats: tuple[Format, ...] = FORMATS
    policy: SingularityPolicy = SingularityPolicy()

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.reps_per_round < 1 or self.rounds < 1:
            raise ValueError("reps_per_round and rounds must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.psi0 > 0:
            raise ValueError("psi0 must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if not self.rows:
            raise ValueError("at least one row is required")
        bad = set(self.rows) - set(ROWS)
        if bad:
            raise ValueError(f"unknown rows: {sorted(bad)}")
        bad = set(self.formats) - set(FORMATS)
        if bad or not self.formats:
            raise ValueError(f"formats must be a non-empty subset of {FORMATS}")
        # canonical order keeps reports independent of how the caller listed them
        object.__setattr__(self, "rows", tuple(r for r in ROWS if r in self.rows))
        object.__setattr__(self, "formats", tuple(f for f in FORMATS if f in self.formats))

    @property
    def cells(self) -> list[Cell]:
        return [(r, f, s) for r in self.rows for f in self.formats for s in SIDES]


@dataclass(frozen=True)
class RoundResult:
    round_index: int
    q_star: dict[Cell, float]
    fallback_count: int
    singularity_count: int
    fallback_by_cell: dict[tuple[str, str], int] = field(default_factory=dict)


@dataclass(frozen=True)
class SimReport:
    config: SimConfig
    rounds: list[RoundResult]
    averages: dict[Cell, float]
    stderrs: dict[Cell, float]
    singularity_count: int
    fallback_count: int


def rep_stream(master_seed: int, round_index: int, rep_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence([master_seed, round_index, rep_index])
    return np.random.Generator(np.random.Philox(seq))


def gen_dataset(master_seed: int, round_index: int, rep_index: int, n: int) -> PairedSample:
    """``n`` pairs of independent standard exponentials by inversion."""
    u = rep_stream(master_seed, round_index, rep_index).random(2 * n)
    e = -np.log1p(-u)
    return PairedSample(e[:n], e[n:])


def rejections(grid: PValueGrid, alpha: float) -> dict[Cell, bool]:
    """Reject when the p-value is strictly below ``alpha``."""
    out = {}
    for (row, fmt), cell in grid:
        out[row, fmt, "one"] = cell.one_sided < alpha
        out[row, fmt, "two"] = cell.two_sided < alpha
    return out


@dataclass(frozen=True)
class RepOutcome:
    rejected: dict[Cell, bool]
    singular: bool
    fallbacks: tuple[tuple[str, str], ...]


def run_rep(
    sample: PairedSample,
    psi0: float,
    rows: Iterable[str] = ROWS,
    formats: Iterable[Format] = FORMATS,
    alpha: float = 0.05,
    policy: SingularityPolicy = SingularityPolicy(),
    model: Model = EXP_RATIO,
    kit: NumericKitConfig = DEFAULT_KIT,
) -> RepOutcome:
    grid = pvalue_suite(model, sample, psi0, policy, kit, rows, formats)
    singular = any(
        abs(grid.stats[k]) <= policy.r_threshold for k in ("R", "Rbar") if k in grid.stats
    )
    fallbacks = tuple(key for key, cell in grid if cell.fallback_used)
    return RepOutcome(rejections(grid, alpha), singular, fallbacks)


def run_round(config: SimConfig, round_index: int) -> RoundResult:
    cells = config.cells
    counts = dict.fromkeys(cells, 0)
    fb_cells: dict[tuple[str, str], int] = {(r, f): 0 for r in config.rows for f in config.formats}
    fallback_count = singularity_count = 0
    for k in range(config.reps_per_round):
        sample = gen_dataset(config.master_seed, round_index, k, config.n)
        out = run_rep(sample, config.psi0, config.rows, config.formats, config.alpha, config.policy)
        for cell in cells:
            counts[cell] += out.rejected[cell]
        singularity_count += out.singular
        fallback_count += bool(out.fallbacks)
        for key in out.fallbacks:
            fb_cells[key] += 1
    reps = config.reps_per_round
    return RoundResult(
        round_index=round_index,
        q_star={c: 100.0 * counts[c] / reps for c in cells},
        fallback_count=fallback_count,
        singularity_count=singularity_count,
        fallback_by_cell=fb_cells,
    )


def _round_task(args):
    return run_round(*args)


def summarize(config: SimConfig, results: list[RoundResult]) -> SimReport:
    results = sorted(results, key=lambda r: r.round_index)
    averages, stderrs = {}, {}
    for cell in config.cells:
        vals = [r.q_star[cell] for r in results]
        averages[cell] = math.fsum(vals) / len(vals)
        if len(vals) > 1:
            stderrs[cell] = statistics.stdev(vals) / math.sqrt(len(vals))
    return SimReport(
        config=config,
        rounds=results,
        averages=averages,
        stderrs=stderrs,
        singularity_count=sum(r.singularity_count for r in results),
        fallback_count=sum(r.fallback_count for r in results),
    )


def run_simulation(config: SimConfig, workers: int = 1) -> SimReport:
    """Run all rounds, optionally across ``workers`` processes."""
    tasks = [(config, i) for i in range(config.rounds)]
    if workers <= 1 or config.rounds == 1:
        results = [run_round(*t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, config.rounds)) as pool:
            results = list(pool.map(_round_task, tasks))
    return summarize(config, results)
