"""Grid sweeps over controller coefficients, with seed-averaged convergence outcomes.

Cells are the Cartesian product ``rho1 x rho2 x beta`` enumerated in that
order. Seed ``j`` of cell ``i`` integrates with ``derive_seed(base_seed, i, j)``,
so a row never depends on how many other seeds or cells were run, nor on the
order in which worker threads finish.

Absolute step counts are not comparable to externally reported iteration
counts (their step size and convergence rule are unknown); only orderings and
converge/not-converge patterns are meaningful.
"""
import csv
import io
import itertools
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

from .controller import BmcParams
from .integrator import SdeConfig, integrate_batch
from .noise import derive_seed
from .stability import ConvergenceCriterion, detect_convergence

CONVERGED = "converged"
NOT_CONVERGED = "not_converged"
DIVERGED = "diverged"

BATCH = 32


@dataclass(frozen=True)
class SweepGrid:
    rho1_values: tuple = (0.1, 0.01, 0.001)
    rho2_values: tuple = (0.0001, 0.001, 0.01)
    beta_values: tuple = (1.0, 2.0)
    n_seeds: int = 20
    base_seed: int = 0
    sde: SdeConfig = field(default_factory=SdeConfig)
    criterion: ConvergenceCriterion = field(default_factory=ConvergenceCriterion)

    def __post_init__(self):
        for name in ("rho1_values", "rho2_values", "beta_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, vals)
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")

    def cells(self):
        return list(itertools.product(self.rho1_values, self.rho2_values, self.beta_values))


@dataclass(frozen=True)
class SweepRow:
    cell: int
    rho1: float
    rho2: float
    beta: float
    seed_index: int
    seed: int
    outcome: str
    converge_step: Optional[int] = None


@dataclass(frozen=True)
class CellSummary:
    rho1: float
    rho2: float
    beta: float
    n: int
    n_converged: int
    n_diverged: int
    median_step: Optional[float]

    @property
    def convergence_fraction(self):
        return self.n_converged / self.n if self.n else 0.0

    def to_dict(self):
        d = asdict(self)
        d["convergence_fraction"] = self.convergence_fraction
        return d


@dataclass
class SweepTable:
    rows: list

    @property
    def cells(self):
        return summarize(self.rows)

    def cell(self, rho1, rho2, beta):
        for s in self.cells:
            if (s.rho1, s.rho2, s.beta) == (rho1, rho2, beta):
                return s
        raise KeyError((rho1, rho2, beta))

    def rows_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cell", "rho1", "rho2", "beta", "seed_index", "seed", "outcome", "converge_step"])
        for r in self.rows:
            w.writerow([r.cell, repr(r.rho1), repr(r.rho2), repr(r.beta), r.seed_index, r.seed, r.outcome,
                        "" if r.converge_step is None else r.converge_step])
        return buf.getvalue()

    def aggregates(self):
        return {
            "cells": [s.to_dict() for s in self.cells],
            "violations": [asdict(v) for v in ordering_report(self)],
        }


def summarize(rows):
    """Per-cell aggregates, in order of first appearance of each cell."""
    groups = {}
    for r in rows:
        groups.setdefault((r.cell, r.rho1, r.rho2, r.beta), []).append(r)
    out = []
    for (_, rho1, rho2, beta), rs in groups.items():
        steps = [r.converge_step for r in rs if r.outcome == CONVERGED]
        out.append(CellSummary(rho1, rho2, beta, len(rs), len(steps),
                               sum(r.outcome == DIVERGED for r in rs),
                               float(statistics.median(steps)) if steps else None))
    return out


def _run_cell(spec, grid, cell_index, rho1, rho2, beta, backend):
    params = BmcParams(rho1, rho2, beta)
    seeds = [derive_seed(grid.base_seed, cell_index, j) for j in range(grid.n_seeds)]
    rows = []
    for start in range(0, len(seeds), BATCH):
        chunk = seeds[start:start + BATCH]
        for off, (traj, err) in enumerate(integrate_batch(spec, params, grid.sde, chunk, backend=backend)):
            j = start + off
            step = None
            if err is not None or traj.terminated_early is not None:
                outcome = DIVERGED
            else:
                step = detect_convergence(traj, grid.criterion)
                outcome = NOT_CONVERGED if step is None else CONVERGED
            rows.append(SweepRow(cell_index, rho1, rho2, beta, j, seeds[j], outcome, step))
    return rows


def run_sweep(spec, grid, threads=1, backend=None):
    """Integrate every (cell, seed) pair and classify its outcome."""
    if threads < 1:
        raise ValueError("threads must be >= 1")
    jobs = [(i, *cell) for i, cell in enumerate(grid.cells())]

    def work(job):
        return _run_cell(spec, grid, *job, backend)

    if threads == 1:
        results = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, jobs))
    return SweepTable([r for rows in results for r in rows])


@dataclass(frozen=True)
class Violation:
    beta: float
    rho2: float
    rho1_low: float
    rho1_high: float
    median_low: Optional[float]
    median_high: Optional[float]


def ordering_report(table):
    """Flag cells where raising rho1 (at fixed rho2, beta) raises the median convergence step.

    Accepts a :class:`SweepTable` or a sequence of :class:`CellSummary`. A cell
    with no converged seed counts as an infinite median; two such cells never
    form a violation.
    """
    cells = table.cells if isinstance(table, SweepTable) else list(table)
    by_line = {}
    for s in cells:
        by_line.setdefault((s.beta, s.rho2), []).append(s)
    out = []
    for (beta, rho2), line in by_line.items():
        line = sorted(line, key=lambda s: s.rho1)
        for lo, hi in zip(line, line[1:]):
            m_lo = float("inf") if lo.median_step is None else lo.median_step
            m_hi = float("inf") if hi.median_step is None else hi.median_step
            if m_hi > m_lo:
                out.append(Violation(beta, rho2, lo.rho1, hi.rho1, lo.median_step, hi.median_step))
    return out
