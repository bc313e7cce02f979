"""Timed solver sweeps and their CSV output."""
from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import logging
import statistics
import time
from dataclasses import dataclass
from typing import Optional

from ..errors import BatchError
from ..formats import BatchMultiVector, generate_stencil_batch, replicate, to_format
from ..solvers import SolveConfig, solve
from .mmio import load_matrix_market_batch

log = logging.getLogger(__name__)


@dataclass
class BenchmarkRecord:
    solver: str
    format: str
    precond: str
    num_systems: int
    num_rows: int
    nnz: int
    tol: float
    tol_mode: str
    wall_time_seconds: float
    total_iterations: int
    max_iterations: int
    converged_count: int
    launch_plan: str
    wall_time_median_seconds: float = 0.0
    total_spmv: int = 0
    repetitions: int = 0
    case: str = ""
    error: str = ""


FIELDS = [f.name for f in dataclasses.fields(BenchmarkRecord)]


@dataclass(frozen=True)
class StencilCase:
    """Stencil batch of ``ceil(num_systems / replicate)`` generated entries, cycled."""

    num_systems: int
    num_rows: int
    seed: int = 0
    replicate: int = 1

    @property
    def label(self) -> str:
        return f"stencil(n={self.num_rows},batch={self.num_systems},rep={self.replicate})"

    def build(self):
        unique = -(-self.num_systems // self.replicate)
        return replicate(generate_stencil_batch(unique, self.num_rows, self.seed),
                         self.num_systems)


@dataclass(frozen=True)
class MatrixMarketCase:
    paths: tuple
    replicate: int = 1
    num_systems: Optional[int] = None

    @property
    def label(self) -> str:
        return f"mm(files={len(self.paths)},rep={self.replicate})"

    def build(self):
        return load_matrix_market_batch(self.paths, self.replicate, self.num_systems)


def stencil_sweep(rows, batches, seed=0, replicate=1) -> list:
    return [StencilCase(b, n, seed, replicate) for n, b in itertools.product(rows, batches)]


def identical_batch(m, num_systems):
    """``num_systems`` copies of entry 0 of ``m``."""
    return replicate(m.take([0]), num_systems)


def run_benchmark(cases, cfg: SolveConfig, fmt: str = "csr", repetitions: int = 5,
                  max_iters: Optional[int] = None, warmup: bool = True) -> list:
    """One record per case: a warm-up solve, then ``repetitions`` timed solves.

    ``wall_time_seconds`` is the fastest repetition, ``wall_time_median_seconds``
    the median. ``max_iters=None`` sets the limit to ``2 * num_rows`` of each
    case, overriding ``cfg.max_iters``.
    A failing case yields a record with ``error`` set and the sweep goes on.
    """
    records = []
    for case in cases:
        try:
            a = to_format(case.build(), fmt)
        except (BatchError, OSError, ValueError) as exc:
            records.append(_failed(case, cfg, fmt, exc))
            continue
        run_cfg = dataclasses.replace(
            cfg, max_iters=max_iters if max_iters is not None else 2 * a.num_rows)
        b = BatchMultiVector.full(a.num_systems, a.num_rows, 1.0)
        try:
            if warmup:
                solve(a, b, None, run_cfg)
            times = []
            for _ in range(max(1, repetitions)):
                t0 = time.perf_counter()
                res = solve(a, b, None, run_cfg)
                times.append(time.perf_counter() - t0)
        except (BatchError, ValueError) as exc:
            records.append(_failed(case, run_cfg, fmt, exc, a))
            continue
        nnz = getattr(a, "nnz", a.num_rows * a.num_cols)
        rec = BenchmarkRecord(
            solver=run_cfg.solver, format=fmt, precond=run_cfg.precond,
            num_systems=a.num_systems, num_rows=a.num_rows, nnz=int(nnz),
            tol=run_cfg.tol, tol_mode=run_cfg.tol_mode,
            wall_time_seconds=min(times),
            total_iterations=int(res.iters.sum()),
            max_iterations=int(res.iters.max()) if a.num_systems else 0,
            converged_count=int(res.converged.sum()),
            launch_plan=res.plan.summary(),
            wall_time_median_seconds=statistics.median(times),
            total_spmv=int(res.spmv_count.sum()),
            repetitions=len(times), case=case.label)
        log.info("%s: %.3e s, %d/%d converged", case.label, rec.wall_time_seconds,
                 rec.converged_count, rec.num_systems)
        records.append(rec)
    return records


def _failed(case, cfg, fmt, exc, a=None):
    log.error("%s failed: %s", case.label, exc)
    return BenchmarkRecord(
        solver=cfg.solver, format=fmt, precond=cfg.precond,
        num_systems=a.num_systems if a is not None else 0,
        num_rows=a.num_rows if a is not None else 0, nnz=0,
        tol=cfg.tol, tol_mode=cfg.tol_mode, wall_time_seconds=0.0,
        total_iterations=0, max_iterations=0, converged_count=0, launch_plan="",
        case=case.label, error=f"{type(exc).__name__}: {exc}")


def _cell(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def emit_csv(records) -> str:
    """CSV text with a header row; columns follow :class:`BenchmarkRecord` fields."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(FIELDS)
    for r in records:
        w.writerow([_cell(getattr(r, f)) for f in FIELDS])
    return buf.getvalue()
