"""Batched CG and BiCGSTAB with per-entry stopping.

Each batch entry runs its whole iteration inside one compiled routine with no
synchronisation between entries. The routine is specialised ahead of use for
one (format, solver, preconditioner, stopping mode) tuple; :func:`solve` looks
the specialisation up at runtime and compiles it on first use.
"""
from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .blas import pattern_args
from .errors import DimensionError, UnsupportedCombination
from .formats import BatchMultiVector, check, format_name
from .precond import Identity, make_preconditioner
from .tuning import PVC_STACK, DeviceProfile, LaunchPlan, make_launch_plan

log = logging.getLogger(__name__)

SOLVERS = ("cg", "bicgstab")
TOL_MODES = ("absolute", "relative")
PRECONDS = ("identity", "jacobi")
FORMATS = ("csr", "ell", "dense")

_ALIASES = {"abs": "absolute", "rel": "relative", "none": "identity",
            "scalar_jacobi": "jacobi"}


@dataclass
class SolveConfig:
    solver: str = "cg"
    max_iters: int = 100
    tol: float = 1e-10
    tol_mode: str = "relative"
    precond: str = "identity"
    # work_group_size / sub_group_size overrides for the launch plan
    tuning: Optional[dict] = None
    workers: int = 1
    device: DeviceProfile = PVC_STACK

    def __post_init__(self):
        self.solver = _ALIASES.get(self.solver, self.solver)
        self.tol_mode = _ALIASES.get(self.tol_mode, self.tol_mode)
        self.precond = _ALIASES.get(self.precond, self.precond)
        if self.solver not in SOLVERS:
            raise UnsupportedCombination(f"unknown solver {self.solver!r}")
        if self.tol_mode not in TOL_MODES:
            raise UnsupportedCombination(f"unknown stopping mode {self.tol_mode!r}")
        if self.precond not in PRECONDS:
            raise UnsupportedCombination(f"unknown preconditioner {self.precond!r}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass(eq=False)
class BatchSolveResult:
    x: BatchMultiVector
    iters: np.ndarray
    converged: np.ndarray
    final_metric: np.ndarray
    true_residual_norm: np.ndarray
    breakdown: np.ndarray
    spmv_count: np.ndarray
    plan: Optional[LaunchPlan] = None
    trace: Optional[dict] = field(default=None, repr=False)

    @property
    def num_systems(self) -> int:
        return self.x.num_systems

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))


_kernel_cache = {}
_kernel_lock = threading.Lock()


def get_kernel(fmt: str, solver: str, precond: str, tol_mode: str):
    """Compiled fused loop for one option tuple."""
    key = (fmt, solver, precond, tol_mode)
    if fmt not in FORMATS or solver not in SOLVERS or precond not in PRECONDS \
            or tol_mode not in TOL_MODES:
        raise UnsupportedCombination(f"no solver kernel for {key}")
    with _kernel_lock:
        kernel = _kernel_cache.get(key)
        if kernel is None:
            factory, _ = _kernels.KERNEL_FACTORY[solver]
            kernel = factory(_kernels.SPMV[fmt], _kernels.PRECOND[precond],
                             tol_mode == "relative")
            _kernel_cache[key] = kernel
    return kernel


def _as_vector(v, num_systems, n, name):
    if v is None:
        return np.zeros((num_systems, n))
    values = np.asarray(getattr(v, "values", v), dtype=np.float64)
    if values.shape != (num_systems, n):
        raise DimensionError(f"{name} has shape {values.shape}, expected {(num_systems, n)}")
    return values


def _run(a, b, x0, cfg: SolveConfig, preconditioner=None, trace=False):
    fmt = format_name(a)
    check(a)
    if a.num_rows != a.num_cols:
        raise DimensionError(f"solvers need square matrices, got {a.num_rows}x{a.num_cols}")
    nsys, n = a.num_systems, a.num_rows
    B = np.ascontiguousarray(_as_vector(b, nsys, n, "b"))
    X = np.array(_as_vector(x0, nsys, n, "x0"), dtype=np.float64, order="C", copy=True)
    if preconditioner is None:
        preconditioner = make_preconditioner(cfg.precond, a)
    pkind = "identity" if isinstance(preconditioner, Identity) else "jacobi"
    P = preconditioner.kernel_data(nsys, n)

    kernel = get_kernel(fmt, cfg.solver, pkind, cfg.tol_mode)
    plan = make_launch_plan(n, cfg.device, cfg.tuning)
    ia, ib, width, nrows, ncols = pattern_args(a)
    _, work_names = _kernels.KERNEL_FACTORY[cfg.solver]

    iters = np.zeros(nsys, dtype=np.int64)
    converged = np.zeros(nsys, dtype=np.bool_)
    metric = np.zeros(nsys)
    true_res = np.zeros(nsys)
    breakdown = np.zeros(nsys, dtype=np.bool_)
    spmvs = np.zeros(nsys, dtype=np.int64)
    if trace:
        tr = dict(rho=np.full((nsys, cfg.max_iters + 1), np.nan),
                  alpha=np.full((nsys, cfg.max_iters + 1), np.nan),
                  x=np.full((nsys, cfg.max_iters + 1, n), np.nan),
                  r=np.full((nsys, cfg.max_iters + 1, n), np.nan))
    else:
        tr = dict(rho=np.zeros((0, 0)), alpha=np.zeros((0, 0)),
                  x=np.zeros((0, 0, 0)), r=np.zeros((0, 0, 0)))

    def task(start, stop):
        # workspace is allocated once per task; the loop itself never allocates
        work = np.zeros((len(work_names), n))
        kernel(ia, ib, width, nrows, ncols, a.values, B, X, P, cfg.max_iters, cfg.tol,
               start, stop, work, iters, converged, metric, true_res, breakdown, spmvs,
               trace, tr["rho"], tr["alpha"], tr["x"], tr["r"])

    chunk = plan.entries_per_task
    if cfg.workers == 1:
        task(0, nsys)
    else:
        chunk = max(chunk, -(-nsys // (cfg.workers * 8)))
        bounds = [(s, min(s + chunk, nsys)) for s in range(0, nsys, chunk)]
        with ThreadPoolExecutor(cfg.workers) as pool:
            for f in [pool.submit(task, s, e) for s, e in bounds]:
                f.result()

    if breakdown.any():
        log.warning("%s breakdown in %d of %d entries", cfg.solver, breakdown.sum(), nsys)
    log.debug("solved %d entries (%s/%s/%s/%s) with %s", nsys, fmt, cfg.solver, pkind,
              cfg.tol_mode, plan.summary())
    return BatchSolveResult(BatchMultiVector(nsys, n, X), iters, converged, metric,
                            true_res, breakdown, spmvs, plan, tr if trace else None)


def _with_solver(cfg, solver):
    if cfg is None:
        return SolveConfig(solver=solver)
    if cfg.solver != solver:
        raise UnsupportedCombination(f"config selects {cfg.solver!r}, called {solver}")
    return cfg


def batch_cg(a, b, x0=None, cfg: Optional[SolveConfig] = None, *, preconditioner=None,
             trace=False) -> BatchSolveResult:
    """Preconditioned conjugate gradients on every entry of the batch.

    Entry ``k`` stops once ``|r . z| < tau_k`` where ``tau_k = tol`` (absolute)
    or ``tol * |r0 . z0|`` (relative, falling back to ``tol`` when the initial
    value is zero). ``iters`` counts completed iterations; a zero-residual start
    reports 0. A vanishing ``p . A p`` flags ``breakdown`` for that entry only.

    With ``trace=True`` the result carries per-iteration ``rho``, ``alpha``,
    ``x`` and ``r`` (index 0 is the initial state).
    """
    return _run(a, b, x0, _with_solver(cfg, "cg"), preconditioner, trace)


def batch_bicgstab(a, b, x0=None, cfg: Optional[SolveConfig] = None, *, preconditioner=None,
                   trace=False) -> BatchSolveResult:
    """Left-preconditioned BiCGSTAB on every entry; stops on ``||M (b - A x)||_2 < tau_k``."""
    return _run(a, b, x0, _with_solver(cfg, "bicgstab"), preconditioner, trace)


def solve(a, b, x0=None, cfg: Optional[SolveConfig] = None) -> BatchSolveResult:
    """Dispatch to the fused routine for the matrix format and ``cfg`` options."""
    cfg = cfg or SolveConfig()
    try:
        format_name(a)
    except TypeError as exc:
        raise UnsupportedCombination(str(exc)) from None
    return _run(a, b, x0, cfg)
