"""Command line entry point: ``batchkrylov {bench,validate,generate,plan}``."""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import BatchError
from ..formats import generate_stencil_batch, validate
from ..solvers import SolveConfig
from ..tuning import PVC_STACK, DeviceProfile, make_launch_plan, plan_workspace
from .bench import MatrixMarketCase, emit_csv, run_benchmark, stencil_sweep
from .mmio import (list_matrix_market, load_matrix_market_batch, read_matrix_market,
                   write_matrix_market_batch)

log = logging.getLogger("batchkrylov")


def _bench(args) -> int:
    device = DeviceProfile.load(args.device_profile) if args.device_profile else PVC_STACK
    cfg = SolveConfig(solver=args.solver, tol=args.tol, tol_mode=args.tol_mode,
                      precond=args.precond, workers=args.workers, device=device,
                      max_iters=args.max_iters or 1)
    if args.mm_dir:
        paths = tuple(list_matrix_market(args.mm_dir))
        if not paths:
            log.error("no .mtx files in %s", args.mm_dir)
            return 2
        batches = args.batch or [None]
        cases = [MatrixMarketCase(paths, args.replicate, b) for b in batches]
    else:
        cases = stencil_sweep(args.stencil_rows or [64], args.batch or [1024],
                              seed=args.seed, replicate=args.replicate)
    records = run_benchmark(cases, cfg, fmt=args.format, repetitions=args.reps,
                            max_iters=args.max_iters)
    text = emit_csv(records)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    ok = all(not r.error and r.converged_count == r.num_systems for r in records)
    return 0 if ok else 1


def _validate(args) -> int:
    paths = list_matrix_market(args.mm_dir)
    if not paths:
        print(f"no .mtx files in {args.mm_dir}")
        return 1
    try:
        for p in paths:
            e = read_matrix_market(p)
            print(f"{p}: {e.num_rows}x{e.num_cols} {e.symmetry}, "
                  f"stored nnz {e.stored_nnz}, structural nnz {e.structural_nnz}")
        batch = load_matrix_market_batch(paths)
    except (BatchError, OSError) as exc:
        print(f"error: {exc}")
        return 1
    problems = validate(batch)
    for v in problems:
        print(f"violation: {v}")
    print(f"{len(paths)} files share one pattern: {batch.num_rows}x{batch.num_cols}, "
          f"nnz {batch.nnz}" if not problems else f"{len(problems)} violations")
    return 0 if not problems else 1


def _generate(args) -> int:
    m = generate_stencil_batch(args.batch, args.stencil_rows, args.seed)
    paths = write_matrix_market_batch(m, args.out_dir, args.stem)
    print(f"wrote {len(paths)} files to {args.out_dir}")
    return 0


def _plan(args) -> int:
    device = DeviceProfile.load(args.device_profile) if args.device_profile else PVC_STACK
    overrides = {}
    if args.work_group_size:
        overrides["work_group_size"] = args.work_group_size
    if args.sub_group_size:
        overrides["sub_group_size"] = args.sub_group_size
    try:
        lp = make_launch_plan(args.rows, device, overrides)
    except BatchError as exc:
        print(f"error: {exc}")
        return 1
    wp = plan_workspace(args.solver, args.rows, 8, device.slm_bytes, args.precond)
    print(f"launch: {lp.summary()} ({'; '.join(lp.notes)})")
    print(f"fast tier: {wp.fast_used}/{wp.fast_capacity} bytes")
    for a in wp.assignments:
        print(f"  {a.name:8s} {a.tier:5s} {a.bytes}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="batchkrylov", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="time batched solves and write CSV")
    b.add_argument("--solver", choices=["cg", "bicgstab"], default="cg")
    b.add_argument("--format", choices=["csr", "ell", "dense"], default="csr")
    b.add_argument("--precond", choices=["none", "jacobi"], default="none")
    b.add_argument("--tol", type=float, default=1e-10)
    b.add_argument("--tol-mode", choices=["abs", "rel"], default="rel")
    b.add_argument("--max-iters", type=int, default=None,
                   help="default: 2 * num_rows")
    src = b.add_mutually_exclusive_group()
    src.add_argument("--stencil-rows", type=int, nargs="+",
                     help="rows of the stencil matrices; several values make a sweep")
    src.add_argument("--mm-dir", help="directory of Matrix Market files sharing one pattern")
    b.add_argument("--batch", type=int, nargs="+",
                   help="batch sizes; several values make a sweep")
    b.add_argument("--replicate", type=int, default=1)
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--device-profile")
    b.add_argument("--out")
    b.set_defaults(func=_bench)

    v = sub.add_parser("validate", help="check a Matrix Market directory")
    v.add_argument("--mm-dir", required=True)
    v.set_defaults(func=_validate)

    g = sub.add_parser("generate", help="write a stencil batch as Matrix Market files")
    g.add_argument("--stencil-rows", type=int, required=True)
    g.add_argument("--batch", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--stem", default="stencil")
    g.add_argument("--out-dir", required=True)
    g.set_defaults(func=_generate)

    p = sub.add_parser("plan", help="show launch and workspace plans")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--solver", choices=["cg", "bicgstab"], default="cg")
    p.add_argument("--precond", choices=["identity", "jacobi"], default="jacobi")
    p.add_argument("--work-group-size", type=int)
    p.add_argument("--sub-group-size", type=int)
    p.add_argument("--device-profile")
    p.set_defaults(func=_plan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
