"""Batch-size scaling on identical stencil entries; prints per-entry cost.

    python3 scripts/scaling_sweep.py --rows 64 --min-exp 8 --max-exp 12 --out scaling.csv
"""
import argparse

from batchkrylov import SolveConfig
from batchkrylov.harness import StencilCase, emit_csv, run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=64)
    ap.add_argument("--min-exp", type=int, default=8)
    ap.add_argument("--max-exp", type=int, default=12)
    ap.add_argument("--solver", choices=["cg", "bicgstab"], default="cg")
    ap.add_argument("--precond", choices=["identity", "jacobi"], default="identity")
    ap.add_argument("--format", choices=["csr", "ell", "dense"], default="csr")
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    sizes = [2 ** k for k in range(args.min_exp, args.max_exp + 1)]
    cases = [StencilCase(n, args.rows, seed=0, replicate=n) for n in sizes]
    cfg = SolveConfig(solver=args.solver, precond=args.precond, tol=1e-10,
                      workers=args.workers)
    recs = run_benchmark(cases, cfg, fmt=args.format, repetitions=args.reps)
    base = recs[0].wall_time_seconds / recs[0].num_systems
    print(f"{'batch':>7} {'time [s]':>10} {'us/entry':>9} {'rel':>5} {'iters':>8} {'spmv':>8}")
    for r in recs:
        per = r.wall_time_seconds / r.num_systems
        print(f"{r.num_systems:7d} {r.wall_time_seconds:10.4e} {per * 1e6:9.2f} "
              f"{per / base:5.2f} {r.total_iterations:8d} {r.total_spmv:8d}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(emit_csv(recs))


if __name__ == "__main__":
    main()
