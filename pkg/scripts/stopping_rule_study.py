"""How far the CG stopping quantity |r.z| tracks the solution error.

CG stops on |r.z| < tol * |r0.z0|. Since r.z scales like ||r||^2, a threshold
of 1e-12 reduces the residual by only about 1e-6. This script solves random
stencil batches at several thresholds and reports the worst error against a
dense LU solve, next to BiCGSTAB, which stops on ||r||.
"""
import argparse

import numpy as np
import scipy.linalg

from batchkrylov import BatchMultiVector, SolveConfig, generate_stencil_batch, solve
from batchkrylov.formats import dense_from_csr


def trials(count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n, nsys = int(rng.integers(2, 65)), int(rng.integers(1, 33))
        yield (generate_stencil_batch(nsys, n, seed=int(rng.integers(2**31))),
               rng.standard_normal((nsys, n)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--target", type=float, default=1e-8)
    args = ap.parse_args()

    print(f"{'solver':>9} {'tol':>7} {'worst err':>10} {'within target':>14}")
    for solver, tol in [("cg", 1e-12), ("cg", 1e-16), ("cg", 1e-20), ("cg", 1e-24),
                        ("bicgstab", 1e-12)]:
        cfg = SolveConfig(solver=solver, tol=tol, tol_mode="relative", max_iters=1000)
        errs = []
        for a, b in trials(args.trials, args.seed):
            x = solve(a, BatchMultiVector.from_array(b), None, cfg).x.values
            dense = dense_from_csr(a).as_array()
            ref = np.stack([scipy.linalg.solve(dense[k], b[k]) for k in range(len(b))])
            errs.append(np.abs(x - ref).max())
        errs = np.array(errs)
        print(f"{solver:>9} {tol:7.0e} {errs.max():10.2e} "
              f"{int((errs <= args.target).sum()):>8d}/{args.trials}")


if __name__ == "__main__":
    main()
