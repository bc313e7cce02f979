"""Compiled per-entry building blocks and fused solver loops.

All reductions run in ascending index order on one thread, so results are
bitwise reproducible regardless of how entries are spread over workers.

Every matrix format is passed to the kernels through the same argument tuple
``(ia, ib, width, nrows, ncols, vals)``:

=======  ==========  ==========  ===========
format   ia          ib          width
=======  ==========  ==========  ===========
csr      row_ptrs    col_idxs    0
ell      (empty)     col_idxs    nnz_per_row
dense    (empty)     (empty)     0
=======  ==========  ==========  ===========
"""
import math

import numba
import numpy as np

jit = numba.njit(nogil=True, cache=True)


@jit
def csr_spmv(ia, ib, width, nrows, ncols, vals, x, y):
    for i in range(nrows):
        s = 0.0
        for j in range(ia[i], ia[i + 1]):
            s += vals[j] * x[ib[j]]
        y[i] = s


@jit
def ell_spmv(ia, ib, width, nrows, ncols, vals, x, y):
    for i in range(nrows):
        s = 0.0
        for slot in range(width):
            pos = slot * nrows + i
            c = ib[pos]
            if c >= 0:
                s += vals[pos] * x[c]
        y[i] = s


@jit
def dense_spmv(ia, ib, width, nrows, ncols, vals, x, y):
    for i in range(nrows):
        s = 0.0
        base = i * ncols
        for j in range(ncols):
            s += vals[base + j] * x[j]
        y[i] = s


@jit
def dot(x, y):
    s = 0.0
    for i in range(x.shape[0]):
        s += x[i] * y[i]
    return s


@jit
def norm2(x):
    return math.sqrt(dot(x, x))


@jit
def identity_apply(inv_diag, r, z):
    for i in range(r.shape[0]):
        z[i] = r[i]


@jit
def jacobi_apply(inv_diag, r, z):
    for i in range(r.shape[0]):
        z[i] = inv_diag[i] * r[i]


@jit
def batch_spmv(spmv_id, ia, ib, width, nrows, ncols, vals, x, y):
    for e in range(vals.shape[0]):
        if spmv_id == 0:
            csr_spmv(ia, ib, width, nrows, ncols, vals[e], x[e], y[e])
        elif spmv_id == 1:
            ell_spmv(ia, ib, width, nrows, ncols, vals[e], x[e], y[e])
        else:
            dense_spmv(ia, ib, width, nrows, ncols, vals[e], x[e], y[e])


@jit
def batch_dot(x, y, out):
    for e in range(x.shape[0]):
        out[e] = dot(x[e], y[e])


SPMV = {"csr": csr_spmv, "ell": ell_spmv, "dense": dense_spmv}
SPMV_ID = {"csr": 0, "ell": 1, "dense": 2}
PRECOND = {"identity": identity_apply, "jacobi": jacobi_apply}

# workspace rows used by each fused loop
CG_WORK = ("r", "z", "p", "t")
BICGSTAB_WORK = ("r", "rhat", "p", "v", "s", "t", "z")


def make_cg_kernel(spmv, precond, relative):
    """Fused preconditioned CG loop specialised for one option tuple.

    Follows the textbook recurrence with the stopping test ``|rho| < tau`` on
    ``rho = r . z`` at the top of each iteration.
    """

    @numba.njit(nogil=True)
    def kernel(ia, ib, width, nrows, ncols, A, B, X, P, max_iters, tol, start, stop,
               work, iters, converged, metric, true_res, breakdown, spmvs,
               trace, tr_rho, tr_alpha, tr_x, tr_r):
        r = work[0]
        z = work[1]
        p = work[2]
        t = work[3]
        n = nrows
        for e in range(start, stop):
            vals = A[e]
            b = B[e]
            x = X[e]
            d = P[e]
            spmv(ia, ib, width, nrows, ncols, vals, x, t)
            for i in range(n):
                r[i] = b[i] - t[i]
            precond(d, r, z)
            for i in range(n):
                p[i] = z[i]
                t[i] = 0.0
            rho = dot(r, z)
            alpha = 1.0
            rho_hat = 1.0
            tau = tol
            if relative and rho != 0.0:
                tau = tol * abs(rho)
            nmv = 1
            it = 0
            broke = False
            if trace:
                tr_rho[e, 0] = rho
                tr_alpha[e, 0] = alpha
                for i in range(n):
                    tr_x[e, 0, i] = x[i]
                    tr_r[e, 0, i] = r[i]
            while it < max_iters:
                if abs(rho) < tau:
                    break
                spmv(ia, ib, width, nrows, ncols, vals, p, t)
                nmv += 1
                pt = dot(p, t)
                if pt == 0.0 or not math.isfinite(pt):
                    broke = True
                    break
                alpha = rho / pt
                for i in range(n):
                    x[i] += alpha * p[i]
                for i in range(n):
                    r[i] -= alpha * t[i]
                precond(d, r, z)
                rho_hat = dot(r, z)
                beta = rho_hat / rho
                for i in range(n):
                    p[i] = z[i] + beta * p[i]
                rho = rho_hat
                it += 1
                if trace:
                    tr_rho[e, it] = rho
                    tr_alpha[e, it] = alpha
                    for i in range(n):
                        tr_x[e, it, i] = x[i]
                        tr_r[e, it, i] = r[i]
            iters[e] = it
            metric[e] = abs(rho)
            breakdown[e] = broke
            converged[e] = (not broke) and abs(rho) < tau
            spmvs[e] = nmv
            spmv(ia, ib, width, nrows, ncols, vals, x, t)
            s = 0.0
            for i in range(n):
                s += (b[i] - t[i]) * (b[i] - t[i])
            true_res[e] = math.sqrt(s)

    return kernel


def make_bicgstab_kernel(spmv, precond, relative):
    """Fused left-preconditioned BiCGSTAB loop (van der Vorst form).

    Iterates on ``M A x = M b``, so ``r = M (b - A x)`` and ``||r||_2`` is the
    stopping metric. It is tested at the top of each iteration and after the
    half step ``s``. With the identity this is the unpreconditioned method.
    """

    @numba.njit(nogil=True)
    def kernel(ia, ib, width, nrows, ncols, A, B, X, P, max_iters, tol, start, stop,
               work, iters, converged, metric, true_res, breakdown, spmvs,
               trace, tr_rho, tr_alpha, tr_x, tr_r):
        r = work[0]
        rhat = work[1]
        p = work[2]
        v = work[3]
        s = work[4]
        t = work[5]
        z = work[6]
        n = nrows
        for e in range(start, stop):
            vals = A[e]
            b = B[e]
            x = X[e]
            d = P[e]
            spmv(ia, ib, width, nrows, ncols, vals, x, t)
            for i in range(n):
                z[i] = b[i] - t[i]
            precond(d, z, r)
            for i in range(n):
                rhat[i] = r[i]
                p[i] = 0.0
                v[i] = 0.0
            rnorm = norm2(r)
            tau = tol
            if relative and rnorm != 0.0:
                tau = tol * rnorm
            rho_old = 1.0
            alpha = 1.0
            omega = 1.0
            nmv = 1
            it = 0
            broke = False
            if trace:
                tr_rho[e, 0] = rnorm
                tr_alpha[e, 0] = alpha
                for i in range(n):
                    tr_x[e, 0, i] = x[i]
                    tr_r[e, 0, i] = r[i]
            while it < max_iters:
                if rnorm < tau:
                    break
                rho = dot(rhat, r)
                if rho == 0.0 or not math.isfinite(rho):
                    broke = True
                    break
                beta = (rho / rho_old) * (alpha / omega)
                for i in range(n):
                    p[i] = r[i] + beta * (p[i] - omega * v[i])
                spmv(ia, ib, width, nrows, ncols, vals, p, z)
                precond(d, z, v)
                nmv += 1
                rv = dot(rhat, v)
                if rv == 0.0 or not math.isfinite(rv):
                    broke = True
                    break
                alpha = rho / rv
                for i in range(n):
                    x[i] += alpha * p[i]
                for i in range(n):
                    s[i] = r[i] - alpha * v[i]
                snorm = norm2(s)
                if snorm < tau:
                    for i in range(n):
                        r[i] = s[i]
                    rnorm = snorm
                    it += 1
                    if trace:
                        tr_rho[e, it] = rnorm
                        tr_alpha[e, it] = alpha
                        for i in range(n):
                            tr_x[e, it, i] = x[i]
                            tr_r[e, it, i] = r[i]
                    break
                spmv(ia, ib, width, nrows, ncols, vals, s, z)
                precond(d, z, t)
                nmv += 1
                tt = dot(t, t)
                if tt == 0.0 or not math.isfinite(tt):
                    broke = True
                    break
                omega = dot(t, s) / tt
                if omega == 0.0 or not math.isfinite(omega):
                    broke = True
                    break
                for i in range(n):
                    x[i] += omega * s[i]
                for i in range(n):
                    r[i] = s[i] - omega * t[i]
                rnorm = norm2(r)
                rho_old = rho
                it += 1
                if trace:
                    tr_rho[e, it] = rnorm
                    tr_alpha[e, it] = alpha
                    for i in range(n):
                        tr_x[e, it, i] = x[i]
                        tr_r[e, it, i] = r[i]
            iters[e] = it
            metric[e] = rnorm
            breakdown[e] = broke
            converged[e] = (not broke) and rnorm < tau
            spmvs[e] = nmv
            spmv(ia, ib, width, nrows, ncols, vals, x, t)
            acc = 0.0
            for i in range(n):
                acc += (b[i] - t[i]) * (b[i] - t[i])
            true_res[e] = math.sqrt(acc)

    return kernel


KERNEL_FACTORY = {"cg": (make_cg_kernel, CG_WORK),
                  "bicgstab": (make_bicgstab_kernel, BICGSTAB_WORK)}


def empty_index():
    return np.zeros(0, dtype=np.int64)
