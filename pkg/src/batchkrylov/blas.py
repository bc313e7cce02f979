"""Batched BLAS-1 operations and SpMV, each entry computed independently.

Reductions (:func:`dot`, :func:`norm2`) and SpMV accumulate sequentially in
ascending index order per entry. Elementwise operations are plain numpy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionError
from .formats import BatchCsr, BatchDense, BatchEll, BatchMultiVector, format_name


@dataclass(eq=False)
class BatchScalar:
    """One scalar per batch entry."""

    num_systems: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        self.num_systems = int(self.num_systems)

    @classmethod
    def full(cls, num_systems, value) -> "BatchScalar":
        return cls(num_systems, np.full(num_systems, value, dtype=np.float64))

    @classmethod
    def from_array(cls, a) -> "BatchScalar":
        a = np.asarray(a, dtype=np.float64).reshape(-1)
        return cls(a.size, a)


def pattern_args(a):
    """Kernel argument tuple ``(ia, ib, width, nrows, ncols)`` for a batch matrix."""
    empty = _kernels.empty_index()
    if isinstance(a, BatchCsr):
        return a.row_ptrs, a.col_idxs, 0, a.num_rows, a.num_cols
    if isinstance(a, BatchEll):
        return empty, a.col_idxs, a.nnz_per_row, a.num_rows, a.num_cols
    if isinstance(a, BatchDense):
        return empty, empty, 0, a.num_rows, a.num_cols
    raise TypeError(f"not a batch matrix: {type(a).__name__}")


def _same_shape(x, y):
    if x.values.shape != y.values.shape:
        raise DimensionError(f"shape mismatch: {x.values.shape} vs {y.values.shape}")


def _scalar_for(alpha, x):
    if alpha.values.shape != (x.num_systems,):
        raise DimensionError(
            f"{alpha.values.size} scalars for a batch of {x.num_systems} entries")
    return alpha.values[:, None]


def spmv(a, x: BatchMultiVector) -> BatchMultiVector:
    """``y_k = A_k x_k`` for every entry ``k``."""
    if a.num_cols != x.length:
        raise DimensionError(f"matrix has {a.num_cols} columns, vector length {x.length}")
    if a.num_systems != x.num_systems:
        raise DimensionError(
            f"matrix batch has {a.num_systems} entries, vector batch {x.num_systems}")
    y = np.empty((a.num_systems, a.num_rows), dtype=np.float64)
    ia, ib, width, nrows, ncols = pattern_args(a)
    _kernels.batch_spmv(_kernels.SPMV_ID[format_name(a)], ia, ib, width, nrows, ncols,
                        a.values, np.ascontiguousarray(x.values), y)
    return BatchMultiVector(a.num_systems, a.num_rows, y)


def dot(x: BatchMultiVector, y: BatchMultiVector) -> BatchScalar:
    _same_shape(x, y)
    out = np.empty(x.num_systems, dtype=np.float64)
    _kernels.batch_dot(np.ascontiguousarray(x.values), np.ascontiguousarray(y.values), out)
    return BatchScalar(x.num_systems, out)


def norm2(x: BatchMultiVector) -> BatchScalar:
    d = dot(x, x)
    return BatchScalar(x.num_systems, np.sqrt(d.values))


def axpy(alpha: BatchScalar, x: BatchMultiVector, y: BatchMultiVector) -> BatchMultiVector:
    """``y + alpha_k x`` per entry; inputs are left untouched."""
    _same_shape(x, y)
    return BatchMultiVector(y.num_systems, y.length,
                            y.values + _scalar_for(alpha, x) * x.values)


def scale(alpha: BatchScalar, x: BatchMultiVector) -> BatchMultiVector:
    return BatchMultiVector(x.num_systems, x.length, _scalar_for(alpha, x) * x.values)


def copy(x: BatchMultiVector) -> BatchMultiVector:
    return BatchMultiVector(x.num_systems, x.length, x.values.copy())


__all__ = ["BatchScalar", "spmv", "dot", "norm2", "axpy", "scale", "copy"]
