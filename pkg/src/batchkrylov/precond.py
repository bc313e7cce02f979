"""Batched preconditioners: identity and scalar Jacobi."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SingularDiagonalError
from .formats import BatchMultiVector


@dataclass(frozen=True)
class Identity:
    kind = "identity"

    def kernel_data(self, num_systems, num_rows):
        return np.zeros((num_systems, 0))


@dataclass(eq=False)
class BatchJacobi:
    """Inverted main diagonal of every batch entry."""

    num_systems: int
    inv_diag: np.ndarray
    kind = "jacobi"

    def __post_init__(self):
        self.inv_diag = np.ascontiguousarray(self.inv_diag, dtype=np.float64)
        self.num_systems = int(self.num_systems)

    @property
    def num_rows(self) -> int:
        return self.inv_diag.shape[1]

    def kernel_data(self, num_systems, num_rows):
        if self.inv_diag.shape != (num_systems, num_rows):
            raise DimensionError(
                f"preconditioner shape {self.inv_diag.shape} != {(num_systems, num_rows)}")
        return self.inv_diag


def generate_jacobi(a) -> BatchJacobi:
    """Scalar Jacobi preconditioner ``diag(A_k)^-1`` for every entry.

    A diagonal position missing from the pattern counts as zero.
    """
    if a.num_rows != a.num_cols:
        raise DimensionError(f"Jacobi needs square matrices, got {a.num_rows}x{a.num_cols}")
    diag = a.diagonal()
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        inv = 1.0 / diag
    # subnormal diagonals overflow to inf and are rejected too
    bad = np.argwhere(~np.isfinite(inv) | ~np.isfinite(diag))
    if bad.size:
        k, i = bad[0]
        raise SingularDiagonalError(int(k), int(i))
    return BatchJacobi(a.num_systems, inv)


def make_preconditioner(kind: str, a):
    if kind in ("identity", "none", None):
        return Identity()
    if kind in ("jacobi", "scalar_jacobi"):
        return generate_jacobi(a)
    raise ValueError(f"unknown preconditioner {kind!r}")


def apply(p, r: BatchMultiVector) -> BatchMultiVector:
    """``z = M r`` per entry."""
    if isinstance(p, Identity):
        return BatchMultiVector(r.num_systems, r.length, r.values.copy())
    if p.inv_diag.shape != r.values.shape:
        raise DimensionError(f"preconditioner shape {p.inv_diag.shape} vs {r.values.shape}")
    return BatchMultiVector(r.num_systems, r.length, p.inv_diag * r.values)
