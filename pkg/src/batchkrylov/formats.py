"""Batch matrix containers that share one sparsity pattern across all entries.

Every container stores the pattern once and one value plane per batch entry.
Value planes are rows of a 2-D ``values`` array of shape
``(num_systems, plane_size)``, so entry ``k`` is the contiguous block
``values[k]``.

* :class:`BatchCsr` plane order follows ``col_idxs``.
* :class:`BatchEll` plane order is slot-major: position ``slot * num_rows + row``,
  so the same slot of consecutive rows is adjacent. Padding slots carry column
  index ``-1`` and value ``0``.
* :class:`BatchDense` planes are row-major ``num_rows x num_cols``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionError

PAD = -1
INDEX = np.int64
REAL = np.float64


def _values_2d(values, num_systems):
    values = np.ascontiguousarray(values, dtype=REAL)
    if values.ndim == 1 and num_systems > 0 and values.size % num_systems == 0:
        values = values.reshape(num_systems, -1)
    elif values.ndim > 2:
        values = values.reshape(values.shape[0], -1)
    return values


@dataclass(eq=False)
class BatchCsr:
    num_systems: int
    num_rows: int
    num_cols: int
    row_ptrs: np.ndarray
    col_idxs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.num_systems = int(self.num_systems)
        self.num_rows = int(self.num_rows)
        self.num_cols = int(self.num_cols)
        self.row_ptrs = np.ascontiguousarray(self.row_ptrs, dtype=INDEX)
        self.col_idxs = np.ascontiguousarray(self.col_idxs, dtype=INDEX)
        self.values = _values_2d(self.values, self.num_systems)

    @property
    def nnz(self) -> int:
        return int(self.col_idxs.size)

    @property
    def shape(self):
        return (self.num_systems, self.num_rows, self.num_cols)

    def row_indices(self) -> np.ndarray:
        """Row index of every stored element."""
        return np.repeat(np.arange(self.num_rows, dtype=INDEX), np.diff(self.row_ptrs))

    def diagonal(self) -> np.ndarray:
        """Per-entry main diagonal; positions absent from the pattern read as 0."""
        n = min(self.num_rows, self.num_cols)
        out = np.zeros((self.num_systems, n), dtype=REAL)
        rows = self.row_indices()
        on_diag = np.flatnonzero((rows == self.col_idxs) & (rows < n))
        out[:, rows[on_diag]] = self.values[:, on_diag]
        return out

    def take(self, entries) -> "BatchCsr":
        """New batch made of the given entries (in order) sharing this pattern."""
        entries = np.asarray(entries, dtype=INDEX)
        return BatchCsr(entries.size, self.num_rows, self.num_cols,
                        self.row_ptrs, self.col_idxs, self.values[entries])


@dataclass(eq=False)
class BatchEll:
    num_systems: int
    num_rows: int
    num_cols: int
    nnz_per_row: int
    col_idxs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.num_systems = int(self.num_systems)
        self.num_rows = int(self.num_rows)
        self.num_cols = int(self.num_cols)
        self.nnz_per_row = int(self.nnz_per_row)
        self.col_idxs = np.ascontiguousarray(self.col_idxs, dtype=INDEX).reshape(-1)
        self.values = _values_2d(self.values, self.num_systems)

    @property
    def shape(self):
        return (self.num_systems, self.num_rows, self.num_cols)

    @property
    def num_padding(self) -> int:
        return int(np.count_nonzero(self.col_idxs == PAD))

    def diagonal(self) -> np.ndarray:
        n = min(self.num_rows, self.num_cols)
        out = np.zeros((self.num_systems, n), dtype=REAL)
        rows = np.tile(np.arange(self.num_rows, dtype=INDEX), self.nnz_per_row)
        on_diag = np.flatnonzero((rows == self.col_idxs) & (rows < n))
        out[:, rows[on_diag]] = self.values[:, on_diag]
        return out

    def take(self, entries) -> "BatchEll":
        entries = np.asarray(entries, dtype=INDEX)
        return BatchEll(entries.size, self.num_rows, self.num_cols, self.nnz_per_row,
                        self.col_idxs, self.values[entries])


@dataclass(eq=False)
class BatchDense:
    num_systems: int
    num_rows: int
    num_cols: int
    values: np.ndarray

    def __post_init__(self):
        self.num_systems = int(self.num_systems)
        self.num_rows = int(self.num_rows)
        self.num_cols = int(self.num_cols)
        self.values = _values_2d(self.values, self.num_systems)

    @classmethod
    def from_array(cls, a) -> "BatchDense":
        a = np.asarray(a, dtype=REAL)
        if a.ndim == 2:
            a = a[None]
        return cls(a.shape[0], a.shape[1], a.shape[2], a.reshape(a.shape[0], -1))

    @property
    def shape(self):
        return (self.num_systems, self.num_rows, self.num_cols)

    def as_array(self) -> np.ndarray:
        """View of the values as ``(num_systems, num_rows, num_cols)``."""
        return self.values.reshape(self.num_systems, self.num_rows, self.num_cols)

    def diagonal(self) -> np.ndarray:
        return np.ascontiguousarray(np.diagonal(self.as_array(), axis1=1, axis2=2))

    def take(self, entries) -> "BatchDense":
        entries = np.asarray(entries, dtype=INDEX)
        return BatchDense(entries.size, self.num_rows, self.num_cols, self.values[entries])


@dataclass(eq=False)
class BatchMultiVector:
    """One dense vector per batch entry (right-hand sides, iterates, workspace)."""

    num_systems: int
    length: int
    values: np.ndarray

    def __post_init__(self):
        self.num_systems = int(self.num_systems)
        self.length = int(self.length)
        self.values = _values_2d(self.values, self.num_systems)

    @classmethod
    def from_array(cls, a) -> "BatchMultiVector":
        a = np.array(a, dtype=REAL, ndmin=2)
        return cls(a.shape[0], a.shape[1], a)

    @classmethod
    def zeros(cls, num_systems, length) -> "BatchMultiVector":
        return cls(num_systems, length, np.zeros((num_systems, length), dtype=REAL))

    @classmethod
    def full(cls, num_systems, length, value) -> "BatchMultiVector":
        return cls(num_systems, length, np.full((num_systems, length), value, dtype=REAL))

    def take(self, entries) -> "BatchMultiVector":
        entries = np.asarray(entries, dtype=INDEX)
        return BatchMultiVector(entries.size, self.length, self.values[entries])

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


BatchMatrix = Union[BatchCsr, BatchEll, BatchDense]


def format_name(m) -> str:
    if isinstance(m, BatchCsr):
        return "csr"
    if isinstance(m, BatchEll):
        return "ell"
    if isinstance(m, BatchDense):
        return "dense"
    raise TypeError(f"not a batch matrix: {type(m).__name__}")


# -- conversions -------------------------------------------------------------

def csr_from_dense(m: BatchDense, tol: float = 0.0) -> BatchCsr:
    """Shared-pattern CSR of a dense batch.

    The pattern is the union over entries of positions with ``|value| > tol``;
    an entry that is below ``tol`` at a union position stores an explicit zero
    there.
    """
    a = m.as_array()
    if m.num_systems == 0:
        mask = np.zeros((m.num_rows, m.num_cols), dtype=bool)
    else:
        mask = np.any(np.abs(a) > tol, axis=0)
    rows, cols = np.nonzero(mask)
    row_ptrs = np.zeros(m.num_rows + 1, dtype=INDEX)
    np.cumsum(np.bincount(rows, minlength=m.num_rows), out=row_ptrs[1:])
    vals = a[:, rows, cols]
    vals = np.where(np.abs(vals) > tol, vals, 0.0)
    return BatchCsr(m.num_systems, m.num_rows, m.num_cols, row_ptrs, cols, vals)


def dense_from_csr(m: BatchCsr) -> BatchDense:
    out = np.zeros((m.num_systems, m.num_rows, m.num_cols), dtype=REAL)
    out[:, m.row_indices(), m.col_idxs] = m.values
    return BatchDense(m.num_systems, m.num_rows, m.num_cols, out.reshape(m.num_systems, -1))


def ell_from_csr(m: BatchCsr) -> BatchEll:
    lengths = np.diff(m.row_ptrs)
    width = int(lengths.max()) if m.num_rows else 0
    rows = m.row_indices()
    slots = np.arange(m.nnz, dtype=INDEX) - m.row_ptrs[rows]
    pos = slots * m.num_rows + rows
    col_idxs = np.full(m.num_rows * width, PAD, dtype=INDEX)
    col_idxs[pos] = m.col_idxs
    values = np.zeros((m.num_systems, m.num_rows * width), dtype=REAL)
    values[:, pos] = m.values
    return BatchEll(m.num_systems, m.num_rows, m.num_cols, width, col_idxs, values)


def csr_from_ell(m: BatchEll) -> BatchCsr:
    rows = np.tile(np.arange(m.num_rows, dtype=INDEX), m.nnz_per_row)
    slots = np.repeat(np.arange(m.nnz_per_row, dtype=INDEX), m.num_rows)
    keep = np.flatnonzero(m.col_idxs != PAD)
    # CSR order: by row, then slot (slots are filled left to right)
    order = keep[np.lexsort((slots[keep], rows[keep]))]
    row_ptrs = np.zeros(m.num_rows + 1, dtype=INDEX)
    np.cumsum(np.bincount(rows[order], minlength=m.num_rows), out=row_ptrs[1:])
    return BatchCsr(m.num_systems, m.num_rows, m.num_cols, row_ptrs,
                    m.col_idxs[order], m.values[:, order])


def to_csr(m: BatchMatrix) -> BatchCsr:
    if isinstance(m, BatchCsr):
        return m
    if isinstance(m, BatchEll):
        return csr_from_ell(m)
    return csr_from_dense(m)


def to_format(m: BatchMatrix, fmt: str) -> BatchMatrix:
    """Convert ``m`` to ``"csr"``, ``"ell"`` or ``"dense"``.

    Dense to sparse keeps explicit zeros only where another entry is nonzero.
    """
    if fmt == format_name(m):
        return m
    if fmt == "dense":
        return dense_from_csr(to_csr(m))
    if fmt == "csr":
        return to_csr(m)
    if fmt == "ell":
        return ell_from_csr(to_csr(m))
    raise ValueError(f"unknown matrix format {fmt!r}")


def replicate(m, num_systems: int):
    """Batch of ``num_systems`` entries cycling through the entries of ``m``."""
    if m.num_systems < 1:
        raise DimensionError("cannot replicate an empty batch")
    return m.take(np.arange(num_systems) % m.num_systems)


# -- storage accounting -------------------------------------------------------

@dataclass(frozen=True)
class StorageReport:
    value_elems: int
    index_elems: int
    pointer_elems: int

    @property
    def total_elems(self) -> int:
        return self.value_elems + self.index_elems + self.pointer_elems


def storage_report(m: BatchMatrix) -> StorageReport:
    if isinstance(m, BatchDense):
        return StorageReport(m.num_systems * m.num_rows * m.num_cols, 0, 0)
    if isinstance(m, BatchCsr):
        return StorageReport(m.num_systems * m.nnz, m.nnz, m.num_rows + 1)
    if isinstance(m, BatchEll):
        return StorageReport(m.num_systems * m.num_rows * m.nnz_per_row,
                             m.num_rows * m.nnz_per_row, 0)
    raise TypeError(f"not a batch matrix: {type(m).__name__}")


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    rule: str
    where: str

    def __str__(self):
        return f"{self.rule}: {self.where}"


def _check_values(out, values, expected):
    if values.shape != expected:
        out.append(Violation("values length",
                             f"values shape {values.shape}, expected {expected}"))


def _check_csr(m: BatchCsr, out):
    rp, ci = m.row_ptrs, m.col_idxs
    if rp.size != m.num_rows + 1:
        out.append(Violation("row_ptrs length", f"{rp.size} != num_rows + 1 = {m.num_rows + 1}"))
        _check_values(out, m.values, (m.num_systems, m.nnz))
        return
    if rp[0] != 0:
        out.append(Violation("row_ptrs start", f"row_ptrs[0] = {rp[0]}"))
    if rp[-1] != ci.size:
        out.append(Violation("row_ptrs end", f"row_ptrs[{m.num_rows}] = {rp[-1]} != nnz = {ci.size}"))
    drops = np.flatnonzero(np.diff(rp) < 0)
    for i in drops:
        out.append(Violation("row_ptrs monotone",
                             f"row_ptrs[{i}] = {rp[i]} > row_ptrs[{i + 1}] = {rp[i + 1]}"))
    for j in np.flatnonzero((ci < 0) | (ci >= m.num_cols)):
        out.append(Violation("column bound", f"col_idxs[{j}] = {ci[j]} not in [0, {m.num_cols})"))
    if drops.size == 0 and rp[0] == 0 and rp[-1] == ci.size and ci.size > 1:
        rows = m.row_indices()
        bad = np.flatnonzero((np.diff(ci) <= 0) & (rows[1:] == rows[:-1]))
        for j in bad:
            out.append(Violation("column order",
                                 f"row {rows[j]}: col_idxs[{j}] = {ci[j]} >= col_idxs[{j + 1}] = {ci[j + 1]}"))
    _check_values(out, m.values, (m.num_systems, m.nnz))


def _check_ell(m: BatchEll, out):
    ci = m.col_idxs
    size = m.num_rows * m.nnz_per_row
    if ci.size != size:
        out.append(Violation("col_idxs length", f"{ci.size} != num_rows * nnz_per_row = {size}"))
    for j in np.flatnonzero((ci < PAD) | (ci >= m.num_cols)):
        out.append(Violation("column bound", f"col_idxs[{j}] = {ci[j]} not in [0, {m.num_cols})"))
    _check_values(out, m.values, (m.num_systems, size))
    if ci.size == size and m.values.shape == (m.num_systems, size):
        pad = ci == PAD
        entries, slots = np.nonzero(m.values[:, pad] != 0.0)
        pad_pos = np.flatnonzero(pad)
        for k, s in zip(entries, slots):
            p = pad_pos[s]
            out.append(Violation("padding value",
                                 f"entry {k}, slot {p // m.num_rows}, row {p % m.num_rows} is nonzero"))


def validate(m) -> list:
    """All invariant violations of a batch object; empty iff it is well formed."""
    out = []
    dims = {"num_systems": m.num_systems}
    if isinstance(m, BatchMultiVector):
        dims["length"] = m.length
    else:
        dims.update(num_rows=m.num_rows, num_cols=m.num_cols)
    for name, v in dims.items():
        if v < 0:
            out.append(Violation("dimensions", f"{name} = {v}"))
    if isinstance(m, BatchCsr):
        _check_csr(m, out)
    elif isinstance(m, BatchEll):
        _check_ell(m, out)
    elif isinstance(m, BatchDense):
        _check_values(out, m.values, (m.num_systems, m.num_rows * m.num_cols))
    elif isinstance(m, BatchMultiVector):
        _check_values(out, m.values, (m.num_systems, m.length))
    else:
        raise TypeError(f"cannot validate {type(m).__name__}")
    if m.values.size and not np.all(np.isfinite(m.values)):
        k = int(np.flatnonzero(~np.isfinite(m.values).all(axis=-1))[0])
        out.append(Violation("finite values", f"entry {k} holds NaN or inf"))
    return out


def check(m) -> None:
    """Raise :class:`DimensionError` listing violations, if any."""
    problems = validate(m)
    if problems:
        raise DimensionError("; ".join(map(str, problems[:5])))


# -- synthetic input -----------------------------------------------------------

def stencil_deltas(num_systems: int, seed: int, max_delta: float = 0.5) -> np.ndarray:
    """Per-entry diagonal perturbations in ``(0, max_delta]``.

    Entry ``k`` depends only on ``seed`` and ``k``, so growing the batch keeps
    earlier entries unchanged.
    """
    u = np.random.default_rng(seed).random(num_systems)
    return max_delta * (1.0 - u)


def generate_stencil_batch(num_systems: int, num_rows: int, seed: int = 0,
                           max_delta: float = 0.5) -> BatchCsr:
    """Batch of 1-D ``[-1, 2, -1]`` Laplacians with perturbed diagonals.

    Entry ``k`` has diagonal ``2 * (1 + delta_k)``; ``max_delta=0`` gives the
    plain Laplacian for every entry. All entries are SPD.
    """
    if num_rows < 2:
        raise DimensionError(f"stencil needs at least 2 rows, got {num_rows}")
    if num_systems < 1:
        raise DimensionError(f"need at least one batch entry, got {num_systems}")
    n = num_rows
    lengths = np.full(n, 3, dtype=INDEX)
    lengths[0] = lengths[-1] = 2
    row_ptrs = np.zeros(n + 1, dtype=INDEX)
    np.cumsum(lengths, out=row_ptrs[1:])
    col_idxs = np.empty(row_ptrs[-1], dtype=INDEX)
    base = np.empty(row_ptrs[-1], dtype=REAL)
    is_diag = np.zeros(row_ptrs[-1], dtype=bool)
    for i in range(n):
        cols = [c for c in (i - 1, i, i + 1) if 0 <= c < n]
        s = row_ptrs[i]
        col_idxs[s:s + len(cols)] = cols
        base[s:s + len(cols)] = [2.0 if c == i else -1.0 for c in cols]
        is_diag[s + cols.index(i)] = True
    deltas = stencil_deltas(num_systems, seed, max_delta)
    values = np.tile(base, (num_systems, 1))
    values[:, is_diag] *= (1.0 + deltas)[:, None]
    return BatchCsr(num_systems, n, n, row_ptrs, col_idxs, values)
