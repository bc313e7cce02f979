"""Matrix Market coordinate files to and from shared-pattern CSR batches.

Only ``matrix coordinate real`` with ``general`` or ``symmetric`` symmetry is
accepted. Symmetric files are expanded to full storage on load. Explicit zeros
in a file are kept as stored entries.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import MatrixMarketParseError, PatternMismatchError
from ..formats import BatchCsr

MTX_SUFFIXES = (".mtx",)


@dataclass(eq=False)
class MatrixMarketEntry:
    """One parsed file: shape plus entries sorted by (row, col), 0-based."""

    path: str
    num_rows: int
    num_cols: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    symmetry: str

    @property
    def stored_nnz(self) -> int:
        return int(self.values.size)

    @property
    def structural_nnz(self) -> int:
        return int(np.count_nonzero(self.values))

    def row_ptrs(self) -> np.ndarray:
        ptrs = np.zeros(self.num_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.rows, minlength=self.num_rows), out=ptrs[1:])
        return ptrs


def read_matrix_market(path) -> MatrixMarketEntry:
    path = str(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketParseError(path, 1, "empty file")
    header = lines[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket":
        raise MatrixMarketParseError(path, 1, "missing '%%MatrixMarket' banner")
    obj, fmt, field, symmetry = (h.lower() for h in header[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketParseError(path, 1, f"unsupported layout '{obj} {fmt}'")
    if field != "real":
        raise MatrixMarketParseError(path, 1, f"unsupported field '{field}'")
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketParseError(path, 1, f"unsupported symmetry '{symmetry}'")

    size = None
    rows, cols, vals, where = [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        text = line.strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if size is None:
            if len(parts) != 3:
                raise MatrixMarketParseError(path, lineno, "size line needs 'rows cols nnz'")
            try:
                size = tuple(int(p) for p in parts)
            except ValueError:
                raise MatrixMarketParseError(path, lineno, f"bad size line {text!r}") from None
            if min(size) < 0:
                raise MatrixMarketParseError(path, lineno, "negative size")
            continue
        if len(parts) != 3:
            raise MatrixMarketParseError(path, lineno, f"expected 'row col value', got {text!r}")
        try:
            i, j, v = int(parts[0]) - 1, int(parts[1]) - 1, float(parts[2])
        except ValueError:
            raise MatrixMarketParseError(path, lineno, f"bad entry {text!r}") from None
        if not (0 <= i < size[0] and 0 <= j < size[1]):
            raise MatrixMarketParseError(path, lineno, f"index ({i + 1}, {j + 1}) out of range")
        if symmetry == "symmetric" and j > i:
            raise MatrixMarketParseError(path, lineno, "symmetric file stores upper-triangle entry")
        if len(vals) == size[2]:
            raise MatrixMarketParseError(path, lineno, f"more than {size[2]} entries")
        rows.append(i)
        cols.append(j)
        vals.append(v)
        where.append(lineno)
    if size is None:
        raise MatrixMarketParseError(path, len(lines), "missing size line")
    if len(vals) != size[2]:
        raise MatrixMarketParseError(path, len(lines),
                                     f"expected {size[2]} entries, found {len(vals)}")

    rows = np.array(rows, dtype=np.int64)
    cols = np.array(cols, dtype=np.int64)
    vals = np.array(vals, dtype=np.float64)
    where = np.array(where, dtype=np.int64)
    if symmetry == "symmetric":
        off = rows != cols
        rows, cols = np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]])
        vals = np.concatenate([vals, vals[off]])
        where = np.concatenate([where, where[off]])
    order = np.lexsort((cols, rows))
    rows, cols, vals, where = rows[order], cols[order], vals[order], where[order]
    dup = np.flatnonzero((rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1]))
    if dup.size:
        k = dup[0] + 1
        raise MatrixMarketParseError(path, int(max(where[k], where[k - 1])),
                                     f"duplicate entry ({rows[k] + 1}, {cols[k] + 1})")
    return MatrixMarketEntry(path, size[0], size[1], rows, cols, vals, symmetry)


def _first_difference(ref: MatrixMarketEntry, other: MatrixMarketEntry):
    if (ref.num_rows, ref.num_cols) != (other.num_rows, other.num_cols):
        return "shape", (f"{other.num_rows}x{other.num_cols} vs "
                         f"{ref.num_rows}x{ref.num_cols}")
    a = set(zip(ref.rows.tolist(), ref.cols.tolist()))
    b = set(zip(other.rows.tolist(), other.cols.tolist()))
    diff = a ^ b
    if not diff:
        return None
    i, j = min(diff)
    side = "missing" if (i, j) in a else "extra"
    return f"(row {i + 1}, col {j + 1})", f"{side} entry"


def load_matrix_market_batch(paths, replicate: int = 1, num_systems=None) -> BatchCsr:
    """Batch of the given files repeated cyclically.

    The batch holds ``replicate * len(paths)`` entries, or exactly
    ``num_systems`` entries when that is given. Entry ``k`` takes its values from
    ``paths[k % len(paths)]``. All files must share one sparsity pattern.
    """
    paths = [str(p) for p in paths]
    if not paths:
        raise ValueError("need at least one Matrix Market file")
    if replicate < 1:
        raise ValueError(f"replicate must be >= 1, got {replicate}")
    parsed = [read_matrix_market(p) for p in paths]
    ref = parsed[0]
    for other in parsed[1:]:
        d = _first_difference(ref, other)
        if d is not None:
            raise PatternMismatchError(other.path, ref.path, *d)
    unique = np.stack([p.values for p in parsed])
    total = replicate * len(paths) if num_systems is None else int(num_systems)
    values = unique[np.arange(total) % len(paths)]
    return BatchCsr(total, ref.num_rows, ref.num_cols, ref.row_ptrs(), ref.cols, values)


def list_matrix_market(directory) -> list:
    """Matrix Market files in ``directory``, sorted by name."""
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    return sorted(str(p) for p in d.iterdir() if p.suffix.lower() in MTX_SUFFIXES)


def load_matrix_market_dir(directory, replicate: int = 1, num_systems=None) -> BatchCsr:
    paths = list_matrix_market(directory)
    if not paths:
        raise FileNotFoundError(f"no .mtx files in {directory}")
    return load_matrix_market_batch(paths, replicate, num_systems)


def write_matrix_market(path, m: BatchCsr, entry: int = 0, symmetric: bool = False):
    """Write one batch entry; values use 17 significant digits so reads are exact."""
    rows = m.row_indices()
    cols = m.col_idxs
    vals = m.values[entry]
    symmetry = "general"
    if symmetric:
        keep = cols <= rows
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        symmetry = "symmetric"
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {symmetry}\n")
        fh.write(f"{m.num_rows} {m.num_cols} {vals.size}\n")
        for i, j, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")
    return str(path)


def write_matrix_market_batch(m: BatchCsr, directory, stem: str = "entry") -> list:
    """One file per batch entry, named so that sorting restores batch order."""
    os.makedirs(directory, exist_ok=True)
    digits = max(4, len(str(m.num_systems - 1)))
    return [write_matrix_market(Path(directory) / f"{stem}_{k:0{digits}d}.mtx", m, k)
            for k in range(m.num_systems)]
