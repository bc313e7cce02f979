import csv
import dataclasses
import io
from pathlib import Path

import numpy as np
import pytest

from batchkrylov import (BatchMultiVector, MatrixMarketParseError, PatternMismatchError,
                         SolveConfig, batch_cg, generate_stencil_batch)
from batchkrylov.harness import (BenchmarkRecord, StencilCase, emit_csv, load_matrix_market_batch,
                                 load_matrix_market_dir, read_matrix_market, run_benchmark,
                                 stencil_sweep, write_matrix_market, write_matrix_market_batch)
from batchkrylov.harness.bench import FIELDS, MatrixMarketCase
from batchkrylov.harness.cli import main


def write(path, text):
    Path(path).write_text(text)
    return str(path)


IDENTITY4 = """%%MatrixMarket matrix coordinate real general
% a comment
4 4 4
1 1 1.0
2 2 1.0
3 3 1.0
4 4 1.0
"""


def test_identity_file_replicated(tmp_path):
    p = write(tmp_path / "eye.mtx", IDENTITY4)
    m = load_matrix_market_batch([p], replicate=3)
    assert m.num_systems == 3 and m.nnz == 4
    assert m.values.tolist() == [[1.0] * 4] * 3


def test_symmetric_file_is_expanded(tmp_path):
    p = write(tmp_path / "s.mtx", """%%MatrixMarket matrix coordinate real symmetric
3 3 4
1 1 2.0
2 1 -1.0
2 2 2.0
3 3 5.0
""")
    e = read_matrix_market(p)
    assert e.symmetry == "symmetric" and e.stored_nnz == 5
    m = load_matrix_market_batch([p])
    assert m.row_ptrs.tolist() == [0, 2, 4, 5]
    assert m.col_idxs.tolist() == [0, 1, 0, 1, 2]
    assert m.values.tolist() == [[2.0, -1.0, -1.0, 2.0, 5.0]]


def test_explicit_zero_counts(tmp_path):
    p = write(tmp_path / "z.mtx", "%%MatrixMarket matrix coordinate real general\n"
                                  "2 2 3\n1 1 1\n1 2 0\n2 2 1\n")
    e = read_matrix_market(p)
    assert (e.stored_nnz, e.structural_nnz) == (3, 2)


@pytest.mark.parametrize("body,line", [
    ("%%MatrixMarket matrix array real general\n2 2\n", 1),
    ("%%MatrixMarket matrix coordinate complex general\n", 1),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1.0\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n\n1 1 2.0\n", 5),
    ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n%c\n2 2\n", 3),
    ("not a banner\n", 1),
])
def test_parse_errors_carry_line_numbers(tmp_path, body, line):
    p = write(tmp_path / "bad.mtx", body)
    with pytest.raises(MatrixMarketParseError) as info:
        read_matrix_market(p)
    assert info.value.line == line
    assert f"bad.mtx:{line}:" in str(info.value)


def test_pattern_mismatch_names_position(tmp_path):
    a = write(tmp_path / "a.mtx", IDENTITY4)
    b = write(tmp_path / "b.mtx", IDENTITY4.replace("4 4 4\n", "4 4 5\n") + "3 2 7.0\n")
    with pytest.raises(PatternMismatchError) as info:
        load_matrix_market_batch([a, b])
    assert info.value.position == "(row 3, col 2)"
    assert "b.mtx" in str(info.value) and "extra entry" in str(info.value)
    c = write(tmp_path / "c.mtx", IDENTITY4.replace("4 4 4", "5 5 4"))
    with pytest.raises(PatternMismatchError) as info:
        load_matrix_market_batch([a, c])
    assert info.value.position == "shape"


def test_round_trip_bitwise(tmp_path, rng):
    m = generate_stencil_batch(5, 17, seed=99)
    m.values[:] += rng.standard_normal(m.values.shape) * 1e-7
    paths = write_matrix_market_batch(m, tmp_path / "dir")
    back = load_matrix_market_dir(tmp_path / "dir")
    assert len(paths) == 5
    assert np.array_equal(back.row_ptrs, m.row_ptrs)
    assert np.array_equal(back.col_idxs, m.col_idxs)
    assert np.array_equal(back.values, m.values)


def test_symmetric_write_round_trip(tmp_path):
    m = generate_stencil_batch(1, 9, seed=1)
    p = write_matrix_market(tmp_path / "s.mtx", m, symmetric=True)
    assert Path(p).read_text().splitlines()[1] == "9 9 17"
    assert read_matrix_market(p).stored_nnz == 9 + 2 * 8
    back = load_matrix_market_batch([p])
    assert np.array_equal(back.values, m.values)


def _drm19_like(rng):
    """Pattern with the drm19 shape: 22 x 22, 438 stored entries, full diagonal."""
    mask = np.eye(22, dtype=bool)
    off = np.flatnonzero(~mask.ravel())
    mask.ravel()[rng.choice(off, 438 - 22, replace=False)] = True
    return np.nonzero(mask)


def test_drm19_shaped_set_replicates_to_32768(tmp_path, rng):
    rows, cols = _drm19_like(rng)
    for f in range(67):
        lines = [f"{i + 1} {j + 1} {v!r}" for i, j, v in
                 zip(rows, cols, rng.standard_normal(rows.size).tolist())]
        write(tmp_path / f"drm19_{f:02d}.mtx",
              "%%MatrixMarket matrix coordinate real general\n22 22 438\n"
              + "\n".join(lines) + "\n")
    m = load_matrix_market_dir(tmp_path, num_systems=2 ** 15)
    assert (m.num_systems, m.num_rows, m.nnz) == (32768, 22, 438)
    first = load_matrix_market_batch([tmp_path / "drm19_00.mtx"])
    assert np.array_equal(m.values[67], first.values[0])


def test_replicated_entry_solves_like_its_source(tmp_path):
    m = generate_stencil_batch(3, 12, seed=4)
    paths = write_matrix_market_batch(m, tmp_path)
    batch = load_matrix_market_batch(paths, replicate=4)
    cfg = SolveConfig(tol=1e-12, precond="jacobi")
    res = batch_cg(batch, BatchMultiVector.full(12, 12, 1.0), cfg=cfg)
    for k in range(batch.num_systems):
        alone = batch_cg(load_matrix_market_batch([paths[k % 3]]),
                         BatchMultiVector.full(1, 12, 1.0), cfg=cfg)
        assert np.array_equal(res.x.values[k], alone.x.values[0])


def test_stencil_rows_sweep_iterations_grow():
    cfg = SolveConfig(tol=1e-10)
    recs = run_benchmark(stencil_sweep([16, 32, 64, 128], [8], seed=1), cfg, repetitions=1)
    assert len(recs) == 4
    iters = [r.total_iterations for r in recs]
    assert iters == sorted(iters)
    assert all(r.converged_count == 8 for r in recs)


def test_batch_sweep_exactly_linear():
    cfg = SolveConfig(tol=1e-10)
    sizes = [2 ** k for k in range(10, 15)]
    cases = [StencilCase(b, 64, seed=2, replicate=b) for b in sizes]
    recs = run_benchmark(cases, cfg, repetitions=1, warmup=False)
    per_entry = {r.total_iterations / r.num_systems for r in recs}
    assert len(per_entry) == 1
    assert {r.total_spmv / r.num_systems for r in recs} == {recs[0].total_spmv / 1024}


def test_failed_case_does_not_abort_sweep(tmp_path):
    bad = MatrixMarketCase((str(tmp_path / "missing.mtx"),))
    recs = run_benchmark([bad, StencilCase(4, 8)], SolveConfig(), repetitions=1)
    assert recs[0].error.startswith("FileNotFoundError")
    assert recs[0].wall_time_seconds >= 0
    assert not recs[1].error and recs[1].converged_count == 4


def test_emit_csv_shapes():
    assert emit_csv([]).splitlines() == [",".join(FIELDS)]
    assert run_benchmark([], SolveConfig()) == []
    recs = run_benchmark([StencilCase(4, 8)], SolveConfig(), repetitions=2)
    assert len(emit_csv(recs).splitlines()) == 2


def _parse(text):
    """Independent reader: csv module plus the record's declared field types."""
    cast = {"int": int, "float": float, "str": str}
    types = {f.name: cast[f.type] for f in dataclasses.fields(BenchmarkRecord)}
    out = []
    for row in csv.DictReader(io.StringIO(text, newline="")):
        out.append(BenchmarkRecord(**{k: types[k](v) for k, v in row.items()}))
    return out


def test_csv_round_trip():
    recs = run_benchmark(stencil_sweep([8, 16], [3, 5]), SolveConfig(precond="jacobi"),
                         repetitions=2)
    recs.append(BenchmarkRecord("cg", "csr", "identity", 0, 0, 0, 1 / 3, "absolute",
                                0.1 + 0.2, 0, 0, 0, "", case='odd, "quoted"', error="x\ny"))
    text = emit_csv(recs)
    assert "\r\n" in text
    assert _parse(text) == recs


def test_cli_bench_writes_csv(tmp_path):
    out = tmp_path / "r.csv"
    code = main(["bench", "--stencil-rows", "8", "16", "--batch", "4", "--reps", "1",
                 "--precond", "jacobi", "--format", "ell", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(out.open(newline="")))
    assert [r["num_rows"] for r in rows] == ["8", "16"]
    assert rows[0]["format"] == "ell" and rows[0]["max_iterations"] != ""


def test_cli_bench_exit_code_when_not_converged(tmp_path, capsys):
    code = main(["bench", "--stencil-rows", "30", "--batch", "2", "--reps", "1",
                 "--max-iters", "1", "--tol", "1e-14"])
    assert code == 1
    assert capsys.readouterr().out.startswith("solver,")


def test_cli_bench_mm_dir_and_profile(tmp_path):
    write_matrix_market_batch(generate_stencil_batch(3, 10, seed=1), tmp_path / "mm")
    prof = write(tmp_path / "dev.cfg", "name = small\nmax_wg = 64\nslm_bytes = 1024\n")
    out = tmp_path / "o.csv"
    code = main(["bench", "--mm-dir", str(tmp_path / "mm"), "--replicate", "5",
                 "--solver", "bicgstab", "--tol-mode", "abs", "--tol", "1e-9", "--reps", "1",
                 "--device-profile", prof, "--out", str(out)])
    assert code == 0
    row = next(csv.DictReader(out.open(newline="")))
    assert row["num_systems"] == "15" and row["launch_plan"] == "wg=16;sg=16"


def test_cli_validate(tmp_path, capsys):
    assert main(["generate", "--stencil-rows", "6", "--batch", "3",
                 "--out-dir", str(tmp_path / "ok")]) == 0
    assert main(["validate", "--mm-dir", str(tmp_path / "ok")]) == 0
    assert "3 files share one pattern" in capsys.readouterr().out
    write(tmp_path / "ok" / "zz.mtx", IDENTITY4)
    assert main(["validate", "--mm-dir", str(tmp_path / "ok")]) == 1
    assert "sparsity pattern differs" in capsys.readouterr().out


def test_cli_plan(capsys):
    assert main(["plan", "--rows", "33"]) == 0
    out = capsys.readouterr().out
    assert "wg=48;sg=16" in out and "precond" in out
    assert main(["plan", "--rows", "54", "--work-group-size", "50"]) == 1
