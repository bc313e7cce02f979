"""Benchmark harness: Matrix Market ingestion, timed sweeps, CSV output, CLI."""
from .bench import (BenchmarkRecord, MatrixMarketCase, StencilCase, emit_csv, run_benchmark,
                    stencil_sweep)
from .mmio import (load_matrix_market_batch, load_matrix_market_dir, read_matrix_market,
                   write_matrix_market, write_matrix_market_batch)
