"""Batched sparse iterative solvers for many small systems sharing one pattern."""
from .blas import BatchScalar, axpy, copy, dot, norm2, scale, spmv
from .errors import (BatchError, DimensionError, InvalidOverride, MatrixMarketParseError,
                     PatternMismatchError, SingularDiagonalError, UnsupportedCombination)
from .formats import (BatchCsr, BatchDense, BatchEll, BatchMultiVector, StorageReport,
                      csr_from_dense, csr_from_ell, dense_from_csr, ell_from_csr,
                      generate_stencil_batch, replicate, storage_report, to_format,
                      validate)
from .precond import BatchJacobi, Identity, apply, generate_jacobi
from .solvers import BatchSolveResult, SolveConfig, batch_bicgstab, batch_cg, solve
from .tuning import (DeviceProfile, LaunchPlan, WorkspacePlan, make_launch_plan,
                     plan_workspace, select_sub_group_size, select_work_group_size)

__version__ = "0.1.0"
