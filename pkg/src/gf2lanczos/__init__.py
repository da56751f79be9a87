"""Block Lanczos for large sparse linear systems over GF(2)."""

from .bitblock import DiagMask, SmallMat, VectorBlock
from .blanczos import (
    SolveReport,
    SolverConfig,
    Status,
    expected_iterations,
    solve_inhomogeneous,
    solve_left_nullspace,
)
from .sparse import AOperator, SparseMatrix, gen_random, load_matrix, save_matrix

__all__ = [
    "AOperator",
    "DiagMask",
    "SmallMat",
    "SolveReport",
    "SolverConfig",
    "SparseMatrix",
    "Status",
    "VectorBlock",
    "expected_iterations",
    "gen_random",
    "load_matrix",
    "save_matrix",
    "solve_inhomogeneous",
    "solve_left_nullspace",
]
