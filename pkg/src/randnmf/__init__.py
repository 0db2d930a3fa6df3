"""Randomized hierarchical alternating least squares for nonnegative matrix
factorization.

The solvers factor a nonnegative ``X`` (m x n) into ``W`` (m x k) and ``H``
(k x n). :func:`hals_fit` is the deterministic block coordinate descent
baseline; :func:`rhals_fit` first compresses ``X`` with a randomized QB
decomposition and iterates on the small ``l x n`` surrogate.
"""

from .errors import DataError, ParameterError, ShapeError
from .linalg import economic_qr, frobenius_norm, gaussian_matrix, make_rng, matmul, uniform_matrix
from .sketch import ArrayColumnSource, ColumnSource, SketchOptions, SketchResult, rqb, rqb_streaming
from .hals import (
    ConvergenceTrace,
    FactorPair,
    RegConfig,
    SolverOptions,
    TraceRecord,
    hals_fit,
    init_factors,
    objective,
    projected_gradient_norm,
    update_H,
    update_W,
)
from .rhals import (
    CompressedProblem,
    RandomizedOptions,
    compress,
    compressed_objective,
    compressed_pgrad,
    rhals_fit,
    rhals_iterate,
    rhals_update_H,
    rhals_update_W,
)
from .data_io import BinColumnSource, read_matrix, synth_lowrank, write_matrix

__version__ = "0.1.0"

__all__ = [
    "ArrayColumnSource",
    "BinColumnSource",
    "ColumnSource",
    "CompressedProblem",
    "ConvergenceTrace",
    "DataError",
    "FactorPair",
    "ParameterError",
    "RandomizedOptions",
    "RegConfig",
    "ShapeError",
    "SketchOptions",
    "SketchResult",
    "SolverOptions",
    "TraceRecord",
    "compress",
    "compressed_objective",
    "compressed_pgrad",
    "economic_qr",
    "frobenius_norm",
    "gaussian_matrix",
    "hals_fit",
    "init_factors",
    "make_rng",
    "matmul",
    "objective",
    "projected_gradient_norm",
    "read_matrix",
    "rhals_fit",
    "rhals_iterate",
    "rhals_update_H",
    "rhals_update_W",
    "rqb",
    "rqb_streaming",
    "synth_lowrank",
    "uniform_matrix",
    "update_H",
    "update_W",
    "write_matrix",
]
