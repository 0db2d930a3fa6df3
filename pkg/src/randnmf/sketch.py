"""Randomized QB decomposition.

``rqb`` builds an orthonormal basis ``Q`` for the dominant column space of
``A`` from a random sketch ``Y = A @ Omega``, optionally sharpened with
subspace iterations, and returns ``B = Q.T @ A`` so that ``A ~= Q @ B``.

``rqb_streaming`` computes the same decomposition while only touching ``A``
through a :class:`ColumnSource`, one block of consecutive columns at a time.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParameterError
from .linalg import as_matrix, economic_qr, gaussian_matrix, make_rng, uniform_matrix

TEST_MATRIX_KINDS = ("uniform", "gaussian")


@dataclass(frozen=True)
class SketchOptions:
    rank: int
    oversample: int = 20
    power_iters: int = 2
    test_matrix: str = "gaussian"
    block_size: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.rank < 1:
            raise ParameterError(f"rank must be >= 1, got {self.rank}")
        if self.oversample < 0:
            raise ParameterError(f"oversample must be >= 0, got {self.oversample}")
        if self.power_iters < 0:
            raise ParameterError(f"power_iters must be >= 0, got {self.power_iters}")
        if self.block_size < 1:
            raise ParameterError(f"block_size must be >= 1, got {self.block_size}")
        if self.test_matrix not in TEST_MATRIX_KINDS:
            raise ParameterError(f"test_matrix must be one of {TEST_MATRIX_KINDS}, got {self.test_matrix!r}")

    def sketch_size(self, m, n):
        """Number of sketch columns ``l`` for an ``m x n`` input.

        ``l = rank + oversample`` clamped to ``m`` (the most orthonormal
        columns an ``m``-row basis can hold). ``l`` may exceed ``n``; the
        extra columns then complete the basis without adding information.
        """
        if self.rank > min(m, n):
            raise ParameterError(f"rank {self.rank} exceeds min(m, n) = {min(m, n)}")
        l = self.rank + self.oversample
        if l > m:
            warnings.warn(f"sketch size {l} clamped to the row count {m}", stacklevel=3)
            l = m
        return l


@dataclass(frozen=True)
class SketchResult:
    Q: np.ndarray
    B: np.ndarray
    passes: int

    @property
    def sketch_size(self):
        return self.Q.shape[1]

    def reconstruct(self):
        return self.Q @ self.B


def draw_test_matrix(n, l, kind, rng):
    if kind == "uniform":
        return uniform_matrix(n, l, rng)
    return gaussian_matrix(n, l, rng)


def rqb(A, opts, rng=None):
    """Randomized QB decomposition of an in-memory matrix.

    Parameters
    ----------
    A : array of shape (m, n)
    opts : SketchOptions
    rng : Generator, optional
        Source of the test matrix. Defaults to a fresh generator seeded
        with ``opts.seed``.

    Returns
    -------
    SketchResult
        ``passes`` is ``2 + power_iters``, the number of sweeps a streamed
        evaluation of the same scheme needs.
    """
    A = as_matrix(A, finite=True)
    m, n = A.shape
    l = opts.sketch_size(m, n)
    rng = make_rng(opts.seed if rng is None else rng)

    Omega = draw_test_matrix(n, l, opts.test_matrix, rng)
    Y = A @ Omega
    # Re-orthonormalize between every product with A and A.T; forming
    # (A A^T)^q A Omega directly loses the small singular directions.
    for _ in range(opts.power_iters):
        Q, _ = economic_qr(Y)
        Z = A.T @ Q
        # l > n: Z has more columns than rows and cannot be orthonormalized;
        # the sketch already spans all of range(A) in that case.
        if n >= l:
            Z, _ = economic_qr(Z)
        Y = A @ Z
    Q, _ = economic_qr(Y)
    B = Q.T @ A
    return SketchResult(Q=Q, B=B, passes=2 + opts.power_iters)


class ColumnSource:
    """Read access to a matrix by blocks of consecutive columns.

    Subclasses set ``shape`` and implement :meth:`_read`. Repeated reads of
    the same range must return identical data.
    """

    shape = (0, 0)

    def _read(self, start, stop):
        raise NotImplementedError

    def read_columns(self, start, stop):
        m, n = self.shape
        if not 0 <= start < stop <= n:
            raise IndexError(f"column range [{start}, {stop}) outside [0, {n})")
        try:
            block = self._read(start, stop)
        except OSError as exc:
            raise OSError(f"failed to read columns [{start}, {stop}): {exc}") from exc
        block = np.asarray(block, dtype=np.float64)
        if block.shape != (m, stop - start):
            raise DataError(
                f"columns [{start}, {stop}) came back with shape {block.shape}, expected {(m, stop - start)}"
            )
        if not np.all(np.isfinite(block)):
            raise DataError(f"non-finite value in columns [{start}, {stop})")
        return block

    def blocks(self, block_size):
        n = self.shape[1]
        for start in range(0, n, block_size):
            stop = min(start + block_size, n)
            yield start, stop, self.read_columns(start, stop)


class ArrayColumnSource(ColumnSource):
    """Column source over an in-memory array."""

    def __init__(self, A):
        self.A = as_matrix(A)
        self.shape = self.A.shape

    def _read(self, start, stop):
        return self.A[:, start:stop]


def rqb_streaming(src, opts, rng=None):
    """QB decomposition reading ``src`` in column blocks.

    The first pass accumulates ``Y = sum_b A_b Omega_b`` over blocks, each
    subspace iteration is one pass accumulating ``Y = sum_b A_b (A_b^T Q)``
    followed by a QR, and a final pass fills ``B`` block by block. That is
    ``2 + power_iters`` passes in total. Blocks are reduced in ascending
    order, so the result is deterministic.

    With the same seed the result matches :func:`rqb` on the materialized
    matrix up to rounding: the two differ only by an upper-triangular
    factor applied to ``Y`` before the final QR, which the sign-normalized
    QR absorbs.
    """
    m, n = src.shape
    l = opts.sketch_size(m, n)
    rng = make_rng(opts.seed if rng is None else rng)
    Omega = draw_test_matrix(n, l, opts.test_matrix, rng)
    passes = 0

    Y = np.zeros((m, l))
    for start, stop, block in src.blocks(opts.block_size):
        Y += block @ Omega[start:stop]
    passes += 1

    for _ in range(opts.power_iters):
        Q, _ = economic_qr(Y)
        Y = np.zeros((m, l))
        for start, stop, block in src.blocks(opts.block_size):
            Y += block @ (block.T @ Q)
        passes += 1

    Q, _ = economic_qr(Y)
    B = np.empty((l, n))
    for start, stop, block in src.blocks(opts.block_size):
        B[:, start:stop] = Q.T @ block
    passes += 1
    return SketchResult(Q=Q, B=B, passes=passes)
