"""Dense kernels used by the solvers.

Matrices are plain C-ordered (row-major) ``float64`` numpy arrays. Products
and the QR factorization go through numpy's BLAS/LAPACK bindings; the
helpers here add the shape checks and conventions the solvers rely on.

Random streams come from numpy's ``PCG64`` bit generator. Equal seeds give
bit-identical draws on the same numpy version and platform.
"""

import numpy as np

from .errors import DataError, ShapeError

RNG_ALGORITHM = "PCG64"


def as_matrix(A, name="A", finite=False):
    """Return ``A`` as a 2-D C-contiguous float64 array."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {A.shape}")
    if finite and not np.all(np.isfinite(A)):
        i, j = np.argwhere(~np.isfinite(A))[0]
        raise DataError(f"{name} contains a non-finite entry at ({i},{j})")
    return A


def make_rng(seed):
    """Seeded generator; ``seed`` may also be an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed, n):
    """Split ``seed`` into ``n`` independent generators.

    Children are derived through ``SeedSequence.spawn``, so the stream used
    for one purpose (say, initialization) does not depend on how many draws
    another purpose consumed.
    """
    ss = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(n)]


def matmul(A, B):
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ShapeError(f"cannot multiply {A.shape} by {B.shape}")
    return A @ B


def economic_qr(A):
    """Thin Householder QR with a nonnegative diagonal in ``R``.

    Fixing the sign of ``diag(R)`` makes the factorization unique for full
    column rank input, so two routes to the same column space (e.g. the
    in-memory and the streamed sketch) end up with the same ``Q``.

    Parameters
    ----------
    A : array of shape (m, n), m >= n

    Returns
    -------
    Q : (m, n) with orthonormal columns
    R : (n, n) upper triangular
    """
    A = as_matrix(A)
    m, n = A.shape
    if m < n:
        raise ShapeError(f"economic_qr needs rows >= cols, got {A.shape}")
    Q, R = np.linalg.qr(A, mode="reduced")
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    Q *= signs
    R *= signs[:, None]
    return Q, R


def frobenius_norm(A):
    A = np.asarray(A, dtype=np.float64)
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if scale == 0.0 or not np.isfinite(scale):
        return scale
    # scaled so tiny or huge entries neither underflow nor overflow when squared
    return scale * float(np.linalg.norm(A / scale))


def _check_dims(rows, cols):
    if rows < 1 or cols < 1:
        raise ShapeError(f"random matrix needs positive dimensions, got ({rows}, {cols})")


def uniform_matrix(rows, cols, rng):
    """i.i.d. uniform [0, 1) entries; advances ``rng``."""
    _check_dims(rows, cols)
    return make_rng(rng).random((rows, cols))


def gaussian_matrix(rows, cols, rng):
    """i.i.d. standard normal entries; advances ``rng``."""
    _check_dims(rows, cols)
    return make_rng(rng).standard_normal((rows, cols))
