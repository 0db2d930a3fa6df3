"""Randomized HALS.

``X`` is compressed once to ``B = Q^T X`` (``l x n``) with a randomized QB
decomposition. The iterations then work with ``B`` and the rotated basis
factor ``W~ = Q^T W``: the ``H`` rows and ``W~`` columns get HALS-style
updates in the small space, and every updated ``W~`` column is lifted back
with ``W_j = max(0, Q W~_j)`` and rotated down again with ``W~_j = Q^T W_j``
so that nonnegativity is enforced on the full ``m x k`` factor.

No product with an ``m x n`` matrix happens inside the sweep loop; the
per-sweep cost is governed by ``l*n*k`` and ``m*l*k`` terms. The full-space
error is only evaluated every ``trace_full_every`` sweeps and once at the end.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .hals import (
    EPS_DIV,
    ConvergenceTrace,
    FactorPair,
    RegConfig,
    SolverOptions,
    TraceRecord,
    _projected_sq,
    _reseed_dead,
    check_nonnegative,
    component_order,
    init_factors,
    objective,
    projected_gradient_norm,
    should_stop,
    solver_rngs,
)
from .linalg import as_matrix
from .sketch import SketchOptions, rqb


@dataclass(frozen=True)
class RandomizedOptions(SolverOptions):
    oversample: int = 20
    power_iters: int = 2
    trace_full_every: int = 10

    def __post_init__(self):
        super().__post_init__()
        if self.oversample < 0:
            raise ParameterError(f"oversample must be >= 0, got {self.oversample}")
        if self.power_iters < 0:
            raise ParameterError(f"power_iters must be >= 0, got {self.power_iters}")
        if self.trace_full_every < 0:
            raise ParameterError(f"trace_full_every must be >= 0, got {self.trace_full_every}")

    def sketch_options(self):
        # nonnegative test matrix for nonnegative data
        return SketchOptions(
            rank=self.rank,
            oversample=self.oversample,
            power_iters=self.power_iters,
            test_matrix="uniform",
            seed=self.seed,
        )


@dataclass
class CompressedProblem:
    """Working state of the randomized solver.

    ``Wt`` is the low-dimensional factor ``Q^T W`` and may have negative
    entries; ``W`` and ``H`` are nonnegative.
    """

    Q: np.ndarray
    B: np.ndarray
    Wt: np.ndarray
    W: np.ndarray
    H: np.ndarray

    @property
    def sketch_size(self):
        return self.Q.shape[1]

    def check(self):
        m, l = self.Q.shape
        k = self.W.shape[1]
        n = self.B.shape[1]
        if self.B.shape[0] != l or self.Wt.shape != (l, k) or self.W.shape != (m, k) or self.H.shape != (k, n):
            raise ShapeError(
                f"inconsistent compressed problem: Q {self.Q.shape}, B {self.B.shape}, "
                f"Wt {self.Wt.shape}, W {self.W.shape}, H {self.H.shape}"
            )


def compress(X, opts, init=None):
    """Sketch ``X`` and set up the compressed problem.

    The starting factors come from the same stream as in :func:`hals_fit`,
    so both solvers start from identical ``W, H`` for a given seed.
    """
    X = as_matrix(X, "X", finite=True)
    check_nonnegative(X)
    opts.check_shape(*X.shape)
    init_rng, sketch_rng, _, _ = solver_rngs(opts.seed)
    sk = rqb(X, opts.sketch_options(), rng=sketch_rng)
    if init is None:
        init = init_factors(X, opts.rank, opts.init, init_rng)
    W = np.array(init.W, dtype=np.float64, order="C")
    H = np.array(init.H, dtype=np.float64, order="C")
    cp = CompressedProblem(Q=sk.Q, B=sk.B, Wt=sk.Q.T @ W, W=W, H=H)
    cp.check()
    return cp


def _wt_step(cp, j, t_j, v_j, alpha, beta):
    Q, Wt, W = cp.Q, cp.Wt, cp.W
    den = max(v_j[j] + alpha, EPS_DIV)
    Wt[:, j] = Wt[:, j] * (v_j[j] / den) + (t_j - Wt @ v_j) / den
    w = Q @ Wt[:, j]
    if beta:
        # l1 offset acts on the full-space column, not on its rotation
        w -= beta / den
    np.maximum(w, 0.0, out=W[:, j])
    Wt[:, j] = Q.T @ W[:, j]


def _hr_step(cp, j, wtb_j, g_j, s_jj, alpha, beta):
    H = cp.H
    # numerator Gram from the compressed factor, scaling from the full one
    den = max(s_jj + alpha, EPS_DIV)
    row = H[j] * (s_jj / den) + (wtb_j - beta - g_j @ H) / den
    np.maximum(row, 0.0, out=H[j])


def rhals_update_W(cp, reg=RegConfig(), order=None):
    """One pass over the columns of ``W~``/``W``, in place. Returns ``(W, Wt)``."""
    cp.check()
    T, V = cp.B @ cp.H.T, cp.H @ cp.H.T
    for j in range(cp.W.shape[1]) if order is None else order:
        _wt_step(cp, j, T[:, j], V[:, j], reg.alpha_W, reg.beta_W)
    return cp.W, cp.Wt


def rhals_update_H(cp, reg=RegConfig(), order=None):
    """One pass over the rows of ``H``, in place. Returns ``H``."""
    cp.check()
    WtB, G = cp.Wt.T @ cp.B, cp.Wt.T @ cp.Wt
    S_diag = np.einsum("ij,ij->j", cp.W, cp.W)
    for j in range(cp.H.shape[0]) if order is None else order:
        _hr_step(cp, j, WtB[j], G[:, j], S_diag[j], reg.alpha_H, reg.beta_H)
    return cp.H


def compressed_objective(cp):
    """``||B - W~ H||_F^2``."""
    R = cp.B - cp.Wt @ cp.H
    return float(np.vdot(R, R))


def _compressed_pgrad(cp, T, V, WtB, G, reg):
    """Projected gradient of ``||B - W~ H||^2``.

    The ``W~`` gradient is lifted to full space with ``Q`` so that the KKT
    projection is taken against the entries of ``W``, which carry the sign
    constraint. With a complete basis (``Q Q^T = I``) this is exactly the
    full-space projected gradient.
    """
    gW = 2.0 * (cp.Q @ (cp.Wt @ V - T) + reg.alpha_W * cp.W + reg.beta_W)
    gH = 2.0 * (G @ cp.H - WtB + reg.alpha_H * cp.H + reg.beta_H)
    return _projected_sq(gW, cp.W) + _projected_sq(gH, cp.H)


def compressed_pgrad(cp, reg=None):
    reg = reg or RegConfig()
    return _compressed_pgrad(cp, cp.B @ cp.H.T, cp.H @ cp.H.T, cp.Wt.T @ cp.B, cp.Wt.T @ cp.Wt, reg)


def rhals_iterate(cp, opts, full_eval=None, t0=None):
    """Run randomized HALS sweeps on ``cp`` in place.

    Only ``Q`` and ``B`` are touched; ``full_eval(W, H)`` is an optional
    callback returning ``(objective, rel_err)`` in full space, called every
    ``opts.trace_full_every`` sweeps (never when 0).
    """
    cp.check()
    k = opts.rank
    reg = opts.reg
    _, _, order_rng, dead_rng = solver_rngs(opts.seed)
    t0 = time.perf_counter() if t0 is None else t0
    trace = ConvergenceTrace()

    T, V = cp.B @ cp.H.T, cp.H @ cp.H.T
    WtB, G = cp.Wt.T @ cp.B, cp.Wt.T @ cp.Wt

    def record(it, pgrad, full):
        obj, rel = full if full is not None else (math.nan, math.nan)
        trace.append(
            TraceRecord(
                iteration=it,
                elapsed_s=time.perf_counter() - t0,
                objective=obj,
                rel_err=rel,
                pgrad=pgrad,
                compressed_objective=compressed_objective(cp),
            )
        )

    pgrad0 = _compressed_pgrad(cp, T, V, WtB, G, reg)
    record(0, pgrad0, full_eval(cp.W, cp.H) if full_eval else None)
    trace.stop_reason = "max_iter"

    for it in range(1, opts.max_iter + 1):
        if opts.update_order == "interleaved":
            for j in range(k):
                _wt_step(cp, j, T[:, j], cp.H @ cp.H[j], reg.alpha_W, reg.beta_W)
                wt_j = cp.Wt[:, j]
                _hr_step(cp, j, wt_j @ cp.B, cp.Wt.T @ wt_j, float(cp.W[:, j] @ cp.W[:, j]), reg.alpha_H, reg.beta_H)
        else:
            order = component_order(opts, k, order_rng)
            for j in order:
                _wt_step(cp, j, T[:, j], V[:, j], reg.alpha_W, reg.beta_W)
            WtB, G = cp.Wt.T @ cp.B, cp.Wt.T @ cp.Wt
            S_diag = np.einsum("ij,ij->j", cp.W, cp.W)
            for j in order:
                _hr_step(cp, j, WtB[j], G[:, j], S_diag[j], reg.alpha_H, reg.beta_H)
        if opts.reseed_dead:
            _reseed_dead(cp.W, cp.H, dead_rng)
            cp.Wt[:] = cp.Q.T @ cp.W

        T, V = cp.B @ cp.H.T, cp.H @ cp.H.T
        WtB, G = cp.Wt.T @ cp.B, cp.Wt.T @ cp.Wt
        pgrad = _compressed_pgrad(cp, T, V, WtB, G, reg)
        stop = should_stop(opts, pgrad, pgrad0, compressed_objective(cp))
        every = getattr(opts, "trace_full_every", 0)
        full = None
        if full_eval is not None and every and it % every == 0:
            full = full_eval(cp.W, cp.H)
        record(it, pgrad, full)
        if stop:
            trace.stop_reason = opts.stop
            break
    return trace


def rhals_fit(X, opts, init=None):
    """Fit ``X ~= W H`` with randomized HALS.

    Parameters
    ----------
    X : array (m, n), nonnegative
    opts : RandomizedOptions
    init : FactorPair, optional

    Returns
    -------
    factors : FactorPair
        Full-space nonnegative ``W`` (m x k) and ``H`` (k x n).
    trace : ConvergenceTrace
        ``pgrad`` is the compressed projected gradient (the stopping
        measure); ``objective``/``rel_err`` are full-space values where they
        were evaluated and NaN elsewhere. The final record always carries
        the full-space objective, relative error and projected gradient.
    """
    X = as_matrix(X, "X", finite=True)
    t0 = time.perf_counter()
    cp = compress(X, opts, init=init)
    x_norm = float(np.linalg.norm(X))

    def full_eval(W, H):
        obj = objective(X, W, H)
        return obj, (math.sqrt(obj) / x_norm if x_norm > 0 else 0.0)

    trace = rhals_iterate(cp, opts, full_eval=full_eval, t0=t0)
    last = trace.records[-1]
    obj, rel = full_eval(cp.W, cp.H)
    trace.records[-1] = TraceRecord(
        iteration=last.iteration,
        elapsed_s=time.perf_counter() - t0,
        objective=obj,
        rel_err=rel,
        pgrad=last.pgrad,
        compressed_objective=last.compressed_objective,
        full_pgrad=projected_gradient_norm(X, cp.W, cp.H, opts.reg),
    )
    return FactorPair(cp.W, cp.H), trace
