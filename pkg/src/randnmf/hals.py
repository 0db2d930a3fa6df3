"""Deterministic HALS for nonnegative matrix factorization.

Each sweep updates the columns of ``W`` and the rows of ``H`` one at a time.
Every single-component update is the closed-form minimizer of the objective
in that component with all others fixed, clamped at zero. The residual
``X - sum_{i != j} W_i H_i`` is never formed; the updates only need the
products ``X H^T``, ``H H^T``, ``W^T X`` and ``W^T W``.

Regularized updates use ``alpha`` for the squared l2 penalty and ``beta`` for
the l1 penalty on each factor; setting both gives the elastic net.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParameterError, ShapeError
from .linalg import as_matrix, make_rng, spawn_rngs
from .sketch import SketchOptions, rqb

EPS_DIV = 1e-12
UPDATE_ORDERS = ("grouped", "interleaved", "shuffled")
INIT_SCHEMES = ("random", "svd")
STOP_RULES = ("pgrad", "objective", "none")
DEAD_RESEED_SCALE = 1e-4


@dataclass(frozen=True)
class RegConfig:
    alpha_W: float = 0.0
    alpha_H: float = 0.0
    beta_W: float = 0.0
    beta_H: float = 0.0

    def __post_init__(self):
        for name in ("alpha_W", "alpha_H", "beta_W", "beta_H"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ParameterError(f"{name} must be a finite value >= 0, got {value}")

    @property
    def active(self):
        return any((self.alpha_W, self.alpha_H, self.beta_W, self.beta_H))


@dataclass(frozen=True)
class SolverOptions:
    """Options shared by the deterministic and randomized solvers.

    ``tol`` is the relative projected-gradient threshold when
    ``stop="pgrad"`` and an absolute bound on ``||X - WH||_F^2`` when
    ``stop="objective"``. ``stop="none"`` runs exactly ``max_iter`` sweeps.
    """

    rank: int
    max_iter: int = 200
    tol: float = 1e-4
    init: str = "svd"
    update_order: str = "grouped"
    reg: RegConfig = field(default_factory=RegConfig)
    stop: str = "pgrad"
    seed: int = 0
    reseed_dead: bool = False

    def __post_init__(self):
        if self.rank < 1:
            raise ParameterError(f"rank must be >= 1, got {self.rank}")
        if self.max_iter < 0:
            raise ParameterError(f"max_iter must be >= 0, got {self.max_iter}")
        if not self.tol > 0:
            raise ParameterError(f"tol must be > 0, got {self.tol}")
        if self.init not in INIT_SCHEMES:
            raise ParameterError(f"init must be one of {INIT_SCHEMES}, got {self.init!r}")
        if self.update_order not in UPDATE_ORDERS:
            raise ParameterError(f"update_order must be one of {UPDATE_ORDERS}, got {self.update_order!r}")
        if self.stop not in STOP_RULES:
            raise ParameterError(f"stop must be one of {STOP_RULES}, got {self.stop!r}")

    def check_shape(self, m, n):
        if self.rank > min(m, n):
            raise ParameterError(f"rank {self.rank} exceeds min(m, n) = {min(m, n)}")


@dataclass
class FactorPair:
    W: np.ndarray
    H: np.ndarray

    @property
    def rank(self):
        return self.W.shape[1]

    def reconstruct(self):
        return self.W @ self.H


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    elapsed_s: float
    objective: float
    rel_err: float
    pgrad: float
    # randomized solver only: surrogate objective ||B - W~ H||_F^2 and the
    # full-space projected gradient when it was evaluated
    compressed_objective: float = math.nan
    full_pgrad: float = math.nan


@dataclass
class ConvergenceTrace:
    records: list = field(default_factory=list)
    stop_reason: str = ""

    CSV_HEADER = "iter,elapsed_s,objective,rel_err,pgrad"

    def append(self, record):
        if self.records:
            last = self.records[-1]
            assert record.iteration > last.iteration
            assert record.elapsed_s >= last.elapsed_s
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def iterations(self):
        return self.records[-1].iteration if self.records else 0

    @property
    def final(self):
        return self.records[-1]

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def to_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write(self.CSV_HEADER + "\n")
            for r in self.records:
                fh.write(f"{r.iteration},{r.elapsed_s!r},{r.objective!r},{r.rel_err!r},{r.pgrad!r}\n")


def check_nonnegative(X, name="X"):
    neg = X < 0
    if neg.any():
        i, j = np.argwhere(neg)[0]
        raise DataError(f"{name} contains negative entries at ({i},{j})")


def _nndsvd(U, S, Vt, k):
    """NNDSVD factors from the leading ``k`` singular triplets.

    The first pair is the absolute value of the leading singular vectors.
    For the others, the positive or the negative part of each singular pair
    is kept, whichever carries more mass.
    """
    m, n = U.shape[0], Vt.shape[1]
    W = np.zeros((m, k))
    H = np.zeros((k, n))
    W[:, 0] = math.sqrt(S[0]) * np.abs(U[:, 0])
    H[0] = math.sqrt(S[0]) * np.abs(Vt[0])
    for j in range(1, k):
        x, y = U[:, j], Vt[j]
        xp, yp = np.maximum(x, 0), np.maximum(y, 0)
        xn, yn = np.maximum(-x, 0), np.maximum(-y, 0)
        xp_norm, yp_norm = np.linalg.norm(xp), np.linalg.norm(yp)
        xn_norm, yn_norm = np.linalg.norm(xn), np.linalg.norm(yn)
        mass_p, mass_n = xp_norm * yp_norm, xn_norm * yn_norm
        if mass_p >= mass_n:
            u, v, mass = xp / max(xp_norm, EPS_DIV), yp / max(yp_norm, EPS_DIV), mass_p
        else:
            u, v, mass = xn / max(xn_norm, EPS_DIV), yn / max(yn_norm, EPS_DIV), mass_n
        scale = math.sqrt(S[j] * mass)
        W[:, j] = scale * u
        H[j] = scale * v
    return W, H


def init_factors(X, k, scheme="svd", rng=0):
    """Nonnegative starting factors.

    Parameters
    ----------
    X : array (m, n), nonnegative
    k : int
    scheme : {"random", "svd"}
        ``random`` draws uniform [0, 1) entries scaled by ``sqrt(mean(X)/k)``.
        ``svd`` builds NNDSVD factors from a randomized rank-``k`` SVD and
        replaces exact zeros with ``mean(X)/100``.
    rng : Generator or int
    """
    X = as_matrix(X, "X", finite=True)
    check_nonnegative(X)
    m, n = X.shape
    if not 1 <= k <= min(m, n):
        raise ParameterError(f"rank {k} outside [1, {min(m, n)}]")
    rng = make_rng(rng)
    mean = float(X.mean())

    if scheme == "random":
        scale = math.sqrt(mean / k)
        W = scale * rng.random((m, k))
        H = scale * rng.random((k, n))
        return FactorPair(W, H)
    if scheme != "svd":
        raise ParameterError(f"unknown init scheme {scheme!r}")

    oversample = min(20, m - k)
    sk = rqb(X, SketchOptions(rank=k, oversample=oversample, power_iters=2, test_matrix="uniform"), rng=rng)
    Ub, S, Vt = np.linalg.svd(sk.B, full_matrices=False)
    U = sk.Q @ Ub[:, :k]
    W, H = _nndsvd(U, S[:k], Vt[:k], k)
    fill = mean / 100
    W[W == 0] = fill
    H[H == 0] = fill
    return FactorPair(W, H)


def _w_step(W, j, xht_j, hht_j, alpha, beta):
    """In-place update of column ``j`` of ``W``.

    ``xht_j`` and ``hht_j`` are column ``j`` of ``X H^T`` and ``H H^T``.
    """
    den = max(hht_j[j] + alpha, EPS_DIV)
    col = W[:, j] * (hht_j[j] / den) + (xht_j - beta - W @ hht_j) / den
    np.maximum(col, 0.0, out=W[:, j])


def _h_step(H, j, wtx_j, wtw_j, alpha, beta):
    """In-place update of row ``j`` of ``H``; mirror of :func:`_w_step`."""
    den = max(wtw_j[j] + alpha, EPS_DIV)
    row = H[j] * (wtw_j[j] / den) + (wtx_j - beta - wtw_j @ H) / den
    np.maximum(row, 0.0, out=H[j])


def _check_factors(X, W, H):
    m, n = X.shape
    if W.ndim != 2 or H.ndim != 2 or W.shape[0] != m or H.shape[1] != n or W.shape[1] != H.shape[0]:
        raise ShapeError(f"factors {W.shape} and {H.shape} do not fit X of shape {X.shape}")


def update_W(X, W, H, reg=RegConfig(), order=None):
    """One pass over the columns of ``W``; returns the updated copy."""
    X, W, H = as_matrix(X, "X"), as_matrix(W, "W").copy(), as_matrix(H, "H")
    _check_factors(X, W, H)
    XHt, HHt = X @ H.T, H @ H.T
    for j in range(W.shape[1]) if order is None else order:
        _w_step(W, j, XHt[:, j], HHt[:, j], reg.alpha_W, reg.beta_W)
    return W


def update_H(X, W, H, reg=RegConfig(), order=None):
    """One pass over the rows of ``H``; returns the updated copy."""
    X, W, H = as_matrix(X, "X"), as_matrix(W, "W"), as_matrix(H, "H").copy()
    _check_factors(X, W, H)
    WtX, WtW = W.T @ X, W.T @ W
    for j in range(H.shape[0]) if order is None else order:
        _h_step(H, j, WtX[j], WtW[:, j], reg.alpha_H, reg.beta_H)
    return H


def objective(X, W, H):
    """``||X - W H||_F^2``."""
    R = np.asarray(X, dtype=np.float64) - np.asarray(W) @ np.asarray(H)
    return float(np.vdot(R, R))


def _projected_sq(G, F):
    """Squared norm of ``G`` with entries at ``F == 0`` replaced by ``min(0, G)``."""
    P = np.where(F > 0, G, np.minimum(G, 0.0))
    return float(np.vdot(P, P))


def _pgrad_from_products(W, H, XHt, HHt, WtX, WtW, reg):
    gW = 2.0 * (W @ HHt - XHt + reg.alpha_W * W + reg.beta_W)
    gH = 2.0 * (WtW @ H - WtX + reg.alpha_H * H + reg.beta_H)
    return _projected_sq(gW, W) + _projected_sq(gH, H)


def projected_gradient_norm(X, W, H, reg=None):
    """Squared Frobenius norm of the projected gradient over ``(W, H)``.

    The gradient of ``||X - WH||_F^2`` is ``2(W HH^T - XH^T)`` for ``W`` and
    ``2(W^T W H - W^T X)`` for ``H``. Entries sitting on the boundary (factor
    value zero) only count the negative part of their partial derivative.
    With ``reg`` the gradient of the matching penalized objective is used.
    """
    X, W, H = as_matrix(X, "X"), as_matrix(W, "W"), as_matrix(H, "H")
    _check_factors(X, W, H)
    reg = reg or RegConfig()
    return _pgrad_from_products(W, H, X @ H.T, H @ H.T, W.T @ X, W.T @ W, reg)


def _residual_sq(x_sq, WtX, WtW, H, HHt):
    """``||X - WH||^2`` expanded over Gram products, without forming ``WH``.

    Cancellation limits the absolute accuracy to roughly ``eps * ||X||^2``;
    the solver recomputes the last record exactly.
    """
    return max(x_sq - 2.0 * float(np.vdot(WtX, H)) + float(np.vdot(WtW, HHt)), 0.0)


def _reseed_dead(W, H, rng):
    for j in range(W.shape[1]):
        if not W[:, j].any():
            W[:, j] = DEAD_RESEED_SCALE * rng.random(W.shape[0])
        if not H[j].any():
            H[j] = DEAD_RESEED_SCALE * rng.random(H.shape[1])


def component_order(opts, k, rng):
    if opts.update_order == "shuffled":
        return rng.permutation(k)
    return range(k)


def solver_rngs(seed):
    """Independent streams for (init, sketch, update order, dead reseeding)."""
    return spawn_rngs(seed, 4)


def should_stop(opts, pgrad, pgrad0, obj):
    if opts.stop == "pgrad":
        return pgrad < opts.tol * pgrad0
    if opts.stop == "objective":
        return obj < opts.tol
    return False


def hals_fit(X, opts, init=None):
    """Fit ``X ~= W H`` with deterministic HALS.

    Parameters
    ----------
    X : array (m, n), nonnegative
    opts : SolverOptions
    init : FactorPair, optional
        Starting point; drawn with :func:`init_factors` when omitted.

    Returns
    -------
    factors : FactorPair
    trace : ConvergenceTrace
        One record for the starting point and one per sweep.
    """
    X = as_matrix(X, "X", finite=True)
    check_nonnegative(X)
    m, n = X.shape
    opts.check_shape(m, n)
    k = opts.rank
    reg = opts.reg
    init_rng, _, order_rng, dead_rng = solver_rngs(opts.seed)

    t0 = time.perf_counter()
    if init is None:
        init = init_factors(X, k, opts.init, init_rng)
    W = np.array(init.W, dtype=np.float64, order="C")
    H = np.array(init.H, dtype=np.float64, order="C")
    _check_factors(X, W, H)

    x_sq = float(np.vdot(X, X))
    x_norm = math.sqrt(x_sq)
    XHt, HHt = X @ H.T, H @ H.T
    WtX, WtW = W.T @ X, W.T @ W

    def record(it, obj, pgrad):
        trace.append(
            TraceRecord(
                iteration=it,
                elapsed_s=time.perf_counter() - t0,
                objective=obj,
                rel_err=math.sqrt(obj) / x_norm if x_norm > 0 else 0.0,
                pgrad=pgrad,
            )
        )

    trace = ConvergenceTrace()
    obj = objective(X, W, H)
    pgrad0 = _pgrad_from_products(W, H, XHt, HHt, WtX, WtW, reg)
    record(0, obj, pgrad0)
    trace.stop_reason = "max_iter"

    for it in range(1, opts.max_iter + 1):
        if opts.update_order == "interleaved":
            for j in range(k):
                _w_step(W, j, XHt[:, j], H @ H[j], reg.alpha_W, reg.beta_W)
                WtX[j] = W[:, j] @ X
                _h_step(H, j, WtX[j], W.T @ W[:, j], reg.alpha_H, reg.beta_H)
        else:
            order = component_order(opts, k, order_rng)
            for j in order:
                _w_step(W, j, XHt[:, j], HHt[:, j], reg.alpha_W, reg.beta_W)
            np.matmul(W.T, X, out=WtX)
            WtW = W.T @ W
            for j in order:
                _h_step(H, j, WtX[j], WtW[:, j], reg.alpha_H, reg.beta_H)
        if opts.reseed_dead:
            _reseed_dead(W, H, dead_rng)
            np.matmul(W.T, X, out=WtX)

        # products at the new point; XHt and HHt are reused by the next sweep
        np.matmul(X, H.T, out=XHt)
        HHt = H @ H.T
        WtW = W.T @ W
        obj = _residual_sq(x_sq, WtX, WtW, H, HHt)
        pgrad = _pgrad_from_products(W, H, XHt, HHt, WtX, WtW, reg)
        record(it, obj, pgrad)
        if should_stop(opts, pgrad, pgrad0, obj):
            trace.stop_reason = opts.stop
            break

    last = trace.records[-1]
    if last.iteration > 0:
        obj = objective(X, W, H)
        trace.records[-1] = TraceRecord(
            iteration=last.iteration,
            elapsed_s=time.perf_counter() - t0,
            objective=obj,
            rel_err=math.sqrt(obj) / x_norm if x_norm > 0 else 0.0,
            pgrad=last.pgrad,
        )
    return FactorPair(W, H), trace
