"""Exact model scoring for the spike-and-slab Gaussian linear model.

A model is a set of included columns.  With X the standardized inclusion
block (population-SD scaling, so X'X has n on its diagonal), lam the slab
precision, and w the prior inclusion probability, the unnormalized log
posterior score of a model with k columns is

    0.5*k*log(lam) - 0.5*log|A| - 0.5*(n-1)*log(R) + k*log(w/(1-w))

where A = X'X + lam*I and R = |y_tilde|^2 - |v|^2 is the ridge residual sum
of squares, with v = U^{-T} X'y_tilde for the upper Cholesky factor U of A.
Additive constants shared by all models are dropped; only score differences
ever matter.  The empty model scores -0.5*(n-1)*log(|y_tilde|^2).

Growing a model by one column is a rank-one Cholesky extension: O(k^2 + nk)
instead of a fresh O(k^3 + nk^2) factorization, and exactly equivalent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular, LinAlgError

from .dataset import Dataset, standardized_column, standardized_submatrix


class ModelTooLargeError(ValueError):
    """Requested model size exceeds n - 2, where the score is undefined."""


class NearCollinearError(ValueError):
    """Adding the column would make the inclusion block numerically singular."""


class NumericalDegeneracyError(ValueError):
    """A model's Gram matrix or residual collapsed below working precision."""


# A candidate pivot s0^2 below this multiple of (n + lam) means the new
# column is in the numerical span of the current block.
EPS_POS_FACTOR = 1e-10


@dataclass(frozen=True)
class Hyperparams:
    """Slab precision and prior inclusion probability.

    Parameters
    ----------
    lam : float
        Ridge/slab precision, > 0.  Small values mean a diffuse slab.
    w : float
        Prior probability that any given column is included, in (0, 1).
    """

    lam: float
    w: float
    log_odds: float = field(init=False)  # log(w / (1 - w)), cached

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be positive and finite, got {self.lam}")
        if not 0.0 < self.w < 1.0:
            raise ValueError(f"w must be inside (0, 1), got {self.w}")
        object.__setattr__(self, "log_odds", math.log(self.w / (1.0 - self.w)))


@dataclass(frozen=True)
class ModelState:
    """A scored model with the factorization needed to extend it cheaply.

    ``columns`` is the insertion order that ``chol``/``v``/``x_sub`` rows and
    columns follow; ``gamma`` is the same set sorted, the canonical identity
    of the model.
    """

    columns: tuple        # insertion order
    gamma: tuple          # sorted, canonical key
    chol: np.ndarray      # (k, k) upper triangular, A = U'U
    v: np.ndarray         # (k,) U^{-T} X' y_tilde
    x_sub: np.ndarray     # (n, k) standardized inclusion block
    rss: float
    logdet_u: float       # sum(log diag U) = 0.5*log|A|
    log_post: float

    @property
    def size(self) -> int:
        return len(self.columns)


def _log_post(k: int, logdet_u: float, rss: float, hp: Hyperparams, n: int) -> float:
    return (0.5 * k * math.log(hp.lam) - logdet_u
            - 0.5 * (n - 1) * math.log(rss) + k * hp.log_odds)


def score_model(ds: Dataset, hp: Hyperparams, cols) -> ModelState:
    """Score a model from scratch by factorizing its Gram matrix.

    Parameters
    ----------
    cols : iterable of int
        0-based column indices, any order, no repeats.

    Returns
    -------
    ModelState

    Raises
    ------
    ModelTooLargeError
        If more than n - 2 columns are requested.
    NumericalDegeneracyError
        If the regularized Gram matrix fails to factor or the residual sum
        of squares is not positive.
    """
    cols = tuple(int(j) for j in cols)
    if len(set(cols)) != len(cols):
        raise ValueError(f"repeated column in model: {cols}")
    for j in cols:
        if not 0 <= j < ds.p:
            raise IndexError(f"column {j} out of range for p={ds.p}")
    cols = tuple(sorted(cols))
    k, n = len(cols), ds.n
    if k > n - 2:
        raise ModelTooLargeError(f"model size {k} exceeds n - 2 = {n - 2}")

    if k == 0:
        if ds.yty <= 0:
            raise NumericalDegeneracyError("response is constant; nothing to fit")
        empty = np.zeros((0, 0))
        return ModelState(
            columns=(), gamma=(), chol=empty, v=np.zeros(0),
            x_sub=np.zeros((n, 0)), rss=ds.yty, logdet_u=0.0,
            log_post=_log_post(0, 0.0, ds.yty, hp, n),
        )

    x_sub = standardized_submatrix(ds, cols)
    a = x_sub.T @ x_sub
    a[np.diag_indices_from(a)] += hp.lam
    try:
        u = cholesky(a, lower=False)
    except LinAlgError:
        raise NumericalDegeneracyError(
            f"Gram matrix of model {tuple(c + 1 for c in cols)} is not positive definite"
        ) from None
    v = solve_triangular(u, x_sub.T @ ds.y_tilde, trans="T", lower=False)
    rss = ds.yty - float(v @ v)
    if rss <= 0:
        raise NumericalDegeneracyError(
            f"model {tuple(c + 1 for c in cols)} interpolates the response (rss={rss:.3g})"
        )
    logdet_u = float(np.sum(np.log(np.diag(u))))
    return ModelState(
        columns=cols, gamma=cols, chol=u, v=v, x_sub=x_sub, rss=rss,
        logdet_u=logdet_u, log_post=_log_post(k, logdet_u, rss, hp, n),
    )


def extend_add(ds: Dataset, hp: Hyperparams, state: ModelState, j: int) -> ModelState:
    """Add one column to a scored model via a rank-one Cholesky extension.

    Equivalent to ``score_model`` on the enlarged set up to roundoff, at
    O(k^2 + nk) cost.  The new column goes last in insertion order.

    Raises
    ------
    NearCollinearError
        If the column lies in the numerical span of the current block.
    ModelTooLargeError
        If the grown model would exceed n - 2 columns.
    """
    if j in state.gamma:
        raise ValueError(f"column {j} already in model {state.gamma}")
    if not 0 <= j < ds.p:
        raise IndexError(f"column {j} out of range for p={ds.p}")
    k, n = state.size, ds.n
    if k + 1 > n - 2:
        raise ModelTooLargeError(f"model size {k + 1} exceeds n - 2 = {n - 2}")

    x_j = standardized_column(ds, j)
    if k:
        s = solve_triangular(state.chol, state.x_sub.T @ x_j, trans="T", lower=False)
        s0_sq = n + hp.lam - float(s @ s)
        stv = float(s @ state.v)
    else:
        s = np.zeros(0)
        s0_sq = n + hp.lam
        stv = 0.0
    if s0_sq <= EPS_POS_FACTOR * (n + hp.lam):
        raise NearCollinearError(
            f"column {j + 1} is numerically collinear with model "
            f"{tuple(c + 1 for c in state.columns)} (pivot {s0_sq:.3g})"
        )
    s0 = math.sqrt(s0_sq)
    u_new = (ds.zeta[j] - stv) / s0
    rss = state.rss - u_new * u_new
    if rss <= 0:
        raise NumericalDegeneracyError(
            f"adding column {j + 1} drives the residual to {rss:.3g}"
        )

    chol = np.zeros((k + 1, k + 1))
    chol[:k, :k] = state.chol
    chol[:k, k] = s
    chol[k, k] = s0
    v = np.append(state.v, u_new)
    x_sub = np.asfortranarray(np.concatenate([state.x_sub, x_j[:, None]], axis=1))
    logdet_u = state.logdet_u + math.log(s0)
    columns = state.columns + (j,)
    return ModelState(
        columns=columns, gamma=tuple(sorted(columns)), chol=chol, v=v,
        x_sub=x_sub, rss=rss, logdet_u=logdet_u,
        log_post=_log_post(k + 1, logdet_u, rss, hp, n),
    )


def log_post_of(state: ModelState) -> float:
    """The model's unnormalized log posterior score."""
    return state.log_post
