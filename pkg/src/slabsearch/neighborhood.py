"""Scoring every one-move neighbor of a model in a handful of BLAS sweeps.

The neighborhood of a model is every single-column addition, every single
deletion, and every swap (delete one, add one).  Additions are the hot path:
all p candidate scores come out of one triangular solve, one (k x n)(n x p)
product swept over column blocks, and a few length-p vector passes.  The
centered, scaled design matrix is never formed; the sweep multiplies against
the raw matrix and fixes up scaling afterwards, which keeps sparse inputs
sparse (the solve basis has zero-sum rows, so centering drops out).

Deletions are refactorized from scratch; with k small relative to p this is
noise, and it sidesteps the numerics of Cholesky downdating entirely.  Swap
scores reuse the deletion states: row i of the swap table is the addition
scan of the model with its i-th column removed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_triangular

from .dataset import Dataset
from .posterior import (
    EPS_POS_FACTOR,
    Hyperparams,
    ModelState,
    ModelTooLargeError,
    NumericalDegeneracyError,
    score_model,
)

DEFAULT_BLOCK = 4096


@dataclass
class NeighborScores:
    """Scores of every neighbor, with -inf marking invalid moves.

    ``swap[i, j]`` is the model with the i-th included column (insertion
    order) replaced by column j; its diagonal entry ``swap[i, columns[i]]``
    re-adds the removed column and must reproduce ``current``.
    ``deleted_states`` holds the k scored deletion models (None where the
    refactorization degenerated) so that committing a delete or swap move
    costs nothing extra.
    """

    add: np.ndarray
    delete: np.ndarray
    swap: np.ndarray
    current: float
    deleted_states: list


@lru_cache(maxsize=8)
def _pool(workers: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=workers)


def scan_adds(ds: Dataset, hp: Hyperparams, state: ModelState,
              block_size: int = DEFAULT_BLOCK, threads: int = 1) -> np.ndarray:
    """Score every single-column addition to ``state``.

    Returns
    -------
    ndarray, shape (p,)
        Log posterior scores of the p grown models; entries for columns
        already included, or whose addition is numerically collinear or
        drives the residual nonpositive, are -inf (never NaN).

    Notes
    -----
    The sweep over columns runs in blocks of ``block_size`` so peak extra
    memory is O(k * block + p) regardless of p.  Blocks write to disjoint
    output slices, so the result is bitwise identical for any thread count.
    """
    k, n, p = state.size, ds.n, ds.p
    if k + 1 > n - 2:
        raise ModelTooLargeError(f"cannot grow a size-{k} model past n - 2 = {n - 2}")
    lam = hp.lam

    # basis = U^{-T} X': rows are zero-sum, so the sweep can use raw Z
    if k:
        basis = solve_triangular(state.chol, state.x_sub.T, trans="T", lower=False)
    else:
        basis = np.zeros((0, n))

    col_sq = np.empty(p)       # |U^{-T} X' x_j|^2 per candidate
    col_sv = np.empty(p)       # v' U^{-T} X' x_j per candidate

    def sweep(lo: int, hi: int) -> None:
        if k == 0:
            col_sq[lo:hi] = 0.0
            col_sv[lo:hi] = 0.0
            return
        block = basis @ ds.z[:, lo:hi]
        if not isinstance(block, np.ndarray):
            block = np.asarray(block)
        block *= ds.d_inv[lo:hi]
        # centering correction is zero: basis rows sum to zero
        col_sq[lo:hi] = np.einsum("ij,ij->j", block, block)
        col_sv[lo:hi] = state.v @ block

    edges = list(range(0, p, block_size)) + [p]
    spans = list(zip(edges[:-1], edges[1:]))
    if threads > 1 and len(spans) > 1:
        futures = [_pool(threads).submit(sweep, lo, hi) for lo, hi in spans]
        for f in futures:
            f.result()
    else:
        for lo, hi in spans:
            sweep(lo, hi)

    pivot_sq = n + lam - col_sq
    ok = pivot_sq > EPS_POS_FACTOR * (n + lam)
    with np.errstate(invalid="ignore", divide="ignore"):
        pivot = np.sqrt(np.where(ok, pivot_sq, 1.0))
        coef = (ds.zeta - col_sv) / pivot
        rss = state.rss - coef * coef
        ok &= rss > 0
        scores = (0.5 * (k + 1) * np.log(lam)
                  - (state.logdet_u + np.log(pivot))
                  - 0.5 * (n - 1) * np.log(np.where(ok, rss, 1.0))
                  + (k + 1) * hp.log_odds)
    out = np.where(ok, scores, -np.inf)
    if k:
        out[list(state.columns)] = -np.inf
    return out


def scan_deletes(ds: Dataset, hp: Hyperparams, state: ModelState):
    """Score every single-column deletion.

    Returns
    -------
    (ndarray shape (k,), list of ModelState or None)
        Scores follow insertion order of ``state.columns``.  A deletion that
        fails to refactorize (it should not, with lam > 0) scores -inf and
        leaves None in the state list.
    """
    k = state.size
    scores = np.empty(k)
    states = []
    for i in range(k):
        reduced = state.columns[:i] + state.columns[i + 1:]
        try:
            st = score_model(ds, hp, reduced)
            scores[i] = st.log_post
            states.append(st)
        except NumericalDegeneracyError:
            scores[i] = -np.inf
            states.append(None)
    return scores, states


def scan_swaps(ds: Dataset, hp: Hyperparams, state: ModelState, deleted_states,
               block_size: int = DEFAULT_BLOCK, threads: int = 1) -> np.ndarray:
    """Score every swap: row i replaces included column i with column j.

    Row i is the addition scan of ``deleted_states[i]``, so entries at the
    other included columns are -inf and the diagonal entry (re-adding the
    deleted column) reproduces the current score.
    """
    k, p = state.size, ds.p
    swap = np.full((k, p), -np.inf)
    for i, st in enumerate(deleted_states):
        if st is None:
            continue
        swap[i] = scan_adds(ds, hp, st, block_size=block_size, threads=threads)
    return swap


def full_neighborhood(ds: Dataset, hp: Hyperparams, state: ModelState,
                      block_size: int = DEFAULT_BLOCK, threads: int = 1,
                      max_size: int | None = None) -> NeighborScores:
    """Score the complete one-move neighborhood of ``state``.

    ``max_size`` caps growth: when the model is already at the cap, all
    addition scores are -inf, but swaps (which preserve size) stay live.
    """
    k, n, p = state.size, ds.n, ds.p
    cap = n - 2 if max_size is None else min(max_size, n - 2)
    if k < cap:
        add = scan_adds(ds, hp, state, block_size=block_size, threads=threads)
    else:
        add = np.full(p, -np.inf)
    if k:
        delete, deleted_states = scan_deletes(ds, hp, state)
        swap = scan_swaps(ds, hp, state, deleted_states,
                          block_size=block_size, threads=threads)
    else:
        delete = np.zeros(0)
        deleted_states = []
        swap = np.zeros((0, p))
    return NeighborScores(add=add, delete=delete, swap=swap,
                          current=state.log_post, deleted_states=deleted_states)
