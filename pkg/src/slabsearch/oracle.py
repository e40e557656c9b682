"""Brute-force reference implementations, kept deliberately independent.

Nothing here touches the Cholesky kernel, the incremental updates, or the
Dataset precomputes: scores are recomputed from raw arrays with full dense
factorizations (slogdet and a direct solve), and search is plain
enumeration.  Slow on purpose; the tests use this module as ground truth
for the fast paths, so sharing code would defeat the point.  Practical only
for a couple of dozen columns.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np


def _standardize(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    sd = z.std(axis=0)  # population convention, divisor n
    if np.any(sd == 0):
        raise ValueError("constant column")
    return (z - z.mean(axis=0)) / sd


def dense_score(z, y, cols, lam: float, w: float) -> float:
    """Log posterior score of one model, computed the slow dense way."""
    if hasattr(z, "toarray"):
        z = z.toarray()
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.shape[0]
    yt = y - y.mean()
    yty = float(yt @ yt)
    cols = tuple(sorted(int(c) for c in cols))
    k = len(cols)
    log_odds = math.log(w / (1.0 - w))
    if k == 0:
        return -0.5 * (n - 1) * math.log(yty)
    x = _standardize(z)[:, list(cols)]
    a = x.T @ x + lam * np.eye(k)
    sign, logdet = np.linalg.slogdet(a)
    if sign <= 0:
        raise ValueError(f"indefinite Gram matrix for {cols}")
    proj = x.T @ yt
    rss = yty - float(proj @ np.linalg.solve(a, proj))
    return (0.5 * k * math.log(lam) - 0.5 * logdet
            - 0.5 * (n - 1) * math.log(rss) + k * log_odds)


def enumerate_scores(z, y, lam: float, w: float, max_size: int) -> dict:
    """Score every model up to ``max_size`` columns.  Exponential; keep p small."""
    if hasattr(z, "toarray"):
        z = z.toarray()
    z = np.asarray(z, dtype=np.float64)
    p = z.shape[1]
    table = {(): dense_score(z, y, (), lam, w)}
    for k in range(1, max_size + 1):
        for cols in combinations(range(p), k):
            table[cols] = dense_score(z, y, cols, lam, w)
    return table


def exhaustive_map(z, y, lam: float, w: float, max_size: int):
    """The true best model by enumeration: (model, score, full score table)."""
    table = enumerate_scores(z, y, lam, w, max_size)
    best = max(table.items(), key=lambda kv: (kv[1], [-c for c in kv[0]]))
    return best[0], best[1], table


def median_probability_model(table: dict, p: int, log_keep_gap: float | None = None):
    """Exact inclusion probabilities over an enumerated score table.

    Normalizes the scores into posterior weights (optionally after dropping
    models trailing the best by more than ``log_keep_gap``) and accumulates
    per-column mass.  Returns (probabilities, model of columns above 1/2).
    """
    items = list(table.items())
    best = max(s for _, s in items)
    if log_keep_gap is not None:
        items = [(m, s) for m, s in items if s - best > log_keep_gap]
    wts = np.exp(np.array([s for _, s in items]) - best)
    wts /= wts.sum()
    pi = np.zeros(p)
    for (model, _), wt in zip(items, wts):
        for j in model:
            pi[j] += wt
    return pi, tuple(int(j) for j in np.flatnonzero(pi > 0.5))
