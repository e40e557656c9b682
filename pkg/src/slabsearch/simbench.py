"""Simulation designs, selection metrics, and timing helpers.

Six covariate designs with known sparse truths, spanning independence,
exchangeable and autoregressive correlation, low-rank factor structure,
tight within-group correlation, and a worst-case design where every noise
column is substantially correlated with the signal columns.  Noise variance
is set from the target signal-to-noise ratio: sigma^2 = b'Cov(x)b * (1 -
r2) / r2, using the theoretical covariance (the drawn loadings, for the
factor design).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .posterior import Hyperparams

KINDS = ("iid", "compound_symmetry", "ar1", "factor", "group", "extreme")

_DEFAULT_BETA = {
    "iid": ((0, 0.5), (1, 0.75), (2, 1.0), (3, 1.25), (4, 1.5)),
    "compound_symmetry": tuple((j, 5.0) for j in range(5)),
    "ar1": ((0, 3.0), (3, 1.5), (6, 2.0)),
    "factor": tuple((j, 5.0) for j in range(5)),
    "group": tuple((j, 3.0) for j in range(15)),
    "extreme": tuple((j, 5.0) for j in range(5)),
}


@dataclass(frozen=True)
class DesignSpec:
    """One simulation scenario.

    ``beta`` is a sparse list of (0-based column, value); None picks the
    design's default truth.  ``n_test`` defaults to ``n``.
    """

    kind: str
    n: int
    p: int
    rho: float = 0.6
    n_factors: int = 2
    r_squared: float = 0.9
    beta: tuple | None = None
    n_test: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown design {self.kind!r}; choose from {KINDS}")
        if self.n < 4 or self.p < 1:
            raise ValueError(f"need n >= 4 and p >= 1, got n={self.n}, p={self.p}")
        if not 0 < self.r_squared < 1:
            raise ValueError("r_squared must be in (0, 1)")
        if self.kind in ("compound_symmetry", "ar1") and not 0 <= self.rho < 1:
            raise ValueError("rho must be in [0, 1)")
        if self.n_factors < 1:
            raise ValueError("n_factors must be >= 1")
        beta = self.beta if self.beta is not None else _DEFAULT_BETA[self.kind]
        beta = tuple((int(j), float(b)) for j, b in beta)
        if not beta:
            raise ValueError("truth must have at least one nonzero coefficient")
        js = [j for j, _ in beta]
        if len(set(js)) != len(js) or min(js) < 0 or max(js) >= self.p:
            raise ValueError(f"bad truth support {js} for p={self.p}")
        object.__setattr__(self, "beta", tuple(sorted(beta)))


@dataclass(frozen=True)
class SimData:
    """One generated replicate: train and test splits plus the truth."""

    z_train: np.ndarray
    y_train: np.ndarray
    z_test: np.ndarray
    y_test: np.ndarray
    beta_full: np.ndarray
    support: tuple
    sigma2: float
    loadings: np.ndarray | None = None  # factor design only


def _draw_rows(spec: DesignSpec, m: int, rng: np.random.Generator):
    """m covariate rows under the design; returns (rows, loadings-or-None)."""
    p, rho = spec.p, spec.rho
    if spec.kind == "iid":
        return rng.standard_normal((m, p)), None
    if spec.kind == "compound_symmetry":
        shared = rng.standard_normal((m, 1))
        return math.sqrt(rho) * shared + math.sqrt(1 - rho) * rng.standard_normal((m, p)), None
    if spec.kind == "ar1":
        x = np.empty((m, p))
        prev = rng.standard_normal(m)  # auxiliary column 0, keeps columns stationary
        s = math.sqrt(1 - rho * rho)
        for j in range(p):
            prev = rho * prev + s * rng.standard_normal(m)
            x[:, j] = prev
        return x, None
    if spec.kind == "factor":
        loadings = rng.standard_normal((p, spec.n_factors))
        scores = rng.standard_normal((m, spec.n_factors))
        return scores @ loadings.T + rng.standard_normal((m, p)), loadings
    if spec.kind == "group":
        if p < 15:
            raise ValueError("group design needs p >= 15")
        x = np.empty((m, p))
        latent = rng.standard_normal((m, 3))
        for g in range(3):
            x[:, 5 * g:5 * (g + 1)] = latent[:, [g]] + 0.1 * rng.standard_normal((m, 5))
        if p > 15:
            x[:, 15:] = rng.standard_normal((m, p - 15))
        return x, None
    # extreme: every tail column shares the five signal columns' noise
    if p < 6:
        raise ValueError("extreme design needs p >= 6")
    z = rng.standard_normal((m, p))
    w5 = rng.standard_normal((m, 5))
    x = np.empty((m, p))
    x[:, :5] = (z[:, :5] + w5) / math.sqrt(2)
    x[:, 5:] = (z[:, 5:] + w5.sum(axis=1)[:, None]) / 2.0
    return x, None


def theoretical_cov(spec: DesignSpec, idx, loadings: np.ndarray | None = None) -> np.ndarray:
    """Covariance of the requested columns under the design.

    The factor design's covariance depends on the drawn loadings; pass the
    ``loadings`` from the generated replicate.
    """
    idx = np.asarray(list(idx), dtype=np.int64)
    k = idx.size
    if spec.kind == "iid":
        return np.eye(k)
    if spec.kind == "compound_symmetry":
        return (1 - spec.rho) * np.eye(k) + spec.rho * np.ones((k, k))
    if spec.kind == "ar1":
        return spec.rho ** np.abs(idx[:, None] - idx[None, :])
    if spec.kind == "factor":
        if loadings is None:
            raise ValueError("factor covariance needs the replicate's loadings")
        f = loadings[idx]
        return f @ f.T + np.eye(k)
    if spec.kind == "group":
        cov = np.zeros((k, k))
        for a in range(k):
            for b in range(k):
                i, j = idx[a], idx[b]
                if i == j:
                    cov[a, b] = 1.01 if i < 15 else 1.0
                elif i < 15 and j < 15 and i // 5 == j // 5:
                    cov[a, b] = 1.0
        return cov
    # extreme
    cov = np.empty((k, k))
    for a in range(k):
        for b in range(k):
            i, j = idx[a], idx[b]
            if i == j:
                cov[a, b] = 1.0 if i < 5 else 1.5
            elif i < 5 and j < 5:
                cov[a, b] = 0.0
            elif i >= 5 and j >= 5:
                cov[a, b] = 1.25
            else:
                cov[a, b] = 1.0 / (2.0 * math.sqrt(2.0))
    return cov


def generate(spec: DesignSpec) -> SimData:
    """Draw one replicate: train rows, test rows, responses, and the truth.

    The noise variance is computed from the theoretical covariance of the
    design and the target r_squared, never estimated from the draw.
    """
    rng = np.random.default_rng(spec.seed)
    n_test = spec.n if spec.n_test is None else spec.n_test
    m = spec.n + n_test
    rows, loadings = _draw_rows(spec, m, rng)

    beta_full = np.zeros(spec.p)
    support = tuple(j for j, _ in spec.beta)
    for j, b in spec.beta:
        beta_full[j] = b
    cov = theoretical_cov(spec, support, loadings)
    b = beta_full[list(support)]
    signal_var = float(b @ cov @ b)
    sigma2 = signal_var * (1 - spec.r_squared) / spec.r_squared

    y = rows @ beta_full + math.sqrt(sigma2) * rng.standard_normal(m)
    return SimData(
        z_train=rows[:spec.n], y_train=y[:spec.n],
        z_test=rows[spec.n:], y_test=y[spec.n:],
        beta_full=beta_full, support=support, sigma2=sigma2,
        loadings=loadings,
    )


@dataclass(frozen=True)
class SelectionMetrics:
    mspe: float
    mse_beta: float
    coverage: float
    model_size: int
    fdr: float
    fnr: float
    jaccard: float


def evaluate(selected, beta_hat_full, sim: SimData, intercept: float = 0.0) -> SelectionMetrics:
    """Score a selected model and its coefficient estimate against the truth.

    ``beta_hat_full`` is on the raw covariate scale with zeros off the
    selected set; ``intercept`` completes the original-scale fit used for
    test-set prediction error.
    """
    sel = set(int(j) for j in selected)
    truth = set(sim.support)
    beta_hat_full = np.asarray(beta_hat_full, dtype=np.float64)
    if beta_hat_full.shape != sim.beta_full.shape:
        raise ValueError("beta_hat_full must be a full-length coefficient vector")

    resid = sim.y_test - (intercept + sim.z_test @ beta_hat_full)
    mspe = float(resid @ resid) / sim.y_test.shape[0]
    diff = beta_hat_full - sim.beta_full
    mse_beta = float(diff @ diff) / sim.beta_full.shape[0]
    union = sel | truth
    inter = sel & truth
    return SelectionMetrics(
        mspe=mspe,
        mse_beta=mse_beta,
        coverage=1.0 if truth <= sel else 0.0,
        model_size=len(sel),
        fdr=len(sel - truth) / max(len(sel), 1),
        fnr=len(truth - sel) / len(truth) if truth else 0.0,
        jaccard=len(inter) / len(union) if union else 1.0,
    )


def default_hyperparams(n: int, p: int) -> Hyperparams:
    """The package defaults: prior inclusion sqrt(n)/p, slab precision n/p^2.

    Sensible in the wide regime; raises when sqrt(n)/p reaches 1 (nearly
    square or tall data), where w must be chosen by hand.
    """
    w = math.sqrt(n) / p
    if w >= 1.0:
        raise ValueError(
            f"default prior inclusion sqrt(n)/p = {w:.3g} is not a probability "
            f"at n={n}, p={p}; pass hyperparameters explicitly"
        )
    return Hyperparams(lam=n / p**2, w=w)


def group_alternative_hyperparams() -> Hyperparams:
    """Heavier regularization favored for tightly grouped covariates."""
    return Hyperparams(lam=200.0, w=0.02)


def time_to_map(result) -> float:
    """Seconds until the run first visited or offered its final best score.

    Reads the trace: the elapsed time of the first step whose committed
    score matches the final best within roundoff.  Zero when the best model
    is the empty starting state.
    """
    target = result.map_log_post - 1e-9
    for step in result.trace:
        if step.log_post >= target:
            return step.elapsed
    if not result.trace:
        return 0.0
    # best model was screened but never committed; charge the whole run
    return result.trace[-1].elapsed
