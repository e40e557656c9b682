"""Posterior prediction: point estimates and interval constructions.

Fitted models live on the standardized scale; everything here maps them
back to the raw covariate scale of the caller's rows.  Two interval routes
are provided on purpose and are not interchangeable: a closed-form normal
approximation built from the exact predictive mean and variance of the
model mixture, and a Monte Carlo route that samples the posterior of each
retained model (noise variance, slopes, intercept) and reads off empirical
quantiles.  Agreement between the two is a useful diagnostic; the tests
lean on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtri

from .dataset import Dataset
from .posterior import ModelState


@dataclass(frozen=True)
class _PModel:
    """Per-model state sufficient for prediction, detached from the Dataset."""

    cols: tuple
    u: np.ndarray       # (k, k) upper Cholesky of the regularized Gram matrix
    v: np.ndarray       # (k,)
    rss: float
    z_bar: np.ndarray   # training means of the included columns
    d_inv: np.ndarray   # training inverse scales of the included columns
    weight: float


def _pmodel(ds: Dataset, state: ModelState, weight: float) -> _PModel:
    cols = state.columns
    idx = list(cols)
    return _PModel(cols=cols, u=state.chol, v=state.v, rss=state.rss,
                   z_bar=ds.z_bar[idx], d_inv=ds.d_inv[idx], weight=weight)


def ridge_coefficients(ds: Dataset, state: ModelState):
    """Original-scale fit of one model.

    Returns
    -------
    (float, ndarray, ndarray)
        Intercept, slopes on the raw covariate scale (aligned with
        ``state.columns``), and slopes on the standardized scale.
    """
    k = state.size
    if k == 0:
        return ds.y_bar, np.zeros(0), np.zeros(0)
    beta_std = solve_triangular(state.chol, state.v, lower=False)
    idx = list(state.columns)
    mu = ds.d_inv[idx] * beta_std
    mu0 = ds.y_bar - float(ds.z_bar[idx] @ mu)
    return mu0, mu, beta_std


def _mean_terms(pm: _PModel, z_rows: np.ndarray) -> np.ndarray:
    """Centered predictive mean contribution of one model, per row."""
    if len(pm.cols) == 0:
        return np.zeros(z_rows.shape[0])
    zt = z_rows[:, list(pm.cols)] - pm.z_bar
    mu = pm.d_inv * solve_triangular(pm.u, pm.v, lower=False)
    return zt @ mu


def _quad_terms(pm: _PModel, z_rows: np.ndarray) -> np.ndarray:
    """Leverage q = x'(X'X + lam I)^{-1} x of each row under one model."""
    if len(pm.cols) == 0:
        return np.zeros(z_rows.shape[0])
    zt = (z_rows[:, list(pm.cols)] - pm.z_bar) * pm.d_inv
    sol = solve_triangular(pm.u, zt.T, trans="T", lower=False)
    return np.einsum("ij,ij->j", sol, sol)


def model_mean_term(ds: Dataset, state: ModelState, z_row) -> float:
    """Centered predictive mean of one model at one raw covariate row.

    The full predictive mean is ``ds.y_bar`` plus this; the empty model
    contributes exactly zero, as does any row equal to the training means.
    """
    z_row = np.asarray(z_row, dtype=np.float64).reshape(1, -1)
    return float(_mean_terms(_pmodel(ds, state, 1.0), z_row)[0])


def model_quad_term(ds: Dataset, state: ModelState, z_row) -> float:
    """Predictive-variance leverage of one model at one raw covariate row."""
    if ds.n <= 3:
        raise ValueError("predictive variance needs n > 3")
    z_row = np.asarray(z_row, dtype=np.float64).reshape(1, -1)
    return float(_quad_terms(_pmodel(ds, state, 1.0), z_row)[0])


class PredictiveEnsemble:
    """A weighted set of fitted models, self-contained for prediction.

    Carries everything interval construction needs (per-model Cholesky
    state plus training column statistics), so it can be serialized into a
    fit result and used later without the training data.
    """

    def __init__(self, n: int, y_bar: float, models):
        if n <= 3:
            raise ValueError("predictive intervals need n > 3")
        if not models:
            raise ValueError("ensemble needs at least one model")
        total = sum(pm.weight for pm in models)
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-8):
            raise ValueError(f"weights must sum to one, got {total}")
        self.n = n
        self.y_bar = y_bar
        self.models = list(models)

    @classmethod
    def from_states(cls, ds: Dataset, weighted) -> "PredictiveEnsemble":
        """Build from (ModelState, weight) pairs against their Dataset."""
        return cls(ds.n, ds.y_bar, [_pmodel(ds, st, wt) for st, wt in weighted])

    # -- serialization (lists only, JSON-ready) --

    def to_jsonable(self) -> dict:
        models = []
        for pm in self.models:
            models.append({
                "columns": [int(c) + 1 for c in pm.cols],
                "weight": float(pm.weight),
                "rss": float(pm.rss),
                "chol": [[float(x) for x in row] for row in pm.u],
                "v": [float(x) for x in pm.v],
                "z_bar": [float(x) for x in pm.z_bar],
                "d_inv": [float(x) for x in pm.d_inv],
            })
        return {"n": int(self.n), "y_bar": float(self.y_bar), "models": models}

    @classmethod
    def from_jsonable(cls, d: dict) -> "PredictiveEnsemble":
        models = []
        for m in d["models"]:
            k = len(m["columns"])
            models.append(_PModel(
                cols=tuple(int(c) - 1 for c in m["columns"]),
                u=np.array(m["chol"], dtype=np.float64).reshape(k, k),
                v=np.array(m["v"], dtype=np.float64),
                rss=float(m["rss"]),
                z_bar=np.array(m["z_bar"], dtype=np.float64),
                d_inv=np.array(m["d_inv"], dtype=np.float64),
                weight=float(m["weight"]),
            ))
        return cls(int(d["n"]), float(d["y_bar"]), models)

    # -- closed-form route --

    def z_interval(self, z_rows, alpha: float = 0.05) -> dict:
        """Normal-approximation prediction intervals for each row.

        Mixture mean and variance are exact (within-model predictive
        variance plus between-model spread of the means); the interval is
        mean plus/minus the normal quantile times the mixture SD.

        Returns a dict of (L,) arrays: mean, variance, lo, hi.
        """
        if not 0 < alpha < 1:
            raise ValueError(f"alpha must be in (0, 1), got {alpha}")
        z_rows = np.atleast_2d(np.asarray(z_rows, dtype=np.float64))
        L = z_rows.shape[0]
        mix_mean = np.zeros(L)
        within = np.zeros(L)
        second = np.zeros(L)
        n = self.n
        for pm in self.models:
            m = _mean_terms(pm, z_rows)
            q = _quad_terms(pm, z_rows)
            mix_mean += pm.weight * m
            within += pm.weight * (pm.rss / (n - 3)) * (1.0 + 1.0 / n + q)
            second += pm.weight * m * m
        variance = within + second - mix_mean**2
        variance = np.maximum(variance, 0.0)  # roundoff guard on the spread
        mean = self.y_bar + mix_mean
        half = ndtri(1.0 - alpha / 2.0) * np.sqrt(variance)
        return {"mean": mean, "variance": variance,
                "lo": mean - half, "hi": mean + half}

    # -- Monte Carlo route --

    def mc_interval(self, z_rows, n_mc: int = 1000, alpha: float = 0.05,
                    rng: np.random.Generator | None = None,
                    return_samples: bool = False) -> dict:
        """Posterior-sampled prediction intervals for each row.

        Replicates are allocated to models by a multinomial draw on the
        weights; each replicate samples the model's noise variance, slopes,
        and intercept, then one response draw per row.  Quantiles are
        empirical with linear interpolation.

        Returns a dict of (L,) arrays lo, hi (plus the (L, n_mc) samples
        when asked).
        """
        if not 0 < alpha < 1:
            raise ValueError(f"alpha must be in (0, 1), got {alpha}")
        if n_mc < 2:
            raise ValueError("need at least two replicates")
        if rng is None:
            rng = np.random.default_rng()
        z_rows = np.atleast_2d(np.asarray(z_rows, dtype=np.float64))
        L = z_rows.shape[0]
        counts = rng.multinomial(n_mc, [pm.weight for pm in self.models])
        samples = np.empty((L, n_mc))
        pos = 0
        for pm, cnt in zip(self.models, counts):
            if cnt == 0:
                continue
            sigma, mu_g, mu0 = _draw_model_params(rng, pm, self.n, self.y_bar, cnt)
            mean = mu0[None, :]
            if len(pm.cols):
                mean = mean + z_rows[:, list(pm.cols)] @ mu_g
            samples[:, pos:pos + cnt] = mean + rng.standard_normal((L, cnt)) * sigma
            pos += cnt
        lo = np.quantile(samples, alpha / 2.0, axis=1)
        hi = np.quantile(samples, 1.0 - alpha / 2.0, axis=1)
        out = {"lo": lo, "hi": hi}
        if return_samples:
            out["samples"] = samples
        return out


def sample_sigma2(rng: np.random.Generator, n: int, rss: float, size: int) -> np.ndarray:
    """Draw noise variances from the model's inverse-gamma posterior.

    Reciprocal of Gamma(shape=(n-1)/2, scale=2/rss) draws; the posterior
    mean is rss/(n-3) for n > 3.
    """
    if rss <= 0:
        raise ValueError("rss must be positive")
    return 1.0 / rng.gamma(shape=(n - 1) / 2.0, scale=2.0 / rss, size=size)


def _draw_model_params(rng, pm: _PModel, n: int, y_bar: float, size: int):
    """Posterior draws of (noise SD, raw-scale slopes, raw-scale intercept).

    Slopes come from perturbing the triangular solve right-hand side, which
    is exactly a normal with the ridge posterior covariance; the intercept
    conditions on the slopes through the training column means.
    """
    k = len(pm.cols)
    sigma = np.sqrt(sample_sigma2(rng, n, pm.rss, size))
    if k:
        e = rng.standard_normal((k, size)) * sigma
        mu_g = pm.d_inv[:, None] * solve_triangular(pm.u, pm.v[:, None] + e, lower=False)
        center = y_bar - pm.z_bar @ mu_g
    else:
        mu_g = np.zeros((0, size))
        center = np.full(size, y_bar)
    mu0 = center + rng.standard_normal(size) * sigma / math.sqrt(n)
    return sigma, mu_g, mu0


def z_prediction_interval(ds: Dataset, weighted, z_rows, alpha: float = 0.05) -> dict:
    """Closed-form intervals from (ModelState, weight) pairs.

    Convenience wrapper over :class:`PredictiveEnsemble`; see
    ``PredictiveEnsemble.z_interval``.
    """
    return PredictiveEnsemble.from_states(ds, weighted).z_interval(z_rows, alpha)


def mc_predict(ds: Dataset, weighted, z_rows, n_mc: int = 1000,
               alpha: float = 0.05, rng: np.random.Generator | None = None,
               return_samples: bool = False) -> dict:
    """Monte Carlo intervals from (ModelState, weight) pairs.

    Convenience wrapper over ``PredictiveEnsemble.mc_interval``.
    """
    ens = PredictiveEnsemble.from_states(ds, weighted)
    return ens.mc_interval(z_rows, n_mc=n_mc, alpha=alpha, rng=rng,
                           return_samples=return_samples)
