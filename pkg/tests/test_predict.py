"""Prediction: coefficient back-transform, interval math, and MC sampling."""

import json
import math

import numpy as np
import pytest

from slabsearch import (
    Dataset,
    Hyperparams,
    PredictiveEnsemble,
    mc_predict,
    model_mean_term,
    model_quad_term,
    ridge_coefficients,
    sample_sigma2,
    score_model,
    standardized_submatrix,
    z_prediction_interval,
)

from helpers import random_dataset

HP = Hyperparams(lam=0.8, w=0.1)
Z975 = 1.959963984540054  # standard normal 97.5% point


def _dense_reference(ds, cols, z_row, lam):
    """Mean and leverage of one model, by direct dense ridge algebra."""
    x = standardized_submatrix(ds, cols)
    a = x.T @ x + lam * np.eye(len(cols))
    xs = (np.asarray(z_row)[list(cols)] - ds.z_bar[list(cols)]) * ds.d_inv[list(cols)]
    mean = float(xs @ np.linalg.solve(a, x.T @ ds.y_tilde))
    quad = float(xs @ np.linalg.solve(a, xs))
    return mean, quad


def test_mean_and_quad_terms_match_dense_algebra():
    ds, z, _ = random_dataset(40, n=50, p=8, support=(1, 6), beta=(2.0, -1.0))
    st = score_model(ds, HP, (1, 4, 6))
    rng = np.random.default_rng(0)
    for _ in range(5):
        row = rng.standard_normal(8)
        want_m, want_q = _dense_reference(ds, st.columns, row, HP.lam)
        assert model_mean_term(ds, st, row) == pytest.approx(want_m, abs=1e-10)
        assert model_quad_term(ds, st, row) == pytest.approx(want_q, abs=1e-10)


def test_empty_model_contributes_nothing():
    ds, _, _ = random_dataset(41, n=30, p=5)
    st = score_model(ds, HP, ())
    row = np.ones(5)
    assert model_mean_term(ds, st, row) == 0.0
    assert model_quad_term(ds, st, row) == 0.0


def test_prediction_at_training_center_is_the_response_mean():
    ds, z, _ = random_dataset(42, n=40, p=6, support=(0,), beta=(2.0,))
    st = score_model(ds, HP, (0, 3))
    center = z.mean(axis=0)
    assert model_mean_term(ds, st, center) == 0.0
    out = z_prediction_interval(ds, [(st, 1.0)], center[None, :])
    assert out["mean"][0] == ds.y_bar


def test_single_model_interval_closed_form():
    ds, z, _ = random_dataset(43, n=60, p=7, support=(2,), beta=(3.0,))
    st = score_model(ds, HP, (2, 5))
    row = z[7] * 1.3 + 0.2
    out = z_prediction_interval(ds, [(st, 1.0)], row[None, :], alpha=0.05)
    n = ds.n
    q = model_quad_term(ds, st, row)
    want_var = (st.rss / (n - 3)) * (1.0 + 1.0 / n + q)
    want_mean = ds.y_bar + model_mean_term(ds, st, row)
    assert out["variance"][0] == pytest.approx(want_var, abs=1e-10)
    assert out["mean"][0] == pytest.approx(want_mean, abs=1e-10)
    half = Z975 * math.sqrt(want_var)
    assert out["lo"][0] == pytest.approx(want_mean - half, abs=1e-9)
    assert out["hi"][0] == pytest.approx(want_mean + half, abs=1e-9)


def test_mixture_variance_combines_within_and_between():
    ds, z, _ = random_dataset(44, n=50, p=6, support=(1,), beta=(2.0,))
    a = score_model(ds, HP, (1,))
    b = score_model(ds, HP, (1, 4))
    wts = (0.7, 0.3)
    row = z[3] + 0.5
    out = z_prediction_interval(ds, list(zip((a, b), wts)), row[None, :])
    n = ds.n
    means = [model_mean_term(ds, st, row) for st in (a, b)]
    within = sum(w * (st.rss / (n - 3)) * (1 + 1 / n + model_quad_term(ds, st, row))
                 for st, w in zip((a, b), wts))
    mbar = sum(w * m for m, w in zip(means, wts))
    between = sum(w * m * m for m, w in zip(means, wts)) - mbar**2
    assert out["mean"][0] == pytest.approx(ds.y_bar + mbar, abs=1e-10)
    assert out["variance"][0] == pytest.approx(within + between, abs=1e-10)


def test_ridge_coefficients_recover_a_noiseless_line():
    rng = np.random.default_rng(45)
    z = rng.standard_normal((80, 4)) * np.array([2.0, 0.5, 1.0, 3.0]) + 1.0
    y = 2.0 + 3.0 * z[:, 1]
    ds = Dataset.from_arrays(z, y)
    hp = Hyperparams(lam=1e-8, w=0.5)
    mu0, mu, beta_std = ridge_coefficients(ds, score_model(ds, hp, (1,)))
    assert mu[0] == pytest.approx(3.0, abs=1e-6)
    assert mu0 == pytest.approx(2.0, abs=1e-6)
    assert beta_std[0] == pytest.approx(3.0 / ds.d_inv[1], abs=1e-5)


def test_ridge_coefficients_empty_model():
    ds, _, _ = random_dataset(46, n=20, p=3)
    mu0, mu, beta_std = ridge_coefficients(ds, score_model(ds, HP, ()))
    assert mu0 == ds.y_bar
    assert mu.shape == (0,) and beta_std.shape == (0,)


def test_covariate_units_do_not_change_predictions():
    _, z, y = random_dataset(47, n=40, p=5, support=(2,), beta=(2.0,))
    rows = z[:4] * 0.9 + 0.1
    z2 = z.copy()
    z2[:, 2] = 50.0 * z2[:, 2] - 7.0
    rows2 = rows.copy()
    rows2[:, 2] = 50.0 * rows2[:, 2] - 7.0
    ds_a, ds_b = Dataset.from_arrays(z, y), Dataset.from_arrays(z2, y)
    out_a = z_prediction_interval(ds_a, [(score_model(ds_a, HP, (1, 2)), 1.0)], rows)
    out_b = z_prediction_interval(ds_b, [(score_model(ds_b, HP, (1, 2)), 1.0)], rows2)
    for key in ("mean", "variance", "lo", "hi"):
        np.testing.assert_allclose(out_a[key], out_b[key], rtol=0, atol=1e-9)


def test_ensemble_validation():
    ds, _, _ = random_dataset(48, n=30, p=4)
    st = score_model(ds, HP, (0,))
    with pytest.raises(ValueError):
        PredictiveEnsemble.from_states(ds, [])
    with pytest.raises(ValueError):
        PredictiveEnsemble.from_states(ds, [(st, 0.7)])  # weights must sum to 1
    ens = PredictiveEnsemble.from_states(ds, [(st, 1.0)])
    with pytest.raises(ValueError):
        ens.z_interval(np.zeros((1, 4)), alpha=0.0)
    with pytest.raises(ValueError):
        ens.mc_interval(np.zeros((1, 4)), n_mc=1)


def test_small_n_is_rejected():
    rng = np.random.default_rng(49)
    ds = Dataset.from_arrays(rng.standard_normal((3, 2)), rng.standard_normal(3))
    st = score_model(ds, Hyperparams(lam=1.0, w=0.5), (0,))
    with pytest.raises(ValueError):
        model_quad_term(ds, st, np.zeros(2))
    with pytest.raises(ValueError):
        PredictiveEnsemble.from_states(ds, [(st, 1.0)])


def test_sigma2_posterior_mean():
    rng = np.random.default_rng(50)
    draws = sample_sigma2(rng, n=25, rss=10.0, size=100_000)
    assert abs(draws.mean() / (10.0 / 22) - 1.0) < 0.02
    assert np.all(draws > 0)
    with pytest.raises(ValueError):
        sample_sigma2(rng, n=25, rss=0.0, size=4)


def test_mc_empty_model_centers_on_the_response_mean():
    ds, _, _ = random_dataset(51, n=50, p=3)
    st = score_model(ds, HP, ())
    rng = np.random.default_rng(8)
    out = mc_predict(ds, [(st, 1.0)], np.zeros((1, 3)), n_mc=40_000, rng=rng,
                     return_samples=True)
    sd = out["samples"].std()
    assert out["samples"].mean() == pytest.approx(ds.y_bar, abs=3 * sd / 200)
    assert out["lo"][0] < ds.y_bar < out["hi"][0]


def test_mc_and_closed_form_agree():
    ds, z, _ = random_dataset(52, n=200, p=6, support=(0, 3), beta=(2.0, -1.5))
    st = score_model(ds, HP, (0, 3))
    rows = z[:3] * 1.1
    zi = z_prediction_interval(ds, [(st, 1.0)], rows)
    mc = mc_predict(ds, [(st, 1.0)], rows, n_mc=100_000,
                    rng=np.random.default_rng(9))
    half = (zi["hi"] - zi["lo"]) / 2
    assert np.all(np.abs(mc["lo"] - zi["lo"]) / half < 0.05)
    assert np.all(np.abs(mc["hi"] - zi["hi"]) / half < 0.05)


def test_mc_quantiles_are_linear_interpolation():
    ds, z, _ = random_dataset(53, n=40, p=4, support=(1,), beta=(2.0,))
    st = score_model(ds, HP, (1,))
    out = mc_predict(ds, [(st, 1.0)], z[:2], n_mc=999, alpha=0.1,
                     rng=np.random.default_rng(10), return_samples=True)
    np.testing.assert_array_equal(out["lo"], np.quantile(out["samples"], 0.05, axis=1))
    np.testing.assert_array_equal(out["hi"], np.quantile(out["samples"], 0.95, axis=1))


def test_mc_multimodel_split_is_seeded_and_reproducible():
    ds, z, _ = random_dataset(54, n=60, p=5, support=(0,), beta=(2.5,))
    pairs = [(score_model(ds, HP, (0,)), 0.8), (score_model(ds, HP, (0, 2)), 0.2)]
    a = mc_predict(ds, pairs, z[:2], n_mc=5000, rng=np.random.default_rng(11))
    b = mc_predict(ds, pairs, z[:2], n_mc=5000, rng=np.random.default_rng(11))
    np.testing.assert_array_equal(a["lo"], b["lo"])
    np.testing.assert_array_equal(a["hi"], b["hi"])


def test_ensemble_json_roundtrip_is_exact():
    ds, z, _ = random_dataset(55, n=50, p=6, support=(2,), beta=(2.0,))
    pairs = [(score_model(ds, HP, (2,)), 0.6), (score_model(ds, HP, (2, 4)), 0.4)]
    ens = PredictiveEnsemble.from_states(ds, pairs)
    blob = json.dumps(ens.to_jsonable(), sort_keys=True)
    back = PredictiveEnsemble.from_jsonable(json.loads(blob))
    rows = z[:5] - 0.3
    a, b = ens.z_interval(rows), back.z_interval(rows)
    for key in ("mean", "variance", "lo", "hi"):
        np.testing.assert_array_equal(a[key], b[key])
    ma = ens.mc_interval(rows, n_mc=2000, rng=np.random.default_rng(12))
    mb = back.mc_interval(rows, n_mc=2000, rng=np.random.default_rng(12))
    np.testing.assert_array_equal(ma["lo"], mb["lo"])
    # serialized columns are 1-based on the wire
    doc = ens.to_jsonable()
    assert doc["models"][0]["columns"] == [3]
