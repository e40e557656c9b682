"""Tempered shotgun search: ladder, screening, sampling, and full runs."""

import math

import numpy as np
import pytest

from slabsearch import (
    EmptyNeighborhoodError,
    Hyperparams,
    NeighborScores,
    SearchConfig,
    TopModels,
    full_neighborhood,
    oracle,
    run_search,
    score_model,
    screen,
    shotgun_sample,
    temperature_schedule,
    top_k_weights,
    wam,
)

from helpers import random_dataset


# ---------------------------------------------------------------- ladder

def test_temperature_schedule_frozen_values():
    np.testing.assert_allclose(
        temperature_schedule(20000, 3),
        [1.0, 6.598187262837643, 12.196374525675285], rtol=0, atol=1e-12)
    np.testing.assert_allclose(
        temperature_schedule(3, 2), [1.0, 1.192660116284809], rtol=0, atol=1e-12)


def test_temperature_schedule_shape_and_bounds():
    t = temperature_schedule(100, 5)
    assert t.shape == (5,)
    assert t[0] == 1.0
    assert t[-1] == pytest.approx(math.log(100) + math.log(math.log(100)), abs=1e-12)
    assert np.all(np.diff(t) > 0)
    assert list(temperature_schedule(50, 1)) == [1.0]
    with pytest.raises(ValueError):
        temperature_schedule(2, 3)
    with pytest.raises(ValueError):
        temperature_schedule(100, 0)


# ------------------------------------------------------------- screening

def _nbd(add, delete=(), swap=None, current=0.0):
    add = np.asarray(add, dtype=np.float64)
    delete = np.asarray(delete, dtype=np.float64)
    if swap is None:
        swap = np.zeros((len(delete), len(add)))
    return NeighborScores(add=add, delete=delete, swap=np.asarray(swap, float),
                          current=current, deleted_states=[None] * len(delete))


def test_screen_strict_gap():
    got = screen(_nbd([0.0, -1.0, -5.0, -7.0]), (), cap=20, screen_log_gap=-6.0)
    assert got == [(("add", 0), 0.0), (("add", 1), -1.0), (("add", 2), -5.0)]
    # the boundary score best + gap itself does not survive
    got = screen(_nbd([0.0, -6.0]), (), cap=20, screen_log_gap=-6.0)
    assert got == [(("add", 0), 0.0)]


def test_screen_cap_breaks_ties_by_enumeration_order():
    got = screen(_nbd([1.0] * 25), (), cap=20, screen_log_gap=-6.0)
    assert [m[1] for m, _ in got] == list(range(20))


def test_screen_orders_kinds_on_ties():
    # equal scores resolve adds first, then deletes, then swaps row-major
    nbd = _nbd(add=[2.0, -np.inf], delete=[2.0], swap=[[-np.inf, 2.0]])
    got = screen(nbd, (0,), cap=10, screen_log_gap=-6.0)
    assert [m for m, _ in got] == [("add", 0), ("del", 0), ("swap", 0, 1)]


def test_screen_never_offers_the_current_model():
    # the swap diagonal scores exactly the current model and must be skipped
    # even when it beats every genuine move
    ds, _, _ = random_dataset(21, n=60, p=10, support=(0, 1), beta=(3.0, 3.0))
    hp = Hyperparams(lam=1.0, w=0.05)
    st = score_model(ds, hp, (0, 1))
    nbd = full_neighborhood(ds, hp, st)
    assert nbd.swap.max() == pytest.approx(st.log_post, abs=1e-9)
    for move, _ in screen(nbd, st.columns, cap=50, screen_log_gap=-1e9):
        if move[0] == "swap":
            assert move[2] != st.columns[move[1]]


def test_screen_raises_when_nothing_is_finite():
    with pytest.raises(EmptyNeighborhoodError):
        screen(_nbd([-np.inf, -np.inf]), (), cap=5, screen_log_gap=-6.0)


# -------------------------------------------------------------- sampling

def test_shotgun_probabilities():
    rng = np.random.default_rng(0)
    screened = [(("add", 0), math.log(3.0)), (("add", 1), 0.0)]
    hits = sum(shotgun_sample(screened, 1.0, rng)[0] == ("add", 0)
               for _ in range(10000))
    assert abs(hits / 10000 - 0.75) < 0.02


def test_shotgun_flattens_at_high_temperature():
    rng = np.random.default_rng(1)
    screened = [(("add", 0), 250.0), (("add", 1), 0.0)]
    hits = sum(shotgun_sample(screened, 1e9, rng)[0] == ("add", 0)
               for _ in range(10000))
    assert abs(hits / 10000 - 0.5) < 0.02


def test_shotgun_survives_extreme_scores():
    rng = np.random.default_rng(2)
    screened = [(("add", 0), -1e8), (("add", 1), -1e8 - 50.0)]
    for _ in range(50):
        move, score = shotgun_sample(screened, 1.0, rng)
        assert move == ("add", 0) and score == -1e8


def test_shotgun_validation():
    rng = np.random.default_rng(3)
    with pytest.raises(ValueError):
        shotgun_sample([], 1.0, rng)
    with pytest.raises(ValueError):
        shotgun_sample([(("add", 0), 0.0)], 0.0, rng)


# -------------------------------------------------------------- registry

def test_registry_keeps_the_best_score_per_model():
    top = TopModels()
    top.offer((3, 1), 1.0)
    top.offer((1, 3), 0.5)   # same model, worse score: ignored
    top.offer((1, 3), 2.0)   # better: replaces
    assert len(top) == 1
    assert top[(1, 3)] == 2.0
    assert (3, 1) in top
    assert top.best == ((1, 3), 2.0)


def test_registry_ignores_non_finite_and_ties_keep_first():
    top = TopModels()
    top.offer((0,), -np.inf)
    top.offer((0,), np.nan)
    assert len(top) == 0
    top.offer((0,), 1.0)
    top.offer((1,), 1.0)
    assert top.best == ((0,), 1.0)


def test_registry_capacity_evicts_worst():
    top = TopModels(capacity=2)
    top.offer((0,), 3.0)
    top.offer((1,), 1.0)
    top.offer((2,), 2.0)
    assert len(top) == 2
    assert (1,) not in top
    with pytest.raises(ValueError):
        TopModels(capacity=0)


def test_registry_best_on_empty_raises():
    with pytest.raises(ValueError):
        TopModels().best


# ------------------------------------------------------------- full runs

def test_search_recovers_planted_signal():
    ds, _, _ = random_dataset(31, n=120, p=30, support=(1, 4, 8),
                              beta=(3.0, -2.5, 2.0), noise=1.0)
    hp = Hyperparams(lam=0.1, w=0.1)
    cfg = SearchConfig(n_temps=3, steps_per_temp=30, seed=0)
    res = run_search(ds, hp, cfg)
    assert res.map_model == (1, 4, 8)


def test_search_matches_exhaustive_on_small_noise_data():
    ds, z, y = random_dataset(32, n=80, p=10)
    hp = Hyperparams(lam=1.0, w=0.05)
    res = run_search(ds, hp, SearchConfig(n_temps=2, steps_per_temp=20, seed=7))
    want_model, want_score, _ = oracle.exhaustive_map(z, y, hp.lam, hp.w, max_size=5)
    assert res.map_model == want_model
    assert res.map_log_post == pytest.approx(want_score, abs=1e-9)


def test_search_is_deterministic():
    ds, _, _ = random_dataset(33, n=60, p=40, support=(5,), beta=(2.0,))
    hp = Hyperparams(lam=0.5, w=0.08)
    cfg = SearchConfig(n_temps=3, steps_per_temp=15, seed=11)
    a = run_search(ds, hp, cfg)
    b = run_search(ds, hp, cfg)
    assert a.map_model == b.map_model and a.map_log_post == b.map_log_post
    sig = lambda t: [(s.temp_index, s.temperature, s.step, s.move, s.size, s.log_post)
                     for s in t]
    assert sig(a.trace) == sig(b.trace)
    assert dict(a.top.items()) == dict(b.top.items())


def test_map_dominates_everything_seen():
    ds, _, _ = random_dataset(34, n=70, p=25, support=(2, 9), beta=(2.0, 1.5))
    hp = Hyperparams(lam=0.3, w=0.1)
    res = run_search(ds, hp, SearchConfig(n_temps=4, steps_per_temp=25, seed=3))
    assert all(res.map_log_post >= s.log_post for s in res.trace)
    assert all(res.map_log_post >= sc for _, sc in res.top.items())
    assert res.top[res.map_model] == res.map_log_post


def test_chains_restart_from_empty_each_temperature():
    ds, _, _ = random_dataset(35, n=60, p=20, support=(0,), beta=(3.0,))
    hp = Hyperparams(lam=0.5, w=0.1)
    res = run_search(ds, hp, SearchConfig(n_temps=3, steps_per_temp=10, seed=5))
    temps = temperature_schedule(ds.p, 3)
    seen = set()
    for s in res.trace:
        if s.temp_index not in seen:
            seen.add(s.temp_index)
            assert s.step == 1
            assert s.size <= 1  # first move out of the empty model
        assert s.temperature == temps[s.temp_index]
        assert math.isfinite(s.log_post)
    assert seen == {0, 1, 2}


def test_zero_steps_returns_the_empty_model():
    ds, _, _ = random_dataset(36, n=30, p=8)
    hp = Hyperparams(lam=1.0, w=0.2)
    res = run_search(ds, hp, SearchConfig(n_temps=2, steps_per_temp=0))
    assert res.map_model == ()
    assert res.trace == []
    assert res.map_log_post == pytest.approx(score_model(ds, hp, ()).log_post, abs=0)


def test_max_model_size_is_respected():
    ds, _, _ = random_dataset(37, n=100, p=15, support=(0, 1, 2, 3),
                              beta=(3.0, 3.0, 3.0, 3.0))
    hp = Hyperparams(lam=0.1, w=0.4)  # permissive prior wants big models
    res = run_search(ds, hp, SearchConfig(n_temps=2, steps_per_temp=30,
                                          max_model_size=2, seed=1))
    assert all(s.size <= 2 for s in res.trace)
    assert len(res.map_model) <= 2


def test_search_config_validation():
    for bad in (dict(n_temps=0), dict(steps_per_temp=-1), dict(screen_cap=0),
                dict(screen_log_gap=0.0), dict(weight_log_gap=1.0),
                dict(max_model_size=0), dict(block_size=0), dict(threads=0)):
        with pytest.raises(ValueError):
            SearchConfig(**bad)


# ------------------------------------------------------------- averaging

def test_top_k_weights_closed_form():
    top = TopModels()
    top.offer((0,), math.log(3.0))
    top.offer((1,), 0.0)
    got = top_k_weights(top)
    assert [m for m, _ in got] == [(0,), (1,)]
    assert got[0][1] == pytest.approx(0.75, abs=1e-12)
    assert got[1][1] == pytest.approx(0.25, abs=1e-12)
    assert sum(w for _, w in got) == pytest.approx(1.0, abs=1e-12)


def test_top_k_weights_retention_boundary():
    top = TopModels()
    top.offer((0,), 0.0)
    top.offer((1,), -16.0)  # exactly at the gap: dropped (strictly greater)
    top.offer((2,), -15.999)
    got = top_k_weights(top, weight_log_gap=-16.0)
    assert [m for m, _ in got] == [(0,), (2,)]
    with pytest.raises(ValueError):
        top_k_weights(TopModels())


def test_top_k_weights_tie_order():
    top = TopModels()
    top.offer((4,), 1.0)
    top.offer((2,), 1.0)
    top.offer((3,), 1.0)
    assert [m for m, _ in top_k_weights(top)] == [(2,), (3,), (4,)]


def test_wam_majority_vote():
    pi, model = wam([((0, 2), 0.6), ((1, 2), 0.4)], p=4)
    np.testing.assert_allclose(pi, [0.6, 0.4, 1.0, 0.0], rtol=0, atol=1e-15)
    assert model == (0, 2)


def test_wam_strictly_above_one_half():
    pi, model = wam([((0,), 0.5), ((1,), 0.5)], p=2)
    assert pi[0] == pi[1] == 0.5
    assert model == ()


def test_wam_agrees_with_enumerated_inclusion_probabilities():
    ds, z, y = random_dataset(38, n=50, p=7, support=(2, 5), beta=(2.0, -1.5))
    hp = Hyperparams(lam=0.5, w=0.15)
    table = oracle.enumerate_scores(z, y, hp.lam, hp.w, max_size=7)
    top = TopModels()
    for model, score in table.items():
        top.offer(model, score)
    weighted = top_k_weights(top, weight_log_gap=-1e300)  # keep everything
    pi, model = wam(weighted, ds.p)
    want_pi, want_model = oracle.median_probability_model(table, ds.p)
    np.testing.assert_allclose(pi, want_pi, rtol=0, atol=1e-9)
    assert model == want_model
