"""Tempered stochastic shotgun search over models.

Each temperature runs a chain from the empty model.  A step scores the full
one-move neighborhood, screens it down to the few genuinely competitive
moves, and samples the next model among them with probability proportional
to exp(score / T).  T = 1 is greedy-ish exploitation; the hottest chain,
with T growing like log p, is willing to walk through mediocre models and
acts as the screening stage, since every competitive candidate it ever sees
is recorded.  The registry of screened candidates, not the visit path, is
what downstream weighting consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .dataset import Dataset
from .neighborhood import (
    DEFAULT_BLOCK,
    NeighborScores,
    full_neighborhood,
)
from .posterior import (
    Hyperparams,
    ModelState,
    NearCollinearError,
    NumericalDegeneracyError,
    extend_add,
    score_model,
)


class EmptyNeighborhoodError(RuntimeError):
    """Every move in the neighborhood is invalid; the chain cannot continue."""


@dataclass(frozen=True)
class SearchConfig:
    """Search settings.

    Attributes
    ----------
    n_temps : int
        Number of chains / temperature rungs.
    steps_per_temp : int
        Moves per chain.
    screen_cap : int
        At most this many moves survive screening each step.
    screen_log_gap : float
        A move survives only if its log score exceeds the step's best by
        more than this (negative) gap.
    weight_log_gap : float
        Retention threshold for model averaging: models whose log score
        trails the best by more than this are discarded.
    max_model_size : int
        Hard cap on model size (additionally capped at n - 2 at run time).
    block_size, threads
        Column-sweep blocking and worker count for the neighborhood scans;
        they affect speed only, never results.
    """

    n_temps: int = 9
    steps_per_temp: int = 200
    screen_cap: int = 20
    screen_log_gap: float = -6.0
    weight_log_gap: float = -16.0
    seed: int = 0
    max_model_size: int = 200
    block_size: int = DEFAULT_BLOCK
    threads: int = 1

    def __post_init__(self):
        if self.n_temps < 1:
            raise ValueError("n_temps must be >= 1")
        if self.steps_per_temp < 0:
            raise ValueError("steps_per_temp must be >= 0")
        if self.screen_cap < 1:
            raise ValueError("screen_cap must be >= 1")
        if not self.screen_log_gap < 0:
            raise ValueError("screen_log_gap must be negative")
        if not self.weight_log_gap < 0:
            raise ValueError("weight_log_gap must be negative")
        if self.max_model_size < 1:
            raise ValueError("max_model_size must be >= 1")
        if self.block_size < 1 or self.threads < 1:
            raise ValueError("block_size and threads must be >= 1")


def temperature_schedule(p: int, n_temps: int) -> np.ndarray:
    """Equally spaced ladder from 1 to log(p) + log(log(p)).

    Requires p >= 3 so the top rung exceeds 1.  ``n_temps when 1`` yields
    just the cold chain [1.0].
    """
    if p < 3:
        raise ValueError(f"temperature ladder needs p >= 3, got p={p}")
    if n_temps < 1:
        raise ValueError("n_temps must be >= 1")
    top = math.log(p) + math.log(math.log(p))
    if n_temps == 1:
        return np.array([1.0])
    return np.linspace(1.0, top, n_temps)


class TopModels:
    """Registry of the best-scoring models offered during a run.

    Keys are sorted column tuples; each maps to the best log score seen for
    that model.  Non-finite scores are never admitted.  ``capacity``, if
    set, evicts the worst entry on overflow (ties evicted by larger key, so
    eviction is deterministic).
    """

    def __init__(self, capacity: int | None = None):
        if capacity is not None and capacity < 1:
            raise ValueError("capacity must be >= 1 or None")
        self.capacity = capacity
        self._scores: dict = {}
        self._best: tuple | None = None

    def offer(self, model, score: float) -> None:
        if not math.isfinite(score):
            return
        key = tuple(sorted(int(j) for j in model))
        prev = self._scores.get(key)
        if prev is not None and prev >= score:
            return
        self._scores[key] = score
        if self._best is None or score > self._best[1]:
            self._best = (key, score)
        if self.capacity is not None and len(self._scores) > self.capacity:
            worst = min(self._scores.items(), key=lambda kv: (kv[1], [-j for j in kv[0]]))
            del self._scores[worst[0]]

    @property
    def best(self) -> tuple:
        if self._best is None:
            raise ValueError("registry is empty")
        return self._best

    def items(self):
        return self._scores.items()

    def __len__(self) -> int:
        return len(self._scores)

    def __contains__(self, model) -> bool:
        return tuple(sorted(int(j) for j in model)) in self._scores

    def __getitem__(self, model) -> float:
        return self._scores[tuple(sorted(int(j) for j in model))]


@dataclass(frozen=True)
class TraceStep:
    temp_index: int
    temperature: float
    step: int
    move: tuple
    size: int
    log_post: float
    elapsed: float  # seconds since run start; excluded from serialized output


@dataclass(frozen=True)
class SearchResult:
    map_model: tuple
    map_log_post: float
    top: TopModels
    trace: list


def screen(nbd: NeighborScores, columns, cap: int = 20,
           screen_log_gap: float = -6.0):
    """Keep the competitive moves of a scored neighborhood.

    A move survives when its log score strictly exceeds best + gap; at most
    ``cap`` survive, highest first, ties broken by enumeration order (adds
    by ascending column, then deletes by position, then swaps row-major).
    The current model itself (a swap that re-adds the column it deleted) is
    never a candidate.

    Parameters
    ----------
    columns : tuple
        Insertion order of the scanned model, to locate swap diagonals.

    Returns
    -------
    list of ((kind, ...), float)
        Moves as ``("add", j)``, ``("del", i)``, ``("swap", i, j)`` with the
        scanned log score.

    Raises
    ------
    EmptyNeighborhoodError
        If no move has a finite score.
    """
    p = nbd.add.shape[0]
    k = nbd.delete.shape[0]
    swap = nbd.swap
    if k:
        swap = swap.copy()
        swap[np.arange(k), list(columns)] = -np.inf
    flat = np.concatenate([nbd.add, nbd.delete, swap.ravel()])
    best = flat.max() if flat.size else -np.inf
    if not np.isfinite(best):
        raise EmptyNeighborhoodError("no finite-scoring move in the neighborhood")
    cand = np.flatnonzero(flat > best + screen_log_gap)
    cand = cand[np.argsort(-flat[cand], kind="stable")][:cap]
    out = []
    for idx in cand:
        if idx < p:
            move = ("add", int(idx))
        elif idx < p + k:
            move = ("del", int(idx - p))
        else:
            i, j = divmod(int(idx - p - k), p)
            move = ("swap", i, j)
        out.append((move, float(flat[idx])))
    return out


def shotgun_sample(screened, temperature: float, rng: np.random.Generator):
    """Sample one screened move with probability proportional to exp(score/T).

    Scores are max-shifted before exponentiation so any magnitude is safe.
    Returns the chosen (move, score) pair.
    """
    if not screened:
        raise ValueError("nothing to sample from")
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    scores = np.array([s for _, s in screened])
    z = (scores - scores.max()) / temperature
    prob = np.exp(z)
    prob /= prob.sum()
    idx = int(np.searchsorted(np.cumsum(prob), rng.random(), side="right"))
    idx = min(idx, len(screened) - 1)  # guard the u ~ 1.0 edge
    return screened[idx]


def _move_model(state: ModelState, nbd: NeighborScores, move) -> tuple:
    """Canonical key of the model a move leads to."""
    kind = move[0]
    if kind == "add":
        return tuple(sorted(state.gamma + (move[1],)))
    if kind == "del":
        return nbd.deleted_states[move[1]].gamma
    i, j = move[1], move[2]
    return tuple(sorted(nbd.deleted_states[i].gamma + (j,)))


def _commit(ds, hp, state: ModelState, nbd: NeighborScores, move) -> ModelState:
    kind = move[0]
    if kind == "add":
        return extend_add(ds, hp, state, move[1])
    if kind == "del":
        return nbd.deleted_states[move[1]]
    return extend_add(ds, hp, nbd.deleted_states[move[1]], move[2])


def run_search(ds: Dataset, hp: Hyperparams, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """Run the full tempered search and return the MAP model plus registry.

    Every chain restarts from the empty model.  All randomness flows from a
    single generator seeded by ``cfg.seed`` and consumed only by the move
    sampler, so a (seed, config, data) triple fixes the trace exactly.
    A chain whose neighborhood screens to nothing ends early with a
    ``("stop",)`` trace entry; this is not an error.
    """
    temps = temperature_schedule(ds.p, cfg.n_temps)
    cap = min(ds.n - 2, cfg.max_model_size)
    rng = np.random.default_rng(cfg.seed)
    top = TopModels()
    trace: list = []
    t0 = perf_counter()

    empty = score_model(ds, hp, ())
    top.offer((), empty.log_post)

    for ti, temp in enumerate(temps):
        state = empty
        for step in range(1, cfg.steps_per_temp + 1):
            nbd = full_neighborhood(ds, hp, state, block_size=cfg.block_size,
                                    threads=cfg.threads, max_size=cap)
            try:
                screened = screen(nbd, state.columns, cfg.screen_cap,
                                  cfg.screen_log_gap)
            except EmptyNeighborhoodError:
                trace.append(TraceStep(ti, float(temp), step, ("stop",),
                                       state.size, state.log_post,
                                       perf_counter() - t0))
                break
            for move, sc in screened:
                top.offer(_move_model(state, nbd, move), sc)
            while screened:
                move, sc = shotgun_sample(screened, float(temp), rng)
                try:
                    state = _commit(ds, hp, state, nbd, move)
                    break
                except (NearCollinearError, NumericalDegeneracyError):
                    # scan said finite, exact arithmetic disagrees at the
                    # threshold boundary; drop the move and resample
                    screened = [ms for ms in screened if ms[0] != move]
            else:
                trace.append(TraceStep(ti, float(temp), step, ("stop",),
                                       state.size, state.log_post,
                                       perf_counter() - t0))
                break
            top.offer(state.gamma, state.log_post)
            trace.append(TraceStep(ti, float(temp), step, move, state.size,
                                   state.log_post, perf_counter() - t0))

    map_model, map_score = top.best
    return SearchResult(map_model=map_model, map_log_post=map_score,
                        top=top, trace=trace)


def top_k_weights(top: TopModels, weight_log_gap: float = -16.0):
    """Normalized posterior weights of the retained registry models.

    A model is retained when its log score trails the registry best by no
    more than ``weight_log_gap`` (strictly).  Returns (model, weight) pairs,
    best first, deterministic order; weights sum to one.
    """
    if len(top) == 0:
        raise ValueError("registry is empty")
    best = top.best[1]
    kept = [(key, s) for key, s in top.items() if s - best > weight_log_gap]
    kept.sort(key=lambda kv: (-kv[1], kv[0]))
    raw = np.exp(np.array([s for _, s in kept]) - best)
    raw /= raw.sum()
    return [(key, float(wt)) for (key, _), wt in zip(kept, raw)]


def wam(weighted, p: int):
    """Weight-averaged inclusion probabilities and the majority-vote model.

    Parameters
    ----------
    weighted : list of (model, weight)
        Output of ``top_k_weights``.
    p : int
        Total number of columns.

    Returns
    -------
    (ndarray shape (p,), tuple)
        Per-column inclusion probability and the model of columns whose
        probability strictly exceeds one half.
    """
    pi = np.zeros(p)
    for model, wt in weighted:
        for j in model:
            pi[j] += wt
    np.minimum(pi, 1.0, out=pi)  # accumulated roundoff can overshoot by an ulp
    return pi, tuple(int(j) for j in np.flatnonzero(pi > 0.5))
