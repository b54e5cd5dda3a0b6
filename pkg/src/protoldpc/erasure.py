"""Erasure-channel transmission and iterative decoding on Tanner graphs.

The all-zero codeword is assumed throughout; on the BEC only the erasure
pattern matters.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from itertools import repeat
from typing import Iterable, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.stats import binomtest

from .graphs.tanner import TannerGraph


@dataclass(frozen=True)
class ChannelConfig:
    epsilon: float
    trials: int = 10_000
    seed: int = 0
    max_peel_rounds: Optional[int] = None
    batch_size: int = 512

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class ErrorStats:
    epsilon: float
    n: int
    trials: int
    bit_error_rate: float
    block_error_rate: float
    wilson_interval_95: tuple[float, float]
    block_errors: int
    girth_iteration_budget: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def tree_iteration_budget(girth: float) -> float:
    """Decoder iterations whose computation graph is guaranteed cycle-free.

    ``t`` iterations look ``2t`` edges deep, which is a tree while
    ``4t + 2 <= girth``.  Returns ``inf`` for an acyclic graph.
    """
    if math.isinf(girth):
        return math.inf
    g = int(girth)
    if g < 2:
        raise ValueError(f"girth must be at least 2, got {girth}")
    return (g - 2) // 4


class _Adjacency:
    def __init__(self, t: TannerGraph):
        H = t.parity_check()
        self.H = H
        self.Ht = csr_matrix(H.T)
        self.n, self.m = t.variable_count, t.check_count
        self.check_vars = np.split(H.indices, H.indptr[1:-1])
        self.var_checks = np.split(self.Ht.indices, self.Ht.indptr[1:-1])
        # parallel edges show up as entries > 1
        self.var_mult = np.split(self.Ht.data, self.Ht.indptr[1:-1])


def peel_decode(t: TannerGraph, erased: Iterable[int]) -> frozenset[int]:
    """Peeling decoder; returns the residual (maximal) stopping set.

    A check whose erased-neighbour count is exactly one resolves that
    neighbour.  Checks are processed from a work queue; the residual does
    not depend on the processing order.
    """
    adj = _Adjacency(t)
    return _peel(adj, erased)


def _peel(adj: _Adjacency, erased: Iterable[int], order_rng=None) -> frozenset[int]:
    state = np.zeros(adj.n, dtype=bool)
    idx = np.fromiter((int(v) for v in erased), dtype=np.int64)
    if len(idx) and (idx.min() < 0 or idx.max() >= adj.n):
        raise ValueError("erased variable index out of range")
    state[idx] = True
    count = np.asarray(adj.H @ state.astype(np.int64)).ravel()
    ready = list(np.flatnonzero(count == 1))
    if order_rng is not None:
        order_rng.shuffle(ready)
    queue = deque(ready)
    while queue:
        if order_rng is not None and len(queue) > 1:
            k = int(order_rng.integers(len(queue)))
            queue.rotate(-k)
        c = queue.popleft()
        if count[c] != 1:
            continue
        vs = adj.check_vars[c]
        v = int(vs[state[vs]][0])
        state[v] = False
        for c2, mult in zip(adj.var_checks[v], adj.var_mult[v]):
            count[c2] -= mult
            if count[c2] == 1:
                queue.append(c2)
    return frozenset(np.flatnonzero(state).tolist())


def flood_decode(
    t: TannerGraph, erased: np.ndarray, max_rounds: Optional[int] = None
) -> np.ndarray:
    """Parallel peeling on a batch of erasure patterns ``(trials, n)``.

    Each round resolves every erased variable that sits alone (among erased
    variables) on some check.  Run to completion it reaches the same residual
    as :func:`peel_decode`.
    """
    return _flood(_Adjacency(t), erased, max_rounds)


def _flood(adj: _Adjacency, erased: np.ndarray, max_rounds: Optional[int]) -> np.ndarray:
    state = np.array(erased, dtype=bool, copy=True)
    # rows that made no progress are final; stop touching them
    active = np.flatnonzero(state.any(axis=1))
    rounds = 0
    while len(active) and (max_rounds is None or rounds < max_rounds):
        sub = state[active]
        counts = adj.H @ sub.T.astype(np.float32)
        single = (counts == 1).astype(np.float32)
        hit = (adj.Ht @ single).T > 0
        resolved = sub & hit
        progress = resolved.any(axis=1)
        state[active] = sub & ~resolved
        active = active[progress & (sub & ~resolved).any(axis=1)]
        rounds += 1
    return state


def trial_erasures(n: int, epsilon: float, seed: int, trials: Iterable[int]) -> np.ndarray:
    """Erasure patterns, one independent stream per trial index."""
    rows = []
    for k in trials:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(k),)))
        rows.append(rng.random(n) < epsilon)
    return np.array(rows, dtype=bool).reshape(-1, n)


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return (float(ci.low), float(ci.high))


def _count_range(t: TannerGraph, cfg: ChannelConfig, start: int, stop: int) -> tuple[int, int]:
    adj = _Adjacency(t)
    residual_total = block = 0
    for lo in range(start, stop, cfg.batch_size):
        ks = range(lo, min(lo + cfg.batch_size, stop))
        erased = trial_erasures(t.variable_count, cfg.epsilon, cfg.seed, ks)
        per_trial = _flood(adj, erased, cfg.max_peel_rounds).sum(axis=1)
        residual_total += int(per_trial.sum())
        block += int((per_trial > 0).sum())
    return residual_total, block


def simulate(
    t: TannerGraph,
    cfg: ChannelConfig,
    girth: Optional[float] = None,
    parallelism: int = 1,
) -> ErrorStats:
    """Monte Carlo bit and block erasure rates after decoding.

    Trials are decoded in batches by parallel peeling run to its fixed
    point, which leaves the same residual as :func:`peel_decode`.  Counts
    are integers, so splitting trials across ``parallelism`` processes
    cannot change the result.
    """
    n = t.variable_count
    if parallelism > 1 and cfg.trials > cfg.batch_size:
        bounds = np.linspace(0, cfg.trials, parallelism + 1).astype(int)
        with ProcessPoolExecutor(parallelism) as pool:
            parts = list(
                pool.map(_count_range, repeat(t), repeat(cfg), bounds[:-1], bounds[1:])
            )
    else:
        parts = [_count_range(t, cfg, 0, cfg.trials)]
    residual_total = sum(r for r, _ in parts)
    block = sum(b for _, b in parts)
    return ErrorStats(
        epsilon=cfg.epsilon,
        n=n,
        trials=cfg.trials,
        bit_error_rate=residual_total / (n * cfg.trials),
        block_error_rate=block / cfg.trials,
        wilson_interval_95=wilson_interval(block, cfg.trials),
        block_errors=block,
        girth_iteration_budget=None if girth is None else tree_iteration_budget(girth),
    )


@dataclass(frozen=True)
class IterationRates:
    """Per-iteration bit-erasure rates of the flooding message-passing decoder."""

    mean: np.ndarray
    stderr: np.ndarray
    trials: int


def message_passing_rates(
    t: TannerGraph,
    epsilon: float,
    iterations: int,
    trials: int,
    seed: int = 0,
    batch_size: int = 512,
) -> IterationRates:
    """Empirical bit-erasure probability after each of ``iterations`` rounds.

    Messages are extrinsic, exactly as in density evolution: a check sends
    an erasure on an edge iff another incoming edge is erased, and a
    variable sends one iff its channel bit and all other incoming check
    messages are erased.  A bit counts as erased after round ``t`` when its
    channel bit and every incoming check message are erased.
    """
    n, m = t.variable_count, t.check_count
    ev, ec = t.edges[:, 0], t.edges[:, 1]
    E = len(ev)
    ones = np.ones(E)
    to_check = csr_matrix((ones, (np.arange(E), ec)), shape=(E, m))
    to_var = csr_matrix((ones, (np.arange(E), ev)), shape=(E, n))
    fractions = np.zeros((trials, iterations))
    for start in range(0, trials, batch_size):
        ks = range(start, min(start + batch_size, trials))
        chan = trial_erasures(n, epsilon, seed, ks)
        x = chan[:, ev]
        for it in range(iterations):
            erased_at_check = (to_check.T @ x.T.astype(np.float64)).T
            y = (erased_at_check[:, ec] - x) > 0
            known = (~y).astype(np.float64)
            known_at_var = (to_var.T @ known.T).T
            bit = chan & (known_at_var == 0)
            fractions[start : start + len(ks), it] = bit.mean(axis=1)
            x = chan[:, ev] & ((known_at_var[:, ev] - known) == 0)
    mean = fractions.mean(axis=0)
    stderr = fractions.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(iterations)
    return IterationRates(mean, stderr, trials)
