"""Suboptimal designers for general (non-sequential) quantizers.

Greedy combining (GC) merges the pair of super-symbols with the smallest
combining loss until M remain. The naive version rescans every pair at every
stage; the heap version keeps all pair losses in a binary min-heap and
discards entries that refer to merged symbols only when they reach the root.
Both use the same loss arithmetic and the same (loss, a, b) order, so their
outputs are identical.

KL-means is Lloyd's algorithm on the posteriors P(X|y) with the divergence
KL(posterior || mean).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend, _pykernels
from .channel import Channel
from .cost import CostFamily, mi_gap
from .quantizer import Assignment

DEFAULT_SEED = 0


@dataclass
class SuperSymbol:
    """A group of merged outputs, carrying their summed joint column P(., y)."""

    id: int
    joint: np.ndarray
    alive: bool = True

    @property
    def mass(self) -> float:
        return float(self.joint.sum())

    @classmethod
    def output(cls, channel: Channel, j: int) -> "SuperSymbol":
        return cls(j, channel.joint[:, j].copy())


def combine_loss(a: SuperSymbol, b: SuperSymbol, cost: CostFamily) -> float:
    """Cost of the merged cell minus the costs of the two cells; >= 0 for concave phi."""
    if not (a.alive and b.alive):
        raise ValueError("both super-symbols must be alive")
    if a.id > b.id:
        a, b = b, a
    cells = cost.cells(np.stack([a.joint + b.joint, a.joint, b.joint]))
    return float(cells[0] - cells[1] - cells[2])


@dataclass
class GcResult:
    assignment: Assignment
    stage_losses: np.ndarray
    loss_evals: int
    heap: bool


def run_gc(channel: Channel, cost: CostFamily, M: int, heap: bool = True) -> GcResult:
    N = channel.n
    if not 2 <= M < N:
        raise ValueError(f"need 2 <= M < N (got M={M}, N={N})")
    if cost.q != channel.q:
        raise ValueError("cost family and channel disagree on q")
    joints = np.ascontiguousarray(channel.joint.T)
    mod = _backend.compiled_for(cost)
    if mod is not None:
        fn = mod.gc_heap if heap else mod.gc_naive
        labels, losses, evals = fn(joints, *cost.kernel_args(), M)
    else:
        fn = _pykernels.gc_heap if heap else _pykernels.gc_naive
        labels, losses, evals = fn(cost, joints, M)
    return GcResult(Assignment(labels, M), np.asarray(losses), int(evals), heap)


def greedy_combining(channel: Channel, cost: CostFamily, M: int) -> Assignment:
    return run_gc(channel, cost, M, heap=False).assignment


def greedy_combining_heap(channel: Channel, cost: CostFamily, M: int) -> Assignment:
    return run_gc(channel, cost, M, heap=True).assignment


# -- KL-means ---------------------------------------------------------------------


def kl_matrix(delta: np.ndarray, means: np.ndarray) -> np.ndarray:
    """D[j, z] = KL(delta_j || means_z) in nats; inf where supports disagree."""
    D = np.zeros((delta.shape[0], means.shape[0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_mu = np.log(means)
        for x in range(delta.shape[1]):
            d = delta[:, x : x + 1]
            term = d * (np.log(d) - log_mu[None, :, x])
            D += np.where(d > 0, term, 0.0)
    return D


@dataclass
class KlMeansResult:
    assignment: Assignment
    gap: float
    best_restart: int
    objectives: list[list[float]] = field(default_factory=list)
    iterations: list[int] = field(default_factory=list)


def _means(delta, py, labels, M):
    w = np.zeros(M)
    np.add.at(w, labels, py)
    mu = np.zeros((M, delta.shape[1]))
    np.add.at(mu, labels, py[:, None] * delta)
    return mu / np.where(w > 0, w, 1.0)[:, None], w > 0


def _update(delta, py, labels, D, M):
    """Weighted-mean update; an empty cluster takes the worst-fitting point of a cluster with spares."""
    fit = D[np.arange(labels.size), labels]
    for z in np.flatnonzero(np.bincount(labels, minlength=M) == 0):
        counts = np.bincount(labels, minlength=M)
        cand = np.where(counts[labels] > 1, fit, -np.inf)
        j = int(np.argmax(cand))
        labels[j] = z
        fit[j] = 0.0
    return _means(delta, py, labels, M)[0]


def _one_restart(delta, py, M, iters, rng):
    N = delta.shape[0]
    mu = delta[rng.choice(N, size=M, replace=False)].copy()
    labels = None
    history: list[float] = []
    it = 0
    for it in range(1, iters + 1):
        D = kl_matrix(delta, mu)
        new = np.argmin(D, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        mu = _update(delta, py, labels, D, M)
        D = kl_matrix(delta, mu)
        history.append(float(py @ D[np.arange(N), labels]))
    return labels, history, it


def run_kl_means(channel: Channel, M: int, restarts: int = 100, iters: int = 100,
                 seed: int = DEFAULT_SEED, log_base: float = 2.0) -> KlMeansResult:
    """Best of ``restarts`` KL-means runs, ranked by MI gap (ties to the lowest restart).

    Restart k draws from its own generator spawned from ``seed``, so results
    do not depend on execution order.
    """
    N = channel.n
    if not 2 <= M <= N:
        raise ValueError(f"need 2 <= M <= N (got M={M}, N={N})")
    if restarts < 1 or iters < 1:
        raise ValueError("restarts and iters must be at least 1")
    delta, py = channel.posteriors, channel.py
    children = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    objectives, counts = [], []
    for k, child in enumerate(children):
        labels, history, it = _one_restart(delta, py, M, iters, np.random.default_rng(child))
        objectives.append(history)
        counts.append(it)
        a = Assignment(labels, M).canonical()
        gap = mi_gap(channel, a, log_base)
        if best is None or gap < best[0]:
            best = (gap, k, a)
    gap, k, a = best
    return KlMeansResult(a, gap, k, objectives, counts)


def kl_means(channel: Channel, M: int, restarts: int = 100, iters: int = 100,
             seed: int = DEFAULT_SEED) -> Assignment:
    return run_kl_means(channel, M, restarts, iters, seed).assignment
