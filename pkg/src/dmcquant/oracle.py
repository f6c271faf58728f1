"""Brute-force ground truth and random instance generators.

The exhaustive searches sum joint columns directly for every cell rather
than going through prefix sums, so they share no arithmetic path with the DP
engines beyond the cell cost itself.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .channel import (
    Channel,
    channel_from_dict,
    check_dominance,
    dumps_channel,
    posterior_geometry,
    relabel_inputs_dominant,
    relabel_outputs_sequential,
)
from .cost import CostFamily, SegmentCostView

BUDGET = 10**6
RTOL = 1e-12


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class OracleResult:
    cost: float
    optima: list = field(default_factory=list)
    enumerated: int = 0


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    """Number of partitions of n labelled items into exactly k non-empty blocks."""
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


def _close(a: float, b: float, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def _direct_cells(channel: Channel, cost: CostFamily) -> dict[tuple[int, int], float]:
    joint = channel.joint
    out = {}
    for lo in range(channel.n):
        for hi in range(lo + 1, channel.n + 1):
            out[lo, hi] = cost.cell(joint[:, lo:hi].sum(axis=1).tolist())
    return out


def exhaustive_sdq(view: SegmentCostView, M: int, budget: int = BUDGET,
                   rtol: float = RTOL) -> OracleResult:
    """Minimum cost over all C(N-1, M-1) boundary sets, with every optimum."""
    N = view.n
    if not 1 <= M <= N:
        raise ValueError(f"need 1 <= M <= N (got M={M}, N={N})")
    total = math.comb(N - 1, M - 1)
    if total > budget:
        raise BudgetExceeded(f"{total} boundary sets exceed the budget of {budget}")
    cells = _direct_cells(view.channel, view.cost)
    costs = []
    for inner in itertools.combinations(range(1, N), M - 1):
        b = (0, *inner, N)
        costs.append((sum(cells[lo, hi] for lo, hi in zip(b, b[1:])), b))
    best = min(c for c, _ in costs)
    return OracleResult(best, [b for c, b in costs if _close(c, best, rtol)], len(costs))


def restricted_growth(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """Set partitions of range(n) into exactly k blocks as restricted growth strings."""
    s = [0] * n

    def rec(i, used):
        if n - i < k - used:
            return
        if i == n:
            if used == k:
                yield tuple(s)
            return
        for v in range(min(used + 1, k)):
            s[i] = v
            yield from rec(i + 1, used + (v == used))

    if n == 0:
        return
    yield from rec(1, 1)


def exhaustive_dq(view: SegmentCostView, M: int, budget: int = BUDGET,
                  rtol: float = RTOL) -> OracleResult:
    """Minimum cost over all deterministic quantizers onto exactly M labels.

    Partitions with fewer blocks need not be searched: splitting a cell never
    increases the cost of a concave phi.
    """
    N = view.n
    if not 1 <= M <= N:
        raise ValueError(f"need 1 <= M <= N (got M={M}, N={N})")
    total = stirling2(N, M)
    if total > budget:
        raise BudgetExceeded(f"{total} partitions exceed the budget of {budget}")
    cols = view.channel.joint.T.tolist()
    cell = view.cost.cell
    costs = []
    for rgs in restricted_growth(N, M):
        sums = [[0.0] * view.channel.q for _ in range(M)]
        for j, z in enumerate(rgs):
            acc = sums[z]
            for i, v in enumerate(cols[j]):
                acc[i] += v
        costs.append((sum(cell(s) for s in sums), rgs))
    best = min(c for c, _ in costs)
    return OracleResult(best, [r for c, r in costs if _close(c, best, rtol)], len(costs))


# -- random instances ---------------------------------------------------------------


def random_channel(rng: np.random.Generator, q: int, n: int, uniform_prior: bool = False) -> Channel:
    px = np.full(q, 1.0 / q) if uniform_prior else rng.dirichlet(np.ones(q))
    return Channel(px, rng.dirichlet(np.ones(n), size=q))


def random_sequential_collinear(rng: np.random.Generator, q: int, n: int) -> Channel:
    """Posteriors on the segment between two random points, in increasing order."""
    a, b = rng.dirichlet(np.ones(q), size=2)
    t = np.sort(rng.random(n))
    t[0], t[-1] = 0.0, 1.0
    delta = a + np.outer(t, b - a)
    joint = (rng.dirichlet(np.ones(n))[:, None] * delta).T
    px = joint.sum(axis=1)
    return Channel(px, joint / px[:, None])


def random_dominant(rng: np.random.Generator, q: int, n: int, scale: float = 0.5) -> Channel:
    """Rows ordered by likelihood-ratio dominance.

    log P(y|x) is built from cumulative sums of non-negative increments, which
    makes it supermodular; row normalization and column offsets keep it so.
    """
    inc = rng.exponential(scale, size=(q, n))
    L = np.cumsum(np.cumsum(inc, axis=0), axis=1) + rng.normal(size=n)[None, :]
    L -= L.max(axis=1, keepdims=True)
    pyx = np.exp(L)
    pyx /= pyx.sum(axis=1, keepdims=True)
    return Channel(rng.dirichlet(np.ones(q)), pyx)


def random_binary_ordered(rng: np.random.Generator, n: int) -> Channel:
    """A random binary-input channel relabelled so that dominance holds."""
    ch, _ = relabel_outputs_sequential(random_channel(rng, 2, n))
    ch, _, _ = relabel_inputs_dominant(ch)
    return ch


def scramble_outputs(rng: np.random.Generator, channel: Channel) -> Channel:
    return channel.permute_outputs(rng.permutation(channel.n))


# -- structural checks ----------------------------------------------------------------


@dataclass
class GapInstance:
    channel: Channel
    M: int
    alpha: float
    sdq_cost: float
    dq_cost: float
    sdq_boundaries: tuple[int, ...]
    dq_labels: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "channel": json.loads(dumps_channel(self.channel)),
            "M": self.M,
            "alpha": "inf" if math.isinf(self.alpha) else self.alpha,
            "sdq_cost": self.sdq_cost,
            "dq_cost": self.dq_cost,
            "sdq_boundaries": list(self.sdq_boundaries),
            "dq_labels": list(self.dq_labels),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GapInstance":
        alpha = math.inf if doc["alpha"] == "inf" else float(doc["alpha"])
        return cls(channel_from_dict(doc["channel"]), int(doc["M"]), alpha, float(doc["sdq_cost"]),
                   float(doc["dq_cost"]), tuple(doc["sdq_boundaries"]), tuple(doc["dq_labels"]))


def hunt_sdq_gap(q_range: Sequence[int], n_range: Sequence[int], m_range: Sequence[int] | None,
                 trials: int, seed: int = 0, alpha: float = 1.0,
                 rtol: float = 1e-10) -> tuple[list[GapInstance], int]:
    """Search random dominance-ordered channels for an SDQ optimum worse than the DQ optimum.

    ``q_range``/``n_range``/``m_range`` are inclusive (lo, hi) pairs; ``m_range``
    None means every 2 <= M < N. Returns the gap instances and the number of
    instances tested.
    """
    rng = np.random.default_rng(seed)
    found = []
    for _ in range(trials):
        q = int(rng.integers(q_range[0], q_range[1] + 1))
        n = int(rng.integers(max(3, n_range[0]), n_range[1] + 1))
        lo, hi = (2, n - 1) if m_range is None else (m_range[0], min(m_range[1], n - 1))
        M = int(rng.integers(lo, hi + 1))
        ch = random_binary_ordered(rng, n) if q == 2 else random_dominant(rng, q, n)
        view = SegmentCostView(ch, CostFamily(ch.px, alpha))
        s = exhaustive_sdq(view, M)
        d = exhaustive_dq(view, M)
        if s.cost - d.cost > rtol * max(1.0, abs(d.cost)):
            found.append(GapInstance(ch, M, alpha, s.cost, d.cost, s.optima[0], d.optima[0]))
    return found, trials


@dataclass
class SegmentConditionsReport:
    collinear: bool
    sequential: bool
    full_dominance: bool
    adjacent_dominance: bool
    input_perm: tuple[int, ...] | None

    @property
    def consistent(self) -> bool:
        return self.sequential == self.full_dominance == self.adjacent_dominance

    def as_dict(self) -> dict:
        return {
            "collinear": self.collinear,
            "sequential": self.sequential,
            "full_dominance": self.full_dominance,
            "adjacent_dominance": self.adjacent_dominance,
            "input_perm": None if self.input_perm is None else list(self.input_perm),
            "consistent": self.consistent,
        }


def _exists_input_order(channel: Channel, strict: bool, tol: float, max_q: int):
    if channel.q <= max_q:
        for perm in itertools.permutations(range(channel.q)):
            if check_dominance(channel.permute_inputs(perm), tol, strict=strict):
                return perm
        return None
    ch, lab, ok = relabel_inputs_dominant(channel, tol)
    if check_dominance(ch, tol, strict=strict):
        return tuple(lab.perm.tolist())
    return None


def verify_segment_conditions(channel: Channel, tol: float = 1e-9, max_q: int = 6) -> SegmentConditionsReport:
    """Evaluate the three equivalent conditions on one channel (outputs as labelled).

    (1) posteriors sequentially located on a segment; (2) collinear and some
    input order gives dominance for every row pair; (3) collinear and some input
    order gives dominance for adjacent rows and columns. Inputs are searched
    over all orders when q <= ``max_q``, otherwise through the constructive
    ordering only.
    """
    geom = posterior_geometry(channel, tol)
    full = adj = False
    perm = None
    if geom.collinear:
        perm = _exists_input_order(channel, True, tol, max_q)
        full = perm is not None
        perm_adj = perm if full else _exists_input_order(channel, False, tol, max_q)
        adj = perm_adj is not None
    return SegmentConditionsReport(geom.collinear, geom.sequential, full, adj, perm)
