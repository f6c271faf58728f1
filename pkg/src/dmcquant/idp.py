"""Iterative DP refinement of a general quantizer.

Each iteration relabels the outputs so that the incumbent's cells become
contiguous index blocks, solves for the optimal sequential quantizer under
that labelling, and maps the result back. The incumbent is itself a feasible
sequential quantizer under the new labels, so the cost never goes up.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import dp as dpmod
from .channel import Channel, Labeling
from .cost import CostFamily, SegmentCostView, dq_cost
from .quantizer import Assignment

STOP_TOL = 1e-12
DEFAULT_ITERS = 50


@dataclass
class IdpState:
    iteration: int
    incumbent: Assignment
    labeling: Labeling
    history: list[float] = field(default_factory=list)
    stop_reason: str = ""
    engine: str = "dp"
    fallbacks: int = 0

    @property
    def improvement(self) -> float:
        return self.history[0] - self.history[-1]


def relabel_for_incumbent(Q: Assignment, order_mode: Literal["stable", "random"] = "stable",
                          rng: np.random.Generator | int | None = None) -> Labeling:
    """A labelling under which every preimage of ``Q`` is a contiguous block.

    ``stable`` orders blocks by their smallest member and keeps the original
    order inside a block, so an assignment that is already sequential gets the
    identity. ``random`` shuffles both the block order and each block.
    """
    if not Q.is_surjective():
        raise ValueError("assignment does not use every label")
    blocks = Q.preimages()
    if order_mode == "stable":
        blocks.sort(key=lambda b: b[0])
    elif order_mode == "random":
        rng = np.random.default_rng(rng)
        blocks = [rng.permutation(blocks[z]) for z in rng.permutation(len(blocks))]
    else:
        raise ValueError(f"unknown order mode {order_mode!r}")
    return Labeling(np.concatenate(blocks))


def _solve(view, M, engine, state):
    if engine == "dp":
        return dpmod.dp_standard(view, M, keep_tables=False)
    report = dpmod.check_qi(view)
    if not report.holds:
        state.fallbacks += 1
        return dpmod.dp_standard(view, M, keep_tables=False)
    if engine == "dp-yao":
        return dpmod.dp_yao(view, M, report, keep_tables=False)
    return dpmod.dp_smawk(view, M, report, keep_tables=False)


def idp(channel: Channel, cost: CostFamily, M: int, Q0: Assignment, max_iters: int = DEFAULT_ITERS,
        order_mode: Literal["stable", "random"] = "stable", seed: int | None = 0,
        engine: str = "dp") -> tuple[Assignment, IdpState]:
    """Refine ``Q0`` for up to ``max_iters`` relabel-then-DP rounds.

    Stable mode stops once an iteration improves the cost by less than 1e-12;
    random mode always runs ``max_iters`` rounds. ``engine`` is ``dp`` or, to
    use the faster engines whenever the relabelled channel passes the QI
    check, ``dp-yao`` / ``dp-smawk`` (the check costs O(q N^2) per round).
    """
    if Q0.n != channel.n or Q0.M != M:
        raise ValueError("initial assignment does not match the channel and M")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    if engine not in ("dp", "dp-yao", "dp-smawk"):
        raise ValueError(f"unknown DP engine {engine!r}")
    rng = np.random.default_rng(seed)
    Q = Q0.canonical()
    state = IdpState(0, Q, Labeling.identity(channel.n), [dq_cost(cost, channel.joint, Q)],
                     engine=engine)
    for t in range(1, max_iters + 1):
        lab = relabel_for_incumbent(Q, order_mode, rng)
        view = SegmentCostView(channel.permute_outputs(lab.perm), cost)
        sol = _solve(view, M, engine, state)
        prev = state.history[-1]
        state.iteration, state.labeling = t, lab
        if sol.cost <= prev:
            labels = np.empty(channel.n, dtype=np.intp)
            labels[lab.perm] = Assignment.from_boundaries(sol.boundaries).labels
            Q = Assignment(labels, M).canonical()
            state.history.append(sol.cost)
        else:
            # rounding only: the incumbent was a feasible point of this DP
            state.history.append(prev)
        state.incumbent = Q
        if order_mode == "stable" and prev - state.history[-1] < STOP_TOL:
            state.stop_reason = "converged"
            break
    else:
        state.stop_reason = "max_iters"
    return Q, state
