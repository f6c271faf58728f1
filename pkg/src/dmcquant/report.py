"""Design runs packaged as reports that can be saved, reloaded and re-checked."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import baselines, dp as dpmod
from .channel import Channel
from .cost import CostFamily, SegmentCostView, alpha_mi, cost_to_alpha_mi, dq_cost, entropy, sdq_cost
from .idp import idp
from .quantizer import Assignment

ALGORITHMS = ("dp", "dp-yao", "dp-smawk", "gc", "gc-heap", "klmeans", "idp")
VERIFY_RTOL = 1e-12


def alpha_text(alpha: float) -> str | float:
    return "inf" if math.isinf(alpha) else alpha


def alpha_gap(channel: Channel, assignment: Assignment, alpha: float = 1.0,
              log_base: float = 2.0) -> float:
    """alpha-MI lost by quantizing; the Shannon MI gap for alpha = 1."""
    joint = channel.joint
    return alpha_mi(joint, alpha, log_base) - alpha_mi(assignment.aggregate(joint), alpha, log_base)


@dataclass
class DesignReport:
    """``cost`` and ``alpha_mi`` are in ``log_base`` units; ``mi_gap_bits`` is the Shannon gap in bits."""

    algorithm: str
    alpha: float
    log_base: float
    M: int
    cost: float
    mi_gap_bits: float
    alpha_mi: float
    boundaries: list[int] | None
    labels: list[int]
    wall_clock_s: float
    counters: dict = field(default_factory=dict)
    seed: int | None = None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alpha"] = alpha_text(self.alpha)
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "DesignReport":
        doc = dict(doc)
        doc["alpha"] = math.inf if doc["alpha"] == "inf" else float(doc["alpha"])
        return cls(**doc)

    @property
    def assignment(self) -> Assignment:
        return Assignment(self.labels, self.M)


def run_design(channel: Channel, alg: str, M: int, alpha: float = 1.0, log_base: float = 2.0,
               seed: int = 0, iters: int = 50, restarts: int = 100, kl_iters: int = 100,
               init: str = "gc", init_assignment: Assignment | None = None,
               assume_qi: bool = False, order_mode: str = "stable") -> DesignReport:
    """Run one designer and package the result.

    ``iters`` is the IDP iteration budget, ``restarts``/``kl_iters`` the
    KL-means restarts and iterations (also used for ``--init klmeans``).
    """
    if alg not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {alg!r}; choose from {', '.join(ALGORITHMS)}")
    cost = CostFamily(channel.px, alpha, log_base)
    config: dict[str, Any] = {}
    counters: dict[str, Any] = {}
    boundaries = None
    t0 = time.perf_counter()
    if alg.startswith("dp"):
        view = SegmentCostView(channel, cost)
        qi = True if assume_qi else None
        sol = dpmod.solve(view, M, alg, qi)
        assignment = Assignment.from_boundaries(sol.boundaries)
        value, boundaries = sol.cost, list(sol.boundaries)
        counters.update(sol.counters)
        config["assume_qi"] = assume_qi
    elif alg in ("gc", "gc-heap"):
        res = baselines.run_gc(channel, cost, M, heap=alg == "gc-heap")
        assignment = res.assignment
        counters["loss_evals"] = res.loss_evals
    elif alg == "klmeans":
        res = baselines.run_kl_means(channel, M, restarts, kl_iters, seed, log_base)
        assignment = res.assignment
        counters.update(best_restart=res.best_restart, iterations=int(sum(res.iterations)))
        config.update(restarts=restarts, iters=kl_iters)
    else:
        if init == "gc":
            q0 = baselines.greedy_combining_heap(channel, cost, M)
        elif init == "klmeans":
            q0 = baselines.kl_means(channel, M, restarts, kl_iters, seed)
            config.update(restarts=restarts, kl_iters=kl_iters)
        elif init == "file":
            if init_assignment is None:
                raise ValueError("--init file needs an initial assignment")
            q0 = init_assignment
        else:
            raise ValueError(f"unknown initializer {init!r}")
        assignment, state = idp(channel, cost, M, q0, iters, order_mode, seed)
        counters.update(init_cost=state.history[0], iterations=state.iteration,
                        stop_reason=state.stop_reason, history=state.history)
        config.update(init=init, iters=iters, order_mode=order_mode)
    wall = time.perf_counter() - t0
    if boundaries is None:
        value = dq_cost(cost, channel.joint, assignment)
        if assignment.is_sequential():
            boundaries = list(assignment.boundaries())
    return DesignReport(
        algorithm=alg,
        alpha=cost.alpha,
        log_base=log_base,
        M=M,
        cost=float(value),
        mi_gap_bits=alpha_gap(channel, assignment, 1.0, 2.0),
        alpha_mi=cost_to_alpha_mi(value, cost.alpha, entropy(channel.px, log_base), log_base),
        boundaries=boundaries,
        labels=assignment.labels.tolist(),
        wall_clock_s=wall,
        counters=counters,
        seed=seed,
        config=config,
    )


def load_report(src: str | Path) -> DesignReport:
    return DesignReport.from_dict(json.loads(Path(src).read_text()))


def verify_report(report: DesignReport, channel: Channel, rtol: float = VERIFY_RTOL) -> list[str]:
    """Recompute cost and MI gap from the stored quantizer; returns a list of mismatches."""
    problems = []
    cost = CostFamily(channel.px, report.alpha, report.log_base)
    a = report.assignment
    if a.n != channel.n:
        return [f"report has {a.n} labels but the channel has {channel.n} outputs"]
    checks = [("cost", dq_cost(cost, channel.joint, a), report.cost),
              ("mi_gap_bits", alpha_gap(channel, a), report.mi_gap_bits)]
    if report.boundaries is not None:
        checks.append(("sdq cost", sdq_cost(SegmentCostView(channel, cost), report.boundaries), report.cost))
        if not np.array_equal(Assignment.from_boundaries(report.boundaries).labels, a.labels):
            problems.append("boundaries and labels disagree")
    for name, got, stored in checks:
        if not math.isclose(got, stored, rel_tol=rtol, abs_tol=rtol):
            problems.append(f"{name}: stored {stored!r}, recomputed {got!r}")
    return problems
