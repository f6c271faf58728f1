"""Optimal sequential quantizers by dynamic programming.

Three engines share one recursion

    dp(n, m) = min_{m-1 <= t < n} dp(t, m-1) + w(t+1, n),   dp(n, 1) = w(1, n)

and differ only in how the inner minimum is searched:

* ``dp_standard`` scans the full window, O(q (N-M)^2 M);
* ``dp_yao`` restricts t to [sol(n, m-1), sol(n+1, m)], valid under the
  quadrangle inequality (QI);
* ``dp_smawk`` treats each layer as a totally monotone matrix and finds its
  row minima by SMAWK, O(q (N-M) M) under QI.

Ties go to the smallest t in all three, so on QI instances they return the
same boundaries, not just the same cost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import _backend, _pykernels
from .cost import SegmentCostView, sdq_cost

ENUM_CAP = 10_000
QI_TOL = 1e-10


class QiViolation(ValueError):
    """Raised when an engine that needs the QI is run on a channel that fails it."""


@dataclass(frozen=True)
class DpTables:
    """dp and sol of shape (N+1) x (M+1); unfilled cells hold inf and -1."""

    dp: np.ndarray
    sol: np.ndarray

    def filled(self) -> np.ndarray:
        return self.sol >= 0


@dataclass(frozen=True)
class QiReport:
    holds: bool
    first_violation: tuple[int, int] | None
    slack_min: float
    tol: float = QI_TOL

    def __bool__(self):
        return self.holds


@dataclass
class SdqSolution:
    boundaries: tuple[int, ...]
    cost: float
    engine: str
    tables: DpTables | None = None
    counters: dict = field(default_factory=dict)
    all_optima: list[tuple[int, ...]] | None = None

    @property
    def M(self) -> int:
        return len(self.boundaries) - 1


def _check_levels(view: SegmentCostView, M: int) -> None:
    if not 2 <= M < view.n:
        raise ValueError(f"need 2 <= M < N (got M={M}, N={view.n})")


def _kernels(view: SegmentCostView):
    """(compiled module, args) when the compiled core can serve this view, else (None, None)."""
    mod = _backend.compiled_for(view.cost)
    if mod is None or view.cached:
        # a cached view is served from its table so every engine sees identical values
        return None, None
    return mod, (view.rows, *view.cost.kernel_args())


def backtrack(sol: np.ndarray, N: int, M: int) -> tuple[int, ...]:
    b = [N]
    n = N
    for m in range(M, 1, -1):
        n = int(sol[n, m])
        b.append(n)
    b.append(0)
    return tuple(reversed(b))


def _solution(view, M, engine, dp, sol, counters, keep_tables) -> SdqSolution:
    b = backtrack(sol, view.n, M)
    return SdqSolution(b, float(dp[view.n, M]), engine,
                       DpTables(dp, sol) if keep_tables else None, counters)


def dp_standard(view: SegmentCostView, M: int, tie_mode: Literal["first", "all"] = "first",
                keep_tables: bool = True, cap: int = ENUM_CAP) -> SdqSolution:
    """Optimal SDQ with M cells by a full-window scan.

    ``tie_mode="all"`` also enumerates every optimal boundary set (up to
    ``cap``) into ``all_optima``.
    """
    _check_levels(view, M)
    mod, args = _kernels(view)
    if mod is not None:
        dp, sol, evals = mod.dp_standard(*args, M)
    else:
        dp, sol, evals = _pykernels.dp_standard(view, M)
    out = _solution(view, M, "dp", dp, sol, {"w_evals": int(evals)}, keep_tables)
    if tie_mode == "all":
        optima, truncated = _enumerate(view, M, dp, cap)
        out.all_optima = optima
        out.counters["truncated"] = truncated
    elif tie_mode != "first":
        raise ValueError(f"unknown tie mode {tie_mode!r}")
    return out


def _require_qi(view: SegmentCostView, qi) -> QiReport | None:
    if qi is True or qi == "assume":
        return None
    report = qi if isinstance(qi, QiReport) else check_qi(view)
    return report


def dp_yao(view: SegmentCostView, M: int, qi: QiReport | bool | str | None = None,
           keep_tables: bool = True) -> SdqSolution:
    """DP with the monotone-window bound sol(n, m-1) <= sol(n, m) <= sol(n+1, m).

    ``qi`` is a :class:`QiReport`, ``True``/``"assume"`` to skip the check, or
    ``None`` to run :func:`check_qi`. Without a certificate the engine still
    returns a result; cells whose window came out empty are widened to the
    full range and counted in ``counters["widened"]``.
    """
    _check_levels(view, M)
    report = _require_qi(view, qi)
    mod, args = _kernels(view)
    if mod is not None:
        dp, sol, evals, widened = mod.dp_yao(*args, M)
    else:
        dp, sol, evals, widened = _pykernels.dp_yao(view, M)
    counters = {"w_evals": int(evals), "widened": int(widened),
                "qi_certified": report is None or report.holds}
    return _solution(view, M, "dp-yao", dp, sol, counters, keep_tables)


def dp_smawk(view: SegmentCostView, M: int, qi: QiReport | bool | str | None = None,
             keep_tables: bool = True) -> SdqSolution:
    """DP whose layers are solved as row-minima problems by SMAWK.

    Raises :class:`QiViolation` when the QI is checked and fails; pass
    ``qi=True`` to skip the check.
    """
    _check_levels(view, M)
    report = _require_qi(view, qi)
    if report is not None and not report.holds:
        r, s = report.first_violation
        raise QiViolation(f"quadrangle inequality fails at (r, s) = ({r}, {s}); "
                          "use dp_standard instead")
    mod, args = _kernels(view)
    if mod is not None:
        dp, sol, evals = mod.dp_smawk(*args, M)
    else:
        dp, sol, evals = _pykernels.dp_smawk(view, M)
    return _solution(view, M, "dp-smawk", dp, sol, {"w_evals": int(evals)}, keep_tables)


def check_qi(view: SegmentCostView, tol: float = QI_TOL) -> QiReport:
    """Scan the adjacent quadrangles w(r,s) + w(r+1,s+1) <= w(r,s+1) + w(r+1,s), 1 <= r < s < N.

    Adjacent quadrangles suffice: the general inequality is a sum of them.
    """
    mod, args = _kernels(view)
    if mod is not None:
        smin, first, _ = mod.check_qi(*args, tol)
    else:
        smin, first, _ = _pykernels.check_qi(view, tol)
    return QiReport(first is None, first, float(smin), tol)


def _enumerate(view: SegmentCostView, M: int, dp: np.ndarray, cap: int,
               rtol: float = 1e-12) -> tuple[list[tuple[int, ...]], bool]:
    """Walk back from dp(N, M) through every t that attains the minimum."""
    N = view.n
    out: list[tuple[int, ...]] = []

    def close(a, b):
        return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))

    def walk(n, m, suffix):
        if len(out) >= cap:
            return
        if m == 1:
            out.append((0, *suffix))
            return
        target = dp[n, m]
        for t in range(m - 1, n):
            if close(dp[t, m - 1] + view.w(t + 1, n), target):
                walk(t, m - 1, (t, *suffix))
                if len(out) >= cap:
                    return

    walk(N, M, (N,))
    return out, len(out) >= cap and _more_than(view, M, dp, cap, close)


def _more_than(view, M, dp, cap, close) -> bool:
    # count optimal paths (without materializing them) to tell "exactly cap" from truncation
    N = view.n
    count = {(t, 1): 1 for t in range(1, N + 1)}
    for m in range(2, M + 1):
        for n in range(m, N - M + m + 1):
            count[(n, m)] = sum(count[(t, m - 1)] for t in range(m - 1, n)
                                if close(dp[t, m - 1] + view.w(t + 1, n), dp[n, m]))
    return count[(N, M)] > cap


def enumerate_optimal(view: SegmentCostView, M: int, cap: int = ENUM_CAP):
    """All optimal boundary sets (at most ``cap``) and whether the list was truncated."""
    sol = dp_standard(view, M, tie_mode="all", cap=cap)
    return sol.all_optima, sol.counters["truncated"]


def solve(view: SegmentCostView, M: int, engine: str = "dp", qi=None) -> SdqSolution:
    """Dispatch by engine name: ``dp``, ``dp-yao`` or ``dp-smawk``."""
    if engine in ("dp", "dp-standard", "standard"):
        return dp_standard(view, M)
    if engine in ("dp-yao", "yao"):
        return dp_yao(view, M, qi)
    if engine in ("dp-smawk", "smawk"):
        return dp_smawk(view, M, qi)
    raise ValueError(f"unknown DP engine {engine!r}")


def verify(view: SegmentCostView, solution: SdqSolution, rtol: float = 1e-12) -> bool:
    c = sdq_cost(view, solution.boundaries)
    return math.isclose(c, solution.cost, rel_tol=rtol, abs_tol=rtol)
