"""Pure-Python kernels: the fallback when the compiled core is unavailable,
and the only path for custom ``phi`` functions.

DP kernels take a :class:`~dmcquant.cost.SegmentCostView`; greedy-combining
kernels take the cost family and the N x q matrix of joint columns. Return
values match the compiled kernels.
"""
from __future__ import annotations

import heapq

import numpy as np

from .smawk import UPPER, LazyMatrix, row_minima


def _tables(n: int, m: int):
    return np.full((n + 1, m + 1), np.inf), np.full((n + 1, m + 1), -1, dtype=np.intp)


def _first_layer(view, dp, sol):
    dp[1:, 1] = [view.w(1, k) for k in range(1, view.n + 1)]
    sol[1:, 1] = 0


def dp_standard(view, M: int):
    N = view.n
    dp, sol = _tables(N, M)
    _first_layer(view, dp, sol)
    evals = N
    for m in range(2, M + 1):
        for n in range(N - M + m, m - 1, -1):
            ts = np.arange(m - 1, n)
            vals = dp[ts, m - 1] + view.w_to(n, ts)
            k = int(np.argmin(vals))
            dp[n, m], sol[n, m] = vals[k], ts[k]
            evals += ts.size
    return dp, sol, evals


def dp_yao(view, M: int):
    N = view.n
    dp, sol = _tables(N, M)
    _first_layer(view, dp, sol)
    evals, widened = N, 0
    for m in range(2, M + 1):
        top = N - M + m
        for n in range(top, m - 1, -1):
            lo, hi = m - 1, n - 1
            if n < top:
                lo = max(lo, int(sol[n, m - 1]))
                hi = min(hi, int(sol[n + 1, m]))
            if lo > hi:
                lo, hi = m - 1, n - 1
                widened += 1
            ts = np.arange(lo, hi + 1)
            vals = dp[ts, m - 1] + view.w_to(n, ts)
            k = int(np.argmin(vals))
            dp[n, m], sol[n, m] = vals[k], ts[k]
            evals += ts.size
    return dp, sol, evals, widened


def dp_smawk(view, M: int):
    N = view.n
    dp, sol = _tables(N, M)
    _first_layer(view, dp, sol)
    evals = N
    size = N - M + 1
    for m in range(2, M + 1):
        prev = dp[:, m - 1]

        def entry(i, j, m=m, prev=prev):
            if j > i:
                return UPPER
            t = j + m - 1
            return prev[t] + view.w(t + 1, i + m)

        mat = LazyMatrix(size, size, entry)
        cols = row_minima(mat)
        for i, j in enumerate(cols):
            n, t = i + m, j + m - 1
            sol[n, m] = t
            dp[n, m] = prev[t] + view.w(t + 1, n)
        evals += mat.evaluations + size
    return dp, sol, evals


def check_qi(view, tol: float):
    N = view.n
    tab = np.full((N + 2, N + 2), np.nan)
    for r in range(1, N + 1):
        tab[1 : r + 1, r] = view.w_to(r, np.arange(r))
    r = np.arange(1, N - 1)[:, None]
    s = np.arange(2, N)[None, :]
    slack = tab[r, s + 1] + tab[r + 1, s] - tab[r, s] - tab[r + 1, s + 1]
    slack = np.where(s > r, slack, np.inf)
    if slack.size == 0:
        return np.inf, None, N * (N + 1) // 2
    bad = np.argwhere(slack < -tol)
    first = (int(bad[0][0]) + 1, int(bad[0][1]) + 2) if bad.size else None
    return float(slack.min()), first, N * (N + 1) // 2


# -- greedy combining -----------------------------------------------------------


def _pair_losses(cost, J, cell, a_idx, b_idx):
    # merged vector is always J[a] + J[b] with a the smaller id
    return cost.cells(J[a_idx] + J[b_idx]) - cell[a_idx] - cell[b_idx]


def _labels(parent, n):
    labels = np.empty(n, dtype=np.intp)
    seen: dict[int, int] = {}
    for j in range(n):
        root = j
        while parent[root] >= 0:
            root = parent[root]
        labels[j] = seen.setdefault(root, len(seen))
    return labels


def _setup(cost, joints):
    N, q = joints.shape
    J = np.zeros((2 * N, q))
    J[:N] = joints
    cell = np.zeros(2 * N)
    cell[:N] = cost.cells(J[:N])
    return J, cell, np.full(2 * N, -1, dtype=np.intp)


def _merge(cost, J, cell, parent, a, b, new_id):
    J[new_id] = J[a] + J[b]
    cell[new_id] = cost.cells(J[new_id : new_id + 1])[0]
    parent[a] = parent[b] = new_id


def gc_naive(cost, joints: np.ndarray, M: int):
    N = joints.shape[0]
    J, cell, parent = _setup(cost, joints)
    alive = list(range(N))
    losses = np.empty(N - M)
    evals = 0
    for stage in range(N - M):
        ids = np.asarray(alive)
        ia, ib = np.triu_indices(ids.size, k=1)
        a_idx, b_idx = ids[ia], ids[ib]
        vals = _pair_losses(cost, J, cell, a_idx, b_idx)
        evals += vals.size
        # pairs are enumerated in (a, b) lexicographic order, so argmin breaks ties
        k = int(np.argmin(vals))
        a, b = int(a_idx[k]), int(b_idx[k])
        losses[stage] = vals[k]
        new_id = N + stage
        _merge(cost, J, cell, parent, a, b, new_id)
        alive = [x for x in alive if x != a and x != b] + [new_id]
    return _labels(parent, N), losses, evals


def gc_heap(cost, joints: np.ndarray, M: int):
    N = joints.shape[0]
    J, cell, parent = _setup(cost, joints)
    ia, ib = np.triu_indices(N, k=1)
    vals = _pair_losses(cost, J, cell, ia, ib)
    heap = list(zip(vals.tolist(), ia.tolist(), ib.tolist()))
    heapq.heapify(heap)
    evals = len(heap)
    is_alive = np.zeros(2 * N, dtype=bool)
    is_alive[:N] = True
    alive = list(range(N))
    losses = np.empty(N - M)
    for stage in range(N - M):
        if stage > 0:
            new = N + stage - 1
            others = np.asarray(alive[:-1])
            vals = _pair_losses(cost, J, cell, others, np.full(others.size, new))
            evals += vals.size
            for loss, a in zip(vals.tolist(), others.tolist()):
                heapq.heappush(heap, (loss, a, new))
        while not (is_alive[heap[0][1]] and is_alive[heap[0][2]]):
            heapq.heappop(heap)
        loss, a, b = heapq.heappop(heap)
        losses[stage] = loss
        new_id = N + stage
        _merge(cost, J, cell, parent, a, b, new_id)
        is_alive[[a, b]] = False
        is_alive[new_id] = True
        alive = [x for x in alive if x != a and x != b] + [new_id]
    return _labels(parent, N), losses, evals
