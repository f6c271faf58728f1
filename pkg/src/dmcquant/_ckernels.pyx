# cython: language_level=3
"""Compiled kernels for the alpha-MI cost family.

Every function takes the cost family as (code, alpha, weights, scale), see
``CostFamily.kernel_args``, and segment data as the (N+1) x q matrix of joint
prefix sums. Indices follow the 1-based output convention of the Python API.
"""
from libc.math cimport log, pow, INFINITY
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

import numpy as np


cdef struct Cost:
    int code
    int q
    double alpha
    double inv_alpha
    const double* w
    double scale


cdef struct Ctx:
    Cost cost
    const double* rows
    double* buf
    long long evals


cdef inline double cell_cost(const Cost* c, const double* b) noexcept nogil:
    cdef int i
    cdef double x, a, s, v
    if c.code == 0:
        a = 0.0
        for i in range(c.q):
            if b[i] > 0.0:
                a += b[i]
        s = a * log(a) if a > 0.0 else 0.0
        for i in range(c.q):
            x = b[i]
            if x > 0.0:
                s -= x * log(x)
        return s * c.scale
    if c.code == 1:
        v = b[0] * c.w[0] if b[0] > 0.0 else 0.0
        for i in range(1, c.q):
            x = b[i] * c.w[i] if b[i] > 0.0 else 0.0
            if x > v:
                v = x
        return -v
    s = 0.0
    for i in range(c.q):
        x = b[i]
        if x > 0.0:
            s += c.w[i] * pow(x, c.alpha)
    v = pow(s, c.inv_alpha)
    return v if c.code == 2 else -v


cdef inline double seg(Ctx* c, int l, int r) noexcept nogil:
    cdef int i, q = c.cost.q
    cdef const double* hi = c.rows + r * q
    cdef const double* lo = c.rows + (l - 1) * q
    for i in range(q):
        c.buf[i] = hi[i] - lo[i]
    c.evals += 1
    return cell_cost(&c.cost, c.buf)


cdef Cost make_cost(int code, double alpha, const double[::1] weights, double scale):
    cdef Cost c
    c.code = code
    c.q = weights.shape[0]
    c.alpha = alpha
    c.inv_alpha = 1.0 / alpha if alpha > 0.0 else 0.0
    c.w = &weights[0]
    c.scale = scale
    return c


cdef void init_ctx(Ctx* c, const double[:, ::1] rows, int code, double alpha,
                   const double[::1] weights, double scale):
    c.cost = make_cost(code, alpha, weights, scale)
    c.rows = &rows[0, 0]
    c.buf = <double*> malloc(c.cost.q * sizeof(double))
    c.evals = 0


def segment_cost(const double[:, ::1] rows, int code, double alpha,
                 const double[::1] weights, double scale, int l, int r):
    cdef Ctx c
    init_ctx(&c, rows, code, alpha, weights, scale)
    cdef double v = seg(&c, l, r)
    free(c.buf)
    return v


def cell_costs(const double[:, ::1] joints, int code, double alpha,
               const double[::1] weights, double scale):
    """Cell cost of every row of a (k, q) matrix of joint vectors."""
    cdef Cost c = make_cost(code, alpha, weights, scale)
    cdef Py_ssize_t k, n = joints.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    for k in range(n):
        o[k] = cell_cost(&c, &joints[k, 0])
    return out


def w_table(const double[:, ::1] rows, int code, double alpha,
            const double[::1] weights, double scale):
    cdef Ctx c
    cdef int n = rows.shape[0] - 1, l, r
    init_ctx(&c, rows, code, alpha, weights, scale)
    tab = np.full((n + 1, n + 1), np.nan)
    cdef double[:, ::1] t = tab
    for l in range(1, n + 1):
        for r in range(l, n + 1):
            t[l, r] = seg(&c, l, r)
    free(c.buf)
    return tab


# -- dynamic programming -------------------------------------------------------


cdef void first_layer(Ctx* c, double[:, ::1] dp, Py_ssize_t[:, ::1] sol, int n) noexcept nogil:
    cdef int k
    for k in range(1, n + 1):
        dp[k, 1] = seg(c, 1, k)
        sol[k, 1] = 0


def _tables(int n, int m):
    dp = np.full((n + 1, m + 1), np.inf)
    sol = np.full((n + 1, m + 1), -1, dtype=np.intp)
    return dp, sol


def dp_standard(const double[:, ::1] rows, int code, double alpha,
                const double[::1] weights, double scale, int M):
    """Full-window DP. Returns (dp, sol, evaluations)."""
    cdef Ctx c
    cdef int N = rows.shape[0] - 1, m, n, t, bt
    cdef double best, v
    init_ctx(&c, rows, code, alpha, weights, scale)
    dp_arr, sol_arr = _tables(N, M)
    cdef double[:, ::1] dp = dp_arr
    cdef Py_ssize_t[:, ::1] sol = sol_arr
    with nogil:
        first_layer(&c, dp, sol, N)
        for m in range(2, M + 1):
            for n in range(N - M + m, m - 1, -1):
                best = INFINITY
                bt = -1
                for t in range(m - 1, n):
                    v = dp[t, m - 1] + seg(&c, t + 1, n)
                    if v < best:
                        best = v
                        bt = t
                dp[n, m] = best
                sol[n, m] = bt
    free(c.buf)
    return dp_arr, sol_arr, c.evals


def dp_yao(const double[:, ::1] rows, int code, double alpha,
           const double[::1] weights, double scale, int M):
    """DP with the window sol(n, m-1) <= t <= sol(n+1, m).

    Returns (dp, sol, evaluations, widened) where ``widened`` counts cells whose
    window came out empty and fell back to the full range.
    """
    cdef Ctx c
    cdef int N = rows.shape[0] - 1, m, n, t, bt, lo, hi, top
    cdef long long widened = 0
    cdef double best, v
    init_ctx(&c, rows, code, alpha, weights, scale)
    dp_arr, sol_arr = _tables(N, M)
    cdef double[:, ::1] dp = dp_arr
    cdef Py_ssize_t[:, ::1] sol = sol_arr
    with nogil:
        first_layer(&c, dp, sol, N)
        for m in range(2, M + 1):
            top = N - M + m
            for n in range(top, m - 1, -1):
                lo = m - 1
                hi = n - 1
                if n < top:
                    if sol[n, m - 1] > lo:
                        lo = <int> sol[n, m - 1]
                    if sol[n + 1, m] < hi:
                        hi = <int> sol[n + 1, m]
                if lo > hi:
                    lo = m - 1
                    hi = n - 1
                    widened += 1
                best = INFINITY
                bt = -1
                for t in range(lo, hi + 1):
                    v = dp[t, m - 1] + seg(&c, t + 1, n)
                    if v < best:
                        best = v
                        bt = t
                dp[n, m] = best
                sol[n, m] = bt
    free(c.buf)
    return dp_arr, sol_arr, c.evals, widened


cdef struct Layer:
    Ctx* ctx
    double* prev      # dp[., m-1], strided by M+1
    int stride
    int m


cdef inline double entry(Layer* L, int i, int j) noexcept nogil:
    # row i <-> n = i + m, column j <-> t = j + m - 1
    if j > i:
        return INFINITY
    cdef int t = j + L.m - 1
    return L.prev[t * L.stride] + seg(L.ctx, t + 1, i + L.m)


cdef void smawk(Layer* L, int* rows, int nr, int* cols, int nc,
                int* argmin, double* minval) noexcept nogil:
    if nr == 0:
        return
    cdef int* stack = <int*> malloc(nr * sizeof(int))
    cdef int* odd = <int*> malloc((nr // 2 + 1) * sizeof(int))
    cdef int sp = 0, k, col, r, start, stop, idx, best_col
    cdef double best, v
    for k in range(nc):
        col = cols[k]
        while sp > 0:
            r = rows[sp - 1]
            if entry(L, r, stack[sp - 1]) <= entry(L, r, col):
                break
            sp -= 1
        if sp < nr:
            stack[sp] = col
            sp += 1
    for k in range(nr // 2):
        odd[k] = rows[2 * k + 1]
    smawk(L, odd, nr // 2, stack, sp, argmin, minval)
    start = 0
    k = 0
    while k < nr:
        r = rows[k]
        if k + 1 < nr:
            stop = start
            while stack[stop] != argmin[rows[k + 1]]:
                stop += 1
        else:
            stop = sp - 1
        best_col = stack[start]
        best = entry(L, r, best_col)
        for idx in range(start + 1, stop + 1):
            v = entry(L, r, stack[idx])
            if v < best:
                best = v
                best_col = stack[idx]
        argmin[r] = best_col
        minval[r] = best
        start = stop
        k += 2
    free(stack)
    free(odd)


def dp_smawk(const double[:, ::1] rows, int code, double alpha,
             const double[::1] weights, double scale, int M):
    """Row minima of each layer matrix by SMAWK. Returns (dp, sol, evaluations)."""
    cdef Ctx c
    cdef int N = rows.shape[0] - 1, m, k, size = N - M + 1
    cdef Layer L
    init_ctx(&c, rows, code, alpha, weights, scale)
    dp_arr, sol_arr = _tables(N, M)
    cdef double[:, ::1] dp = dp_arr
    cdef Py_ssize_t[:, ::1] sol = sol_arr
    cdef int* idx = <int*> malloc(size * sizeof(int))
    cdef int* argmin = <int*> malloc(size * sizeof(int))
    cdef double* minval = <double*> malloc(size * sizeof(double))
    with nogil:
        first_layer(&c, dp, sol, N)
        for k in range(size):
            idx[k] = k
        L.ctx = &c
        L.stride = M + 1
        for m in range(2, M + 1):
            L.m = m
            L.prev = &dp[0, m - 1]
            smawk(&L, idx, size, idx, size, argmin, minval)
            for k in range(size):
                dp[k + m, m] = minval[k]
                sol[k + m, m] = argmin[k] + m - 1
    free(idx)
    free(argmin)
    free(minval)
    free(c.buf)
    return dp_arr, sol_arr, c.evals


def check_qi(const double[:, ::1] rows, int code, double alpha,
             const double[::1] weights, double scale, double tol):
    """Scan w(r,s+1) + w(r+1,s) - w(r,s) - w(r+1,s+1) over 1 <= r < s < N.

    Returns (min slack, first violating (r, s) or None, evaluations).
    """
    cdef Ctx c
    cdef int N = rows.shape[0] - 1, r, s, vr = -1, vs = -1
    cdef double a_rs, a_rs1, b_rs, b_rs1, slack, smin = INFINITY
    init_ctx(&c, rows, code, alpha, weights, scale)
    with nogil:
        for r in range(1, N - 1):
            a_rs = seg(&c, r, r + 1)        # w(r, s) with s = r + 1
            b_rs = seg(&c, r + 1, r + 1)    # w(r+1, s)
            for s in range(r + 1, N):
                a_rs1 = seg(&c, r, s + 1)
                b_rs1 = seg(&c, r + 1, s + 1)
                slack = a_rs1 + b_rs - a_rs - b_rs1
                if slack < smin:
                    smin = slack
                if slack < -tol and vr < 0:
                    vr = r
                    vs = s
                a_rs = a_rs1
                b_rs = b_rs1
    free(c.buf)
    return smin, ((vr, vs) if vr >= 0 else None), c.evals


# -- greedy combining ----------------------------------------------------------


cdef inline double merged_cost(Cost* c, const double* x, const double* y, double* buf) noexcept nogil:
    cdef int i
    for i in range(c.q):
        buf[i] = x[i] + y[i]
    return cell_cost(c, buf)


cdef inline bint key_less(double l1, int a1, int b1, double l2, int a2, int b2) noexcept nogil:
    if l1 != l2:
        return l1 < l2
    if a1 != a2:
        return a1 < a2
    return b1 < b2


cdef struct Heap:
    double* loss
    int* a
    int* b
    Py_ssize_t size


cdef inline void heap_swap(Heap* h, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef double tl = h.loss[i]
    cdef int ta = h.a[i], tb = h.b[i]
    h.loss[i] = h.loss[j]; h.a[i] = h.a[j]; h.b[i] = h.b[j]
    h.loss[j] = tl; h.a[j] = ta; h.b[j] = tb


cdef inline bint heap_lt(Heap* h, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    return key_less(h.loss[i], h.a[i], h.b[i], h.loss[j], h.a[j], h.b[j])


cdef void sift_down(Heap* h, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t child, smallest
    while True:
        smallest = i
        child = 2 * i + 1
        if child < h.size and heap_lt(h, child, smallest):
            smallest = child
        if child + 1 < h.size and heap_lt(h, child + 1, smallest):
            smallest = child + 1
        if smallest == i:
            return
        heap_swap(h, i, smallest)
        i = smallest


cdef void heap_push(Heap* h, double loss, int a, int b) noexcept nogil:
    cdef Py_ssize_t i = h.size, parent
    h.loss[i] = loss; h.a[i] = a; h.b[i] = b
    h.size += 1
    while i > 0:
        parent = (i - 1) // 2
        if not heap_lt(h, i, parent):
            break
        heap_swap(h, i, parent)
        i = parent


cdef void heap_pop(Heap* h) noexcept nogil:
    h.size -= 1
    if h.size > 0:
        h.loss[0] = h.loss[h.size]; h.a[0] = h.a[h.size]; h.b[0] = h.b[h.size]
        sift_down(h, 0)


def _gc_labels(parent, int n):
    labels = np.empty(n, dtype=np.intp)
    seen = {}
    for j in range(n):
        root = j
        while parent[root] >= 0:
            root = parent[root]
        labels[j] = seen.setdefault(root, len(seen))
    return labels


def gc_naive(const double[:, ::1] joints, int code, double alpha,
             const double[::1] weights, double scale, int M):
    """Greedy combining, recomputing every pair's loss at every stage.

    ``joints`` is N x q (row j = P(., y_j)). Returns (labels, stage losses,
    loss evaluations); labels are numbered by smallest member.
    """
    cdef Cost c = make_cost(code, alpha, weights, scale)
    cdef int N = joints.shape[0], q = joints.shape[1], cap = 2 * N
    cdef int stage, i, j, k, nalive, a, b, new_id, ba, bb
    cdef double loss, best
    cdef long long evals = 0
    J_arr = np.zeros((cap, q))
    J_arr[:N] = np.asarray(joints)
    cell_arr = np.zeros(cap)
    alive_arr = np.empty(cap, dtype=np.intc)
    parent_arr = np.full(cap, -1, dtype=np.intp)
    losses_arr = np.empty(N - M)
    cdef double[:, ::1] J = J_arr
    cdef double[::1] cell = cell_arr
    cdef int[::1] alive = alive_arr
    cdef Py_ssize_t[::1] parent = parent_arr
    cdef double[::1] losses = losses_arr
    cdef double* buf = <double*> malloc(q * sizeof(double))
    for i in range(N):
        cell[i] = cell_cost(&c, &J[i, 0])
        alive[i] = i
    nalive = N
    new_id = N
    with nogil:
        for stage in range(N - M):
            best = INFINITY
            ba = -1
            bb = -1
            for i in range(nalive):
                a = alive[i]
                for j in range(i + 1, nalive):
                    b = alive[j]
                    loss = merged_cost(&c, &J[a, 0], &J[b, 0], buf) - cell[a] - cell[b]
                    evals += 1
                    if ba < 0 or key_less(loss, a, b, best, ba, bb):
                        best = loss
                        ba = a
                        bb = b
            for k in range(q):
                J[new_id, k] = J[ba, k] + J[bb, k]
            cell[new_id] = cell_cost(&c, &J[new_id, 0])
            parent[ba] = new_id
            parent[bb] = new_id
            losses[stage] = best
            k = 0
            for i in range(nalive):
                if alive[i] != ba and alive[i] != bb:
                    alive[k] = alive[i]
                    k += 1
            alive[k] = new_id
            nalive = k + 1
            new_id += 1
    free(buf)
    return _gc_labels(parent_arr, N), losses_arr, evals


def gc_heap(const double[:, ::1] joints, int code, double alpha,
            const double[::1] weights, double scale, int M):
    """Greedy combining over a binary min-heap of pair losses with lazy deletion.

    Same outputs as :func:`gc_naive` (identical loss arithmetic and
    (loss, a, b) ordering).
    """
    cdef Cost c = make_cost(code, alpha, weights, scale)
    cdef int N = joints.shape[0], q = joints.shape[1], cap = 2 * N
    cdef int stage, i, j, k, nalive, a, b, new_id
    cdef long long evals = 0
    cdef Py_ssize_t hcap = <Py_ssize_t> N * N + N, p
    J_arr = np.zeros((cap, q))
    J_arr[:N] = np.asarray(joints)
    cell_arr = np.zeros(cap)
    isalive_arr = np.zeros(cap, dtype=np.intc)
    alive_arr = np.empty(cap, dtype=np.intc)
    parent_arr = np.full(cap, -1, dtype=np.intp)
    losses_arr = np.empty(N - M)
    cdef double[:, ::1] J = J_arr
    cdef double[::1] cell = cell_arr
    cdef int[::1] isalive = isalive_arr
    cdef int[::1] alive = alive_arr
    cdef Py_ssize_t[::1] parent = parent_arr
    cdef double[::1] losses = losses_arr
    cdef double* buf = <double*> malloc(q * sizeof(double))
    cdef Heap h
    h.loss = <double*> malloc(hcap * sizeof(double))
    h.a = <int*> malloc(hcap * sizeof(int))
    h.b = <int*> malloc(hcap * sizeof(int))
    h.size = 0
    for i in range(N):
        cell[i] = cell_cost(&c, &J[i, 0])
        alive[i] = i
        isalive[i] = 1
    nalive = N
    new_id = N
    with nogil:
        for i in range(N):
            for j in range(i + 1, N):
                p = h.size
                h.loss[p] = merged_cost(&c, &J[i, 0], &J[j, 0], buf) - cell[i] - cell[j]
                h.a[p] = i
                h.b[p] = j
                h.size += 1
                evals += 1
        p = h.size // 2
        while p > 0:
            p -= 1
            sift_down(&h, p)
        for stage in range(N - M):
            if stage > 0:
                b = new_id - 1
                for i in range(nalive - 1):
                    a = alive[i]
                    heap_push(&h, merged_cost(&c, &J[a, 0], &J[b, 0], buf) - cell[a] - cell[b], a, b)
                    evals += 1
            while not (isalive[h.a[0]] and isalive[h.b[0]]):
                heap_pop(&h)
            a = h.a[0]
            b = h.b[0]
            losses[stage] = h.loss[0]
            heap_pop(&h)
            for k in range(q):
                J[new_id, k] = J[a, k] + J[b, k]
            cell[new_id] = cell_cost(&c, &J[new_id, 0])
            parent[a] = new_id
            parent[b] = new_id
            isalive[a] = 0
            isalive[b] = 0
            isalive[new_id] = 1
            k = 0
            for i in range(nalive):
                if alive[i] != a and alive[i] != b:
                    alive[k] = alive[i]
                    k += 1
            alive[k] = new_id
            nalive = k + 1
            new_id += 1
    free(buf)
    free(h.loss)
    free(h.a)
    free(h.b)
    return _gc_labels(parent_arr, N), losses_arr, evals
