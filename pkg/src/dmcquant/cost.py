"""Concave cell costs, segment costs w(l, r), and the alpha-MI family.

A quantizer's cost is the sum over cells of ``mass * phi(posterior)``, with
``phi`` concave on the probability simplex. For the alpha-MI family that
product is evaluated in homogeneous form directly from the (unnormalized)
joint vector ``b`` of a cell:

=============  =======================================
alpha = 1      -sum b ln b + a ln a   (a = sum b)
alpha = inf    -max_x b_x / px_x
alpha < 1      (sum px^(1-alpha) b^alpha)^(1/alpha)
alpha > 1      -(sum px^(1-alpha) b^alpha)^(1/alpha)
=============  =======================================

Natural logs are used internally; only the alpha = 1 branch depends on the
log base, through a single scale factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .channel import Channel, joint_prefix
from .quantizer import Assignment

ALPHA_ONE_TOL = 1e-9
NEG_TOL = 1e-15

ENTROPY, MAX_RATIO, POWER_LOW, POWER_HIGH, CUSTOM = 0, 1, 2, 3, -1


def _normalize_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive (got {alpha})")
    if abs(alpha - 1.0) < ALPHA_ONE_TOL:
        return 1.0
    return alpha


def parse_alpha(text: str | float) -> float:
    if isinstance(text, str) and text.strip().lower() in ("inf", "infinity", "oo"):
        return math.inf
    return _normalize_alpha(float(text))


@dataclass(frozen=True, eq=False)
class CostFamily:
    """The concave ``phi`` being minimized.

    Use :meth:`alpha_mi` for the alpha-MI family or :meth:`custom` for a
    caller-supplied concave function of a posterior vector.
    """

    px: np.ndarray
    alpha: float | None = 1.0
    log_base: float = 2.0
    func: Callable[[np.ndarray], float] | None = None
    _code: int = field(init=False, repr=False)
    _weights: np.ndarray = field(init=False, repr=False)
    _scale: float = field(init=False, repr=False)

    def __post_init__(self):
        px = np.array(self.px, dtype=float)
        px.setflags(write=False)
        object.__setattr__(self, "px", px)
        if self.func is not None:
            code, weights, scale = CUSTOM, np.ones_like(px), 1.0
        else:
            alpha = _normalize_alpha(self.alpha)
            object.__setattr__(self, "alpha", alpha)
            scale = 1.0
            if alpha == 1.0:
                code, weights = ENTROPY, np.ones_like(px)
                scale = 1.0 / math.log(self.log_base)
            elif math.isinf(alpha):
                code, weights = MAX_RATIO, 1.0 / px
            else:
                code = POWER_LOW if alpha < 1 else POWER_HIGH
                # px^(1-alpha) through logs so tiny priors with large alpha stay finite
                with np.errstate(over="ignore"):
                    weights = np.exp((1.0 - alpha) * np.log(px))
                if not np.all(np.isfinite(weights)):
                    raise ValueError(f"px^(1-alpha) overflows for alpha={alpha} and min prior {px.min():.3g}")
        weights = np.ascontiguousarray(weights, dtype=float)
        weights.setflags(write=False)
        object.__setattr__(self, "_code", code)
        object.__setattr__(self, "_weights", weights)
        object.__setattr__(self, "_scale", scale)

    @classmethod
    def alpha_mi(cls, px, alpha: float = 1.0, log_base: float = 2.0) -> "CostFamily":
        return cls(px, alpha, log_base)

    @classmethod
    def custom(cls, func: Callable[[np.ndarray], float], px, log_base: float = 2.0,
               check: bool = True, probes: int = 200, seed: int = 0) -> "CostFamily":
        """Wrap a concave ``func`` on the simplex.

        With ``check`` the midpoint inequality is probed on random pairs; the DP
        engines only return optimal quantizers when ``func`` is concave.
        """
        fam = cls(px, None, log_base, func)
        if check:
            check_midpoint_concavity(fam, probes, seed)
        return fam

    @property
    def kind(self) -> str:
        return "custom" if self._code == CUSTOM else "alpha"

    @property
    def q(self) -> int:
        return self.px.size

    def kernel_args(self) -> tuple[int, float, np.ndarray, float]:
        """(code, alpha, weights, scale) as consumed by the compiled kernels."""
        alpha = 0.0 if self.alpha is None or math.isinf(self.alpha) else float(self.alpha)
        return self._code, alpha, self._weights, self._scale

    def phi(self, dist) -> float:
        return phi(self, dist)

    def cell(self, b: Sequence[float]) -> float:
        """``mass * phi(b / mass)`` for one unnormalized joint vector ``b``."""
        code, w = self._code, self._weights
        b = [x if x > 0.0 else 0.0 for x in b]
        if code == ENTROPY:
            a = sum(b)
            s = a * math.log(a) if a > 0 else 0.0
            for x in b:
                if x > 0.0:
                    s -= x * math.log(x)
            return s * self._scale
        if code == MAX_RATIO:
            return -max(x * wi for x, wi in zip(b, w))
        if code == CUSTOM:
            a = sum(b)
            return a * float(self.func(np.asarray(b) / a))
        alpha = self.alpha
        s = sum(wi * x**alpha for x, wi in zip(b, w) if x > 0.0)
        v = s ** (1.0 / alpha)
        return v if code == POWER_LOW else -v

    def cells(self, b: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`cell` over the rows of a (k, q) array.

        Sums run column by column in a fixed order, so a row's value does not
        depend on how many other rows share the call.
        """
        b = np.maximum(np.asarray(b, dtype=float), 0.0)
        if b.ndim == 1:
            b = b[None, :]
        code, w = self._code, self._weights
        cols = b.T
        if code == ENTROPY:
            a = np.zeros(b.shape[0])
            for col in cols:
                a += col
            s = np.zeros_like(a)
            np.log(a, out=s, where=a > 0)
            s *= a
            tmp = np.zeros_like(a)
            for col in cols:
                tmp.fill(0.0)
                np.log(col, out=tmp, where=col > 0)
                s -= col * tmp
            return s * self._scale
        if code == MAX_RATIO:
            return -(b * w).max(axis=1)
        if code == CUSTOM:
            return np.array([self.cell(row) for row in b.tolist()])
        s = np.zeros(b.shape[0])
        for col, wi in zip(cols, w):
            s += wi * col**self.alpha
        v = s ** (1.0 / self.alpha)
        return v if code == POWER_LOW else -v

def phi(cost: CostFamily, dist) -> float:
    """Evaluate phi at a point of the simplex."""
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (cost.q,):
        raise ValueError(f"expected a length-{cost.q} distribution")
    if dist.min() < -NEG_TOL:
        raise ValueError(f"distribution has a negative entry {dist.min():.3e}")
    dist = np.maximum(dist, 0.0)
    if cost.kind == "custom":
        return float(cost.func(dist))
    # every alpha-family cell is homogeneous of degree one in b
    return cost.cell(dist / dist.sum())


def check_midpoint_concavity(cost: CostFamily, probes: int = 1000, seed: int = 0,
                             slack: float = 1e-12) -> None:
    rng = np.random.default_rng(seed)
    u = rng.dirichlet(np.ones(cost.q), size=probes)
    v = rng.dirichlet(np.ones(cost.q), size=probes)
    for a, b in zip(u, v):
        mid = phi(cost, (a + b) / 2)
        if mid < (phi(cost, a) + phi(cost, b)) / 2 - slack:
            raise ValueError(f"phi is not concave: midpoint of {a} and {b}")


# -- segment costs -----------------------------------------------------------


class SegmentCostView:
    """Segment cost ``w(l, r)`` (1-based, inclusive) over a channel's outputs.

    Costs are evaluated in O(q) from joint prefix sums. ``cache=True`` fills
    an O(N^2) table on first use.
    """

    def __init__(self, channel: Channel, cost: CostFamily, cache: bool = False):
        if cost.q != channel.q:
            raise ValueError("cost family and channel disagree on q")
        self.channel = channel
        self.cost = cost
        self.prefix = joint_prefix(channel)
        self.rows = np.ascontiguousarray(self.prefix.s.T)  # (N+1) x q
        self.n = channel.n
        self._table: np.ndarray | None = None
        self._compiled = _backend.compiled_for(cost)
        if cache:
            self.table()

    @property
    def cached(self) -> bool:
        return self._table is not None

    def table(self) -> np.ndarray:
        """(N+1) x (N+1) table of w(l, r); NaN where l > r or l = 0."""
        if self._table is None:
            if self._compiled is not None:
                tab = self._compiled.w_table(self.rows, *self.cost.kernel_args())
            else:
                tab = np.full((self.n + 1, self.n + 1), np.nan)
                for r in range(1, self.n + 1):
                    tab[1 : r + 1, r] = self.cost.cells(self.rows[r] - self.rows[:r])
            tab.setflags(write=False)
            self._table = tab
        return self._table

    def _w(self, l: int, r: int) -> float:
        if self._compiled is not None:
            return self._compiled.segment_cost(self.rows, *self.cost.kernel_args(), l, r)
        return float(self.cost.cells(self.rows[r] - self.rows[l - 1])[0])

    def w(self, l: int, r: int) -> float:
        if not 1 <= l <= r <= self.n:
            raise IndexError(f"segment ({l}, {r}) outside 1..{self.n}")
        if self._table is not None:
            return float(self._table[l, r])
        return self._w(l, r)

    def w_to(self, n: int, ts: np.ndarray) -> np.ndarray:
        """w(t + 1, n) for every t in ``ts`` (vectorized)."""
        if self._table is not None:
            return self._table[np.asarray(ts) + 1, n]
        return self.cost.cells(self.rows[n] - self.rows[np.asarray(ts)])


def segment_cost(view: SegmentCostView, l: int, r: int) -> float:
    return view.w(l, r)


def check_boundaries(boundaries: Sequence[int], n: int) -> tuple[int, ...]:
    b = tuple(int(x) for x in boundaries)
    if len(b) < 2 or b[0] != 0 or b[-1] != n or any(y <= x for x, y in zip(b, b[1:])):
        raise ValueError(f"boundaries must increase strictly from 0 to {n}: {list(b)}")
    return b


def sdq_cost(view: SegmentCostView, boundaries: Sequence[int]) -> float:
    b = check_boundaries(boundaries, view.n)
    total = 0.0
    for lo, hi in zip(b, b[1:]):
        total += view.w(lo + 1, hi)
    return total


def dq_cost(cost: CostFamily, joint: np.ndarray, assignment: Assignment) -> float:
    """Cost of a general deterministic quantizer from the q x N joint."""
    return float(sum(cost.cell(col) for col in assignment.aggregate(joint).T.tolist()))


def channel_cost(channel: Channel, cost: CostFamily, assignment: Assignment) -> float:
    return dq_cost(cost, channel.joint, assignment)


# -- information measures ----------------------------------------------------


def entropy(p, log_base: float = 2.0) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum() / math.log(log_base))


def alpha_mi(pxz, alpha: float = 1.0, log_base: float = 2.0) -> float:
    """alpha-mutual information of a joint P(x, z) given as a q x M matrix."""
    pxz = np.asarray(pxz, dtype=float)
    alpha = _normalize_alpha(alpha)
    if pxz.min() < 0:
        raise ValueError("joint has negative entries")
    px = pxz.sum(axis=1)
    pz = pxz.sum(axis=0)
    ln = math.log(log_base)
    if alpha == 1.0:
        prod = np.outer(px, pz)
        mask = pxz > 0
        return float((pxz[mask] * np.log(pxz[mask] / prod[mask])).sum() / ln)
    keep = px > 0
    pzx = pxz[keep] / px[keep, None]
    if math.isinf(alpha):
        return math.log(pzx.max(axis=0).sum()) / ln
    inner = (px[keep, None] * pzx**alpha).sum(axis=0) ** (1.0 / alpha)
    return alpha / (alpha - 1.0) * math.log(inner.sum()) / ln


def cost_to_alpha_mi(cost_value: float, alpha: float, h_x: float | None = None,
                     log_base: float = 2.0) -> float:
    """Map an optimal alpha-family cost back to alpha-MI.

    ``h_x`` (H(X) in ``log_base`` units) is only needed for alpha = 1.
    """
    alpha = _normalize_alpha(alpha)
    ln = math.log(log_base)
    if alpha == 1.0:
        if h_x is None:
            raise ValueError("alpha = 1 needs H(X)")
        return h_x - cost_value
    arg = cost_value if alpha < 1 else -cost_value
    if not arg > 0:
        raise ValueError(f"cost {cost_value!r} is outside the domain for alpha = {alpha}")
    if math.isinf(alpha):
        return math.log(arg) / ln
    return alpha / (alpha - 1.0) * math.log(arg) / ln


def mutual_information(joint, log_base: float = 2.0) -> float:
    return alpha_mi(joint, 1.0, log_base)


def mi_gap(channel: Channel, assignment: Assignment, log_base: float = 2.0) -> float:
    """I(X;Y) - I(X;Z), the Shannon information lost by quantizing."""
    joint = channel.joint
    return mutual_information(joint, log_base) - mutual_information(assignment.aggregate(joint), log_base)
