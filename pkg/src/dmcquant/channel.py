"""Discrete memoryless channels: validation, relabelling, geometry and PAM synthesis."""
from __future__ import annotations

import graphlib
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Mapping, Sequence

import numpy as np

PROB_TOL = 1e-12


class ChannelError(ValueError):
    """Raised when a channel violates one of its standing assumptions."""


@dataclass(frozen=True, eq=False)
class Channel:
    """A q-ary input DMC given by its input prior and transition matrix.

    ``pyx[i, j]`` is P(y_j | x_i). Arrays are copied and frozen on construction,
    and the standing assumptions are checked (see :func:`validate`).
    """

    px: np.ndarray
    pyx: np.ndarray
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        px = np.array(self.px, dtype=float)
        pyx = np.array(self.pyx, dtype=float)
        px.setflags(write=False)
        pyx.setflags(write=False)
        object.__setattr__(self, "px", px)
        object.__setattr__(self, "pyx", pyx)
        validate(self)

    @classmethod
    def unchecked(cls, px, pyx) -> "Channel":
        """Build a channel without validation (for testing :func:`validate`)."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "px", np.array(px, dtype=float))
        object.__setattr__(obj, "pyx", np.array(pyx, dtype=float))
        object.__setattr__(obj, "meta", {})
        return obj

    @property
    def q(self) -> int:
        return self.pyx.shape[0]

    @property
    def n(self) -> int:
        return self.pyx.shape[1]

    @property
    def joint(self) -> np.ndarray:
        """q x n matrix of P(x_i, y_j)."""
        return self.px[:, None] * self.pyx

    @property
    def py(self) -> np.ndarray:
        return self.joint.sum(axis=0)

    @property
    def posteriors(self) -> np.ndarray:
        """n x q matrix whose row j is P(X | y_j)."""
        joint = self.joint
        return (joint / joint.sum(axis=0)).T

    def permute_outputs(self, perm: Sequence[int]) -> "Channel":
        """Channel whose output k is output ``perm[k]`` of this one."""
        return Channel(self.px, self.pyx[:, np.asarray(perm)])

    def permute_inputs(self, perm: Sequence[int]) -> "Channel":
        """Channel whose input k is input ``perm[k]`` of this one."""
        perm = np.asarray(perm)
        return Channel(self.px[perm], self.pyx[perm])

    def __repr__(self):
        return f"Channel(q={self.q}, n={self.n})"


def bsc(p: float, prior: float = 0.5) -> Channel:
    """Binary symmetric channel with crossover probability ``p``."""
    return Channel([prior, 1 - prior], [[1 - p, p], [p, 1 - p]])


def validate(channel: Channel) -> None:
    """Check every standing assumption; raise :class:`ChannelError` on the first failure."""
    px, pyx = channel.px, channel.pyx
    if px.ndim != 1 or pyx.ndim != 2 or pyx.shape[0] != px.shape[0]:
        raise ChannelError(f"shape mismatch: px {px.shape}, pyx {pyx.shape}")
    q, n = pyx.shape
    if q < 2 or n < 2:
        raise ChannelError(f"alphabet sizes must be >= 2 (q={q}, n={n})")
    if not (np.all(np.isfinite(px)) and np.all(np.isfinite(pyx))):
        raise ChannelError("non-finite probability")
    bad = np.flatnonzero(px <= 0)
    if bad.size:
        i = int(bad[0])
        raise ChannelError(f"input prior px[{i}] = {px[i]!r} is not positive")
    dev = abs(px.sum() - 1.0)
    if dev > PROB_TOL:
        raise ChannelError(f"input prior sum deviates from 1 by {dev:.3e}")
    bad = np.argwhere((pyx < 0) | (pyx > 1))
    if bad.size:
        i, j = (int(v) for v in bad[0])
        raise ChannelError(f"transition pyx[{i}][{j}] = {pyx[i, j]!r} outside [0, 1]")
    dev = np.abs(pyx.sum(axis=1) - 1.0)
    i = int(np.argmax(dev))
    if dev[i] > PROB_TOL:
        raise ChannelError(f"row sum of pyx[{i}] deviates from 1 by {dev[i]:.3e}")
    py = px @ pyx
    bad = np.flatnonzero(py <= 0)
    if bad.size:
        j = int(bad[0])
        raise ChannelError(f"zero output mass at y[{j}] (py = {py[j]!r})")


# -- prefix sums -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointPrefix:
    """``s[i, k]`` = sum of P(x_i, y_j) over j <= k (1-based k), ``s[i, 0] = 0``."""

    s: np.ndarray

    @property
    def q(self) -> int:
        return self.s.shape[0]

    @property
    def n(self) -> int:
        return self.s.shape[1] - 1


def joint_prefix(channel: Channel) -> JointPrefix:
    joint = channel.joint
    s = np.zeros((channel.q, channel.n + 1))
    np.cumsum(joint, axis=1, out=s[:, 1:])
    s.setflags(write=False)
    return JointPrefix(s)


# -- posterior geometry ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PosteriorGeometry:
    """Posterior points P(X|y_j) and their position on a line, when they lie on one.

    When collinear, ``delta[j] ~= delta[0] + t[j] * direction``; ``direction``
    points at the posterior farthest from ``delta[0]``, so ``max |t| = 1``.
    """

    delta: np.ndarray
    collinear: bool
    t: np.ndarray | None
    direction: np.ndarray | None
    sequential: bool
    degenerate: bool = False
    residual: float = 0.0


def posterior_geometry(channel: Channel, tol: float = 1e-9) -> PosteriorGeometry:
    delta = channel.posteriors
    n, q = delta.shape
    base = delta[0]
    offsets = delta - base
    spread = np.abs(offsets).max(axis=1)
    if spread.max() <= tol:
        return PosteriorGeometry(delta, True, np.zeros(n), np.zeros(q), True, degenerate=True)

    anchor = int(np.argmax(spread > tol))
    d = offsets[anchor]
    t = offsets @ d / (d @ d)
    far = int(np.argmax(np.abs(t)))
    t = t / t[far]
    direction = offsets[far]
    residual = float(np.abs(offsets - np.outer(t, direction)).max())
    scale = float(np.abs(direction).max())
    collinear = residual <= tol * max(scale, 1.0) if q > 2 else True
    sequential = bool(
        collinear
        and abs(t[0]) <= tol
        and abs(t[-1] - 1.0) <= tol
        and np.all(np.diff(t) >= -tol)
    )
    return PosteriorGeometry(delta, bool(collinear), t, direction, sequential, residual=residual)


# -- relabelling -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Labeling:
    """A relabelling: new position k holds the old element ``perm[k]`` (0-based)."""

    perm: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.intp)
        if sorted(perm.tolist()) != list(range(perm.size)):
            raise ValueError("labeling is not a permutation")
        perm.setflags(write=False)
        object.__setattr__(self, "perm", perm)

    @classmethod
    def identity(cls, n: int) -> "Labeling":
        return cls(np.arange(n))

    @property
    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.perm.size)
        return inv

    def is_identity(self) -> bool:
        return bool(np.all(self.perm == np.arange(self.perm.size)))

    def one_based(self) -> tuple[int, ...]:
        return tuple(int(p) + 1 for p in self.perm)

    def __len__(self):
        return self.perm.size


def relabel_outputs_sequential(channel: Channel, tol: float = 1e-9) -> tuple[Channel, Labeling]:
    """Sort outputs along the posterior line so the geometry becomes sequential."""
    geom = posterior_geometry(channel, tol)
    if not geom.collinear:
        raise ChannelError("posteriors are not collinear; no sequential relabelling exists")
    perm = np.argsort(geom.t, kind="stable")
    labeling = Labeling(perm)
    if labeling.is_identity():
        return channel, labeling
    return channel.permute_outputs(perm), labeling


@dataclass(frozen=True)
class DominanceReport:
    holds: bool
    violation: tuple[int, int, int, int] | None = None

    def __bool__(self):
        return self.holds


def _minor_ok(a, b, c, d, tol):
    # a*d >= b*c, tolerance relative to the larger product
    lhs, rhs = a * d, b * c
    return lhs - rhs >= -tol * max(lhs, rhs)


def check_dominance(channel: Channel, tol: float = 1e-9, strict: bool = False) -> DominanceReport:
    """Likelihood-ratio dominance of consecutive input rows.

    Checks P(y_j|x_i) P(y_j'|x_i') >= P(y_j'|x_i) P(y_j|x_i') for i < i', j < j'.
    By default only adjacent (i, i+1), (j, j+1) pairs are scanned; ``strict``
    scans every quadruple. Violations are reported 0-based as (i, i', j, j').
    """
    p = channel.pyx
    q, n = p.shape
    if not strict:
        lhs = p[:-1, :-1] * p[1:, 1:]
        rhs = p[:-1, 1:] * p[1:, :-1]
        bad = np.argwhere(lhs - rhs < -tol * np.maximum(lhs, rhs))
        if bad.size:
            i, j = (int(v) for v in bad[0])
            return DominanceReport(False, (i, i + 1, j, j + 1))
        return DominanceReport(True)
    for i, i2 in itertools.combinations(range(q), 2):
        v = _pair_violation(p[i], p[i2], tol)
        if v is not None:
            return DominanceReport(False, (i, i2, *v))
    return DominanceReport(True)


def _pair_violation(a: np.ndarray, b: np.ndarray, tol: float):
    lhs = np.outer(a, b)  # a_j b_j'
    rhs = lhs.T  # a_j' b_j
    upper = np.triu(np.ones_like(lhs, dtype=bool), k=1)
    bad = np.argwhere(upper & (lhs - rhs < -tol * np.maximum(lhs, rhs)))
    if bad.size:
        return int(bad[0][0]), int(bad[0][1])
    return None


def dominates(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """``a`` dominates ``b``: a_j b_j' >= a_j' b_j for every j < j'."""
    return _pair_violation(np.asarray(a), np.asarray(b), tol) is None


def relabel_inputs_dominant(channel: Channel, tol: float = 1e-9) -> tuple[Channel, Labeling, bool]:
    """Permute inputs so that every earlier row dominates every later one.

    Collinear posteriors use the ordering by d_i / P(x_i|y_1) along the line
    direction (rows with zero posterior at y_1 go last). Otherwise the pairwise
    dominance relation is topologically sorted. ``satisfied`` reports whether
    the permuted channel passes the strict dominance check.
    """
    geom = posterior_geometry(channel, tol)
    q = channel.q
    if geom.collinear and not geom.degenerate:
        first = geom.delta[0]
        # direction from the first output towards the rest of the line
        d = geom.direction if geom.t[-1] >= 0 else -geom.direction
        key = [(1, 0.0, i) if first[i] <= 0 else (0, d[i] / first[i], i) for i in range(q)]
        perm = [k[2] for k in sorted(key)]
    else:
        sorter = graphlib.TopologicalSorter({i: set() for i in range(q)})
        for i, i2 in itertools.permutations(range(q), 2):
            if dominates(channel.pyx[i], channel.pyx[i2], tol) and not dominates(
                channel.pyx[i2], channel.pyx[i], tol
            ):
                sorter.add(i2, i)
        try:
            perm = list(sorter.static_order())
        except graphlib.CycleError:
            perm = list(range(q))
    labeling = Labeling(perm)
    out = channel if labeling.is_identity() else channel.permute_inputs(perm)
    return out, labeling, check_dominance(out, tol, strict=True).holds


# -- PAM over AWGN -----------------------------------------------------------


@dataclass(frozen=True)
class PamSpec:
    """q-PAM over AWGN, uniformly pre-quantized to ``n`` output cells.

    Interior thresholds run uniformly from ``lo`` to ``hi``; by default these are
    ``levels[0] - coverage*sigma`` and ``levels[-1] + coverage*sigma``.
    """

    levels: tuple[float, ...]
    sigma: float
    n: int
    coverage: float = 3.0
    lo: float | None = None
    hi: float | None = None
    prior: tuple[float, ...] | None = None

    @classmethod
    def standard(cls, q: int, sigma: float, n: int, spacing: float = 2.0, **kw) -> "PamSpec":
        """Levels ``spacing * (i - (q+1)/2)``; the default spacing gives x_i = 2i - q - 1."""
        levels = tuple(spacing * (i - (q + 1) / 2) for i in range(1, q + 1))
        return cls(levels, sigma, n, **kw)

    @property
    def q(self) -> int:
        return len(self.levels)

    def thresholds(self) -> np.ndarray:
        """gamma_0 .. gamma_n with infinite end points."""
        lo = self.levels[0] - self.coverage * self.sigma if self.lo is None else self.lo
        hi = self.levels[-1] + self.coverage * self.sigma if self.hi is None else self.hi
        gamma = np.empty(self.n + 1)
        gamma[0], gamma[-1] = -math.inf, math.inf
        gamma[1:-1] = np.linspace(lo, hi, self.n - 1)
        return gamma


def _upper_tail(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _normal_mass(za: float, zb: float) -> float:
    """P(za < Z <= zb) for standard normal Z, avoiding cancellation in either tail."""
    if za >= 0:
        return _upper_tail(za) - _upper_tail(zb)
    if zb <= 0:
        return _upper_tail(-zb) - _upper_tail(-za)
    return 1.0 - _upper_tail(-za) - _upper_tail(zb)


def discretize_pam(spec: PamSpec) -> Channel:
    if spec.n < 3:
        raise ChannelError(f"PAM discretization needs n >= 3 (got {spec.n})")
    if spec.sigma <= 0:
        raise ChannelError("sigma must be positive")
    if any(b <= a for a, b in zip(spec.levels, spec.levels[1:])):
        raise ChannelError("PAM levels must be strictly increasing")
    gamma = spec.thresholds()
    if np.any(np.diff(gamma[1:-1]) <= 0):
        raise ChannelError("threshold grid is not increasing")
    pyx = np.empty((spec.q, spec.n))
    for i, x in enumerate(spec.levels):
        z = (gamma - x) / spec.sigma
        for j in range(spec.n):
            pyx[i, j] = _normal_mass(z[j], z[j + 1])
    renormalized = bool(np.any(np.abs(pyx.sum(axis=1) - 1.0) > PROB_TOL))
    if renormalized:
        pyx = pyx / pyx.sum(axis=1, keepdims=True)
    q = spec.q
    px = np.full(q, 1.0 / q) if spec.prior is None else np.asarray(spec.prior, dtype=float)
    meta = {"gamma": gamma[1:-1].tolist(), "renormalized": renormalized, "levels": list(spec.levels),
            "sigma": spec.sigma}
    return Channel(px, pyx, meta)


# -- file format -------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps_channel(channel: Channel) -> str:
    rows = ",\n    ".join("[" + ", ".join(_fmt(v) for v in row) + "]" for row in channel.pyx)
    parts = [
        f'  "q": {channel.q}',
        f'  "n": {channel.n}',
        '  "px": [' + ", ".join(_fmt(v) for v in channel.px) + "]",
        '  "pyx": [\n    ' + rows + "\n  ]",
    ]
    if channel.meta:
        parts.append('  "meta": ' + json.dumps(channel.meta, sort_keys=True))
    return "{\n" + ",\n".join(parts) + "\n}\n"


def channel_from_dict(doc: Mapping[str, Any]) -> Channel:
    try:
        px, pyx = doc["px"], doc["pyx"]
    except KeyError as e:
        raise ChannelError(f"channel document lacks field {e.args[0]!r}") from None
    channel = Channel(px, pyx, dict(doc.get("meta", {})))
    for key, actual in (("q", channel.q), ("n", channel.n)):
        if key in doc and int(doc[key]) != actual:
            raise ChannelError(f"declared {key}={doc[key]} but arrays give {actual}")
    return channel


def loads_channel(text: str) -> Channel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ChannelError(f"malformed channel file: {e}") from None
    return channel_from_dict(doc)


def write_channel(channel: Channel, dest: str | Path | IO[str]) -> None:
    text = dumps_channel(channel)
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)


def read_channel(src: str | Path | IO[str]) -> Channel:
    text = src.read() if hasattr(src, "read") else Path(src).read_text()
    return loads_channel(text)
