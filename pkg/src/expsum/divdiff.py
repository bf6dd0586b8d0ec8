"""Divided differences: distinct-node forms, the confluent closed form for
e(x) = exp(x t), and simplex quadrature as an independent route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.special import roots_jacobi

from .errors import DimensionError, DomainError, DuplicateNodeError, NearCoincidentError

__all__ = [
    "COND_THRESHOLD",
    "REGROUP_GAP",
    "NodeMultiset",
    "DDResult",
    "dd_recurrence",
    "dd_lagrange",
    "confluent_exp_dd",
    "hermite_genocchi",
    "dirichlet_quadrature",
    "exp_derivative",
    "compositions",
]

COND_THRESHOLD = 1e8
REGROUP_GAP = 1e-9
MAX_HG_LOCATIONS = 6
_CHUNK = 1 << 20

METHODS = ("recurrence", "lagrange", "confluent-closed-form", "hermite-genocchi")


@dataclass(frozen=True)
class DDResult:
    value: float
    condition_estimate: float
    method: str

    @property
    def flagged(self) -> bool:
        """True when cancellation may have cost more than ~8 digits."""
        return self.condition_estimate > COND_THRESHOLD


@dataclass(frozen=True)
class NodeMultiset:
    """Distinct node locations in ascending order, each with a multiplicity."""

    nodes: tuple[tuple[float, int], ...]

    def __post_init__(self):
        if not self.nodes:
            raise DomainError("a node multiset needs at least one node")
        locs = [loc for loc, _ in self.nodes]
        for loc, mult in self.nodes:
            if not math.isfinite(loc):
                raise DomainError(f"node location must be finite, got {loc}")
            if int(mult) != mult or mult < 1:
                raise DomainError(f"multiplicity must be a positive integer, got {mult}")
        if any(b <= a for a, b in zip(locs, locs[1:])):
            raise DomainError("node locations must be strictly ascending; use from_points")

    @classmethod
    def from_points(cls, points: Sequence[float], mode: str = "strict",
                    rel_gap: float = REGROUP_GAP) -> "NodeMultiset":
        """Group a list of (possibly repeated) points.

        Exactly equal points always merge.  Points that differ by less than
        ``rel_gap * max|point|`` raise in ``"strict"`` mode, merge at their
        mean in ``"regroup"`` mode and are left alone in ``"keep"`` mode.
        """
        return cls.from_pairs([(float(p), 1) for p in points], mode, rel_gap)

    @classmethod
    def from_pairs(cls, pairs, mode: str = "strict", rel_gap: float = REGROUP_GAP) -> "NodeMultiset":
        if mode not in ("strict", "regroup", "keep"):
            raise DomainError(f"unknown grouping mode {mode!r}")
        grouped: dict[float, int] = {}
        for loc, mult in pairs:
            grouped[float(loc)] = grouped.get(float(loc), 0) + int(mult)
        items = sorted(grouped.items())
        if mode != "keep" and len(items) > 1:
            scale = max(abs(loc) for loc, _ in items)
            gap = rel_gap * scale
            clusters = [[items[0]]]
            for item in items[1:]:
                if item[0] - clusters[-1][-1][0] < gap:
                    clusters[-1].append(item)
                else:
                    clusters.append([item])
            if any(len(c) > 1 for c in clusters):
                if mode == "strict":
                    bad = next(c for c in clusters if len(c) > 1)
                    raise NearCoincidentError(
                        f"nodes {bad[0][0]!r} and {bad[1][0]!r} differ by less than "
                        f"{rel_gap:g} relative; use regroup mode to merge them"
                    )
                items = []
                for c in clusters:
                    m = sum(k for _, k in c)
                    items.append((sum(loc * k for loc, k in c) / m, m))
        return cls(tuple(items))

    @property
    def locations(self) -> list[float]:
        return [loc for loc, _ in self.nodes]

    @property
    def multiplicities(self) -> list[int]:
        return [m for _, m in self.nodes]

    @property
    def total_order(self) -> int:
        return sum(self.multiplicities)

    def expanded(self) -> list[float]:
        return [loc for loc, m in self.nodes for _ in range(m)]


def _require_distinct(nodes):
    nodes = [float(x) for x in nodes]
    if not nodes:
        raise DomainError("divided difference needs at least one node")
    if len(set(nodes)) != len(nodes):
        raise DuplicateNodeError("distinct-node divided difference given repeated nodes")
    return nodes


def dd_recurrence(f: Callable[[float], float], nodes: Sequence[float]) -> DDResult:
    """f[x_1..x_k] from the Newton recurrence, built up column by column.

    The recurrence has no cheap cancellation measure, so the condition
    estimate is reported as nan (undefined); single nodes report 1.
    """
    x = _require_distinct(nodes)
    col = [float(f(v)) for v in x]
    k = len(x)
    for j in range(1, k):
        col = [(col[i + 1] - col[i]) / (x[i + j] - x[i]) for i in range(k - j)]
    return DDResult(col[0], 1.0 if k == 1 else math.nan, "recurrence")


def dd_lagrange(f: Callable[[float], float], nodes: Sequence[float]) -> DDResult:
    """f[x_1..x_k] = Σ_j f(x_j) / Π_{q≠j} (x_j - x_q)."""
    x = _require_distinct(nodes)
    terms = []
    for j, xj in enumerate(x):
        denom = 1.0
        for q, xq in enumerate(x):
            if q != j:
                denom *= xj - xq
        terms.append(float(f(xj)) / denom)
    value = math.fsum(terms)
    return DDResult(value, _condition(terms, value), "lagrange")


def _condition(terms, value):
    if len(terms) == 1:
        return 1.0
    mag = math.fsum(abs(v) for v in terms)
    if mag == 0:
        return 1.0
    return mag / abs(value) if value != 0 else math.inf


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Weak compositions of ``total`` into ``parts`` parts, lexicographically."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def confluent_exp_dd(nodes: NodeMultiset, t: float, log_scale: float = 0.0) -> DDResult:
    """Divided difference of e(x) = exp(x t) over a node multiset.

    Closed form obtained from the mixed-derivative (generalised Leibniz)
    expansion of the Lagrange form.  With locations a_i of multiplicity k_i,

        e[...] = Σ_i e^{a_i t} Σ_{r} t^{r_i}/r_i!
                 Π_{q≠i} (-1)^{r_q} C(k_q+r_q-1, r_q) (a_i - a_q)^{-(k_q+r_q)},

    the inner sum running over weak compositions r of k_i - 1.  Every term is
    formed in log space and shifted by the largest one before summing.
    ``log_scale`` is applied once to the final sum, so the returned value is
    ``exp(log_scale) * e[...]`` without intermediate overflow and the
    summed terms do not depend on the scale.
    """
    if not t >= 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    locs = nodes.locations
    mults = nodes.multiplicities
    m = len(locs)
    log_t = math.log(t) if t > 0 else -math.inf
    log_terms: list[float] = []
    signs: list[int] = []
    for i in range(m):
        ki = mults[i]
        others = [q for q in range(m) if q != i]
        # per-neighbour tables of log|coefficient| and sign indexed by r_q
        tables = []
        for q in others:
            d = locs[i] - locs[q]
            ld = math.log(abs(d))
            sd = 1 if d > 0 else -1
            kq = mults[q]
            lt, st = [], []
            for r in range(ki):
                lt.append(math.lgamma(kq + r) - math.lgamma(kq) - math.lgamma(r + 1) - (kq + r) * ld)
                st.append((-1) ** r * sd ** (kq + r))
            tables.append((lt, st))
        base = locs[i] * t
        for comp in compositions(ki - 1, m):
            ri = comp[i]
            if ri > 0 and t == 0:
                continue
            lg = base + (ri * log_t if ri else 0.0) - math.lgamma(ri + 1)
            sg = 1
            for (lt, st), rq in zip(tables, comp[:i] + comp[i + 1:]):
                lg += lt[rq]
                sg *= st[rq]
            log_terms.append(lg)
            signs.append(sg)
    if not log_terms:
        return DDResult(0.0, 1.0, "confluent-closed-form")
    top = max(log_terms)
    terms = [s * math.exp(lg - top) for lg, s in zip(log_terms, signs)]
    total = math.fsum(terms)
    cond = 1.0 if m == 1 else _condition(terms, total)
    with np.errstate(over="ignore"):
        value = float(np.exp(top + log_scale)) * total if total else 0.0
    return DDResult(value, cond, "confluent-closed-form")


def _jacobi_unit(n: int, p: float, q: float):
    """Gauss rule on [0, 1] for the weight u^(p-1) (1-u)^(q-1)."""
    x, w = roots_jacobi(n, q - 1.0, p - 1.0)
    return (1.0 + x) / 2.0, w / 2.0 ** (p + q - 1.0)


def dirichlet_quadrature(g: Callable[[np.ndarray], np.ndarray], shapes: Sequence[float],
                         quad_order: int = 32) -> tuple[float, float]:
    """∫ g(s) Π s_i^{p_i - 1} ds over the simplex {s_i >= 0, Σ s_i = 1}.

    The last coordinate is the dependent one.  Stick-breaking
    s_1 = u_1, s_2 = (1-u_1) u_2, ... turns the region into a unit cube
    with limits nested as ∫_0^1 ds_1 ∫_0^{1-s_1} ds_2 ..., and the weight
    factorises into u_j^{p_j-1} (1-u_j)^{P_j-1}, P_j = Σ_{i>j} p_i, one
    Gauss-Jacobi rule per level.  ``g`` receives an (N, len(shapes)) array
    of barycentric points.  Returns ``(integral, condition_estimate)``.
    """
    p = [float(v) for v in shapes]
    m = len(p)
    if m < 1 or any(v <= 0 for v in p):
        raise DomainError("dirichlet_quadrature needs positive shape parameters")
    if m == 1:
        val = float(np.asarray(g(np.ones((1, 1))))[0])
        return val, 1.0
    dim = m - 1
    rules = [_jacobi_unit(quad_order, p[j], sum(p[j + 1:])) for j in range(dim)]
    total_pts = quad_order ** dim
    acc, acc_abs = 0.0, 0.0
    for start in range(0, total_pts, _CHUNK):
        idx = np.unravel_index(np.arange(start, min(start + _CHUNK, total_pts)), (quad_order,) * dim)
        s = np.empty((idx[0].size, m))
        w = np.ones(idx[0].size)
        remaining = np.ones(idx[0].size)
        for j, (u_nodes, u_w) in enumerate(rules):
            u = u_nodes[idx[j]]
            s[:, j] = remaining * u
            remaining = remaining * (1.0 - u)
            w *= u_w[idx[j]]
        s[:, -1] = remaining
        vals = w * np.asarray(g(s), dtype=float)
        acc += float(np.sum(vals))
        acc_abs += float(np.sum(np.abs(vals)))
    cond = acc_abs / abs(acc) if acc != 0 else (1.0 if acc_abs == 0 else math.inf)
    return acc, max(cond, 1.0)


def hermite_genocchi(f_deriv: Callable[[np.ndarray], np.ndarray], nodes: NodeMultiset,
                     quad_order: int = 32, max_locations: int = MAX_HG_LOCATIONS) -> DDResult:
    """Divided difference as a simplex integral of f^{(n-1)}, n = total order.

    ``f_deriv`` must be the (n-1)th derivative of f and accept numpy arrays.
    A location of multiplicity k contributes a Dirichlet weight
    s^{k-1}/(k-1)! instead of k separate simplex coordinates, so the
    quadrature dimension is (number of distinct locations - 1) and the
    cost is quad_order**dim.
    """
    if nodes.total_order < 2:
        raise DomainError("hermite_genocchi needs total order n >= 2")
    m = len(nodes.nodes)
    if m > max_locations:
        raise DimensionError(f"{m} distinct locations exceeds the cap of {max_locations}")
    a = np.array(nodes.locations)
    k = nodes.multiplicities
    norm = math.exp(-sum(math.lgamma(v) for v in k))
    integral, cond = dirichlet_quadrature(lambda s: f_deriv(s @ a), k, quad_order)
    return DDResult(norm * integral, cond, "hermite-genocchi")


def exp_derivative(t: float, order: int, log_scale: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
    """The ``order``-th x-derivative of exp(x t), times exp(log_scale)."""
    if t == 0:
        c = math.exp(log_scale) if order == 0 else 0.0
        return lambda x: np.full(np.shape(x), c)
    lt = math.log(t)
    return lambda x: np.exp(order * lt + np.asarray(x) * t + log_scale)
