"""Ground truth by brute force: numerical convolution and Monte Carlo.

Nothing in the convolution path touches the closed forms in
``expsum.density``.  Component densities are written out again here from
their textbook definitions.

Densities are carried as ``t**lead * smooth(t)`` with ``smooth`` analytic
on [0, inf).  Gamma-type summands fit this with lead = shape - 1, and
convolution preserves it:

    (f * g)(t) = t^{la+lb+1} ∫_0^1 v^{la} (1-v)^{lb} sf(t v) sg(t - t v) dv,

so the endpoint singularities of shapes below 1 are absorbed into a
Gauss-Jacobi weight instead of being sampled.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import roots_jacobi

from .errors import ConvergenceError, DomainError

__all__ = [
    "PowerDensity",
    "TabulatedDensity",
    "OracleReport",
    "component_density",
    "convolve_pair",
    "convolve_all",
    "sample_sum",
    "check_spec",
    "check_grid",
]

CONV_TOL = 1e-10
_MIN_ORDER = 64
_MAX_ORDER = 2048
TABLE_POINTS = 4001


class PowerDensity:
    """A density written as t**lead * smooth(t) for t >= 0."""

    def __init__(self, lead: float, smooth: Callable[[np.ndarray], np.ndarray]):
        if not lead > -1:
            raise DomainError(f"lead exponent must exceed -1, got {lead}")
        self.lead = float(lead)
        self.smooth = smooth

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(t > 0, t ** self.lead, 0.0 if self.lead > 0 else (1.0 if self.lead == 0 else np.inf))
        return out * self.smooth(np.maximum(t, 0.0))


def component_density(kind: str, shape: float, rate: float) -> PowerDensity:
    """β^α t^{α-1} e^{-βt} / Γ(α) for any of the three component kinds."""
    log_c = shape * math.log(rate) - math.lgamma(shape)
    return PowerDensity(shape - 1.0, lambda t: np.exp(log_c - rate * np.asarray(t, dtype=float)))


def _as_power(f) -> PowerDensity:
    if isinstance(f, PowerDensity):
        return f
    vf = np.vectorize(lambda x: float(f(x)), otypes=[float])
    return PowerDensity(0.0, vf)


class TabulatedDensity(PowerDensity):
    """Convolution values on a grid, interpolated in between.

    The smooth factor is interpolated by a cubic spline in log space when it
    is positive throughout (sums of exponentials are then close to linear),
    otherwise linearly.
    """

    def __init__(self, points, smooth_values, lead, abs_error, converged):
        self.points = np.asarray(points, dtype=float)
        self.smooth_values = np.asarray(smooth_values, dtype=float)
        self.abs_error = np.asarray(abs_error, dtype=float)
        self.converged = np.asarray(converged, dtype=bool)
        if self.points.size >= 4 and np.all(self.smooth_values > 0):
            spline = CubicSpline(self.points, np.log(self.smooth_values))
            smooth = lambda t: np.exp(spline(t))
        else:
            smooth = lambda t: np.interp(t, self.points, self.smooth_values)
        super().__init__(lead, smooth)

    @property
    def values(self) -> np.ndarray:
        return self(self.points)


@lru_cache(maxsize=256)
def _unit_jacobi(n: int, la: float, lb: float):
    # weight v^la (1-v)^lb on [0, 1]
    x, w = roots_jacobi(n, lb, la)
    return (1.0 + x) / 2.0, w / 2.0 ** (la + lb + 1.0)


def _grid_points(grid) -> np.ndarray:
    pts = getattr(grid, "points", grid)
    return np.atleast_1d(np.asarray(pts, dtype=float))


def convolve_pair(pdf_a, pdf_b, grid, tol: float = CONV_TOL) -> TabulatedDensity:
    """Tabulate (pdf_a * pdf_b)(t) = ∫_0^t pdf_a(u) pdf_b(t-u) du on ``grid``.

    Each point is integrated by Gauss-Jacobi rules of doubling order until
    two successive orders agree to ``tol`` in absolute density units (or
    1e-13 relative).  Points that never settle are marked unconverged.
    Plain callables are accepted and treated as having lead 0.
    """
    fa, fb = _as_power(pdf_a), _as_power(pdf_b)
    t = _grid_points(grid)
    if np.any(t < 0):
        raise DomainError("convolution grid must be nonnegative")
    la, lb = fa.lead, fb.lead
    lead = la + lb + 1.0
    with np.errstate(divide="ignore"):
        scale = np.where(t > 0, t ** lead, 0.0)

    def rule(n):
        v, w = _unit_jacobi(n, la, lb)
        tv = np.outer(t, v)
        return (fa.smooth(tv) * fb.smooth(t[:, None] - tv)) @ w

    n = _MIN_ORDER
    prev = rule(n)
    done = np.zeros(t.size, dtype=bool)
    err = np.full(t.size, np.inf)
    out = prev.copy()
    while n < _MAX_ORDER and not done.all():
        n *= 2
        cur = rule(n)
        diff = np.abs(cur - prev)
        ok = (diff * scale <= tol) | (diff <= 1e-13 * np.abs(cur))
        newly = ok & ~done
        out[newly] = cur[newly]
        err[newly] = (diff * scale)[newly]
        done |= ok
        prev = cur
    out[~done] = prev[~done]
    return TabulatedDensity(t, out, lead, err, done)


def convolve_all(densities: Sequence, grid, table_points: int = TABLE_POINTS,
                 t_table_max: float | None = None) -> TabulatedDensity:
    """Left fold of ``convolve_pair`` over ``densities``.

    Intermediate convolutions are tabulated on a uniform grid over
    [0, t_table_max] (default: the largest point of ``grid``); only the last
    one is evaluated directly at ``grid``.
    """
    dens = [_as_power(d) for d in densities]
    t = _grid_points(grid)
    if not dens:
        raise DomainError("nothing to convolve")
    if len(dens) == 1:
        d = dens[0]
        return TabulatedDensity(t, d.smooth(t), d.lead, np.zeros(t.size), np.ones(t.size, bool))
    hi = float(t_table_max if t_table_max is not None else t.max())
    table = np.linspace(0.0, max(hi, 1e-12), table_points)
    acc = dens[0]
    for d in dens[1:-1]:
        acc = convolve_pair(acc, d, table)
    return convolve_pair(acc, dens[-1], t)


def sample_sum(spec, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` independent copies of the sum described by ``spec``.

    A counter-based Philox stream seeded by ``seed`` drives every draw.
    Exponential stages use the inverse CDF -log(1-U)/λ (an Erlang is a sum
    of such stages); gamma components use numpy's rejection sampler, which
    covers every shape > 0.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"sample size must be a positive integer, got {n}")
    rng = np.random.Generator(np.random.Philox(int(seed) & (2 ** 64 - 1)))
    out = np.zeros(int(n))
    for c in spec.components:
        if c.kind == "gamma":
            out += rng.standard_gamma(c.shape, int(n)) / c.rate
        else:
            for _ in range(int(c.shape)):
                out -= np.log1p(-rng.random(int(n))) / c.rate
    return out


@dataclass
class OracleReport:
    max_abs_err: float
    max_rel_err: float
    points_checked: int
    mc_samples: int
    verdict: str
    tol_abs: float
    mc_max_z: float | None = None
    ks_stat: float | None = None
    mc_z_limit: float = 4.0
    unconverged_points: int = 0
    worst_t: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def check_grid(spec, points: int = 41):
    """Grid from the origin to mean + 6 sd; the origin is skipped when a
    shape is below 1."""
    from .density import EvalGrid

    hi = spec.mean + 6.0 * math.sqrt(spec.variance)
    lo = 0.0 if all(c.shape >= 1 for c in spec.components) else hi / (10 * points)
    return EvalGrid(tuple(np.linspace(lo, hi, points)))


MC_PROBS = (0.1, 0.3, 0.5, 0.7, 0.9)


def check_spec(spec, grid=None, tol_abs: float = 1e-7, mc_n: int = 0, seed: int = 0,
               z_limit: float = 4.0) -> OracleReport:
    """Compare ``density.pdf`` with the convolution oracle on ``grid``.

    With ``mc_n > 0`` the empirical CDF of ``sample_sum`` draws is also
    compared with ``density.cdf`` at the empirical deciles 0.1, 0.3, ..., 0.9;
    each difference must be within ``z_limit`` binomial standard errors.
    """
    from . import density

    if grid is None:
        grid = check_grid(spec)
    closed = np.array([r.value for r in density.pdf(spec, grid)])
    comps = [component_density(c.kind, c.shape, c.rate) for c in spec.components]
    conv = convolve_all(comps, grid)
    t = np.asarray(grid.points)
    ref = conv(t)
    both_inf = np.isinf(closed) & np.isinf(ref)
    diff = np.where(both_inf, 0.0, np.abs(closed - ref))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(ref > 0, diff / np.abs(ref), np.where(diff == 0, 0.0, np.inf))
    worst = int(np.argmax(diff))
    max_abs = float(diff.max())
    ok = bool(max_abs <= tol_abs)
    report = OracleReport(max_abs, float(rel.max()), int(t.size), int(mc_n), "pass", tol_abs,
                          mc_z_limit=z_limit, unconverged_points=int((~conv.converged).sum()),
                          worst_t=float(t[worst]))
    if mc_n:
        x = np.sort(sample_sum(spec, mc_n, seed))
        zs, ks = [], 0.0
        for p in MC_PROBS:
            q = float(x[int(p * mc_n)])
            f_emp = np.searchsorted(x, q, side="right") / mc_n
            f = density.cdf(spec, q)
            se = math.sqrt(max(f * (1 - f), 1e-300) / mc_n)
            zs.append(abs(f_emp - f) / se)
            ks = max(ks, abs(f_emp - f))
        report.mc_max_z = float(max(zs))
        report.ks_stat = float(ks)
        ok = ok and report.mc_max_z <= z_limit
    report.verdict = "pass" if ok else "fail"
    return report
