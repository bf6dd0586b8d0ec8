"""Special functions used by the closed-form densities.

Everything here works on real arguments in double precision.  Series are
summed with a running rescaling (or in log space) so that intermediate
magnitudes never overflow before the final value does.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError, DomainError

__all__ = [
    "SeriesControl",
    "SpecialValue",
    "DEFAULT_CONTROL",
    "ln_gamma",
    "ln_beta",
    "beta",
    "log_pochhammer",
    "lower_incomplete_gamma",
    "upper_incomplete_gamma",
    "regularized_gamma",
    "kummer_m",
    "log_kummer_m",
    "phi2",
    "log_phi2",
]

_EPS = np.finfo(float).eps
# continued fractions cannot get below a few ulps of relative change
_CF_TOL_FLOOR = 4 * _EPS
_TINY = 1e-300
# partial sums are divided by this whenever they grow past it
_RESCALE = 1e280
_LOG_RESCALE = math.log(_RESCALE)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for every series in this module."""

    rel_tol: float = 1e-16
    max_terms: int = 10000

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1.0):
            raise DomainError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError(f"max_terms must be a positive integer, got {self.max_terms}")


@dataclass(frozen=True)
class SpecialValue:
    value: float
    terms_used: int
    converged: bool = True


DEFAULT_CONTROL = SeriesControl()


def ln_gamma(a: float) -> float:
    """Natural log of the gamma function for a > 0."""
    if not a > 0:
        raise DomainError(f"ln_gamma requires a > 0, got {a}")
    return math.lgamma(a)


def ln_beta(z: float, y: float) -> float:
    if not (z > 0 and y > 0):
        raise DomainError(f"beta requires positive arguments, got ({z}, {y})")
    return math.lgamma(z) + math.lgamma(y) - math.lgamma(z + y)


def beta(z: float, y: float) -> float:
    """Euler's beta function B(z, y) = Γ(z)Γ(y)/Γ(z+y)."""
    return math.exp(ln_beta(z, y))


def log_pochhammer(a: float, n: int) -> tuple[float, int]:
    """Return (log|(a)_n|, sign) for the rising factorial (a)_n.

    A zero factor gives ``(-inf, 0)``.
    """
    if n < 0:
        raise DomainError("Pochhammer order must be nonnegative")
    log_abs, sign = 0.0, 1
    for j in range(n):
        f = a + j
        if f == 0:
            return -math.inf, 0
        log_abs += math.log(abs(f))
        if f < 0:
            sign = -sign
    return log_abs, sign


def _log_pochhammer_seq(a: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """log|(a)_k| and sign for k = 0..n as arrays."""
    factors = a + np.arange(n, dtype=float)
    with np.errstate(divide="ignore"):
        logs = np.concatenate(([0.0], np.cumsum(np.log(np.abs(factors)))))
    signs = np.concatenate(([1.0], np.cumprod(np.sign(factors))))
    return logs, signs


def _check_gamma_args(a, z):
    if not a > 0:
        raise DomainError(f"incomplete gamma requires a > 0, got a={a}")
    if not z >= 0:
        raise DomainError(f"incomplete gamma requires z >= 0, got z={z}")


def _fail(what, ctl, raise_on_fail):
    if raise_on_fail:
        raise ConvergenceError(f"{what} did not converge within {ctl.max_terms} terms")


# -- Kummer's confluent hypergeometric function ------------------------------

def _kummer_series(a, b, z, ctl):
    """Sum M(a, b, z) for z >= 0.

    Returns (log|M|, sign, terms_used, converged).
    """
    s, term, log_scale = 1.0, 1.0, 0.0
    if z == 0 or a == 0:
        return 0.0, 1, 1, True
    for k in range(ctl.max_terms):
        term *= (a + k) / (b + k) * z / (k + 1)
        s += term
        if abs(s) > _RESCALE:
            s /= _RESCALE
            term /= _RESCALE
            log_scale += _LOG_RESCALE
        # before the peak of z^k/k! a small term says nothing about the tail
        if term == 0 or (k + 1 >= z and abs(term) <= ctl.rel_tol * abs(s)):
            if s == 0:
                return -math.inf, 0, k + 2, True
            return log_scale + math.log(abs(s)), (1 if s > 0 else -1), k + 2, True
    sign = 1 if s > 0 else -1
    return log_scale + math.log(abs(s)) if s else -math.inf, sign, ctl.max_terms + 1, False


def _check_kummer_b(b):
    if b <= 0 and float(b).is_integer():
        raise DomainError(f"Kummer M undefined for nonpositive integer b={b}")


def log_kummer_m(a: float, b: float, z: float, ctl: SeriesControl = DEFAULT_CONTROL,
                 raise_on_fail: bool = True) -> tuple[float, int, SpecialValue]:
    """Return ``(log|M|, sign, info)`` for Kummer's M(a, b, z).

    For z < 0 the series for M(b - a, b, -z) is summed instead and scaled by
    e^z, which keeps the summed terms free of alternating cancellation.
    ``info.value`` holds M itself (possibly inf when it overflows).
    """
    _check_kummer_b(b)
    if z < 0:
        log_abs, sign, n, ok = _kummer_series(b - a, b, -z, ctl)
        log_abs += z
    else:
        log_abs, sign, n, ok = _kummer_series(a, b, z, ctl)
    if not ok:
        _fail("Kummer series", ctl, raise_on_fail)
    with np.errstate(over="ignore"):
        value = sign * float(np.exp(log_abs)) if sign else 0.0
    return log_abs, sign, SpecialValue(value, n, ok)


def kummer_m(a: float, b: float, z: float, ctl: SeriesControl = DEFAULT_CONTROL,
             raise_on_fail: bool = True) -> SpecialValue:
    """Kummer's confluent hypergeometric function M(a, b, z)."""
    return log_kummer_m(a, b, z, ctl, raise_on_fail)[2]


# -- incomplete gamma functions ----------------------------------------------

def _upper_cf(a, z, ctl):
    """Modified Lentz evaluation of Q(a, z) = Γ(a, z)/Γ(a) for z >= a + 1."""
    tol = max(ctl.rel_tol, _CF_TOL_FLOOR)
    bb = z + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / bb
    h = d
    for i in range(1, ctl.max_terms + 1):
        an = -i * (i - a)
        bb += 2.0
        d = an * d + bb
        if abs(d) < _TINY:
            d = _TINY
        c = bb + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= tol:
            return math.exp(-z + a * math.log(z) - math.lgamma(a)) * h, i, True
    return math.exp(-z + a * math.log(z) - math.lgamma(a)) * h, ctl.max_terms, False


def regularized_gamma(a: float, z: float, ctl: SeriesControl = DEFAULT_CONTROL,
                      raise_on_fail: bool = True) -> tuple[float, float, int, bool]:
    """Return ``(P, Q, terms_used, converged)`` with P = γ(a,z)/Γ(a), Q = 1 - P.

    Below z = a + 1 the lower function comes from the Kummer series
    γ(a,z) = z^a e^{-z} M(1, 1+a, z)/a; above it the upper function comes from
    a continued fraction.  The other member of the pair is the complement.
    """
    _check_gamma_args(a, z)
    if z == 0:
        return 0.0, 1.0, 1, True
    if z < a + 1.0:
        log_m, _, info = log_kummer_m(1.0, 1.0 + a, z, ctl, raise_on_fail)
        p = math.exp(a * math.log(z) - z - math.lgamma(a + 1.0) + log_m)
        return p, 1.0 - p, info.terms_used, info.converged
    q, n, ok = _upper_cf(a, z, ctl)
    if not ok:
        _fail("incomplete gamma continued fraction", ctl, raise_on_fail)
    return 1.0 - q, q, n, ok


def lower_incomplete_gamma(a: float, z: float, ctl: SeriesControl = DEFAULT_CONTROL,
                           raise_on_fail: bool = True) -> SpecialValue:
    """γ(a, z) = ∫_0^z t^{a-1} e^{-t} dt."""
    p, _, n, ok = regularized_gamma(a, z, ctl, raise_on_fail)
    return SpecialValue(p * math.exp(math.lgamma(a)), n, ok)


def upper_incomplete_gamma(a: float, z: float, ctl: SeriesControl = DEFAULT_CONTROL,
                           raise_on_fail: bool = True) -> SpecialValue:
    """Γ(a, z) = ∫_z^∞ t^{a-1} e^{-t} dt."""
    _, q, n, ok = regularized_gamma(a, z, ctl, raise_on_fail)
    return SpecialValue(q * math.exp(math.lgamma(a)), n, ok)


# -- confluent Lauricella function -------------------------------------------

def _phi2_nonneg(b, c, x, ctl):
    """log|Φ₂| and sign for x >= 0 componentwise, by total-degree shells.

    The degree-D shell Σ_{|m|=D} Π (b_i)_{m_i} x_i^{m_i}/m_i! is the D-th
    coefficient of a product of one-variable series, so shells come from
    discrete convolutions.  Each variable is scaled by X = max x, which keeps
    the convolved sequences polynomially bounded.
    """
    xmax = max(x)
    if xmax == 0:
        return 0.0, 1, 1, True
    xsum = sum(x)
    log_x = math.log(xmax)
    d_max = int(min(ctl.max_terms, max(32, math.ceil(2 * xsum + 10 * math.sqrt(xsum) + 30))))
    while True:
        k = np.arange(d_max + 1, dtype=float)
        log_fact = np.concatenate(([0.0], np.cumsum(np.log(k[1:]))))
        shell = np.array([1.0])
        offset = 0.0
        for bi, xi in zip(b, x):
            lp, sp = _log_pochhammer_seq(bi, d_max)
            with np.errstate(divide="ignore", invalid="ignore"):
                lu = lp - log_fact + (k * math.log(xi / xmax) if xi > 0 else np.where(k == 0, 0.0, -np.inf))
            peak = np.max(lu[np.isfinite(lu)])
            u = sp * np.exp(lu - peak)
            u[~np.isfinite(lu)] = 0.0
            shell = np.convolve(shell, u)[: d_max + 1]
            offset += peak
        lc, _ = _log_pochhammer_seq(c, d_max)
        with np.errstate(divide="ignore"):
            log_terms = np.log(np.abs(shell)) + offset + k * log_x - lc
        signs = np.sign(shell)
        top = np.max(log_terms)
        scaled = signs * np.exp(log_terms - top)
        total = float(np.sum(scaled))
        small = np.abs(scaled) <= ctl.rel_tol * abs(total)
        big = np.nonzero(~small)[0]
        terms_used = int(big[-1]) + 2 if big.size else 1
        # need a converged tail that sits beyond the peak of the shells
        converged = terms_used <= d_max - 1 and d_max >= xsum
        if converged or d_max >= ctl.max_terms:
            if total == 0:
                return -math.inf, 0, terms_used, converged
            return top + math.log(abs(total)), (1 if total > 0 else -1), terms_used, converged
        d_max = min(ctl.max_terms, 2 * d_max)


def log_phi2(b, c, x, ctl: SeriesControl = DEFAULT_CONTROL,
             raise_on_fail: bool = True) -> tuple[float, int, SpecialValue]:
    """Return ``(log|Φ₂|, sign, info)`` for the confluent Lauricella Φ₂.

    Φ₂(b_1..b_r; c; x_1..x_r) = Σ_m Π(b_i)_{m_i} / (c)_{|m|} Π x_i^{m_i}/m_i!.
    When some x_i < 0 the most negative variable is swapped with the implicit
    slack variable (parameter c - Σb, argument 0), giving
    Φ₂(b; c; x) = e^{x_j} Φ₂(b'; c; x') with every x' >= 0.
    """
    b = [float(v) for v in b]
    x = [float(v) for v in x]
    if len(b) != len(x):
        raise DimensionError(f"phi2: len(b)={len(b)} but len(x)={len(x)}")
    if len(b) < 1:
        raise DimensionError("phi2 needs at least one variable")
    if not c > 0:
        raise DomainError(f"phi2 requires c > 0, got {c}")
    shift = 0.0
    j = int(np.argmin(x))
    if x[j] < 0:
        shift = x[j]
        slack = c - sum(b)
        b = list(b)
        b[j] = slack
        x = [xi - shift for xi in x]
        x[j] = -shift
    log_abs, sign, n, ok = _phi2_nonneg(b, c, x, ctl)
    if not ok:
        _fail("phi2 series", ctl, raise_on_fail)
    log_abs += shift
    with np.errstate(over="ignore"):
        value = sign * float(np.exp(log_abs)) if sign else 0.0
    return log_abs, sign, SpecialValue(value, n, ok)


def phi2(b, c, x, ctl: SeriesControl = DEFAULT_CONTROL, raise_on_fail: bool = True) -> SpecialValue:
    """Confluent Lauricella function Φ₂^{(r)}(b; c; x) with r = len(b)."""
    return log_phi2(b, c, x, ctl, raise_on_fail)[2]
