"""The two-point kernel ``H_p`` behind the p-energy on birth-death chains.

For ``p in (0, 1)`` and ``x > 0``::

    H_p(x) = p p' (x**(1/p) - 1) (x**(1/p') - 1),   p' = p / (p - 1)

and ``H_1(x) = (x - 1) log x``.  Both factors are evaluated with ``expm1`` on
``log x`` so values near ``x = 1`` keep full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

# Below this distance from 1, p is treated as exactly 1.
P_ONE_CUTOFF = 1e-8


@dataclass(frozen=True)
class HpParams:
    p: float

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")

    @property
    def is_one(self) -> bool:
        return self.p > 1.0 - P_ONE_CUTOFF

    @property
    def p_conj(self) -> float | None:
        """Hoelder conjugate ``p / (p - 1)``; ``None`` at ``p = 1``."""
        if self.p == 1.0:
            return None
        return self.p / (self.p - 1.0)


def _as_params(p) -> HpParams:
    return p if isinstance(p, HpParams) else HpParams(float(p))


def _kernel_from_log(p: float, logx):
    """``H_p(exp(logx))`` for any real ``logx`` and ``p in (0, 2]``.

    Outside ``(0, 1]`` this is the same algebraic formula; it is used by the
    p-energy for descending steps and for ``p in (1, 2]``.
    """
    logx = np.asarray(logx, dtype=float)
    if abs(p - 1.0) < P_ONE_CUTOFF:
        return np.expm1(logx) * logx
    pc = p / (p - 1.0)
    with np.errstate(over="ignore", invalid="ignore"):
        out = p * pc * np.expm1(logx / p) * np.expm1(logx / pc)
    return np.where(logx == 0.0, 0.0, out)


def _check_domain(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < 1.0):
        raise ValueError("H_p is only evaluated on x >= 1")
    return x


def _scalar_or_array(v):
    return float(v) if np.ndim(v) == 0 else v


def hp_value(p, x):
    """``H_p(x)`` for ``x >= 1``; vectorized over ``x``.  May overflow to inf."""
    prm = _as_params(p)
    x = _check_domain(x)
    return _scalar_or_array(_kernel_from_log(prm.p, np.log(x)))


def hp_from_log(p, logx):
    """``H_p(exp(logx))`` for ``logx >= 0``, avoiding the round trip through ``x``."""
    prm = _as_params(p)
    logx = np.asarray(logx, dtype=float)
    if np.any(logx < 0.0):
        raise ValueError("H_p is only evaluated on x >= 1")
    return _scalar_or_array(_kernel_from_log(prm.p, logx))


def log_hp_value(p, x):
    """``log H_p(x)`` for ``x > 1``, finite even when ``H_p(x)`` overflows."""
    prm = _as_params(p)
    x = _check_domain(x)
    L = np.log(x)
    with np.errstate(divide="ignore"):
        if prm.is_one:
            # log(x - 1) = L + log(1 - 1/x)
            out = L + np.log(-np.expm1(-L)) + np.log(L)
        else:
            a = 1.0 / prm.p
            b = 1.0 - a  # 1/p'
            # -p p' = p^2 / (1 - p); x^a - 1 = x^a (1 - x^-a); 1 - x^b = -expm1(b L)
            out = (
                math.log(prm.p * prm.p / (1.0 - prm.p))
                + a * L
                + np.log(-np.expm1(-a * L))
                + np.log(-np.expm1(b * L))
            )
    return _scalar_or_array(out)


def hp_derivative(p, x):
    """Analytic ``H_p'(x)`` for ``x >= 1``."""
    prm = _as_params(p)
    x = _check_domain(x)
    L = np.log(x)
    if prm.is_one:
        out = L - np.expm1(-L)  # log x + 1 - 1/x
    else:
        a = 1.0 / prm.p
        b = 1.0 - a
        pc = prm.p / (prm.p - 1.0)
        # H' = p p' [a (1 - x^-b) + b (1 - x^-a)], both terms of one sign
        with np.errstate(over="ignore"):
            out = prm.p * pc * (-a * np.expm1(-b * L) - b * np.expm1(-a * L))
    return _scalar_or_array(out)


def hp_second_derivative(p, x):
    """``H_p''(x) = (x**(1/p) + x**(1/p')) / x**2`` (``1/p' = 0`` at ``p = 1``)."""
    prm = _as_params(p)
    x = _check_domain(x)
    L = np.log(x)
    b = 0.0 if prm.is_one else 1.0 - 1.0 / prm.p
    with np.errstate(over="ignore"):
        out = np.exp((1.0 / prm.p - 2.0) * L) + np.exp((b - 2.0) * L)
    return _scalar_or_array(out)


@dataclass
class PropertyCheck:
    name: str
    holds: bool
    violations: list  # offending x (or (y, x) pairs)


@dataclass
class HpPropertyReport:
    p: float
    lam: float
    c: float
    checks: list

    @property
    def all_hold(self) -> bool:
        return all(ch.holds for ch in self.checks)

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "lambda": self.lam,
            "c": self.c,
            "all_hold": self.all_hold,
            "items": {
                ch.name: {"holds": ch.holds, "violations": ch.violations[:10]}
                for ch in self.checks
            },
        }


def _ge(lhs, rhs, rtol):
    """``lhs >= rhs`` up to relative slack ``rtol``."""
    return lhs >= rhs - rtol * np.maximum(np.abs(lhs), np.abs(rhs))


def verify_hp_properties(p, lam: float, c: float, grid, rtol: float = 1e-12) -> HpPropertyReport:
    """Check the five structural properties of ``H_p`` pointwise on ``grid``.

    (i) increasing and convex, (ii) ``H_p(x) >= (log x)**2``,
    (iii) ``x log x`` lower bound, (iv) ``H_p(x)`` vs ``H_p(c x)``,
    (v) ``H_p(y)/y <= lam/(lam-1) H_p(x)/x`` for ``lam <= y <= x``.
    """
    prm = _as_params(p)
    if not lam > 1.0:
        raise ValueError("lambda must exceed 1")
    if not c > 1.0:
        raise ValueError("c must exceed 1")
    xs = np.sort(np.asarray(grid, dtype=float))
    if xs.size == 0:
        raise ValueError("grid must be nonempty")
    if np.any(xs < lam):
        raise ValueError("grid points must satisfy x >= lambda")

    H = np.asarray(hp_value(prm, xs))
    dH = np.asarray(hp_derivative(prm, xs))
    d2H = np.asarray(hp_second_derivative(prm, xs))
    checks = []

    bad = xs[(dH <= 0) | (d2H < 0)].tolist()
    if xs.size > 1:
        step_bad = np.nonzero(np.diff(H) <= 0)[0]
        bad += xs[step_bad + 1].tolist()
        mids = 0.5 * (xs[:-1] + xs[1:])
        chord = 0.5 * (H[:-1] + H[1:])
        bad += xs[1:][~_ge(chord, np.asarray(hp_value(prm, mids)), rtol)].tolist()
    checks.append(PropertyCheck("i_increasing_convex", not bad, sorted(set(bad))))

    ok = _ge(H, np.log(xs) ** 2, rtol)
    checks.append(PropertyCheck("ii_log_squared", bool(ok.all()), xs[~ok].tolist()))

    Hl = hp_value(prm, lam)
    dHl = hp_derivative(prm, lam)
    ll = math.log(lam)
    m3 = min(Hl / (lam * ll), dHl / (1.0 + ll), 1.0)
    ok = _ge(H, xs * np.log(xs) * m3, rtol)
    checks.append(PropertyCheck("iii_xlogx", bool(ok.all()), xs[~ok].tolist()))

    m4 = min(
        Hl / hp_value(prm, lam * c),
        dHl / (c * hp_derivative(prm, lam * c)),
        c ** (-1.0 / prm.p),
    )
    ok = _ge(H, np.asarray(hp_value(prm, c * xs)) * m4, rtol)
    checks.append(PropertyCheck("iv_scaling", bool(ok.all()), xs[~ok].tolist()))

    q = H / xs
    yy, xx = np.meshgrid(np.arange(xs.size), np.arange(xs.size), indexing="ij")
    mask = yy <= xx
    ok = _ge(lam / (lam - 1.0) * q[xx], q[yy], rtol) | ~mask
    pairs = [(float(xs[i]), float(xs[j])) for i, j in zip(*np.nonzero(~ok))]
    checks.append(PropertyCheck("v_ratio", not pairs, pairs))

    return HpPropertyReport(prm.p, float(lam), float(c), checks)


def log_grid(lo: float, hi: float, n: int = 50) -> np.ndarray:
    return np.geomspace(lo, hi, n)


@dataclass
class IntegralCheck:
    p: float
    lam: float
    lhs: float
    rhs: float
    abserr: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def integral_bound_check(p: float, lam: float, rtol: float = 1e-10) -> IntegralCheck:
    """Compare ``int_1^lam (e^{s/p} - 1) / s^2 ds`` with ``p/(1-p) e^{lam/p} / lam``.

    The integral uses adaptive Gauss-Kronrod quadrature; a
    ``RuntimeError`` is raised when its error estimate exceeds
    ``rtol * rhs``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if not lam > 1.0:
        raise ValueError("lambda must exceed 1")
    rhs = p / (1.0 - p) * math.exp(lam / p) / lam

    def integrand(s):
        return math.expm1(s / p) / (s * s)

    lhs, abserr = integrate.quad(
        integrand, 1.0, lam, epsabs=0.0, epsrel=1e-13, limit=500
    )
    if not abserr <= rtol * rhs:
        raise RuntimeError(
            f"quadrature did not converge: error {abserr:.3g} for p={p}, lambda={lam}"
        )
    return IntegralCheck(float(p), float(lam), float(lhs), float(rhs), float(abserr))
