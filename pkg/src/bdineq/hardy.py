"""Hardy and Poincare constants on birth-death chains.

``C_mu = sup_k mu[k, inf) * sum_{l<k} 1/mu_l`` brackets the best Hardy
constant within a factor 4, and hence the Poincare constant.  The
variational side maximizes the Rayleigh quotients over functions constant on
``[K, inf)``, which gives certified lower bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measure import MeasureError, TailMeasure

METHODS = ("analytic", "variational", "theorem-bracket")


@dataclass(frozen=True)
class ConstantBracket:
    lower: float
    upper: float
    lower_method: str
    upper_method: str

    def __post_init__(self):
        if self.lower_method not in METHODS or self.upper_method not in METHODS:
            raise ValueError("unknown method tag")
        if not (self.lower >= 0.0 and self.lower <= self.upper):
            raise ValueError(f"invalid bracket [{self.lower}, {self.upper}]")

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def as_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper if math.isfinite(self.upper) else "inf",
            "lower_method": self.lower_method,
            "upper_method": self.upper_method,
        }


@dataclass(frozen=True)
class CMuResult:
    """``value`` is the best estimate of ``C_mu``; ``lower <= C_mu <= upper``
    whenever a tail certificate exists."""

    value: float
    argmax: int
    attained: bool
    lower: float
    upper: float
    certified: bool

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "argmax": self.argmax,
            "attained": self.attained,
            "lower": self.lower,
            "upper": self.upper,
            "certified": self.certified,
        }


def log_cmu_series(m: TailMeasure) -> np.ndarray:
    """``log(mu[k, inf) sum_{l<k} 1/mu_l)`` for ``k = 1..N`` (index ``k-1``)."""
    log_inv = np.logaddexp.accumulate(-m.log_weights)
    return m.log_tails[1:] + log_inv


def _beyond_truncation_bound(m: TailMeasure) -> float:
    """Upper bound on ``s_k`` for every ``k >= N``.

    With ``q`` bounding ``mu_{i+1}/mu_i`` past ``N - 1``, the sums
    ``T_k = sum_{l<k} mu_k/mu_l`` obey ``T_{k+1} <= q (1 + T_k)``, so they
    never exceed ``max(q (1 + T_{N-1}), q / (1 - q))``; and
    ``mu[k, inf) / mu_k <= 1 / (1 - q)``.
    """
    q = math.exp(m.log_step_ratio_bound)
    N = m.truncation
    log_inv = float(np.logaddexp.reduce(-m.log_weights[: N - 1]))
    t_prev = math.exp(m.log_weights[N - 1] + log_inv)
    c = max(q * (1.0 + t_prev), q / (1.0 - q))
    return c / (1.0 - q)


def c_mu(m: TailMeasure, window: float = 0.1, rtol: float = 1e-12,
         allow_unresolved: bool = False) -> CMuResult:
    """The Hardy criterion ``C_mu`` with a flag telling whether the sup is attained.

    For families with a step-ratio bound, the supremum beyond the truncation
    is bounded analytically; if that bound falls below the computed maximum
    the sup is attained inside the window.  Otherwise (geometric) the
    reported value is the certified bound, which is the limit.  Custom
    measures fall back to a trend test over the trailing ``window`` fraction
    of indices and raise when the sup is still growing, unless
    ``allow_unresolved``.
    """
    ls = log_cmu_series(m)
    s = np.exp(ls)
    N = m.truncation
    amax = int(np.argmax(ls))
    lower = float(s[amax])
    argmax = amax + 1

    start = max(1, int(math.floor((1.0 - window) * N)))
    head = float(s[: start - 1].max()) if start > 1 else 0.0
    growing = float(s[start - 1 :].max()) > head * (1.0 + rtol)

    if m.log_step_ratio_bound is not None:
        bound = _beyond_truncation_bound(m)
        if bound < lower * (1.0 - rtol):
            return CMuResult(lower, argmax, True, lower, lower, True)
        upper = max(bound, lower)
        return CMuResult(upper, argmax, False, lower, upper, True)

    if growing and not allow_unresolved:
        raise MeasureError(
            "C_mu unresolved: supremum still increasing near the truncation "
            "and the measure has no tail certificate"
        )
    return CMuResult(lower, argmax, not growing, lower, lower, False)


def cmu_bruteforce(m: TailMeasure) -> float:
    """Direct linear-scale evaluation of ``max_{1<=k<=N} mu[k,inf) sum_{l<k} 1/mu_l``."""
    best = 0.0
    acc = 0.0
    w = np.exp(m.log_weights)
    for k in range(1, m.truncation + 1):
        acc += 1.0 / w[k - 1]
        best = max(best, m.tail(k) * acc)
    return best


def hardy_bracket(m: TailMeasure, cm: CMuResult | None = None) -> ConstantBracket:
    """``C_mu <= hat C_H <= 4 C_mu``."""
    cm = cm or c_mu(m)
    if not math.isfinite(cm.value):
        raise MeasureError("C_mu unresolved")
    return ConstantBracket(cm.value, 4.0 * cm.value, "theorem-bracket", "theorem-bracket")


def poincare_bracket(m: TailMeasure, cm: CMuResult | None = None) -> ConstantBracket:
    """``2 mu_0 C_mu <= hat C_P <= 8 C_mu`` (Hardy bracket plus the
    Hardy-Poincare comparison)."""
    cm = cm or c_mu(m)
    if not math.isfinite(cm.value):
        raise MeasureError("C_mu unresolved")
    mu0 = math.exp(m.log_weights[0])
    return ConstantBracket(2.0 * mu0 * cm.value, 8.0 * cm.value,
                           "theorem-bracket", "theorem-bracket")


def _lumped_kernel(m: TailMeasure, K: int, centered: bool) -> np.ndarray:
    """Quadratic form of ``sum_j f_j^2 pi_j`` (or the variance) in the
    variables ``e_k = Df(k) sqrt(mu_k)``, ``f_0 = 0``, on ``{0..K-1, [K, inf)}``.

    Entry ``(k, l)`` is ``t_{max+1} / sqrt(mu_k mu_l)``, times
    ``(1 - t_{min+1})`` for the variance, with ``t_j = mu[j, inf)``.
    """
    if not 2 <= K <= m.truncation:
        raise MeasureError(f"K must lie in [2, {m.truncation}], got {K}")
    idx = np.arange(K)
    hi = np.maximum.outer(idx, idx)
    lo = np.minimum.outer(idx, idx)
    lw = m.log_weights[:K]
    lt = m.log_tails
    logk = lt[hi + 1] - 0.5 * (lw[:, None] + lw[None, :])
    A = np.exp(logk)
    if centered:
        A *= -np.expm1(lt[lo + 1])
    return 0.5 * (A + A.T)


def top_eigenvalue(A: np.ndarray, tol: float = 1e-10, maxiter: int = 100_000) -> float:
    """Largest eigenvalue of a symmetric entrywise non-negative matrix by
    power iteration from a positive vector.

    Stops when the residual ``|A v - theta v|`` drops below ``tol * theta``,
    which bounds the distance from ``theta`` to the spectrum.
    """
    v = np.ones(A.shape[0]) / math.sqrt(A.shape[0])
    theta = 0.0
    for _ in range(maxiter):
        w = A @ v
        theta = float(v @ w)
        if theta <= 0.0:
            return 0.0
        if np.linalg.norm(w - theta * v) <= tol * theta:
            return theta
        v = w / np.linalg.norm(w)
    raise RuntimeError(f"power iteration did not converge in {maxiter} iterations")


def hardy_numeric(m: TailMeasure, K: int) -> float:
    """Lower bound on ``hat C_H``: sup of ``sum (f - f(0))^2 mu / E(f, f)``
    over functions constant on ``[K, inf)``."""
    return top_eigenvalue(_lumped_kernel(m, K, centered=False))


def poincare_numeric(m: TailMeasure, K: int) -> float:
    """Lower bound on ``hat C_P = 2 sup Var(f) / E(f, f)`` restricted to
    functions constant on ``[K, inf)``."""
    return 2.0 * top_eigenvalue(_lumped_kernel(m, K, centered=True))
