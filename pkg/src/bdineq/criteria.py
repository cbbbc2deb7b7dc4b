"""Sufficient and necessary conditions for p-log-Sobolev inequalities on N.

Sufficient: ``Ch = sup_n log(2 / t_n) / H_p(t_{n-1} / t_n) < inf`` together
with a Poincare inequality; the resulting constant is assembled explicitly
in :func:`explicit_pls_constant`.  Necessary: along some increasing
``tau``, ``beta_n = log(2 / t_{tau_n}) t_{tau_{n-1}} /
(H_p(t_{tau_{n-1}} / t_{tau_n}) t_{tau_n - 1})`` must stay bounded.
Here ``t_k = mu[k, inf)``.

A finite scan can only exhibit evidence, so verdicts are three-valued.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .hp import HpParams, _kernel_from_log, hp_derivative, hp_value
from .measure import MeasureError, TailMeasure

HOLDS = "holds"
FAILURE = "evidence_of_failure"
UNRESOLVED = "unresolved"

DEFAULT_CHECKPOINT_EXPONENTS = (7, 13)
DEFAULT_DIVERGENCE_THRESHOLD = 1.5
DEFAULT_WINDOW = 0.1


@dataclass
class CriterionReport:
    kind: str  # "sufficient" | "necessary"
    p: float
    n: np.ndarray
    values: np.ndarray
    running_sup: float
    argmax: int
    trend: dict
    verdict: str
    explicit_constant: float | None = None
    notes: list = field(default_factory=list)

    def series(self) -> list:
        return [(int(a), float(b)) for a, b in zip(self.n, self.values)]

    def value_at(self, n: int) -> float:
        i = int(np.searchsorted(self.n, n))
        if i >= self.n.size or self.n[i] != n:
            raise KeyError(n)
        return float(self.values[i])

    def as_dict(self, include_series: bool = False) -> dict:
        out = {
            "kind": self.kind,
            "p": self.p,
            "n_last": int(self.n[-1]) if self.n.size else None,
            "running_sup": self.running_sup,
            "argmax": self.argmax,
            "trend": self.trend,
            "verdict": self.verdict,
            "explicit_constant": self.explicit_constant,
            "notes": list(self.notes),
        }
        if include_series:
            out["series"] = [[int(a), float(b)] for a, b in zip(self.n, self.values)]
        return out


def dyadic_checkpoints(n_last: int, exponents=DEFAULT_CHECKPOINT_EXPONENTS) -> list:
    lo, hi = exponents
    pts = [2**j for j in range(lo, hi + 1) if 2**j <= n_last]
    if len(pts) < 2:
        pts = [2**j for j in range(0, hi + 1) if 2**j <= n_last]
    return pts


def _checkpoint_trend(n, values, threshold, exponents) -> dict:
    pts = dyadic_checkpoints(int(n[-1]), exponents) if n.size else []
    pts = [c for c in pts if c >= n[0]]
    vals = [float(values[np.searchsorted(n, c)]) for c in pts]
    increasing = len(vals) >= 2 and all(b > a for a, b in zip(vals, vals[1:]))
    decreasing = len(vals) >= 2 and all(b <= a for a, b in zip(vals, vals[1:]))
    ratio = vals[-1] / vals[0] if len(vals) >= 2 and vals[0] > 0 else None
    return {
        "checkpoints": pts,
        "checkpoint_values": vals,
        "increasing": increasing,
        "decreasing": decreasing,
        "growth_ratio": ratio,
        "diverging": bool(increasing and ratio is not None and ratio > threshold),
        "threshold": threshold,
    }


def _pcheck(p: float) -> float:
    return HpParams(float(p)).p


def rho_choice(c_mu: float) -> tuple:
    """``rho = min(((1 + C_mu) / C_mu)**(1/3), 2)`` and ``eps = 1 / rho``."""
    if not c_mu > 0.0:
        raise ValueError("C_mu must be positive")
    rho = min(((1.0 + c_mu) / c_mu) ** (1.0 / 3.0), 2.0)
    return rho, 1.0 / rho


def rho_eps_chain(m: TailMeasure, c_mu: float, rtol: float = 1e-12) -> bool:
    """``eps < 1 < rho < rho**2 <= eps (1 + 1/C_mu) <= eps t_{l-1}/t_l`` for
    every ``1 <= l <= N``; the last link is the tail-ratio lower bound."""
    rho, eps = rho_choice(c_mu)
    lt = m.log_tails
    ratios = np.exp(lt[:-1] - lt[1:])
    floor = eps * (1.0 + 1.0 / c_mu)
    return bool(
        eps < 1.0 < rho < rho * rho <= floor * (1 + rtol)
        and np.all(floor <= eps * ratios * (1 + rtol))
    )


def sufficiency_summands(m: TailMeasure, p: float, n_max: int) -> np.ndarray:
    """``log(2 / t_n) / H_p(t_{n-1} / t_n)`` for ``n = 1..n_max``."""
    p = _pcheck(p)
    limit = m.truncation if m.log_step_ratio_bound is not None else m.truncation - 1
    if not 1 <= n_max <= limit:
        raise MeasureError(f"n_max must lie in [1, {limit}], got {n_max}")
    lt = m.log_tails[: n_max + 1]
    logratio = lt[:-1] - lt[1:]
    if np.any(logratio < 0):
        raise MeasureError("tail ratio below 1: corrupted measure data")
    return (math.log(2.0) - lt[1:]) / _kernel_from_log(p, logratio)


def sufficiency_chat(
    m: TailMeasure,
    p: float,
    n_max: int,
    *,
    poincare_finite: bool = True,
    window: float = DEFAULT_WINDOW,
    threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
    exponents=DEFAULT_CHECKPOINT_EXPONENTS,
    rtol: float = 1e-12,
) -> CriterionReport:
    """Scan the sufficient-condition summands up to ``n_max``.

    The verdict is ``holds`` when the running sup is already reached before
    the trailing ``window`` and the Poincare constant is finite;
    ``evidence_of_failure`` when it keeps growing and the dyadic checkpoints
    increase by more than ``threshold``; ``unresolved`` otherwise.
    """
    vals = sufficiency_summands(m, p, n_max)
    n = np.arange(1, n_max + 1)
    amax = int(np.argmax(vals))
    sup = float(vals[amax])
    start = max(1, int(math.floor((1.0 - window) * n_max)))
    head = float(vals[: start - 1].max()) if start > 1 else -math.inf
    flat = head >= sup * (1.0 - rtol)
    trend = _checkpoint_trend(n, vals, threshold, exponents)
    trend.update({"window_start": start, "flat": bool(flat)})
    if flat and poincare_finite:
        verdict = HOLDS
    elif not flat and trend["diverging"]:
        verdict = FAILURE
    else:
        verdict = UNRESOLVED
    notes = []
    if m.truncation_dependent:
        notes.append("custom measure: results depend on the truncation")
    return CriterionReport("sufficient", float(p), n, vals, sup, amax + 1, trend, verdict, notes=notes)


def tau_identity(n_max: int) -> np.ndarray:
    return np.arange(0, int(n_max) + 1)


def tau_power(gamma: float, limit: int) -> np.ndarray:
    """``0`` followed by the distinct values ``ceil(gamma**n) <= limit``."""
    if not gamma > 1.0:
        raise ValueError("gamma must exceed 1")
    out = [0]
    n = 0
    while True:
        v = math.ceil(gamma**n)
        if v > limit:
            break
        if v > out[-1]:
            out.append(v)
        n += 1
    return np.asarray(out)


def necessity_betas(m: TailMeasure, p: float, tau) -> np.ndarray:
    p = _pcheck(p)
    tau = np.asarray(tau, dtype=int)
    if tau.ndim != 1 or tau.size < 2:
        raise ValueError("tau needs at least two indices")
    if np.any(np.diff(tau) <= 0):
        raise ValueError("tau must be strictly increasing")
    if tau[0] < 0 or tau[-1] > m.truncation:
        raise MeasureError(f"tau indices must lie in [0, {m.truncation}]")
    lt = m.log_tails
    prev, cur = tau[:-1], tau[1:]
    logratio = lt[prev] - lt[cur]
    log_corr = lt[prev] - lt[cur - 1]
    return np.exp(log_corr) * (math.log(2.0) - lt[cur]) / _kernel_from_log(p, logratio)


def necessity_scan(
    m: TailMeasure,
    p: float,
    tau,
    *,
    threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
    exponents=DEFAULT_CHECKPOINT_EXPONENTS,
) -> CriterionReport:
    """``beta_n`` for ``n = 1..len(tau)-1`` with a divergence verdict.

    ``evidence_of_failure`` when beta increases across the dyadic
    checkpoints with last/first above ``threshold``; ``holds`` (no failure
    evidence) when it is non-increasing there; ``unresolved`` otherwise.
    """
    vals = necessity_betas(m, p, tau)
    n = np.arange(1, vals.size + 1)
    amax = int(np.argmax(vals))
    trend = _checkpoint_trend(n, vals, threshold, exponents)
    if vals.size < 2:
        verdict = UNRESOLVED
    elif trend["diverging"]:
        verdict = FAILURE
    elif trend["decreasing"]:
        verdict = HOLDS
    else:
        verdict = UNRESOLVED
    return CriterionReport("necessary", float(p), n, vals, float(vals[amax]), amax + 1, trend, verdict)


# -- alpha_{x, rho}(k) ---------------------------------------------------------


def _phi(p, d):
    """``H_p(e^d)`` for ``d >= 0``."""
    return _kernel_from_log(p, d)


def _dphi(p, d):
    """``d/dd H_p(e^d) = H_p'(e^d) e^d``."""
    return hp_derivative(p, math.exp(d)) * math.exp(d)


def _check_alpha_args(m, x, rho, k):
    if not 1.0 < rho <= x:
        raise ValueError("need 1 < rho <= x")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > m.truncation:
        raise MeasureError(f"k must not exceed the truncation {m.truncation}")


@dataclass
class AlphaResult:
    value: float
    ladder: np.ndarray  # g_0 .. g_k
    boundary_active: bool  # g_{k-1} sits at rho (closure of the open constraint)
    sweeps: int


def _alpha_objective(p, mu, u):
    return float(np.sum(mu * _phi(p, np.diff(u))))


def alpha_exact(m: TailMeasure, p: float, x: float, rho: float, k: int,
                tol: float = 1e-15, max_sweeps: int = 100_000) -> AlphaResult:
    """Infimum of ``sum_{s<k} H_p(g_{s+1}/g_s) mu_s`` over ladders
    ``1 = g_0 <= ... <= g_{k-1} <= rho <= x = g_k``.

    Convex in ``u = log g``; solved by coordinate descent, each coordinate
    minimized exactly on its box ``[u_{s-1}, min(u_{s+1}, log rho)]``.
    The constraint ``g_{k-1} < rho`` is taken on its closure.
    """
    p = _pcheck(p)
    _check_alpha_args(m, x, rho, k)
    mu = np.exp(m.log_weights[:k])
    lx, lr = math.log(x), math.log(rho)
    u = np.zeros(k + 1)
    u[k] = lx
    if k == 1:
        return AlphaResult(float(mu[0] * hp_value(p, x)), np.exp(u), False, 0)
    # start from an even split of log(rho) below the threshold
    u[1:k] = np.linspace(0.0, lr, k + 1)[1:k] * (k - 1) / k
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        moved = 0.0
        for s in range(1, k):
            lo = u[s - 1]
            hi = min(u[s + 1], lr)

            def grad(v, s=s):
                return mu[s - 1] * _dphi(p, v - u[s - 1]) - mu[s] * _dphi(p, u[s + 1] - v)

            if hi <= lo:
                new = lo
            elif grad(hi) <= 0.0:
                new = hi
            elif grad(lo) >= 0.0:
                new = lo
            else:
                new = optimize.brentq(grad, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)
            moved = max(moved, abs(new - u[s]))
            u[s] = new
        if moved <= tol:
            break
    else:
        raise RuntimeError("alpha coordinate descent did not converge")
    return AlphaResult(_alpha_objective(p, mu, u), np.exp(u), bool(u[k - 1] >= lr - 1e-12), sweeps)


def alpha_grid(m: TailMeasure, p: float, x: float, rho: float, k: int,
               resolution: float = 1e-3, levels: int = 3, shrink: int = 20) -> float:
    """Brute-force ``alpha`` over a grid of ladders by exhaustive dynamic
    programming along the chain, refined ``levels`` times around the best
    grid ladder (each level divides the spacing by ``shrink``)."""
    p = _pcheck(p)
    _check_alpha_args(m, x, rho, k)
    mu = np.exp(m.log_weights[:k])
    lx, lr = math.log(x), math.log(rho)
    if k == 1:
        return float(mu[0] * hp_value(p, x))

    n0 = max(2, int(math.ceil(lr / resolution)) + 1)
    grids = [np.linspace(0.0, lr, n0) for _ in range(k - 1)]
    h = lr / (n0 - 1)
    best = math.inf
    for level in range(levels + 1):
        # V[i] = best cost of a ladder ending at grids[s][i]
        V = mu[0] * _phi(p, grids[0])
        back = []
        for s in range(1, k - 1):
            d = grids[s][:, None] - grids[s - 1][None, :]
            cost = np.where(d >= 0.0, V[None, :] + mu[s] * _phi(p, np.clip(d, 0.0, None)), np.inf)
            arg = np.argmin(cost, axis=1)
            back.append(arg)
            V = cost[np.arange(d.shape[0]), arg]
        final = V + mu[k - 1] * _phi(p, lx - grids[-1])
        i = int(np.argmin(final))
        best = min(best, float(final[i]))
        if level == levels:
            break
        path = [i]
        for arg in reversed(back):
            path.append(int(arg[path[-1]]))
        path.reverse()
        centers = [grids[s][path[s]] for s in range(k - 1)]
        new_h = h / shrink
        npts = 4 * shrink + 1
        grids = [
            np.clip(c + new_h * np.arange(-(npts // 2), npts // 2 + 1), 0.0, lr)
            for c in centers
        ]
        grids = [np.unique(np.append(g, [0.0, lr])) for g in grids]
        h = new_h
    return best


def alpha_lower_bounds(m: TailMeasure, p: float, x: float, rho: float, k: int) -> tuple:
    """Cauchy-Schwarz bound ``(log x)^2 / sum_{s<k} 1/mu_s`` and last-step
    bound ``H_p(x / rho) mu_{k-1}``."""
    p = _pcheck(p)
    _check_alpha_args(m, x, rho, k)
    lw = m.log_weights[:k]
    inv = float(np.exp(np.logaddexp.reduce(-lw)))
    b1 = math.log(x) ** 2 / inv
    b2 = float(hp_value(p, x / rho)) * math.exp(lw[k - 1])
    return b1, b2


# -- explicit constant ---------------------------------------------------------


@dataclass
class ExplicitConstant:
    p: float
    c_mu: float
    chat: float
    rho: float
    eps: float
    c1: float  # upper bound C_2 + 2 C_3
    c2: float
    c3: float
    c_rho: float
    floor_term: float  # 64 C_mu (1 + sqrt(rho))^2
    constant: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def explicit_pls_constant(c_mu: float, chat: float, p: float) -> ExplicitConstant:
    """p-LS constant from ``C_mu`` and ``Ch``::

        C2 <= (1 + C_mu) rho/(rho-1) max{H(rho^3)/H(rho), rho^2 H'(rho^3)/H'(rho), rho^(2/p)} Ch
        C3 <= C_mu (rho^3/log rho + 2 rho^2 max{1, rho log rho / H(rho), (1 + log rho)/H'(rho)})
        C1 <= C2 + 2 C3,   C_rho = (C1 + C2 + C3)/(1 - eps)
        C  = 64 C_mu (1 + sqrt rho)^2 + 4 C_rho
    """
    p = _pcheck(p)
    if not math.isfinite(chat):
        raise ValueError("sufficient condition fails (Ch is infinite): no constant")
    if not math.isfinite(c_mu) or c_mu <= 0.0:
        raise ValueError("C_mu must be positive and finite")
    if chat < 0.0:
        raise ValueError("Ch must be non-negative")
    rho, eps = rho_choice(c_mu)
    lr = math.log(rho)
    H = lambda y: float(hp_value(p, y))  # noqa: E731
    dH = lambda y: float(hp_derivative(p, y))  # noqa: E731
    r3 = rho**3
    m2 = max(H(r3) / H(rho), rho**2 * dH(r3) / dH(rho), rho ** (2.0 / p))
    c2 = (1.0 + c_mu) * rho / (rho - 1.0) * m2 * chat
    m3 = max(1.0, rho * lr / H(rho), (1.0 + lr) / dH(rho))
    c3 = c_mu * (r3 / lr + 2.0 * rho**2 * m3)
    c1 = c2 + 2.0 * c3
    c_rho = (c1 + c2 + c3) / (1.0 - eps)
    floor = 64.0 * c_mu * (1.0 + math.sqrt(rho)) ** 2
    return ExplicitConstant(p, c_mu, chat, rho, eps, c1, c2, c3, c_rho, floor, floor + 4.0 * c_rho)
