"""Exponential moments and the Poisson-type tail bound forced by p-LS.

If ``mu`` satisfies p-LS(C) then ``E e^X < inf`` and, for ``t > 0``::

    log mu[t, inf) <= -(1 - eps_p(t)) t p log(t + 1)

with an explicit deficiency ``eps_p`` that tends to 0.  The check here is a
falsifier: a measure violating the bound cannot satisfy p-LS with that
``C``; a measure passing it is merely consistent.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .hp import HpParams
from .measure import MeasureError, TailMeasure


class RadiusError(MeasureError):
    """``E e^{lam X}`` diverges (or is not certified) at the requested ``lam``."""


def log_mgf(m: TailMeasure, lam: float, rtol: float = 1e-12) -> float:
    """``log E e^{lam X}`` with a certified bound on the terms beyond ``N``.

    Past the truncation ``e^{lam} mu_{k+1}/mu_k <= e^{lam} q``; when this is
    ``>= 1`` the series is either divergent (geometric at its radius) or
    the truncation is too short to certify it, and ``RadiusError`` is raised.
    """
    lam = float(lam)
    k = np.arange(m.truncation)
    terms = m.log_weights + lam * k
    head = float(logsumexp(terms))
    if m.log_step_ratio_bound is None:
        return head
    log_r = lam + m.log_step_ratio_bound
    if log_r >= 0.0:
        if m.family == "geometric":
            raise RadiusError(
                f"E exp({lam:g} X) diverges: lambda must be < {-m.log_step_ratio_bound:g}"
            )
        raise RadiusError(f"truncation N={m.truncation} too short to certify E exp({lam:g} X)")
    rem = terms[-1] + log_r - math.log1p(-math.exp(log_r))
    if rem - head > math.log(rtol):
        raise RadiusError(
            f"remainder of E exp({lam:g} X) exceeds relative tolerance {rtol:g}; increase N"
        )
    return float(np.logaddexp(head, rem))


def mgf(m: TailMeasure, lam: float) -> float:
    """``E e^{lam X}``; see :func:`log_mgf`."""
    return math.exp(log_mgf(m, lam))


def epsilon_p(p: float, t: float, C: float, log_mgf1: float) -> float:
    """Deficiency in the tail bound for ``p in (0, 1)``::

        1                                                 if t <= e^{1/p} - 1
        min(1, log_mgf1/t + C/4 (1/p - 1)^-2 (t+1)/(t log(t+1)))  otherwise
    """
    if not 0.0 < p < 1.0:
        raise ValueError("epsilon_p needs p in (0, 1)")
    if t <= math.expm1(1.0 / p):
        return 1.0
    val = log_mgf1 / t + 0.25 * C / (1.0 / p - 1.0) ** 2 * (t + 1.0) / (t * math.log1p(t))
    return float(min(1.0, max(0.0, val)))


def phi_schedule(t: float) -> float:
    """Exponent schedule used for ``p = 1``: 0.5 up to ``e^e``, then
    ``1 / (1 + 1/log log t)``."""
    if t <= math.exp(math.e):
        return 0.5
    return 1.0 / (1.0 + 1.0 / math.log(math.log(t)))


def epsilon_1(t: float, C: float, log_mgf1: float, schedule=phi_schedule) -> float:
    """``eps_1(t) = 1 - phi(t) (1 - eps_{phi(t)}(t))``."""
    ph = schedule(t)
    return 1.0 - ph * (1.0 - epsilon_p(ph, t, C, log_mgf1))


@dataclass
class TailCheckInput:
    measure: TailMeasure
    p: float
    pls_constant: float
    t_grid: list

    def __post_init__(self):
        HpParams(float(self.p))
        if not (self.pls_constant > 0.0 and math.isfinite(self.pls_constant)):
            raise ValueError("p-LS constant must be positive and finite")
        tg = [float(t) for t in self.t_grid]
        if not tg or any(t <= 0 for t in tg):
            raise ValueError("t_grid must be a nonempty list of positive reals")
        if any(b < a for a, b in zip(tg, tg[1:])):
            raise ValueError("t_grid must be sorted")
        if math.ceil(tg[-1]) > self.measure.truncation:
            raise MeasureError("t_grid reaches beyond the truncation")
        self.t_grid = tg


@dataclass
class TailRow:
    t: float
    log_tail: float
    bound_rhs: float
    epsilon: float
    holds: bool

    @property
    def margin(self) -> float:
        return self.bound_rhs - self.log_tail


@dataclass
class TailReport:
    p: float
    pls_constant: float
    log_mgf1: float  # inf when E e^X diverges
    rows: list = field(default_factory=list)
    note: str = ""

    @property
    def mgf_finite(self) -> bool:
        return math.isfinite(self.log_mgf1)

    @property
    def all_hold(self) -> bool:
        return self.mgf_finite and all(r.holds for r in self.rows)

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "pls_constant": self.pls_constant,
            "log_mgf1": self.log_mgf1 if self.mgf_finite else "inf",
            "mgf_finite": self.mgf_finite,
            "all_hold": self.all_hold,
            "note": self.note,
            "rows": [
                {
                    "t": r.t,
                    "log_tail": r.log_tail,
                    "bound_rhs": _finite_or_str(r.bound_rhs),
                    "epsilon": _finite_or_str(r.epsilon),
                    "margin": _finite_or_str(r.margin),
                    "holds": r.holds,
                }
                for r in self.rows
            ],
        }


def _finite_or_str(x):
    return x if math.isfinite(x) else str(x)


def herbst_check(inp: TailCheckInput) -> TailReport:
    """Evaluate ``log mu[t, inf) <= -(1 - eps(t)) t p log(t+1)`` on ``t_grid``.

    The tail at real ``t`` is the tail at ``ceil(t)``.  When ``E e^X`` is
    infinite the premise of the bound already fails, so every row is
    reported as failing with ``epsilon = nan``.
    """
    m, p, C = inp.measure, float(inp.p), float(inp.pls_constant)
    try:
        lm1 = log_mgf(m, 1.0)
        note = ""
    except RadiusError as exc:
        lm1 = math.inf
        note = f"exponential moment infinite: {exc}"
    rows = []
    for t in inp.t_grid:
        lt = m.log_tail(math.ceil(t))
        if not math.isfinite(lm1):
            rows.append(TailRow(t, lt, math.nan, math.nan, False))
            continue
        eps = epsilon_1(t, C, lm1) if HpParams(p).is_one else epsilon_p(p, t, C, lm1)
        rhs = -(1.0 - eps) * t * p * math.log1p(t)
        rows.append(TailRow(t, lt, rhs, eps, bool(lt <= rhs)))
    return TailReport(p, C, lm1, rows, note)


def write_tail_csv(report: TailReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "log_tail", "bound_rhs", "epsilon", "holds"])
        for r in report.rows:
            w.writerow([repr(r.t), repr(r.log_tail), repr(r.bound_rhs), repr(r.epsilon), int(r.holds)])
