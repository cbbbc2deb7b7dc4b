"""Witness functions for the necessary condition and the CMP separation.

``f_M`` equals ``1 / mu[tau_k, inf)`` on ``[tau_k, tau_{k+1})``.  Its entropy
grows faster than its p-energy whenever ``beta`` diverges along ``tau``, so
``4 Ent(f_M) / E_p(f_M)``, a lower bound on any admissible p-LS constant,
grows with ``M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import criteria
from .criteria import FAILURE, HOLDS, UNRESOLVED, CriterionReport
from .functionals import SimpleFunction, energy_p, entropy, expectation
from .hardy import c_mu
from .hp import HpParams, _kernel_from_log
from .measure import MeasureError, TailMeasure, cmp

DEFAULT_M_LIST = (5, 10, 20, 40)
ENERGY_RTOL = 1e-10


def _check_tau(m: TailMeasure, tau, M: int) -> np.ndarray:
    tau = np.asarray(tau, dtype=int)
    if M < 1:
        raise ValueError("M must be >= 1")
    if tau.size < M + 1:
        raise ValueError(f"tau has {tau.size} entries, need at least M + 1 = {M + 1}")
    if tau[0] != 0:
        raise ValueError("tau must start at 0")
    if np.any(np.diff(tau[: M + 1]) <= 0):
        raise ValueError("tau must be strictly increasing")
    if tau[M] > m.truncation:
        raise MeasureError(f"tau_M = {tau[M]} beyond truncation {m.truncation}")
    return tau[: M + 1]


def build_fM(m: TailMeasure, tau, M: int) -> SimpleFunction:
    tau = _check_tau(m, tau, M)
    return SimpleFunction(tuple((int(t), math.exp(-m.log_tail(t))) for t in tau))


def fM_energy(m: TailMeasure, tau, M: int, p: float) -> float:
    """``E_p(f_M)`` from the jumps only: ``sum_k mu_{tau_k - 1} f(tau_{k-1})
    H_p(t_{tau_{k-1}} / t_{tau_k})``."""
    tau = _check_tau(m, tau, M)
    lt = m.log_tails
    prev, cur = tau[:-1], tau[1:]
    terms = np.exp(m.log_weights[cur - 1] - lt[prev]) * _kernel_from_log(p, lt[prev] - lt[cur])
    return float(np.sum(terms))


@dataclass
class RatioSeries:
    p: float
    M: list
    ratios: list
    entropies: list
    energies: list

    @property
    def strictly_increasing(self) -> bool:
        return all(b > a for a, b in zip(self.ratios, self.ratios[1:]))

    def pairs(self) -> list:
        return list(zip(self.M, self.ratios))

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "series": [[int(M), r] for M, r in zip(self.M, self.ratios)],
            "entropy": list(self.entropies),
            "energy": list(self.energies),
            "strictly_increasing": self.strictly_increasing,
        }


def ratio_series(m: TailMeasure, p: float, tau, M_list=DEFAULT_M_LIST) -> RatioSeries:
    """``4 Ent(f_M) / E_p(f_M)`` for each ``M``.

    The energy is evaluated twice, from the jump formula and by the generic
    p-energy; a disagreement beyond ``1e-10`` relative raises.
    """
    p = HpParams(float(p)).p
    Ms, rs, ents, ens = [], [], [], []
    for M in M_list:
        f = build_fM(m, tau, int(M))
        e_jump = fM_energy(m, tau, int(M), p)
        e_gen = energy_p(m, f, p, strict=True)
        if not abs(e_jump - e_gen) <= ENERGY_RTOL * max(abs(e_jump), abs(e_gen)):
            raise RuntimeError(f"p-energy paths disagree at M={M}: {e_jump!r} vs {e_gen!r}")
        if not e_jump > 0.0:
            raise ValueError(f"zero p-energy at M={M}")
        ent = entropy(m, f)
        Ms.append(int(M))
        rs.append(4.0 * ent / e_jump)
        ents.append(ent)
        ens.append(e_jump)
    return RatioSeries(p, Ms, rs, ents, ens)


def fM_mean_bound_holds(m: TailMeasure, tau, M: int) -> bool:
    """``E f_M <= M + 1``."""
    return expectation(m, build_fM(m, tau, M)) <= (M + 1) * (1 + 1e-12)


@dataclass
class CounterexampleVerdict:
    nu: float
    p_below: float
    sufficiency_report: CriterionReport
    necessity_report: CriterionReport
    ratio_series: RatioSeries  # at p = nu
    ratio_series_below: RatioSeries
    c_mu: float
    explicit_constant: criteria.ExplicitConstant | None
    verdict: str
    notes: list = field(default_factory=list)

    def as_dict(self, include_series: bool = False) -> dict:
        return {
            "nu": self.nu,
            "p_below": self.p_below,
            "c_mu": self.c_mu,
            "verdict": self.verdict,
            "sufficiency": self.sufficiency_report.as_dict(include_series),
            "necessity": self.necessity_report.as_dict(include_series),
            "ratio_series": self.ratio_series.as_dict(),
            "ratio_series_below": self.ratio_series_below.as_dict(),
            "explicit_constant": None if self.explicit_constant is None else self.explicit_constant.as_dict(),
            "notes": list(self.notes),
        }


def cmp_counterexample(
    nu: float,
    p_below: float,
    n_max: int = 10_000,
    M_list=DEFAULT_M_LIST,
    *,
    threshold: float = criteria.DEFAULT_DIVERGENCE_THRESHOLD,
) -> CounterexampleVerdict:
    """Evidence that ``cmp(nu)`` satisfies p-LS below ``nu`` and fails it at ``nu``.

    The overall verdict is ``separation`` when the sufficient condition
    holds at ``p_below``, beta diverges at ``p = nu`` along ``tau_n = n``
    and the witness ratios at ``nu`` increase; ``unresolved`` when any part
    is unresolved; ``no_separation`` otherwise.
    """
    if not 0.0 < nu < 1.0:
        raise ValueError("nu must lie in (0, 1)")
    if not 0.0 < p_below < nu:
        raise ValueError("need 0 < p_below < nu")
    n_max = int(n_max)
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    if max(M_list) > n_max:
        raise ValueError("M_list entries must not exceed n_max")
    m = cmp(nu, truncation=max(2000, n_max + 64))
    cm = c_mu(m)
    suff = criteria.sufficiency_chat(m, p_below, n_max, poincare_finite=cm.certified and math.isfinite(cm.value))
    tau = criteria.tau_identity(n_max)
    necc = criteria.necessity_scan(m, nu, tau, threshold=threshold)
    rs_nu = ratio_series(m, nu, tau, M_list)
    rs_below = ratio_series(m, p_below, tau, M_list)
    const = None
    notes = []
    if suff.verdict == HOLDS:
        const = criteria.explicit_pls_constant(cm.value, suff.running_sup, p_below)
        suff.explicit_constant = const.constant
        if max(rs_below.ratios) > const.constant:
            notes.append("witness ratio exceeds the explicit constant below nu")

    parts = (suff.verdict, necc.verdict)
    if UNRESOLVED in parts:
        verdict = UNRESOLVED
    elif suff.verdict == HOLDS and necc.verdict == FAILURE and rs_nu.strictly_increasing:
        verdict = "separation"
    else:
        verdict = "no_separation"
    return CounterexampleVerdict(float(nu), float(p_below), suff, necc, rs_nu, rs_below,
                                 cm.value, const, verdict, notes)
