"""Fully supported probability measures on the non-negative integers.

Weights are stored as logarithms because the interesting families decay
super-exponentially: ``(k!)**-nu`` underflows binary64 around ``k ~ 170`` for
``nu = 1``.  Tails ``mu[k, inf)`` are accumulated backwards, smallest terms
first, starting from a certified upper bound on the mass beyond the
truncation index.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy.special import gammaln, logsumexp

FAMILIES = ("geometric", "poisson", "cmp", "custom")

# Mass beyond the truncation, relative to the total mass.
DEFAULT_REMAINDER_TOL = 1e-14
_MAX_TRUNCATION = 2_000_000


class MeasureError(ValueError):
    """Invalid measure parameters or a query outside the stored range."""


@dataclass(frozen=True)
class TailMeasure:
    """Normalized measure on ``{0, 1, ...}`` with log-space weights.

    ``log_weights[k] = log mu_k`` for ``k < truncation``; everything at or
    beyond ``truncation`` is summarized by ``log_tail_remainder``, an upper
    bound on ``log mu[N, inf)``.  ``log_step_ratio_bound`` is ``log q`` with
    ``mu_{k+1} / mu_k <= q < 1`` for all ``k >= N - 1``; it is ``None`` for
    custom measures, whose remainder is declared to be zero.
    """

    log_weights: np.ndarray
    log_tail_remainder: float
    family: str
    params: dict = field(default_factory=dict)
    log_normalizer: float = 0.0
    log_step_ratio_bound: float | None = None
    log_tails: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lw = np.array(self.log_weights, dtype=float)
        if lw.ndim != 1 or lw.size < 2:
            raise MeasureError("need at least two weights (truncation N >= 2)")
        if not np.all(np.isfinite(lw)):
            raise MeasureError("all weights must be strictly positive and finite")
        if self.family not in FAMILIES:
            raise MeasureError(f"unknown family {self.family!r}")
        # smallest terms first: remainder, mu_{N-1}, ..., mu_0
        seq = np.concatenate(([self.log_tail_remainder], lw[::-1]))
        lt = np.logaddexp.accumulate(seq)[::-1]
        # pin mu[0, inf) = 1 exactly; the shift is a few ulps
        shift = lt[0]
        lw = lw - shift
        lt = lt - shift
        object.__setattr__(self, "log_tail_remainder", self.log_tail_remainder - shift)
        lw.setflags(write=False)
        lt.setflags(write=False)
        object.__setattr__(self, "log_weights", lw)
        object.__setattr__(self, "log_tails", lt)

    @property
    def truncation(self) -> int:
        return self.log_weights.size

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def truncation_dependent(self) -> bool:
        """True when no certified bound covers the mass beyond the truncation."""
        return self.log_step_ratio_bound is None

    def _check_index(self, k: int) -> int:
        k = int(k)
        if k < 0 or k > self.truncation:
            raise MeasureError(f"index {k} outside [0, {self.truncation}]")
        return k

    def log_tail(self, k: int) -> float:
        """``log mu[k, inf)`` for ``0 <= k <= N``."""
        return float(self.log_tails[self._check_index(k)])

    def tail(self, k: int) -> float:
        """``mu[k, inf)`` for ``0 <= k <= N``."""
        return math.exp(self.log_tail(k))

    def tail_at(self, t: float) -> float:
        """``mu[t, inf)`` for real ``t >= 0``, i.e. the tail at ``ceil(t)``."""
        return self.tail(math.ceil(t))

    def log_weight(self, k: int) -> float:
        k = int(k)
        if k < 0 or k >= self.truncation:
            raise MeasureError(f"weight index {k} outside [0, {self.truncation - 1}]")
        return float(self.log_weights[k])

    def describe(self) -> dict:
        return {
            "family": self.family,
            "params": dict(self.params),
            "truncation": self.truncation,
            "log_normalizer": self.log_normalizer,
            "log_tail_remainder": self.log_tail_remainder,
            "truncation_dependent": self.truncation_dependent,
        }


def _family_log_weights(family: str, params: Mapping[str, float], n: int):
    """Unnormalized log weights for ``k < n`` and ``log q`` at truncation ``n``."""
    k = np.arange(n, dtype=float)
    if family == "geometric":
        r = params["r"]
        return k * math.log(r), math.log(r)
    if family == "poisson":
        lam = params["lam"]
        if n <= lam:
            return None, None
        return k * math.log(lam) - gammaln(k + 1), math.log(lam / n)
    if family == "cmp":
        nu = params["nu"]
        return -nu * gammaln(k + 1), -nu * math.log(n)
    raise MeasureError(f"family {family!r} has no closed-form weights")


def _validate_params(family: str, params: Mapping[str, float]) -> dict:
    need = {"geometric": "r", "poisson": "lam", "cmp": "nu"}[family]
    if need not in params:
        raise MeasureError(f"{family} measure needs parameter {need!r}")
    val = float(params[need])
    if family == "geometric" and not 0.0 < val < 1.0:
        raise MeasureError(f"geometric ratio must lie in (0, 1), got {val}")
    if family in ("poisson", "cmp") and not val > 0.0:
        raise MeasureError(f"{family} parameter must be positive, got {val}")
    return {need: val}


def build_measure(
    family: str,
    truncation: int = 256,
    *,
    remainder_tol: float = DEFAULT_REMAINDER_TOL,
    auto_extend: bool = True,
    **params: float,
) -> TailMeasure:
    """Build a normalized geometric, Poisson or Conway-Maxwell-Poisson measure.

    The unnormalized weights are ``r**k``, ``lam**k / k!`` and ``(k!)**-nu``.
    The mass beyond ``N`` is bounded through the weight ratio,
    ``mu[N, inf) <= mu_{N-1} q / (1 - q)``, with ``q = r``, ``lam / N`` and
    ``N**-nu`` respectively.  If that bound exceeds ``remainder_tol`` times
    the total mass, ``N`` is doubled (``auto_extend``) or an error is raised.
    """
    if family == "custom":
        raise MeasureError("use custom_measure() for user-supplied weights")
    if family not in FAMILIES:
        raise MeasureError(f"unknown family {family!r}")
    params = _validate_params(family, params)
    n = int(truncation)
    if n < 2:
        raise MeasureError("truncation N must be >= 2")

    while True:
        lw, log_q = _family_log_weights(family, params, n)
        if lw is not None and log_q < 0.0:
            log_rem = lw[-1] + log_q - math.log1p(-math.exp(log_q))
            log_total = float(np.logaddexp(logsumexp(lw), log_rem))
            if log_rem - log_total <= math.log(remainder_tol):
                break
        if not auto_extend:
            raise MeasureError(
                f"truncation N={n} too small for remainder tolerance {remainder_tol:g}"
            )
        n *= 2
        if n > _MAX_TRUNCATION:
            raise MeasureError("could not reach the remainder tolerance")

    return TailMeasure(
        log_weights=lw - log_total,
        log_tail_remainder=log_rem - log_total,
        family=family,
        params=params,
        log_normalizer=log_total,
        log_step_ratio_bound=log_q,
    )


def geometric(r: float, truncation: int = 256, **kw) -> TailMeasure:
    return build_measure("geometric", truncation, r=r, **kw)


def poisson(lam: float, truncation: int = 256, **kw) -> TailMeasure:
    return build_measure("poisson", truncation, lam=lam, **kw)


def cmp(nu: float, truncation: int = 2000, **kw) -> TailMeasure:
    return build_measure("cmp", truncation, nu=nu, **kw)


def custom_measure(log_weights) -> TailMeasure:
    """Measure supported on ``{0, ..., N-1}`` from (unnormalized) log weights.

    No tail bound exists for arbitrary input, so the remainder is declared
    zero and results are flagged as truncation-dependent.
    """
    lw = np.asarray(log_weights, dtype=float)
    if lw.ndim != 1 or lw.size < 2:
        raise MeasureError("custom measure needs at least two weights")
    if not np.all(np.isfinite(lw)):
        raise MeasureError("custom weights must be strictly positive and finite")
    log_total = float(logsumexp(lw))
    return TailMeasure(
        log_weights=lw - log_total,
        log_tail_remainder=-math.inf,
        family="custom",
        params={},
        log_normalizer=log_total,
        log_step_ratio_bound=None,
    )


def measure_from_config(spec: Mapping[str, Any]) -> TailMeasure:
    """Build a measure from a config mapping such as ``{"family": "cmp", "nu": 0.5}``."""
    spec = dict(spec)
    family = spec.pop("family", None)
    if family is None:
        raise MeasureError("measure spec needs a 'family' key")
    if family == "custom":
        if "log_weights" in spec:
            return custom_measure(spec["log_weights"])
        if "weights" in spec:
            w = np.asarray(spec["weights"], dtype=float)
            if np.any(w <= 0):
                raise MeasureError("custom weights must be strictly positive")
            return custom_measure(np.log(w))
        raise MeasureError("custom measure needs 'log_weights' or 'weights'")
    truncation = spec.pop("truncation", 2000 if family == "cmp" else 256)
    tol = spec.pop("remainder_tol", DEFAULT_REMAINDER_TOL)
    return build_measure(family, int(truncation), remainder_tol=float(tol), **spec)


def mean(m: TailMeasure, tol: float = 1e-10) -> float:
    """Certified upper value of ``E X`` for ``X ~ m``.

    Beyond ``N`` the tails decay at least geometrically with ratio ``q``, so
    ``sum_{k>=N} k mu_k <= mu[N, inf) (N + q / (1 - q))``.
    """
    k = np.arange(m.truncation)
    head = float(np.sum(k * m.weights))
    if m.log_step_ratio_bound is None:
        return head
    q = math.exp(m.log_step_ratio_bound)
    rem = math.exp(m.log_tail_remainder) * (m.truncation + q / (1.0 - q))
    if rem > tol * max(head, 1.0):
        raise MeasureError(f"mean not certified: remainder bound {rem:.3g} too large")
    return head + rem


def write_weights_csv(m: TailMeasure, path) -> None:
    """Dump ``k, log_weight, log_tail`` rows (header row, LF line endings)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "log_weight", "log_tail"])
        for k in range(m.truncation):
            w.writerow([k, repr(float(m.log_weights[k])), repr(float(m.log_tails[k]))])
