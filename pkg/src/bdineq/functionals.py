"""Entropy, variance, Dirichlet form and p-energy for simple functions.

A simple function is positive, piecewise constant with finitely many jumps
and constant beyond its last breakpoint ``L``.  Every functional therefore
splits into an exact sum over ``k < L`` plus one lumped atom at ``L`` that
carries the tail mass ``mu[L, inf)``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .hp import _kernel_from_log
from .measure import MeasureError, TailMeasure

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimpleFunction:
    """Step function given by ``(index, value)`` breakpoints.

    ``f(k)`` is the value of the last breakpoint with index ``<= k``; the
    first breakpoint must sit at 0.
    """

    breakpoints: tuple

    def __post_init__(self):
        bps = tuple((int(k), float(v)) for k, v in self.breakpoints)
        if not bps:
            raise ValueError("a simple function needs at least one breakpoint")
        idx = [k for k, _ in bps]
        if idx[0] != 0:
            raise ValueError("the first breakpoint must be at index 0")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("breakpoint indices must be strictly increasing")
        if not all(v > 0 and np.isfinite(v) for _, v in bps):
            raise ValueError("simple functions must be strictly positive and finite")
        object.__setattr__(self, "breakpoints", bps)

    @classmethod
    def from_values(cls, values) -> "SimpleFunction":
        """Function equal to ``values[k]`` on ``k < len(values)`` and to the last value after."""
        vals = [float(v) for v in values]
        bps = [(0, vals[0])]
        for k, v in enumerate(vals[1:], start=1):
            if v != bps[-1][1]:
                bps.append((k, v))
        return cls(tuple(bps))

    @classmethod
    def constant(cls, c: float) -> "SimpleFunction":
        return cls(((0, c),))

    @property
    def last_index(self) -> int:
        return self.breakpoints[-1][0]

    def dense(self, length: int | None = None) -> np.ndarray:
        """Values ``f(0), ..., f(length - 1)`` (default ``length = L + 1``)."""
        n = self.last_index + 1 if length is None else int(length)
        out = np.empty(n)
        for (k, v), nxt in zip(self.breakpoints, self.breakpoints[1:] + ((n, None),)):
            if k >= n:
                break
            out[k : min(nxt[0], n)] = v
        return out

    def __call__(self, k: int) -> float:
        val = self.breakpoints[0][1]
        for idx, v in self.breakpoints:
            if idx > k:
                break
            val = v
        return val

    def scaled(self, a: float) -> "SimpleFunction":
        return SimpleFunction(tuple((k, a * v) for k, v in self.breakpoints))

    def map(self, fn) -> "SimpleFunction":
        return SimpleFunction.from_values(fn(self.dense()))

    def to_json(self) -> str:
        return json.dumps([[k, v] for k, v in self.breakpoints])

    @classmethod
    def from_json(cls, text: str) -> "SimpleFunction":
        return cls(tuple((k, v) for k, v in json.loads(text)))


def _lumped(m: TailMeasure, L: int):
    """Masses of the states ``0, ..., L-1`` and the atom ``[L, inf)``."""
    if L > m.truncation:
        raise MeasureError(
            f"function varies up to index {L}, beyond truncation {m.truncation}"
        )
    w = np.empty(L + 1)
    w[:L] = np.exp(m.log_weights[:L])
    w[L] = m.tail(L)
    return w


def _common_length(*fs: SimpleFunction) -> int:
    return max(f.last_index for f in fs)


def expectation(m: TailMeasure, f: SimpleFunction) -> float:
    L = f.last_index
    return float(np.dot(_lumped(m, L), f.dense()))


def _psi(d):
    """``(1 + d) log(1 + d) - d`` for ``d > -1``, without cancellation near 0."""
    d = np.asarray(d, dtype=float)
    out = (1.0 + d) * np.log1p(d) - d
    small = np.abs(d) < 0.25
    if np.any(small):
        ds = d[small]
        acc = np.zeros_like(ds)
        # psi(d) = d^2 sum_{n>=2} (-d)^(n-2) / (n (n-1))
        for n in range(40, 1, -1):
            acc = acc * (-ds) + 1.0 / (n * (n - 1))
        out[small] = ds * ds * acc
    return out


def entropy(m: TailMeasure, f: SimpleFunction) -> float:
    """``Ent(f) = E[f log f] - E f log E f``.

    Computed as ``E[m psi(f/m - 1)]`` with ``m = E f`` and
    ``psi(d) = (1+d) log(1+d) - d >= 0``, so there is no cancellation
    between large terms and near-constant stretches keep full precision.
    """
    L = f.last_index
    w = _lumped(m, L)
    vals = f.dense()
    mf = float(np.dot(w, vals))
    return float(mf * np.dot(w, _psi(vals / mf - 1.0)))


def variance(m: TailMeasure, f: SimpleFunction) -> float:
    L = f.last_index
    w = _lumped(m, L)
    vals = f.dense()
    mf = float(np.dot(w, vals))
    return float(np.dot(w, (vals - mf) ** 2))


def dirichlet(m: TailMeasure, f: SimpleFunction, g: SimpleFunction) -> float:
    """``sum_k Df(k) Dg(k) mu_k``; only finitely many differences are nonzero."""
    L = _common_length(f, g)
    if L == 0:
        return 0.0
    w = _lumped(m, L)[:L]
    return float(np.sum(np.diff(f.dense(L + 1)) * np.diff(g.dense(L + 1)) * w))


def descending_steps(f: SimpleFunction) -> list:
    """Indices ``k`` with ``f(k+1) < f(k)``."""
    return [k1 - 1 for (_, v0), (k1, v1) in zip(f.breakpoints, f.breakpoints[1:]) if v1 < v0]


def energy_p(m: TailMeasure, f: SimpleFunction, p: float, strict: bool = False) -> float:
    """``E_p(f) = sum_k f(k) H_p(f(k+1)/f(k)) mu_k`` for ``p in (0, 2]``.

    ``p = 2`` gives ``4 E(sqrt f, sqrt f)``.  Descending steps (ratio below
    1) are evaluated with the same algebraic formula, which stays
    non-negative; ``strict=True`` rejects them instead.
    """
    if not 0.0 < p <= 2.0:
        raise ValueError(f"p must lie in (0, 2], got {p}")
    down = descending_steps(f)
    if down:
        if strict:
            raise ValueError(f"non-monotone function: descending steps at {down}")
        log.debug("energy_p: H_p evaluated below 1 at steps %s", down)
    L = f.last_index
    if L == 0:
        return 0.0
    w = _lumped(m, L)[:L]
    vals = f.dense()
    logratio = np.log(vals[1:]) - np.log(vals[:-1])
    return float(np.sum(vals[:-1] * _kernel_from_log(p, logratio) * w))


def generator_apply(m: TailMeasure, f: SimpleFunction, k: int) -> float:
    """``Lf(k) = Df(k) - 1{k>0} (mu_{k-1}/mu_k) Df(k-1)``."""
    k = int(k)
    if k < 0 or k > m.truncation - 1:
        raise MeasureError(f"generator index {k} outside [0, {m.truncation - 1}]")
    out = f(k + 1) - f(k)
    if k > 0:
        ratio = np.exp(m.log_weights[k - 1] - m.log_weights[k])
        out -= ratio * (f(k) - f(k - 1))
    return float(out)


def monotone_envelope(f: SimpleFunction) -> SimpleFunction:
    """``g(n) = f(0) + sum_{k<n} (Df(k))_+``, a non-decreasing majorant of ``f``."""
    vals = f.dense()
    up = np.clip(np.diff(vals), 0.0, None)
    g = np.concatenate(([vals[0]], vals[0] + np.cumsum(up)))
    # g >= f holds exactly; the clamp only removes cumulative-sum rounding
    g = np.maximum.accumulate(np.maximum(g, vals))
    return SimpleFunction.from_values(g)


def random_simple_function(
    rng: np.random.Generator,
    max_index: int = 30,
    max_breaks: int = 12,
    lo: float = 1e-2,
    hi: float = 1e2,
) -> SimpleFunction:
    """Breakpoint count uniform in ``[1, max_breaks]``, values log-uniform in ``[lo, hi]``."""
    nb = int(rng.integers(1, max_breaks + 1))
    idx = np.sort(rng.choice(np.arange(1, max_index + 1), size=nb - 1, replace=False))
    idx = np.concatenate(([0], idx))
    vals = np.exp(rng.uniform(np.log(lo), np.log(hi), size=nb))
    return SimpleFunction(tuple(zip(idx.tolist(), vals.tolist())))
