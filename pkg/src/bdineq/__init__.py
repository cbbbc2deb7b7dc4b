"""Functional inequalities for birth-death processes on the non-negative integers."""

from .criteria import (
    CriterionReport,
    alpha_exact,
    alpha_lower_bounds,
    explicit_pls_constant,
    necessity_scan,
    rho_choice,
    sufficiency_chat,
)
from .functionals import SimpleFunction, dirichlet, energy_p, entropy, variance
from .hardy import c_mu, hardy_numeric, poincare_numeric
from .hp import hp_value
from .measure import TailMeasure, build_measure, cmp, custom_measure, geometric, poisson
from .tails import herbst_check, mgf
from .witness import build_fM, cmp_counterexample, ratio_series

__version__ = "0.1.0"

__all__ = [
    "CriterionReport", "SimpleFunction", "TailMeasure",
    "alpha_exact", "alpha_lower_bounds", "build_fM", "build_measure", "c_mu", "cmp",
    "cmp_counterexample", "custom_measure", "dirichlet", "energy_p", "entropy",
    "explicit_pls_constant", "geometric", "hardy_numeric", "herbst_check", "hp_value",
    "mgf", "necessity_scan", "poincare_numeric", "poisson", "ratio_series", "rho_choice",
    "sufficiency_chat", "variance",
]
