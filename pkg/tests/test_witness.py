import math

import mpmath as mp
import numpy as np
import pytest

from bdineq.criteria import FAILURE, HOLDS, UNRESOLVED, explicit_pls_constant, sufficiency_chat, tau_identity, tau_power
from bdineq.functionals import descending_steps, expectation
from bdineq.hardy import c_mu
from bdineq.measure import MeasureError, cmp, geometric, poisson
from bdineq.witness import (
    build_fM,
    cmp_counterexample,
    fM_energy,
    fM_mean_bound_holds,
    ratio_series,
)

CMP_HALF = cmp(0.5)


def test_fM_first_example():
    m = geometric(0.5)
    f = build_fM(m, [0, 1], 1)
    assert f.dense(4).tolist() == pytest.approx([1.0, 2.0, 2.0, 2.0])
    assert expectation(m, f) == pytest.approx(1.5, rel=1e-14)


@pytest.mark.parametrize("m", [geometric(0.5), CMP_HALF, poisson(2.0), cmp(1.0)])
@pytest.mark.parametrize("M", [1, 3, 10, 40])
def test_fM_monotone_with_mean_bound(m, M):
    for tau in (tau_identity(60), tau_power(1.3, 200)):
        if tau.size <= M:
            continue
        f = build_fM(m, tau, M)
        assert not descending_steps(f)
        assert fM_mean_bound_holds(m, tau, M)


def test_fM_cmp_mean():
    assert expectation(CMP_HALF, build_fM(CMP_HALF, tau_identity(20), 10)) <= 11


def test_fM_errors():
    with pytest.raises(ValueError):
        build_fM(CMP_HALF, [1, 2, 3], 2)
    with pytest.raises(ValueError):
        build_fM(CMP_HALF, [0, 1], 2)
    with pytest.raises(ValueError):
        build_fM(CMP_HALF, [0, 1], 0)
    with pytest.raises(MeasureError):
        build_fM(geometric(0.5), [0, 10, 10_000], 2)


def test_per_cell_mass_bound():
    for m in (CMP_HALF, geometric(0.5), poisson(2.0)):
        cm = c_mu(m).value
        for tau in (tau_identity(100), tau_power(1.5, 200)):
            lt = m.log_tails[tau]
            cell = -np.expm1(lt[1:] - lt[:-1])  # mu[tau_k, tau_{k+1}) / mu[tau_k, inf)
            assert np.all(cell >= 1 / (1 + cm) * (1 - 1e-12))


def test_fM_ent_and_energy_high_precision():
    nu, p, M = 0.5, 0.4, 5
    with mp.workdps(40):
        w = [mp.factorial(k) ** (-nu) for k in range(400)]
        z = mp.fsum(w)
        w = [x / z for x in w]
        tails = [mp.fsum(w[k:]) for k in range(M + 1)]
        f = [1 / tails[min(k, M)] for k in range(400)]
        ef = mp.fsum(a * b for a, b in zip(w, f))
        ent = mp.fsum(a * b * mp.log(b) for a, b in zip(w, f)) - ef * mp.log(ef)
        pc = mp.mpf(p) / (p - 1)
        Hm = lambda x: p * pc * (x ** (1 / mp.mpf(p)) - 1) * (x ** (1 / pc) - 1)
        en = mp.fsum(w[k] * f[k] * Hm(f[k + 1] / f[k]) for k in range(M))
    rs = ratio_series(CMP_HALF, p, tau_identity(50), [M])
    assert rs.entropies[0] == pytest.approx(float(ent), rel=1e-12)
    assert rs.energies[0] == pytest.approx(float(en), rel=1e-12)
    assert fM_energy(CMP_HALF, tau_identity(50), M, p) == pytest.approx(float(en), rel=1e-12)


def test_ratio_series_increasing_at_nu():
    rs = ratio_series(CMP_HALF, 0.5, tau_identity(100), [5, 10, 20, 40])
    assert rs.strictly_increasing
    assert all(r > 0 and math.isfinite(r) for r in rs.ratios)


@pytest.mark.parametrize("p", [0.2, 0.3, 0.4])
def test_ratio_series_below_explicit_constant(p):
    chat = sufficiency_chat(CMP_HALF, p, 500)
    assert chat.verdict == HOLDS
    const = explicit_pls_constant(c_mu(CMP_HALF).value, chat.running_sup, p).constant
    rs = ratio_series(CMP_HALF, p, tau_identity(100), [1, 5, 10, 20, 40])
    assert max(rs.ratios) <= const


def test_counterexample_half():
    v = cmp_counterexample(0.5, 0.4, 10_000)
    assert v.verdict == "separation"
    assert v.sufficiency_report.verdict == HOLDS
    assert v.necessity_report.verdict == FAILURE
    assert v.ratio_series.strictly_increasing
    assert v.explicit_constant is not None
    assert max(v.ratio_series_below.ratios) <= v.explicit_constant.constant
    d = v.as_dict()
    assert d["verdict"] == "separation" and d["nu"] == 0.5


def test_counterexample_nine_tenths():
    # beta grows like log n: at nu = 0.9 the 2^7..2^13 growth ratio is about 1.32
    v = cmp_counterexample(0.9, 0.5, 10_000)
    assert v.sufficiency_report.verdict == HOLDS
    assert v.ratio_series.strictly_increasing
    assert v.necessity_report.trend["increasing"]
    assert v.necessity_report.verdict == UNRESOLVED and v.verdict == UNRESOLVED
    v = cmp_counterexample(0.9, 0.5, 10_000, threshold=1.25)
    assert v.verdict == "separation"


def test_counterexample_contract():
    with pytest.raises(ValueError):
        cmp_counterexample(0.5, 0.5)
    with pytest.raises(ValueError):
        cmp_counterexample(0.5, 0.7)
    with pytest.raises(ValueError):
        cmp_counterexample(0.5, 0.4, n_max=10, M_list=[20])
