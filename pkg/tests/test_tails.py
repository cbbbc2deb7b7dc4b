import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bdineq.measure import cmp, custom_measure, geometric, poisson
from bdineq.tails import (
    RadiusError,
    TailCheckInput,
    epsilon_1,
    epsilon_p,
    herbst_check,
    log_mgf,
    mgf,
    phi_schedule,
    write_tail_csv,
)


def test_mgf_examples():
    assert mgf(cmp(0.5), 0.0) == pytest.approx(1.0, abs=1e-15)
    assert mgf(geometric(0.5), math.log(1.5)) == pytest.approx(2.0, rel=1e-13)
    with pytest.raises(RadiusError):
        mgf(geometric(0.5), math.log(2.0))


@pytest.mark.parametrize("r,lam", [(0.5, 0.3), (0.2, 1.0), (0.9, 0.05)])
def test_mgf_geometric_closed_form(r, lam):
    assert mgf(geometric(r), lam) == pytest.approx((1 - r) / (1 - r * math.exp(lam)), rel=1e-12)


@pytest.mark.parametrize("lam,t", [(2.0, 1.0), (0.3, -0.5), (5.0, 0.7)])
def test_mgf_poisson_closed_form(lam, t):
    assert mgf(poisson(lam), t) == pytest.approx(math.exp(lam * math.expm1(t)), rel=1e-12)


@pytest.mark.parametrize("nu", [0.5, 0.9, 2.0])
def test_mgf_cmp_matches_high_precision(nu):
    with mp.workdps(40):
        term = lambda k: mp.factorial(k) ** (-nu)
        z = mp.nsum(term, [0, mp.inf])
        ref = mp.nsum(lambda k: term(k) * mp.e**k, [0, mp.inf]) / z
    assert log_mgf(cmp(nu), 1.0) == pytest.approx(float(mp.log(ref)), rel=1e-12)


def test_mgf_custom_is_head_sum():
    m = custom_measure(np.log([1.0, 1.0]))
    assert mgf(m, 1.0) == pytest.approx((1 + math.e) / 2)


def test_epsilon_p_examples():
    p = 0.4
    assert epsilon_p(p, math.expm1(1 / p), 10.0, 1.0) == 1.0
    want = min(1.0, 1 / 100 + 2.5 * (1 / p - 1) ** -2 * 101 / (100 * math.log(101)))
    assert epsilon_p(p, 100.0, 10.0, 1.0) == pytest.approx(want, rel=1e-14)
    far = [epsilon_p(p, t, 10.0, 1.0) for t in (1e6, 1e12, 1e100, 1e300)]
    assert all(b < a for a, b in zip(far, far[1:])) and far[-1] < 1e-2
    with pytest.raises(ValueError):
        epsilon_p(1.0, 10.0, 1.0, 1.0)


def test_epsilon_1_examples():
    assert phi_schedule(10.0) == 0.5
    t = 10.0
    assert epsilon_1(t, 10.0, 1.0) == pytest.approx(1 - 0.5 * (1 - epsilon_p(0.5, t, 10.0, 1.0)))
    ph = 1 / (1 + 1 / math.log(math.log(100.0)))
    want = 1 - ph * (1 - epsilon_p(ph, 100.0, 10.0, 1.0))
    assert epsilon_1(100.0, 10.0, 1.0) == pytest.approx(want, rel=1e-14)
    assert epsilon_1(1e300, 1.0, 1.0) < 0.2


@settings(max_examples=300, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(1e-3, 1e8), st.floats(1e-3, 1e6), st.floats(0.0, 50.0))
def test_epsilon_in_unit_interval(p, t, C, lm):
    assert 0.0 <= epsilon_p(p, t, C, lm) <= 1.0
    assert 0.0 <= epsilon_1(t, C, lm) <= 1.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(1.0, 1e4), st.floats(1.0, 1e5), st.floats(1.0, 10.0))
def test_epsilon_monotone_in_C(p, t, C, a):
    assert epsilon_p(p, t, C * a, 1.0) >= epsilon_p(p, t, C, 1.0)


def test_herbst_cmp_holds():
    m = cmp(0.5)
    rep = herbst_check(TailCheckInput(m, 0.4, 2.8e5, [10, 20, 50, 100]))
    assert rep.mgf_finite and rep.all_hold


def test_herbst_trivial_rows():
    rep = herbst_check(TailCheckInput(cmp(0.5), 0.4, 1e6, [1.0, 5.0]))
    assert all(r.epsilon == 1.0 and r.bound_rhs == 0.0 and r.holds for r in rep.rows)


def test_herbst_geometric_fails():
    rep = herbst_check(TailCheckInput(geometric(0.5), 0.4, 10.0, [10, 20, 50, 100]))
    assert not rep.mgf_finite and not rep.all_hold
    assert "exponential moment" in rep.note


def test_herbst_bites_with_small_constant():
    # geometric(0.2) has E e^X finite; with a small C the bound eventually beats r^t
    m = geometric(0.2)
    rep = herbst_check(TailCheckInput(m, 0.9, 1e-3, [10, 100, 200]))
    assert rep.mgf_finite and not rep.rows[-1].holds


def test_herbst_monotone_in_C():
    m = cmp(0.9)
    ts = [float(t) for t in range(2, 200, 3)]
    prev = None
    for C in np.geomspace(1e-4, 1e4, 30):
        holds = [r.holds for r in herbst_check(TailCheckInput(m, 0.5, C, ts)).rows]
        if prev is not None:
            assert all(h or not q for h, q in zip(holds, prev))
        prev = holds


def test_herbst_p_one_uses_schedule():
    rep = herbst_check(TailCheckInput(cmp(1.0), 1.0, 5.0, [50.0]))
    lm = log_mgf(cmp(1.0), 1.0)
    assert rep.rows[0].epsilon == pytest.approx(epsilon_1(50.0, 5.0, lm))


def test_input_validation():
    m = cmp(0.5)
    for kw in [dict(pls_constant=0.0), dict(pls_constant=math.inf), dict(t_grid=[5, 1]),
               dict(t_grid=[]), dict(p=1.5), dict(t_grid=[1e6])]:
        args = dict(measure=m, p=0.4, pls_constant=1.0, t_grid=[1.0]) | kw
        with pytest.raises(ValueError):
            TailCheckInput(**args)


def test_csv(tmp_path):
    rep = herbst_check(TailCheckInput(cmp(0.5), 0.4, 10.0, [10, 100]))
    path = tmp_path / "t.csv"
    write_tail_csv(rep, path)
    lines = path.read_bytes().split(b"\n")
    assert lines[0] == b"t,log_tail,bound_rhs,epsilon,holds" and b"\r" not in path.read_bytes()
    assert len([ln for ln in lines if ln]) == 3
