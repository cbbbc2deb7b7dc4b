import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bdineq.hardy import c_mu
from bdineq.measure import (
    MeasureError,
    build_measure,
    cmp,
    custom_measure,
    geometric,
    mean,
    measure_from_config,
    poisson,
    write_weights_csv,
)

# 40-digit reference values from mpmath.nsum over (k!)^(-1/2)
LOG_Z_CMP_HALF = 1.244012311364759010573764479222441559879
TAIL10_CMP_HALF = 0.0002150570837229986418473438151483619326487
MEAN_CMP_HALF = 1.526628941375141540342752554372794478701

BUILTINS = [
    ("geometric(0.5)", lambda: geometric(0.5)),
    ("geometric(0.9)", lambda: geometric(0.9)),
    ("poisson(2)", lambda: poisson(2.0)),
    ("poisson(0.3)", lambda: poisson(0.3)),
    ("cmp(0.5)", lambda: cmp(0.5)),
    ("cmp(1)", lambda: cmp(1.0)),
    ("cmp(0.9)", lambda: cmp(0.9)),
    ("cmp(2)", lambda: cmp(2.0)),
]


def test_geometric_closed_form():
    m = geometric(0.5, truncation=64)
    k = np.arange(64)
    np.testing.assert_allclose(m.weights, 2.0 ** -(k + 1), rtol=1e-13)
    np.testing.assert_allclose(np.exp(m.log_tails[:64]), 2.0 ** -k, rtol=1e-13)
    assert m.tail(3) == pytest.approx(0.125, rel=1e-14)


def test_cmp_one_is_poisson_one():
    m = cmp(1.0, truncation=200)
    assert m.log_normalizer == pytest.approx(1.0, rel=1e-14)


def test_cmp_half_normalizer_matches_high_precision_sum():
    m = cmp(0.5, truncation=400)
    assert m.log_normalizer == pytest.approx(LOG_Z_CMP_HALF, rel=1e-13)
    assert m.tail(10) == pytest.approx(TAIL10_CMP_HALF, rel=1e-12)


def test_cmp_tail_bracket_at_ten():
    m = cmp(0.5)
    lf = 0.5 * math.lgamma(11)
    assert -lf - m.log_normalizer <= m.log_tail(10) <= -lf


def test_tail_zero_is_one_for_all_builtins():
    for _, make in BUILTINS:
        assert make().tail(0) == 1.0


@pytest.mark.parametrize("name,make", BUILTINS)
def test_tail_recursion_and_strict_decrease(name, make):
    m = make()
    lt = m.log_tails
    np.testing.assert_allclose(np.logaddexp(lt[1:], m.log_weights), lt[:-1], rtol=0, atol=1e-12)
    assert np.all(np.diff(m.log_tails) < 0)


@pytest.mark.parametrize("name,make", BUILTINS)
def test_tail_ratio_bounds(name, make):
    m = make()
    cm = c_mu(m).value
    lt, lw = m.log_tails, m.log_weights
    assert np.all(np.exp(lt[1:] - lw) <= (1 + cm) * (1 + 1e-12))
    assert np.all(np.exp(lt[:-1] - lt[1:]) >= (1 + 1 / cm) * (1 - 1e-12))


@pytest.mark.parametrize("name,make", BUILTINS)
def test_mean_bounded_by_hardy_criterion(name, make):
    m = make()
    assert mean(m) <= 1 + c_mu(m).value


def test_means_of_known_families():
    assert mean(geometric(0.5)) == pytest.approx(1.0, rel=1e-12)
    assert mean(cmp(1.0)) == pytest.approx(1.0, rel=1e-12)
    assert mean(poisson(2.0)) == pytest.approx(2.0, rel=1e-12)
    assert mean(cmp(0.5)) == pytest.approx(MEAN_CMP_HALF, rel=1e-12)


def test_remainder_is_an_upper_bound():
    for fam, kw in [("geometric", {"r": 0.7}), ("cmp", {"nu": 0.5}), ("poisson", {"lam": 3.0})]:
        coarse = build_measure(fam, 200, **kw)
        fine = build_measure(fam, 800, **kw)
        # coarse and fine are normalized differently; compare unnormalized tails
        c = coarse.log_tail_remainder + coarse.log_normalizer
        f = fine.log_tails[200] + fine.log_normalizer
        assert c >= f - 1e-12


@pytest.mark.parametrize("nu", [0.5, 0.9, 1.0])
def test_cmp_bracketing(nu):
    m = cmp(nu)
    n = np.arange(1, m.truncation)
    lf = nu * np.array([math.lgamma(k + 1) for k in n])
    lz = m.log_normalizer
    lt = m.log_tails[n]
    assert np.all(lt >= -lf - lz - 1e-12) and np.all(lt <= -lf + 1e-12)
    lr = m.log_tails[n - 1] - lt
    assert np.all(lr >= nu * np.log(n) - lz - 1e-12)
    assert np.all(lr <= nu * np.log(n) + lz + 1e-12)


@pytest.mark.parametrize("nu", [0.5, 0.9])
def test_stirling_trend(nu):
    m = cmp(nu)
    vals = [(math.log(2) - m.log_tail(n)) / (n * math.log(n)) for n in (250, 500, 1000)]
    assert vals[0] < vals[1] < vals[2] < nu
    assert abs(vals[2] - nu) < 0.2 * nu


def test_no_underflow_deep_in_the_tail():
    m = cmp(1.0, truncation=2000)
    assert np.all(np.isfinite(m.log_tails))
    assert m.log_tail(1500) < -8000


def test_invalid_parameters():
    for bad in [lambda: geometric(1.0), lambda: geometric(0.0), lambda: poisson(-1.0),
                lambda: cmp(0.0), lambda: geometric(0.5, truncation=1)]:
        with pytest.raises(MeasureError):
            bad()
    with pytest.raises(MeasureError):
        build_measure("geometric", 4, r=0.9, auto_extend=False)
    with pytest.raises(MeasureError):
        geometric(0.5).tail(257)


def test_auto_extension_reaches_tolerance():
    m = build_measure("geometric", 4, r=0.9)
    assert m.truncation > 4
    assert m.log_tail_remainder <= math.log(1e-14) + 1e-9


def test_custom_measure_flags_truncation():
    m = custom_measure(np.log([0.9, 0.05, 0.025, 0.0125]))
    assert m.truncation_dependent
    assert m.tail(4) == 0.0
    assert m.tail(1) == pytest.approx(0.0875 / 0.9875, rel=1e-14)


def test_config_roundtrip_and_csv(tmp_path):
    m = measure_from_config({"family": "cmp", "nu": 0.5, "truncation": 2000})
    assert m.params == {"nu": 0.5}
    mc = measure_from_config({"family": "custom", "weights": [1, 2, 3]})
    assert mc.weights == pytest.approx([1 / 6, 2 / 6, 3 / 6])
    path = tmp_path / "w.csv"
    write_weights_csv(geometric(0.5, truncation=8), path)
    data = path.read_bytes()
    assert b"\r" not in data
    lines = data.decode().splitlines()
    assert lines[0] == "k,log_weight,log_tail"
    assert len(lines) == geometric(0.5, truncation=8).truncation + 1


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95))
def test_geometric_tails_property(r):
    m = geometric(r)
    k = np.arange(0, m.truncation, 7)
    np.testing.assert_allclose(m.log_tails[k], k * math.log(r), atol=1e-11)
