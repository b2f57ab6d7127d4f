import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from mpmath import iv

from kshear.decay import INF_ORDER
from kshear.diophantine import (ContinuedFraction, cf_expand, convergents, dio_bound, dio_estimate,
                                liouville_constant, rajchman_dio_check)
from kshear.measures import BernoulliConvolution, UniformTorus


def test_known_expansions():
    assert cf_expand("sqrt(2)", 10).quotients == (1,) + (2,) * 10
    assert cf_expand("phi", 12).quotients == (1,) * 13
    assert cf_expand("pi", 4).quotients == (3, 7, 15, 1, 292)
    assert cf_expand("e", 9).quotients == (2, 1, 2, 1, 1, 4, 1, 1, 6, 1)


@given(st.fractions(min_value=-50, max_value=50, max_denominator=10**9))
def test_rationals_terminate_exactly(x):
    cf = cf_expand(x, depth=200)
    assert cf.rational
    assert cf.convergent(cf.depth) == x


@given(st.lists(st.integers(1, 50), min_size=2, max_size=25), st.integers(-5, 5))
def test_convergent_identities(tail, a0):
    p, q = convergents([a0] + tail)
    for k in range(1, len(p)):
        assert p[k] * q[k - 1] - p[k - 1] * q[k] == (-1) ** (k - 1)
    assert all(q[k] < q[k + 1] for k in range(1, len(q) - 1))


@given(st.integers(2, 40))
def test_sqrt_convergents_approximate(n):
    if math.isqrt(n) ** 2 == n:
        return
    cf = cf_expand(f"sqrt({n})", 25)
    with mpmath.workdps(80):
        x = mpmath.sqrt(n)
        for k in range(cf.depth):
            err = abs(x - mpmath.mpf(cf.p[k]) / cf.q[k])
            assert err < mpmath.mpf(1) / (cf.q[k] * cf.q[k + 1])


def test_float_input_stops_when_uncertified():
    cf = cf_expand(math.sqrt(2), 60)
    assert cf.precision_exhausted
    assert 15 <= cf.depth < 40
    assert all(a == 2 for a in cf.quotients[1:])


def test_interval_precision_restored():
    before = iv.prec
    cf_expand("sqrt(3)", 30, precision_bits=2048)
    assert iv.prec == before


def test_golden_and_sqrt2_exponent():
    phi = dio_estimate(cf_expand("phi", 40))
    rt2 = dio_estimate(cf_expand("sqrt(2)", 40))
    assert phi.estimate == pytest.approx(1.0, abs=0.05)
    assert rt2.estimate == pytest.approx(1.0, abs=0.05)
    assert phi.verdict == rt2.verdict == "finite"
    assert np.all(np.diff(phi.running_max) >= 0)


def test_liouville_exponents_grow_but_stay_below_threshold():
    # the exponent spikes at the k!-digit jumps are about k: 3, 4, 5 within depth 40,
    # and s_k > 10 would need convergents with about 10! digits
    cf = cf_expand(liouville_constant(7), 40)
    assert cf.quotients[:8] == (0, 9, 11, 99, 1, 10, 9, 999999999999)
    d = dio_estimate(cf)
    spikes = d.exponents[d.exponents > 2.5]
    assert np.allclose(spikes, [3, 4, 5], atol=0.05)
    assert d.estimate == pytest.approx(5, abs=0.05)
    assert d.verdict == "finite"


def test_dio_estimate_needs_depth():
    with pytest.raises(ValueError):
        dio_estimate(cf_expand(Fraction(7, 3), 40))


def test_dio_bound():
    assert dio_bound(INF_ORDER) == 1.5
    assert dio_bound(0.8) == 1.5
    assert dio_bound(0.25) == pytest.approx(3.5)
    assert math.isinf(dio_bound(0.0))


def test_bernoulli_samples_respect_bound():
    chk = rajchman_dio_check(BernoulliConvolution(2.5), n_samples=60, depth=30, seed=0, r_hat=0.0181)
    assert chk.violation_fraction == 0.0
    assert not chk.vacuous
    assert chk.to_csv().splitlines()[0] == "sample_id,depth_used,dio_estimate,verdict"


def test_uniform_samples_typical_exponent():
    chk = rajchman_dio_check(UniformTorus(), n_samples=40, depth=30, seed=1, r_hat=INF_ORDER)
    # almost every number has exponent 1; finite depth leaves some spread
    assert np.median(chk.estimates) < 1.3


def test_vacuous_bound_flagged():
    chk = rajchman_dio_check(UniformTorus(), n_samples=5, depth=20, r_hat=0.0)
    assert chk.vacuous and chk.violation_fraction == 0.0
