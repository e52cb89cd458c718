import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from nstars.errors import DivergentSum, DomainError, SingularIdentity
from nstars.gammakit import finite_gamma_sum, gamma_ratio, infinite_gamma_sum, log_gamma_ratio

mp.mp.dps = 40


def mp_log_ratio(n, a, b):
    return float(mp.loggamma(mp.mpf(n) + a) - mp.loggamma(mp.mpf(n) + b))


def mp_direct_sum(n, a, b):
    return float(mp.fsum(mp.gamma(i + mp.mpf(a)) / mp.gamma(i + mp.mpf(b)) for i in range(n + 1)))


def test_trivial_values():
    assert log_gamma_ratio(0, 1, 3) == pytest.approx(math.log(0.5), rel=1e-15)
    assert log_gamma_ratio(0, 5, 5) == 0.0
    assert finite_gamma_sum(1, 2, 4) == pytest.approx(0.25, rel=1e-15)
    assert finite_gamma_sum(0, 2, 2) == pytest.approx(1.0, rel=1e-15)
    assert infinite_gamma_sum(1, 3) == pytest.approx(1.0, rel=1e-15)


def test_large_n_asymptotic():
    n = 10 ** 6
    assert math.exp(log_gamma_ratio(n, 0.3, 1.2)) * n ** 0.9 == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("n,a,b", [
    (0, 0.5, 2.0), (3, 1.7, 0.2), (19.5, 0.3, 0.9), (20, 0.1, 7.3), (1e3, 0.4, 2.2),
    (12345, 3.3, 0.05), (1e7, 0.3, 1.2), (1e7, 5.0, 0.25), (2.5e8, 1.1, 1.9),
])
def test_log_ratio_matches_mpmath(n, a, b):
    got = log_gamma_ratio(n, a, b)
    want = mp_log_ratio(n, a, b)
    assert got == pytest.approx(want, rel=1e-13, abs=1e-13)


def test_log_ratio_vectorised():
    n = np.array([0, 5, 50, 5000, 5e6])
    got = log_gamma_ratio(n, 0.7, 2.1)
    want = [mp_log_ratio(k, 0.7, 2.1) for k in n]
    np.testing.assert_allclose(got, want, rtol=1e-13)
    np.testing.assert_allclose(gamma_ratio(n, 0.7, 2.1), np.exp(want), rtol=1e-12)


@pytest.mark.parametrize("n,a,b", [(0, 0, 1), (0, 1, -0.5), (2, -3, 1)])
def test_log_ratio_domain(n, a, b):
    with pytest.raises(DomainError):
        log_gamma_ratio(n, a, b)


def test_finite_sum_fifty_terms():
    assert finite_gamma_sum(50, 0.9, 3.1) == pytest.approx(mp_direct_sum(50, 0.9, 3.1), rel=1e-12)


def test_finite_sum_singular():
    with pytest.raises(SingularIdentity):
        finite_gamma_sum(10, 2.0, 3.0)


def test_infinite_sum_divergent():
    with pytest.raises(DivergentSum):
        infinite_gamma_sum(2, 2.5)
    with pytest.raises(DivergentSum):
        infinite_gamma_sum(1, 2)


def test_infinite_sum_truncated_oracle():
    # terms i=0..10^6 summed directly, plus the integral bound of the remainder
    a, b = 1.5, 4.0
    i = np.arange(10 ** 6 + 1, dtype=float)
    from scipy.special import gammaln
    terms = np.exp(gammaln(i + a) - gammaln(i + b))
    head = math.fsum(terms)
    K = 10 ** 6
    tail = K ** (a - b + 1) / (b - a - 1)
    assert infinite_gamma_sum(a, b) == pytest.approx(head + tail, rel=1e-6)
    assert head < infinite_gamma_sum(a, b)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(0, 100), a=st.floats(0.1, 10), b=st.floats(0.1, 10))
def test_finite_sum_property(n, a, b):
    assume(abs(a - b + 1) >= 0.05)
    assert finite_gamma_sum(n, a, b) == pytest.approx(mp_direct_sum(n, a, b), rel=1e-11)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.1, 5), gap=st.floats(1.2, 6))
def test_finite_sum_increases_to_infinite(a, gap):
    b = a + gap
    total = infinite_gamma_sum(a, b)
    partial = [finite_gamma_sum(n, a, b) for n in (0, 1, 10, 100, 1000)]
    assert all(x < y for x, y in zip(partial, partial[1:]))
    assert partial[-1] <= total * (1 + 1e-13)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.05, 8), b=st.floats(0.05, 8))
def test_log_ratio_power_law(a, b):
    errs = [abs(log_gamma_ratio(n, a, b) + (b - a) * math.log(n)) for n in (1e3, 1e5, 1e7)]
    assert errs[-1] <= errs[0] + 1e-12
    assert errs[-1] < 1e-5
