import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpslab import model
from cpslab.counterexample import build_counterexample
from cpslab.errors import EmptySet
from cpslab.ergodicity import (
    countable_w_criterion,
    finite_w_criterion,
    gcd_bezout,
    mineka_divergence_sum,
    star_star_check,
    star_star_log_ratios,
)
from cpslab.model import FugacityProfile


def test_finite_w_examples():
    assert finite_w_criterion(FugacityProfile.constant(1.0)).outcome == "Ergodic"
    assert finite_w_criterion(FugacityProfile.geometric(2.0)).outcome == "NotErgodic"
    assert finite_w_criterion(FugacityProfile.geometric(0.5)).outcome == "NotErgodic"
    assert finite_w_criterion(FugacityProfile.polynomial(1.0, shift=0)).outcome == "Ergodic"
    assert finite_w_criterion(FugacityProfile.polynomial(2.0)).outcome == "NotErgodic"


def test_star_star_examples():
    lzr = star_star_check(model.linear_zero_range(1000)).per_d[0]
    assert lzr["sup"] == pytest.approx(2.0, abs=1e-12) and lzr["argmax_k"] == 1
    ief = star_star_check(model.inverse_even_factorial(1000))
    assert not ief.holds
    czr = star_star_check(model.constant_zero_range(1000))
    assert czr.holds and czr.clause == "finite radius"


def test_star_star_factorial_ratio():
    k, via_a, via_b = star_star_log_ratios(model.inverse_even_factorial(1000), 1, 1000)
    assert np.allclose(np.exp(via_a - np.log((2.0 * k + 1) * (2.0 * k + 2))), 1.0, rtol=1e-10, atol=0)
    assert np.allclose(via_a, via_b, rtol=0, atol=1e-10 * np.max(np.abs(via_a)))


def test_countable_examples():
    lzr = model.linear_zero_range()
    assert countable_w_criterion(lzr, FugacityProfile.constant(1.0), (1,)).outcome == "Ergodic"
    assert countable_w_criterion(lzr, FugacityProfile.geometric(0.5), (1,)).outcome == "NotErgodic"
    s = build_counterexample(20)
    v = countable_w_criterion(s.b, s.profile, (1,), truncation=1000)
    assert v.outcome == "Undecidable" and "note" in v.evidence


def test_mineka_sums():
    ex = mineka_divergence_sum(model.exclusion(), FugacityProfile.constant(1.0), 1, 10)
    assert np.allclose(ex.terms, 0.5) and ex.S(10) == pytest.approx(5.0)
    assert mineka_divergence_sum(model.partial_exclusion(2), FugacityProfile.geometric(1.5), 3, 6).S(6) == 0.0
    lz = mineka_divergence_sum(model.linear_zero_range(80), FugacityProfile.polynomial(-0.5), 1, 30)
    assert np.all(np.diff(lz.partial) >= 0)


def test_mineka_sums_counterexample_bounded():
    s = mineka_divergence_sum(model.inverse_even_factorial(2000), FugacityProfile.factorial(0.5), 1, 30)
    assert s.S(30) <= 2 * sum(1 / (2 * k * k) for k in range(1, 30)) + 1.0


def test_bezout_examples():
    assert gcd_bezout([5]) == (5, [1])
    g, x = gcd_bezout([4, 6])
    assert g == 2 and 4 * x[0] + 6 * x[1] == 2
    g, x = gcd_bezout([6, 10, 15])
    assert g == 1 and 6 * x[0] + 10 * x[1] + 15 * x[2] == 1
    with pytest.raises(EmptySet):
        gcd_bezout([])


@given(st.lists(st.integers(1, 10**6), min_size=1, max_size=6))
def test_bezout_certificate(D):
    g, x = gcd_bezout(D)
    assert g == math.gcd(*D)
    assert sum(a * b for a, b in zip(x, D)) == g
    assert all(d % g == 0 for d in D)
    assert gcd_bezout(D) == (g, x)
