import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpslab import model
from cpslab.duality import (
    criterion_duality_check,
    dual_constant,
    dual_fugacity,
    dual_rate,
    dual_weight_error,
    dualize,
    verify_measure_duality,
)
from cpslab.errors import Unsupported
from cpslab.measures import check_assumptions, marginal
from cpslab.model import FugacityProfile, Kernel

TABLE = np.array([[0.0, 0.0, 0.0], [2.0, 1.5, 0.0], [3.0, 2.0, 0.0]])


def test_exclusion_is_self_dual():
    e = model.exclusion()
    bd = dual_rate(e)
    assert np.array_equal(bd.table(1), e.table(1))


def test_dualize_is_an_involution():
    b = model.misanthrope([0, 1.0, 2.5], [2.0, 0.7, 0], [1.0, 1.3, 0.6, 2.2, 0.9])
    p = Kernel.asymmetric_cycle(4)
    bd, pd = dualize(b, p)
    assert pd(1, 0) == 1.0 and pd(0, 1) == 0.0
    b2, p2 = dualize(bd, pd)
    assert b2 is b and np.array_equal(p2.rates, p.rates)


def test_dual_fugacity_examples():
    assert dual_fugacity(model.exclusion(), [2.0]).tolist() == [0.5]
    b = model.table_rate(TABLE)
    c = dual_constant(b)
    assert c == pytest.approx(3.0 / 1.5)
    fixed = np.sqrt(c)
    assert dual_fugacity(b, [fixed])[0] == pytest.approx(fixed, rel=1e-15)


def test_measure_duality_examples():
    e = model.exclusion()
    assert marginal(e, 2.0).prob(0) == pytest.approx(1 / 3)
    assert marginal(dual_rate(e), 0.5).prob(1) == pytest.approx(1 / 3)
    assert verify_measure_duality(e, [2.0]) <= 1e-15


@given(st.integers(1, 4), st.data())
def test_measure_duality_random_tables(N, data):
    vals = data.draw(st.lists(st.floats(0.2, 3.0), min_size=4 * N + 1, max_size=4 * N + 1))
    b = model.table_rate(model.misanthrope([0.0] + vals[:N], vals[N : 2 * N] + [0.0], vals[2 * N :]).table(N))
    lam = data.draw(st.lists(st.floats(0.05, 10.0), min_size=1, max_size=4))
    assert verify_measure_duality(b, lam) <= 1e-12
    assert dual_weight_error(b) <= 1e-10
    assert check_assumptions(dual_rate(b)).passed


@pytest.mark.parametrize("b", [model.exclusion(), model.partial_exclusion(3, 1.5), model.table_rate(TABLE)], ids=["excl", "partial", "table"])
def test_shipped_finite_rates(b):
    assert verify_measure_duality(b, np.linspace(0.1, 6, 12)) <= 1e-12


@pytest.mark.parametrize(
    "profile,verdict",
    [
        (FugacityProfile.constant(1.0), "Ergodic"),
        (FugacityProfile.geometric(2.0), "NotErgodic"),
        (FugacityProfile.polynomial(1.0), "Ergodic"),
        (FugacityProfile.polynomial(-2.0), "NotErgodic"),
    ],
)
def test_criterion_symmetry(profile, verdict):
    ok, v, vd = criterion_duality_check(profile, model.table_rate(TABLE))
    assert ok and v == vd == verdict


def test_countable_range_unsupported():
    with pytest.raises(Unsupported):
        dual_rate(model.linear_zero_range(30))
