import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from cpslab import model
from cpslab.coupling import (
    coupling_times,
    mineka_joint_step,
    phase_targets,
    propagate,
    simulate_coupling,
    step_law,
    tail_triviality_probe,
    tv_distance,
)
from cpslab.errors import TailBudgetExceeded
from cpslab.ergodicity import mineka_divergence_sum
from cpslab.measures import DiscreteLaw, marginal
from cpslab.model import FugacityProfile


def test_step_law_examples():
    assert np.allclose(step_law(model.exclusion(), 1.0).on(0, 1), [0.5, 0.5])
    assert step_law(model.exclusion(), 0.0).prob(0) == 1.0
    assert np.allclose(step_law(model.linear_zero_range(60), 1.0).on(0, 20), stats.poisson.pmf(np.arange(21), 1.0), atol=1e-15)


def test_propagate_examples():
    start = DiscreteLaw.point_mass(0)
    assert propagate(start, [], model.exclusion()).pmf.tolist() == [1.0]
    assert np.allclose(propagate(start, [1.0, 1.0], model.exclusion()).on(0, 2), [0.25, 0.5, 0.25])
    law = propagate(start, [1.0] * 40, model.exclusion(), trim=False)
    assert np.max(np.abs(law.on(0, 40) - stats.binom.pmf(np.arange(41), 40, 0.5))) <= 1e-12


def test_propagate_tail_budget():
    with pytest.raises(TailBudgetExceeded):
        propagate(DiscreteLaw.point_mass(0), [1.0] * 5, model.linear_zero_range(4), tail_budget=1e-12)


def test_tv_examples():
    a = DiscreteLaw(0, np.array([0.5, 0.5]))
    assert tv_distance(a, a) == 0.0
    assert tv_distance(a, a.shifted(5)) == 1.0
    assert tv_distance(a, DiscreteLaw(0, np.array([0.25, 0.5, 0.25]))) == 0.25


laws = st.lists(st.floats(0.01, 1.0), min_size=1, max_size=5).map(lambda w: np.array(w) / sum(w))


@given(laws, st.lists(laws, min_size=0, max_size=6), st.integers(0, 3))
def test_convolution_matches_path_enumeration(init, steps, off):
    initial = DiscreteLaw(off, init)
    got = propagate(initial, [DiscreteLaw(0, s) for s in steps], trim=False)
    want = {}
    for start, p0 in enumerate(init):
        for path in itertools.product(*[list(enumerate(s)) for s in steps]):
            v = off + start + sum(k for k, _ in path)
            want[v] = want.get(v, 0.0) + p0 * math.prod(q for _, q in path)
    lo, hi = min(want), max(want)
    assert np.max(np.abs(got.on(lo, hi) - [want.get(v, 0.0) for v in range(lo, hi + 1)])) <= 1e-12


def test_probe_examples():
    e, one = model.exclusion(), FugacityProfile.constant(1.0)
    assert not np.any(tail_triviality_probe(e, one, 0, 0, 0, 50))
    tv = tail_triviality_probe(e, one, 0, 0, 1, 10**4)
    assert tv[-1] < 0.05 and np.all(np.diff(tv) <= 1e-15)


def test_probe_geometric_profile_stays_away_from_zero():
    e = model.exclusion()
    prof = FugacityProfile.geometric(2.0)
    tv = tail_triviality_probe(e, prof, 0, 0, 1, 60)
    mu = [marginal(e, l) for l in prof.values(60)]
    product = math.prod(1 - 2 * 0.5 * min(m.prob(0), m.prob(1)) for m in mu)
    assert product > 0 and tv[-1] >= product - 1e-12


def test_probe_decays_when_mineka_sum_diverges():
    b, prof = model.linear_zero_range(80), FugacityProfile.polynomial(-0.5)
    sums = mineka_divergence_sum(b, prof, 1, 400)
    assert sums.S(400) > 5
    tv = tail_triviality_probe(b, prof, 0, 0, 1, 400)
    assert tv[100] < 0.2 and tv[400] < tv[100]


def test_mineka_examples():
    j = mineka_joint_step(DiscreteLaw(0, np.array([0.5, 0.5])), 1)
    table = {(int(r), int(h)): p for r, h, p in zip(j.r, j.r_hat, j.prob)}
    assert table == {(0, 0): 0.25, (0, 1): 0.25, (1, 0): 0.25, (1, 1): 0.25}
    pm = mineka_joint_step(DiscreteLaw.point_mass(3), 2)
    assert np.all(pm.r == pm.r_hat) and pm.move_probability == 0
    pois = marginal(model.linear_zero_range(60), 1.0)
    j2 = mineka_joint_step(pois, 2)
    assert np.max(np.abs(j2.first_marginal(0, 60) - pois.on(0, 60))) <= 1e-12
    assert np.max(np.abs(j2.second_marginal(0, 60) - pois.on(0, 60))) <= 1e-12


@given(st.lists(st.integers(0, 64), min_size=1, max_size=7).filter(any), st.integers(1, 4))
def test_mineka_exact_on_dyadic_laws(weights, d):
    total = sum(weights)
    # rescale to a dyadic law by padding the last entry
    den = 1 << total.bit_length()
    w = list(weights)
    w[-1] += den - total
    mu = DiscreteLaw(0, np.array([Fraction(v, den) for v in w], dtype=object))
    j = mineka_joint_step(mu, d)
    n = len(w) - 1
    assert list(j.first_marginal(0, n)) == list(mu.pmf)
    assert list(j.second_marginal(0, n)) == list(mu.pmf)
    assert j.total == 1 and j.expected_difference == 0
    assert all(p >= 0 for p in j.prob) and set(np.abs(j.r - j.r_hat)) <= {0, d}


def test_simulate_coupling_examples():
    e, one = model.exclusion(), FugacityProfile.constant(1.0)
    assert simulate_coupling(e, one, 5, 2, 2, [1], 100, seed=0).T == 5
    lzr = model.linear_zero_range(60)
    tr = simulate_coupling(lzr, one, 0, 0, 1, [2, 3], 5000, seed=4)
    x, targets = phase_targets(1, [2, 3])
    assert tuple(targets) == tuple(tr.phase_targets) and targets[0] == 1 * x[1] * 3
    assert not tr.timed_out and tr.V[-1] == 0
    hit0 = tr.phase_hits[0]
    if hit0 is not None and tr.V[hit0 - tr.n0] != 0:
        assert tr.V[hit0 - tr.n0] == targets[0]
    steps = np.diff(tr.V)
    assert set(np.abs(steps)) <= {0, 2, 3}
    T = tr.T - tr.n0
    assert np.all(np.array(tr.V[T:]) == 0)


def test_coupling_times_reproducible_and_thread_independent():
    e, one = model.exclusion(), FugacityProfile.constant(1.0)
    a = coupling_times(e, one, 0, 0, 1, [1], 2000, 11, 300)
    b = coupling_times(e, one, 0, 0, 1, [1], 2000, 11, 300, threads=3, chunk=64)
    assert np.array_equal(a, b)
    assert np.mean(a >= 0) > 0.9
