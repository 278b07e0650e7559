import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpslab import model
from cpslab.counterexample import build_counterexample
from cpslab.errors import UnsupportedFunction
from cpslab.model import Kernel
from cpslab.stationarity import (
    FiniteSystem,
    LocalFunction,
    classify_rate,
    ergodic_components_finite,
    generator_expectation,
    generator_table,
    lambda_conditions,
    orbit_decomposition,
    quadratic_forms,
    random_stationary_triple,
    random_strongly_connected,
    spanning_supports,
    stationarity_verdict,
)


def _general_table():
    # misanthrope-type table that is neither zero-range nor gradient
    return model.misanthrope([0, 1.0, 2.5], [2.0, 0.7, 0], [1.0, 1.3, 0.6, 2.2, 0.9])


def test_classify_rate_examples():
    assert classify_rate(model.linear_zero_range(50)).name == "ZeroRange"
    assert classify_rate(model.exclusion()).name == "Gradient"
    assert classify_rate(_general_table()).name == "General"


def test_lambda_conditions_examples():
    sym = lambda_conditions(np.ones(5), Kernel.cycle(5))
    assert sym.reversible and sym.balance_holds
    tasep = lambda_conditions(np.ones(5), Kernel.asymmetric_cycle(5))
    assert tasep.balance_holds and not tasep.reversible and tasep.mixed_ok
    s = build_counterexample(40)
    assert lambda_conditions(None, s.kernel, log_lam=s.log_lam).reversible


def test_verdict_examples():
    assert stationarity_verdict(model.exclusion(), np.ones(6), Kernel.asymmetric_cycle(6)).case == "b"
    v = stationarity_verdict(_general_table(), np.ones(4), Kernel.asymmetric_cycle(4))
    assert not v.stationary
    rev = Kernel.line(3, 1.0, 0.5)
    assert stationarity_verdict(_general_table(), 2.0 ** np.arange(3), rev).case == "c"


def test_verdict_rejects_nonpositive_lambda():
    assert not stationarity_verdict(model.exclusion(), np.array([1.0, 0.0, 1.0]), Kernel.cycle(3)).stationary


def test_generator_expectation_examples():
    e, p = model.exclusion(), Kernel.cycle(3)
    assert generator_expectation(LocalFunction.constant(), e, np.ones(3), p) == 0.0
    f = LocalFunction.indicator((0,), (1,), 1)
    assert abs(generator_expectation(f, e, np.ones(3), p)) <= 1e-12
    assert abs(generator_expectation(f, e, np.array([1.1, 1.0, 1.0]), p)) > 1e-6
    with pytest.raises(UnsupportedFunction):
        generator_expectation(lambda eta: 1.0, e, np.ones(3), p)


@pytest.mark.parametrize("case", "abc")
def test_generator_table_agrees_with_full_enumeration(case):
    """Integrate Lf against mu over the whole finite state space and compare."""
    rng = np.random.default_rng(7)
    b, lam, p = random_stationary_triple(rng, case, sites=3)
    if not b.range.finite:
        b = model.partial_exclusion(2)
        lam = np.full(3, 0.8)
        p = Kernel.cycle(3)
    lam = lam * np.array([1.1, 1.0, 1.0])  # break stationarity so values are nonzero
    system = FiniteSystem(b, p)
    mu = system.product_pmf(lam)
    L = system.generator()
    N = b.range.top
    A = (0, 1)
    direct, _ = generator_table(A, b, lam, p, top=N)
    for pattern in itertools.product(range(N + 1), repeat=2):
        f = np.all(system.states[:, list(A)] == pattern, axis=1).astype(float)
        assert direct[pattern] == pytest.approx(float(mu @ (L @ f)), abs=1e-13)


@pytest.mark.parametrize("case", "abc")
def test_random_triples_are_stationary_and_perturbation_detected(case):
    rng = np.random.default_rng({"a": 1, "b": 2, "c": 3}[case])
    for _ in range(3):
        b, lam, p = random_stationary_triple(rng, case)
        assert stationarity_verdict(b, lam, p).case == case
        worst = bad = 0.0
        bumped = lam.copy()
        bumped[0] *= 1.1
        for A in spanning_supports(p.sites):
            d, r = generator_table(A, b, lam, p)
            worst = max(worst, float(np.abs(d).max()))
            assert np.max(np.abs(d - r)) <= 1e-10
            d, _ = generator_table(A, b, bumped, p)
            bad = max(bad, float(np.abs(d).max()))
        assert worst <= 1e-10 and bad >= 1e-6


@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_reversible_implies_balance(M, seed):
    rng = np.random.default_rng(seed)
    adj = random_strongly_connected(rng, M) > 0
    adj = adj | adj.T
    lam = rng.uniform(0.2, 5.0, M)
    # p(x,y) = s(x,y)/lambda_x with s symmetric gives lambda_x p(x,y) = lambda_y p(y,x)
    s = np.triu(rng.uniform(0.5, 2.0, (M, M)), 1)
    s = (s + s.T) * adj
    rep = lambda_conditions(lam, Kernel.from_rates(s / lam[:, None]))
    assert rep.reversible and rep.balance_holds


def test_quadratic_forms():
    system = FiniteSystem(model.exclusion(), Kernel.cycle(3))
    mu = system.product_pmf(np.ones(3))
    assert quadratic_forms(np.full(system.n_states, 2.0), system, mu) == (0.0, 0.0)
    rng = np.random.default_rng(0)
    for _ in range(10):
        Q, R = quadratic_forms(rng.normal(size=system.n_states), system, mu)
        assert Q == pytest.approx(R, rel=1e-10)
    # non-stationary reference measure: report only
    asym = FiniteSystem(_general_table(), Kernel.asymmetric_cycle(3))
    mu = asym.product_pmf(np.array([1.0, 2.0, 0.5]))
    Q, R = quadratic_forms(rng.normal(size=asym.n_states), asym, mu)
    assert abs(Q - R) > 1e-8


def test_orbit_examples():
    two = orbit_decomposition(FiniteSystem(model.exclusion(), Kernel.cycle(2)))
    assert two.as_states(FiniteSystem(model.exclusion(), Kernel.cycle(2))) == [[(0, 0)], [(0, 1), (1, 0)], [(1, 1)]]
    zr = FiniteSystem(model.partial_exclusion(2), Kernel.cycle(3))
    rep = orbit_decomposition(zr)
    assert rep.totals == tuple(range(7)) and rep.matches_level_sets
    single = orbit_decomposition(FiniteSystem(model.partial_exclusion(2), Kernel.from_rates(np.zeros((1, 1)))))
    assert single.totals == (0, 1, 2)


def test_sector_laws():
    system = FiniteSystem(model.exclusion(), Kernel.cycle(3))
    reports, mix = ergodic_components_finite(system, np.ones(3))
    by_m = {r.particles: r for r in reports}
    assert by_m[0].size == 1 and by_m[1].size == 3
    assert max(r.max_error for r in reports) <= 1e-12 and mix <= 1e-12
    line = FiniteSystem(_general_table(), Kernel.line(2, 1.0, 0.5))
    reports, mix = ergodic_components_finite(line, np.array([1.0, 2.0]))
    assert max(r.max_error for r in reports) <= 1e-10 and mix <= 1e-10
