import math
import warnings

import numpy as np
import pytest

from cpslab import model
from cpslab.dynamics import duality_mc, gillespie_run, run_ensemble, stationarity_mc
from cpslab.model import Kernel


def test_blocked_configuration_has_no_events():
    tr = gillespie_run(model.exclusion(), Kernel.cycle(2), (1, 1), 10.0, seed=0)
    assert tr.total_jumps == 0 and tr.end == (1, 1)


def test_first_holding_time_is_unit_exponential():
    e, p = model.exclusion(), Kernel.explicit(2, [(0, 1, 1.0), (1, 0, 1.0)])
    first = np.array([gillespie_run(e, p, (1, 0), 50.0, seed=s).times[0] for s in range(2000)])
    assert abs(first.mean() - 1.0) <= 3 / math.sqrt(len(first))


def test_conservation_replay_and_reproducibility():
    rng = np.random.default_rng(3)
    b, p = model.partial_exclusion(2), Kernel.cycle(4, 1.0, 0.3)
    for s in range(1000):
        eta0 = rng.integers(0, 3, 4)
        tr = gillespie_run(b, p, eta0, 2.0, seed=s)
        assert sum(tr.end) == eta0.sum()
        tr.replay(b, p)
    a = gillespie_run(b, p, (2, 0, 1, 0), 5.0, seed=9)
    c = gillespie_run(b, p, (2, 0, 1, 0), 5.0, seed=9)
    assert a.to_csv() == c.to_csv() and a.to_csv().startswith("time,x,y\n")


def test_ensemble_thread_independence():
    b, p = model.exclusion(), Kernel.asymmetric_cycle(5)
    one = run_ensemble(b, p, (1, 0, 1, 0, 0), 1.0, 20000, seed=4)
    many = run_ensemble(b, p, (1, 0, 1, 0, 0), 1.0, 20000, seed=4, threads=3)
    assert np.array_equal(one, many)


def test_stationarity_mc_examples():
    e, p = model.exclusion(), Kernel.asymmetric_cycle(6)
    rep = stationarity_mc(e, np.ones(6), p, 5.0, 10**5, seed=12345)
    assert max(abs(z) for z in rep["z"]) <= 3
    rep0 = stationarity_mc(e, np.ones(6), p, 0.0, 10**4, seed=1)
    assert max(rep0["tv"]) <= 3 * 0.5 / math.sqrt(10**4)


def test_stationarity_mc_flags_imbalanced_profile():
    e, p = model.exclusion(), Kernel.asymmetric_cycle(6)
    lam = np.array([4.0, 1.0, 1.0, 1.0, 1.0, 1.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = stationarity_mc(e, lam, p, 5.0, 10**5, seed=2)
    assert max(abs(z) for z in rep["z"]) > 5


def test_duality_mc_at_time_zero():
    rep = duality_mc(model.exclusion(), Kernel.cycle(4, 1.0, 0.4), 1, (1, 0, 1, 0), 0.0, 1000, seed=1)
    assert rep["max_tv"] == 0.0


def test_open_window_warns():
    with pytest.warns(UserWarning):
        stationarity_mc(model.exclusion(), np.ones(3), Kernel.line(3), 0.5, 100, seed=0)
