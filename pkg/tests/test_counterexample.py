import math

import numpy as np
import pytest
from scipy.special import gammaln

from cpslab.counterexample import (
    build_counterexample,
    joint_verdict,
    log_lambda,
    nontriviality_certificate,
    profile_concentration,
    ratio_bounds_check,
)
from cpslab.measures import log_increments, log_weights, marginal_window
from cpslab.model import inverse_even_factorial
from cpslab.stationarity import stationarity_verdict


def test_fugacities_and_kernel():
    s = build_counterexample(30)
    assert math.exp(s.log_lam[0]) == pytest.approx(1.0) and math.exp(s.log_lam[1]) == pytest.approx(6.0)
    assert s.forward_rate(0) == 1.0 and s.forward_rate(1) == 0.5
    # p(2,3) = 1 - (lambda_1 / lambda_2) p(1,2) with lambda_2 = 9!
    assert s.forward_rate(2) == pytest.approx(1 - 6 / math.factorial(9) * 0.5, rel=1e-15)


@pytest.mark.parametrize("p12", [0.1, 0.5, 0.9])
def test_detailed_balance_and_case_c(p12):
    s = build_counterexample(100, p12)
    assert s.detailed_balance_residual <= 1e-10
    assert stationarity_verdict(s.b, None, s.kernel, log_lam=s.log_lam).case == "c"


def test_weights_differ_from_closed_form_by_power_of_two():
    b = inverse_even_factorial(200)
    k = np.arange(60)
    closed = -np.cumsum(gammaln(2 * k + 1))  # log prod_{i<=k} 1/(2i)!
    assert np.allclose(log_weights(b, 59) - closed, k * math.log(2), atol=1e-9)


def test_weight_ratios_decrease_strictly():
    inc = log_increments(inverse_even_factorial(500), 400)
    assert np.all(np.diff(inc) < 0)


def test_ratio_bound_examples():
    rep = ratio_bounds_check(10)
    assert rep["holds"] and rep["strict_except_n1"]
    assert (2, 1, "up") in rep["equalities"] and (1, 1, "down") in rep["equalities"]
    b = inverse_even_factorial(200)
    law = marginal_window(b, log_lam=float(log_lambda(2)) - math.log(2))
    assert law.prob(5) / law.prob(4) == pytest.approx(1 / 10, rel=1e-12)
    law1 = marginal_window(b, log_lam=float(log_lambda(1)) - math.log(2))
    assert law1.prob(0) / law1.prob(1) == pytest.approx(1 / 3, rel=1e-12)


def test_concentration():
    c = profile_concentration(100)
    assert c["modes_ok"] and c["modes"][0] == 0
    assert c["deficit_sum"] <= c["bound"] < 1.645


def test_certificate():
    cert = nontriviality_certificate(3, 100)
    assert 0 < cert["lower_bound"] < 1 and cert["complement_lower_bound"] > 0 and cert["nontrivial"]


def test_joint_verdict_consistent():
    j = joint_verdict(30, 3, 60)
    assert j["criterion"] == "Undecidable" and j["certificate"] == "NotErgodic" and j["consistent"]
