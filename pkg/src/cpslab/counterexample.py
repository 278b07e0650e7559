"""A stationary product measure that is not ergodic although sum lambda_i = oo.

Sites i = 0, 1, 2, ... carry fugacities lambda_i = (2 i^2 + 1)!, the rate is
b(n, k) = 1{n >= 1} / (2 (k+1))! and p is a nearest-neighbour kernel made
reversible for lambda.  The one-site laws concentrate so sharply on k^2 that
the profile eta_k = k^2 for all large k has positive probability, which
splits the measure into invariant pieces.

Weights here follow a_k = prod_{i<k} b(1, i) / b(i+1, 0), which equals
2^k prod_{i<=k} 1/(2i)!.  The product measure with fugacity lambda_i under
the latter weights is therefore the one built here with fugacity
lambda_i / 2; ``log_fugacity`` carries that rescaled value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import NumericalUnderflow
from .ergodicity import countable_w_criterion
from .measures import ProductMeasure, log_increments, log_weights, marginal_window, radius
from .model import FugacityProfile, Kernel, RateFunction, inverse_even_factorial
from .stationarity import lambda_conditions, stationarity_verdict

__all__ = [
    "CounterexampleSystem",
    "build_counterexample",
    "ratio_bounds_check",
    "profile_concentration",
    "nontriviality_certificate",
    "joint_verdict",
    "log_lambda",
]

LOG2 = math.log(2.0)


def log_lambda(i) -> np.ndarray:
    """log (2 i^2 + 1)!"""
    i = np.asarray(i, dtype=float)
    return gammaln(2.0 * i * i + 2.0)


def _rate_for(k_max: int) -> RateFunction:
    # room for the window around the largest mode (k_max^2) plus slack
    return inverse_even_factorial(truncation=(k_max + 1) ** 2 + 64)


@dataclass(frozen=True, eq=False)
class CounterexampleSystem:
    b: RateFunction
    kernel: Kernel
    log_lam: np.ndarray = field(repr=False)
    p12: float
    detailed_balance_residual: float
    measure: ProductMeasure = field(repr=False)

    @property
    def log_fugacity(self) -> np.ndarray:
        return self.log_lam - LOG2

    @property
    def i_max(self) -> int:
        return len(self.log_lam) - 1

    @property
    def profile(self) -> FugacityProfile:
        """Fugacities of the measure under a_k as used throughout the package."""
        return FugacityProfile.factorial(scale=0.5)

    def forward_rate(self, i: int) -> float:
        return float(np.exp(self.kernel.log_rates[i, i + 1]))

    def backward_log_rate(self, i: int) -> float:
        """log p(i+1, i)."""
        return float(self.kernel.log_rates[i + 1, i])


def build_counterexample(i_max: int = 100, p12: float = 0.5) -> CounterexampleSystem:
    """Sites 0..i_max with p(0,1) = 1, p(1,2) = p12 and, for i >= 2,
    p(i, i+1) = 1 - (lambda_{i-1} / lambda_i) p(i-1, i); backward rates
    p(i+1, i) = lambda_i p(i, i+1) / lambda_{i+1} make p reversible."""
    if i_max < 2:
        raise ValueError("i_max must be at least 2")
    if not 0.0 < p12 < 1.0:
        raise ValueError("p(1,2) must lie in (0, 1)")
    ll = log_lambda(np.arange(i_max + 1))
    fwd = np.empty(i_max)  # log p(i, i+1)
    fwd[0] = 0.0
    fwd[1] = math.log(p12)
    for i in range(2, i_max):
        q = ll[i - 1] - ll[i] + fwd[i - 1]  # log(1 - p(i, i+1))
        if not q < 0.0:
            raise ValueError(f"p({i},{i + 1}) leaves (0, 1)")
        fwd[i] = math.log(-math.expm1(q))
        if not np.isfinite(fwd[i]):
            raise NumericalUnderflow(f"log p({i},{i + 1}) is not representable")
    bwd = ll[:-1] + fwd - ll[1:]
    if not np.all(np.isfinite(bwd)):
        raise NumericalUnderflow("backward rates are not representable in log space")
    lr = np.full((i_max + 1, i_max + 1), -np.inf)
    idx = np.arange(i_max)
    lr[idx, idx + 1] = fwd
    lr[idx + 1, idx] = bwd
    kernel = Kernel(lr, periodic=False, name="counterexample")
    db = float(np.max(np.abs(np.expm1((ll[:-1] + lr[idx, idx + 1]) - (ll[1:] + lr[idx + 1, idx])))))
    if db > 1e-10:
        raise AssertionError(f"detailed balance residual {db:.3g}")
    b = _rate_for(i_max)
    inc = log_increments(b, b.range.top)
    laws = tuple(marginal_window(b, log_lam=float(v), increments=inc) for v in ll - LOG2)
    measure = ProductMeasure(b, ll - LOG2, laws, b.range.top, radius(b), log_weights(b))
    return CounterexampleSystem(b, kernel, ll, p12, db, measure)


def _mode_increments(k_max: int):
    b = _rate_for(k_max)
    return b, log_increments(b, b.range.top)


def ratio_bounds_check(k_max: int, n_cap: int = 50, tol: float = 1e-9) -> dict:
    """P[eta_k = k^2 +- n] / P[eta_k = k^2] against (2k^2+2)^-n (up) and (2k^2+1)^-n (down).

    Works with log ratios; a bound counts as attained when the log gap is
    within ``tol``.  The n = 1 cases attain it in both directions.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    _, ell = _mode_increments(k_max)
    worst = -np.inf
    equalities = []
    checked = 0
    for k in range(1, k_max + 1):
        m = k * k
        inc = ell + float(log_lambda(k)) - LOG2
        n_max = min(m, n_cap)
        n = np.arange(1, n_max + 1)
        up = np.cumsum(inc[m : m + n_max])
        down = -np.cumsum(inc[m - n_max : m][::-1])
        up_gap = up + n * math.log(2 * m + 2)
        down_gap = down + n * math.log(2 * m + 1)
        worst = max(worst, float(up_gap.max()), float(down_gap.max()))
        for dirn, gap in (("up", up_gap), ("down", down_gap)):
            for j in np.nonzero(np.abs(gap) <= tol)[0]:
                equalities.append((k, int(n[j]), dirn))
        checked += 2 * n_max
    return {
        "holds": bool(worst <= tol),
        "max_log_excess": worst,
        "checked": checked,
        "equalities": equalities,
        "strict_except_n1": all(n == 1 for _, n, _ in equalities),
    }


def _mode_laws(k_max: int):
    b, ell = _mode_increments(k_max)
    return [marginal_window(b, log_lam=float(log_lambda(k)) - LOG2, increments=ell) for k in range(k_max + 1)]


def profile_concentration(k_max: int) -> dict:
    """sum_{k=1}^{k_max} (1 - P[eta_k = k^2]) against sum_{k=1}^{k_max} 1/k^2."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    laws = _mode_laws(k_max)
    modes = [int(law.support[np.argmax(law.pmf)]) for law in laws]
    P = np.array([law.prob(k * k) for k, law in enumerate(laws)])
    deficit = float(np.sum(1.0 - P[1:]))
    bound = float(np.sum(1.0 / np.arange(1, k_max + 1) ** 2))
    if deficit > bound:
        raise AssertionError(f"concentration sum {deficit} exceeds its bound {bound}")
    if bound >= math.pi**2 / 6:
        raise AssertionError("bound is not below pi^2/6")
    return {
        "k_max": k_max,
        "deficit_sum": deficit,
        "bound": bound,
        "modes": modes,
        "modes_ok": modes == [k * k for k in range(k_max + 1)],
        "mode_probability": P.tolist(),
        "tail_mass": [law.tail_mass for law in laws],
    }


def nontriviality_certificate(k0: int, k_max: int, safety: float = 1e-12) -> dict:
    """Lower bounds on mu(eta_k = k^2 for all k >= k0) and on two disjoint invariant events.

    For k > k_max the deviation probability is at most 1/k^2, so the infinite
    remainder of the product is at least prod_{k > k_max} (1 - 1/k^2) =
    k_max / (k_max + 1).  ``A0`` and ``A1`` bound the events sum_k (eta_k - k^2)
    equal to 0 and to 1; both positive means the tail sigma-algebra of the
    partial sums is not trivial.
    """
    if k0 < 1 or k_max < k0:
        raise ValueError("need 1 <= k0 <= k_max")
    laws = _mode_laws(k_max)
    P = np.array([law.prob(k * k) for k, law in enumerate(laws)]) - safety
    tail_factor = k_max / (k_max + 1)
    lower = float(np.prod(P[k0:]) * tail_factor)
    a0 = float(np.prod(P) * tail_factor)
    a1 = a0 * float(laws[0].prob(1) / (P[0] + safety))
    complement = float(1.0 - (P[k0] + safety))
    return {
        "k0": k0,
        "k_max": k_max,
        "lower_bound": lower,
        "tail_factor": tail_factor,
        "complement_lower_bound": complement,
        "A0_lower_bound": a0,
        "A1_lower_bound": a1,
        "nontrivial": 0.0 < lower < 1.0 and complement > 0.0 and a1 > 0.0,
    }


def joint_verdict(i_max: int = 50, k0: int = 3, k_max: int = 100) -> dict:
    """Criterion verdict (undecided) next to the certificate verdict (not ergodic)."""
    system = build_counterexample(i_max)
    stat = stationarity_verdict(system.b, None, system.kernel, log_lam=system.log_lam)
    crit = countable_w_criterion(system.b, system.profile, (1,), truncation=1000)
    cert = nontriviality_certificate(k0, k_max)
    return {
        "stationarity_case": stat.case,
        "criterion": crit.outcome,
        "certificate": "NotErgodic" if cert["nontrivial"] else "Undecidable",
        "certificate_lower_bound": cert["lower_bound"],
        "consistent": crit.outcome == "Undecidable" and cert["nontrivial"],
        "reversible_residual": lambda_conditions(None, system.kernel, log_lam=system.log_lam).reversible_residual,
    }
