"""The twelve acceptance checks, shared by the test suite and ``cpslab selftest``.

Each check returns a :class:`CriterionResult` holding the measured numbers
and the wall time; a check passes only if every sub-condition holds and it
finishes inside its time limit.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from . import model
from .counterexample import build_counterexample, nontriviality_certificate, profile_concentration, ratio_bounds_check
from .coupling import coupling_times, mineka_joint_step, propagate, tail_triviality_probe
from .descriptors import load_system
from .duality import criterion_duality_check, verify_measure_duality
from .dynamics import duality_mc, stationarity_mc
from .ergodicity import countable_w_criterion, finite_w_criterion, gcd_bezout, star_star_check, star_star_log_ratios
from .measures import DiscreteLaw, marginal, rn_move_derivative
from .model import FugacityProfile, Kernel
from .stationarity import (
    FiniteSystem,
    ergodic_components_finite,
    generator_table,
    lambda_conditions,
    orbit_decomposition,
    quadratic_forms,
    random_stationary_triple,
    spanning_supports,
    stationarity_verdict,
)

__all__ = ["CriterionResult", "CRITERIA", "run_all", "format_line"]

SEED = 20261015


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float
    limit: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "number": self.number,
            "title": self.title,
            "passed": self.passed,
            "limit_seconds": self.limit,
            "details": self.details,
        }


def format_line(r: CriterionResult) -> str:
    status = "PASS" if r.passed else "FAIL"
    return f"[{status}] criterion {r.number:2d}: {r.title} ({r.seconds:.2f} s, limit {r.limit:g} s)"


def _timed(number, title, limit):
    def wrap(fn):
        def run() -> CriterionResult:
            t0 = time.perf_counter()
            ok, details = fn()
            dt = time.perf_counter() - t0
            details["within_time_limit"] = dt <= limit
            return CriterionResult(number, title, bool(ok and dt <= limit), dt, limit, details)

        run.number, run.title, run.limit = number, title, limit
        run.__name__ = fn.__name__
        return run

    return wrap


# -- 1 ------------------------------------------------------------------------


@_timed(1, "closed-form marginals (Bernoulli, Poisson)", 1.0)
def marginals_closed_form():
    worst = {}
    for lam in (0.1, 1.0, 5.0):
        bern = marginal(model.exclusion(), lam).on(0, 1)
        worst[f"bernoulli_{lam}"] = float(np.max(np.abs(bern - [1 / (1 + lam), lam / (1 + lam)])))
        pois = marginal(model.linear_zero_range(60), lam).on(0, 60)
        worst[f"poisson_{lam}"] = float(np.max(np.abs(pois - stats.poisson.pmf(np.arange(61), lam))))
    return max(worst.values()) <= 1e-12, {"max_abs_error": worst}


# -- 2 ------------------------------------------------------------------------


def _random_rate(rng):
    kind = rng.integers(4)
    if kind == 0:
        return model.exclusion()
    if kind == 1:
        return model.partial_exclusion(int(rng.integers(1, 5)), rng.uniform(0.5, 2))
    if kind == 2:
        return model.linear_zero_range(30, rng.uniform(0.5, 2))
    N = int(rng.integers(1, 5))
    return model.misanthrope(
        np.r_[0.0, rng.uniform(0.2, 3, N)], np.r_[rng.uniform(0.2, 3, N), 0.0], rng.uniform(0.2, 3, 2 * N + 1)
    )


def _plain_weights(b, top):
    """a_k by straight multiplication of rate ratios (no logs)."""
    t = b.table(top)
    a = [1.0]
    for i in range(top):
        a.append(a[-1] * t[1, i] / t[i + 1, 0])
    return np.array(a)


@_timed(2, "Radon-Nikodym move derivative vs product-weight ratio", 5.0)
def radon_nikodym():
    rng = np.random.default_rng(SEED + 2)
    worst, count = 0.0, 0
    for _ in range(100):
        b = _random_rate(rng)
        top = min(b.range.top, 12)
        a = _plain_weights(b, top)
        for _ in range(100):
            M = int(rng.integers(2, 6))
            lam = rng.uniform(0.2, 3.0, M)
            eta = rng.integers(0, top + 1, M)
            x, y = rng.choice(M, 2, replace=False)
            if eta[y] < 1:
                eta[y] = 1
            cap = b.range.top - 1 if b.range.finite else top - 1
            if eta[x] > cap:
                eta[x] = cap
            moved = eta.copy()
            moved[y] -= 1
            moved[x] += 1
            w0 = np.prod(a[eta] * lam**eta)
            w1 = np.prod(a[moved] * lam**moved)
            got = rn_move_derivative(b, lam, eta, int(x), int(y))
            worst = max(worst, abs(got / (w1 / w0) - 1.0))
            count += 1
    return worst <= 1e-10 and count >= 10**4, {"cases": count, "max_rel_error": worst}


# -- 3 ------------------------------------------------------------------------


@_timed(3, "stationarity trichotomy by exact generator sums", 30.0)
def stationarity_trichotomy():
    rng = np.random.default_rng(SEED + 3)
    rows = []
    ok = True
    for case in "abc":
        for _ in range(7):
            b, lam, p = random_stationary_triple(rng, case)
            verdict = stationarity_verdict(b, lam, p).case
            perturbed = lam.copy()
            perturbed[rng.integers(p.sites)] *= 1.1
            stat_max = pert_max = gap_max = 0.0
            for A in spanning_supports(p.sites):
                d, r = generator_table(A, b, lam, p)
                stat_max = max(stat_max, float(np.abs(d).max()))
                gap_max = max(gap_max, float(np.abs(d - r).max()))
                d, r = generator_table(A, b, perturbed, p)
                pert_max = max(pert_max, float(np.abs(d).max()))
                gap_max = max(gap_max, float(np.abs(d - r).max()))
            good = verdict == case and stat_max <= 1e-10 and pert_max >= 1e-6 and gap_max <= 1e-10
            ok &= good
            rows.append({"case": case, "sites": p.sites, "verdict": verdict, "max_stationary": stat_max, "max_perturbed": pert_max, "max_form_gap": gap_max})
    return ok and len(rows) >= 20, {"triples": rows}


# -- 4 ------------------------------------------------------------------------


def _finite_test_systems():
    e = model.exclusion()
    yield "exclusion 3-cycle", FiniteSystem(e, Kernel.cycle(3)), np.ones(3)
    yield "exclusion asymmetric 4-cycle", FiniteSystem(e, Kernel.asymmetric_cycle(4)), np.full(4, 0.7)
    mis = load_system("misanthrope-table")
    yield "misanthrope line", FiniteSystem(mis.b, mis.kernel), mis.lam()


@_timed(4, "Dirichlet identity Q(f) = R(f)", 10.0)
def dirichlet_forms():
    rng = np.random.default_rng(SEED + 4)
    worst, n = 0.0, 0
    systems = list(_finite_test_systems())
    for j in range(50):
        _, system, lam = systems[j % len(systems)]
        mu = system.product_pmf(lam)
        f = rng.normal(size=system.n_states)
        Q, R = quadratic_forms(f, system, mu)
        worst = max(worst, abs(Q - R) / max(abs(Q), abs(R)))
        n += 1
    return worst <= 1e-10, {"functions": n, "max_rel_gap": worst}


# -- 5 ------------------------------------------------------------------------


def strongly_connected_digraphs(M: int):
    pairs = [(x, y) for x in range(M) for y in range(M) if x != y]
    for mask in range(1 << len(pairs)):
        rates = np.zeros((M, M))
        for j, (x, y) in enumerate(pairs):
            if mask >> j & 1:
                rates[x, y] = 1.0
        if model.is_irreducible(rates):
            yield rates


def _circulation(adj: np.ndarray, rng) -> np.ndarray:
    """Positive circulation supported exactly on the edges of a strongly connected digraph."""
    M = len(adj)
    rates = np.zeros((M, M))
    for x, y in zip(*np.nonzero(adj)):
        # close the edge x -> y into a cycle with a shortest path y -> x
        prev = {y: None}
        frontier = [y]
        while x not in prev:
            nxt = []
            for u in frontier:
                for v in np.nonzero(adj[u])[0]:
                    if v not in prev:
                        prev[v] = u
                        nxt.append(v)
            frontier = nxt
        w = rng.uniform(0.5, 1.5)
        rates[x, y] += w
        v = x
        while prev[v] is not None:
            rates[prev[v], v] += w
            v = prev[v]
    return rates


@_timed(5, "orbits equal particle-number sectors; sector laws by linear solve", 60.0)
def orbit_law():
    rng = np.random.default_rng(SEED + 5)
    systems = orbit_ok = 0
    worst_sector = worst_mixture = 0.0
    for M in range(1, 5):
        graphs = [np.zeros((1, 1))] if M == 1 else list(strongly_connected_digraphs(M))
        for adj in graphs:
            rates = adj if M == 1 else _circulation(adj, rng)
            p = Kernel.from_rates(rates)
            for N in (1, 2):
                system = FiniteSystem(model.partial_exclusion(N), p)
                report = orbit_decomposition(system, check=False)
                systems += 1
                orbit_ok += report.matches_level_sets
                sectors, mix = ergodic_components_finite(system, np.full(M, 0.8))
                worst_sector = max(worst_sector, max(s.max_error for s in sectors))
                worst_mixture = max(worst_mixture, mix)
    ok = orbit_ok == systems and worst_sector <= 1e-10 and worst_mixture <= 1e-10
    return ok, {"systems": systems, "orbit_partitions_matching": orbit_ok, "max_sector_error": worst_sector, "max_mixture_error": worst_mixture}


# -- 6 ------------------------------------------------------------------------


@_timed(6, "Monte Carlo stationarity on the asymmetric exclusion 6-cycle", 120.0)
def monte_carlo_stationarity():
    rep = stationarity_mc(model.exclusion(), np.ones(6), Kernel.asymmetric_cycle(6), 5.0, 10**5, SEED + 6)
    z = np.abs(rep["z"])
    return bool(np.all(z <= 3.0)), {"mean": rep["mean"], "sigma": rep["sigma"][0], "max_abs_z": float(z.max())}


# -- 7 ------------------------------------------------------------------------


def _random_table_rate(rng):
    N = int(rng.integers(1, 5))
    b = model.misanthrope(np.r_[0.0, rng.uniform(0.2, 3, N)], np.r_[rng.uniform(0.2, 3, N), 0.0], rng.uniform(0.2, 3, 2 * N + 1))
    return model.table_rate(b.table(N))


SYMBOLIC_PROFILES = [
    FugacityProfile.constant(1.0),
    FugacityProfile.constant(3.0),
    FugacityProfile.geometric(2.0),
    FugacityProfile.geometric(0.5),
    FugacityProfile.geometric(1.0, 2.0),
    FugacityProfile.polynomial(1.0),
    FugacityProfile.polynomial(2.0),
    FugacityProfile.polynomial(-1.0),
    FugacityProfile.polynomial(-0.5, 3.0),
    FugacityProfile.factorial(),
]


@_timed(7, "anti-particle duality: measures, process law, criterion", 120.0)
def duality():
    rng = np.random.default_rng(SEED + 7)
    measure_err = 0.0
    for _ in range(100):
        b = _random_table_rate(rng)
        measure_err = max(measure_err, verify_measure_duality(b, rng.uniform(0.1, 5.0, 3)))
    e = model.exclusion()
    tv_excl = duality_mc(e, Kernel.cycle(4, 1.0, 0.4), 1, (1, 0, 1, 0), 2.0, 10**5, SEED + 70)["max_tv"]
    mis = load_system("misanthrope-table")
    tv_mis = duality_mc(mis.b, mis.kernel, 2, (2, 0, 1), 2.0, 10**5, SEED + 71)["max_tv"]
    finite_rates = [e, mis.b, model.partial_exclusion(3, 1.5)]
    invariant = all(criterion_duality_check(pr, b)[0] for pr in SYMBOLIC_PROFILES for b in finite_rates)
    ok = measure_err <= 1e-12 and tv_excl < 0.02 and tv_mis < 0.02 and invariant
    return ok, {"max_measure_error": measure_err, "tv_exclusion": tv_excl, "tv_misanthrope": tv_mis, "criterion_invariant": invariant}


# -- 8 ------------------------------------------------------------------------


def _dyadic_law(rng, size):
    cuts = sorted(rng.integers(0, 2**10, size - 1).tolist())
    edges = [0] + cuts + [2**10]
    return DiscreteLaw(0, np.array([Fraction(edges[i + 1] - edges[i], 2**10) for i in range(size)], dtype=object))


def _paths_oracle(initial: DiscreteLaw, steps: list) -> dict:
    out = {}
    for start, p0 in zip(initial.support, initial.pmf):
        for path in itertools.product(*[list(zip(s.support, s.pmf)) for s in steps]):
            v = int(start) + sum(int(k) for k, _ in path)
            out[v] = out.get(v, 0.0) + float(p0) * math.prod(float(q) for _, q in path)
    return out


@_timed(8, "coupling: Mineka fidelity, TV decay, coupling inequality, convolution", 180.0)
def coupling():
    rng = np.random.default_rng(SEED + 8)
    fidelity = True
    for _ in range(200):
        mu = _dyadic_law(rng, int(rng.integers(1, 7)))
        d = int(rng.integers(1, 4))
        j = mineka_joint_step(mu, d)
        lo, hi = mu.offset, mu.upper
        fidelity &= all(j.first_marginal(lo, hi) == mu.pmf) and all(j.second_marginal(lo, hi) == mu.pmf)
        fidelity &= j.total == 1 and j.expected_difference == 0 and all(q >= 0 for q in j.prob)
    e = model.exclusion()
    one = FugacityProfile.constant(1.0)
    horizon = 10**4
    tv = tail_triviality_probe(e, one, 0, 0, 1, horizon)
    T = coupling_times(e, one, 0, 0, 1, [1], horizon, SEED + 80, 1000)
    coupled = float(np.mean(T >= 0))
    checks = []
    ineq = True
    for n in (1, 10, 100, 1000, horizon):
        tail = float(np.mean((T < 0) | (T > n)))
        sigma = math.sqrt(max(tail * (1 - tail), 1e-300) / len(T))
        checks.append({"n": n, "tv": float(tv[n]), "p_not_coupled": tail, "sigma": sigma})
        ineq &= tv[n] <= 2 * tail + 3 * sigma
    conv_err = 0.0
    for _ in range(40):
        init = DiscreteLaw(int(rng.integers(0, 3)), rng.dirichlet(np.ones(int(rng.integers(1, 6)))))
        steps = [DiscreteLaw(int(rng.integers(0, 2)), rng.dirichlet(np.ones(int(rng.integers(1, 6))))) for _ in range(int(rng.integers(0, 7)))]
        got = propagate(init, steps, trim=False)
        want = _paths_oracle(init, steps)
        lo, hi = min(want), max(want)
        ref = np.array([want.get(v, 0.0) for v in range(lo, hi + 1)])
        conv_err = max(conv_err, float(np.max(np.abs(got.on(lo, hi) - ref))))
    ok = fidelity and tv[horizon] < 0.05 and coupled >= 0.95 and ineq and conv_err <= 1e-12
    return ok, {"fidelity_exact": fidelity, "tv_final": float(tv[horizon]), "p_coupled": coupled, "checkpoints": checks, "convolution_error": conv_err}


# -- 9 ------------------------------------------------------------------------


@_timed(9, "Bezout certificates", 1.0)
def bezout():
    rng = np.random.default_rng(SEED + 9)
    bad = 0
    for _ in range(10**4):
        D = rng.integers(1, 10**6 + 1, int(rng.integers(1, 7))).tolist()
        g, x = gcd_bezout(D)
        if sum(a * b for a, b in zip(x, D)) != g or g != math.gcd(*D) or any(d % g for d in D):
            bad += 1
    return bad == 0, {"sets": 10**4, "failures": bad}


# -- 10 -----------------------------------------------------------------------


def shipped_rates(level: int = 1000):
    mis = load_system("misanthrope-table").b
    return {
        "exclusion": model.exclusion(),
        "partial_exclusion": model.partial_exclusion(3, 1.5),
        "linear_zero_range": model.linear_zero_range(level),
        "constant_zero_range": model.constant_zero_range(level),
        "zero_range_table": model.zero_range([0, 1, 1.5, 1.8, 2.0], level),
        "inverse_even_factorial": model.inverse_even_factorial(level),
        "misanthrope": mis,
        "table": model.table_rate(mis.table(2)),
    }


@_timed(10, "(**) machinery", 5.0)
def star_star():
    lzr = star_star_check(model.linear_zero_range(1000), (1,)).per_d[0]
    sup_ok = abs(lzr["sup"] - 2.0) <= 1e-12 and lzr["argmax_k"] == 1
    worst = 0.0
    for b in shipped_rates().values():
        for d in (1, 2, 3):
            k, via_a, via_b = star_star_log_ratios(b, d, 1000)
            if len(k):
                worst = max(worst, float(np.max(np.abs(np.expm1(via_a - via_b)))))
    k, via_a, _ = star_star_log_ratios(model.inverse_even_factorial(1000), 1, 1000)
    ief = float(np.max(np.abs(np.expm1(via_a - np.log((2.0 * k + 1) * (2.0 * k + 2))))))
    ok = sup_ok and worst <= 1e-10 and ief <= 1e-10
    return ok, {"linear_zero_range_sup": lzr["sup"], "argmax_k": lzr["argmax_k"], "max_route_gap": worst, "factorial_ratio_error": ief}


# -- 11 -----------------------------------------------------------------------


@_timed(11, "deterministic-profile counterexample", 30.0)
def counterexample():
    balance = {}
    for p12 in (0.1, 0.5, 0.9):
        s = build_counterexample(100, p12)
        balance[p12] = lambda_conditions(None, s.kernel, log_lam=s.log_lam).reversible_residual
    bounds = ratio_bounds_check(100)
    conc = profile_concentration(100)
    cert = nontriviality_certificate(3, 100)
    ok = (
        max(balance.values()) <= 1e-10
        and conc["modes_ok"]
        and bounds["holds"]
        and bounds["strict_except_n1"]
        and len(bounds["equalities"]) == 200
        and conc["deficit_sum"] <= conc["bound"] < 1.645
        and 0.0 < cert["lower_bound"] < 1.0
    )
    return ok, {
        "detailed_balance_residual": balance,
        "ratio_bounds": {k: v for k, v in bounds.items() if k != "equalities"},
        "n1_equalities": len(bounds["equalities"]),
        "deficit_sum": conc["deficit_sum"],
        "bound": conc["bound"],
        "certificate": cert["lower_bound"],
    }


# -- 12 -----------------------------------------------------------------------


@_timed(12, "ergodicity criterion table", 10.0)
def criterion_table():
    rows = {
        "lambda=1 (finite W)": finite_w_criterion(FugacityProfile.constant(1.0)).outcome,
        "lambda_i=2^i (finite W)": finite_w_criterion(FugacityProfile.geometric(2.0)).outcome,
        "lambda_i=i (finite W)": finite_w_criterion(FugacityProfile.polynomial(1.0, shift=0)).outcome,
    }
    lzr = countable_w_criterion(model.linear_zero_range(), FugacityProfile.constant(1.0), (1,))
    rows["linear zero-range, lambda=1"] = lzr.outcome
    s = build_counterexample(50)
    crit = countable_w_criterion(s.b, s.profile, (1,), truncation=1000)
    cert = nontriviality_certificate(3, 100)
    rows["counterexample (criterion)"] = crit.outcome
    rows["counterexample (certificate)"] = "NotErgodic" if cert["nontrivial"] else "Undecidable"
    expected = {
        "lambda=1 (finite W)": "Ergodic",
        "lambda_i=2^i (finite W)": "NotErgodic",
        "lambda_i=i (finite W)": "Ergodic",
        "linear zero-range, lambda=1": "Ergodic",
        "counterexample (criterion)": "Undecidable",
        "counterexample (certificate)": "NotErgodic",
    }
    ok = rows == expected and "(**)" in lzr.criterion
    return ok, {"verdicts": rows}


CRITERIA = [
    marginals_closed_form,
    radon_nikodym,
    stationarity_trichotomy,
    dirichlet_forms,
    orbit_law,
    monte_carlo_stationarity,
    duality,
    coupling,
    bezout,
    star_star,
    counterexample,
    criterion_table,
]


def run_all(echo=print) -> list:
    results = []
    for check in CRITERIA:
        r = check()
        if echo:
            echo(format_line(r))
        results.append(r)
    return results
