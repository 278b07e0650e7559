"""Ergodicity criteria for stationary product measures.

Divergence of an infinite series cannot be read off finitely many terms, so
verdicts are decided from the declared family of the fugacity profile; the
numeric partial sums that accompany each verdict are evidence only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import EmptySet, IdentityViolation
from .measures import log_increments, marginal, marginal_window, radius
from .model import FugacityProfile, RateFunction

__all__ = [
    "Verdict",
    "StarStarReport",
    "MinekaSums",
    "series_behaviour",
    "finite_w_criterion",
    "star_star_check",
    "countable_w_criterion",
    "mineka_divergence_sum",
    "gcd_bezout",
]

ERGODIC, NOT_ERGODIC, UNDECIDABLE = "Ergodic", "NotErgodic", "Undecidable"
DIVERGES, CONVERGES = "diverges", "converges"

OPEN_QUESTION = (
    "it is not known which extra conditions make a divergent sum of fugacities "
    "sufficient for ergodicity when (**) fails"
)


@dataclass(frozen=True)
class Verdict:
    outcome: str
    criterion: str
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"outcome": self.outcome, "criterion": self.criterion, "evidence": _plain(self.evidence)}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def series_behaviour(profile: FugacityProfile, series: str) -> str | None:
    """Divergence class of sum lambda_i (``"sum"``) or of
    sum min(lambda_i, 1/lambda_i) (``"symmetric"``), or None if unknown."""
    p = profile.params
    kind = profile.kind
    if kind == "constant":
        if p["c"] <= 0:
            raise ValueError("an identically zero profile has no ergodicity verdict")
        return DIVERGES
    if kind == "geometric":
        r = p["r"]
        if series == "sum":
            return DIVERGES if r >= 1 else CONVERGES
        return DIVERGES if r == 1 else CONVERGES
    if kind == "polynomial":
        a = p["alpha"]
        if series == "sum":
            return DIVERGES if a >= -1 else CONVERGES
        return DIVERGES if abs(a) <= 1 else CONVERGES
    if kind == "factorial":
        return DIVERGES if series == "sum" else CONVERGES
    if profile.divergence and series in profile.divergence:
        return profile.divergence[series]
    return None


def _partial_sums(profile: FugacityProfile, series: str, n_terms: int) -> list:
    ll = profile.log_values(n_terms)
    with np.errstate(over="ignore"):
        terms = np.exp(ll) if series == "sum" else np.exp(-np.abs(ll))
    return np.cumsum(terms)[[min(n_terms, m) - 1 for m in (10, 100, 1000) if m <= n_terms]].tolist()


def finite_w_criterion(profile: FugacityProfile, n_terms: int = 1000) -> Verdict:
    """Ergodic iff sum_{lambda_i < 1} lambda_i + sum_{lambda_i >= 1} 1/lambda_i diverges."""
    cls = series_behaviour(profile, "symmetric")
    evidence = {"series": "sum min(lambda_i, 1/lambda_i)", "partial_sums": _partial_sums(profile, "symmetric", n_terms)}
    if cls is None:
        evidence["note"] = "profile carries no divergence class for this series"
        return Verdict(UNDECIDABLE, "finite-W", evidence)
    evidence["class"] = cls
    return Verdict(ERGODIC if cls == DIVERGES else NOT_ERGODIC, "finite-W", evidence)


@dataclass(frozen=True, eq=False)
class StarStarReport:
    """Evaluation of condition (**) for a step set D.

    ``holds`` is True/False when decided, None when only evidence exists.
    ``per_d`` carries, for each d, the sup of a_k^2/(a_{k-d} a_{k+d}) over
    the checked k, where it is attained, the largest disagreement between
    the two evaluation routes and a boundedness status.
    """

    holds: bool | None
    clause: str | None
    radius: float
    gcd: int
    per_d: tuple
    log_ratios: dict = field(repr=False, default_factory=dict)

    def to_dict(self) -> dict:
        return {"holds": self.holds, "clause": self.clause, "radius": self.radius, "gcd": self.gcd, "per_d": _plain(list(self.per_d))}


_BOUNDED_KINDS = {"LinearZeroRange", "ConstantZeroRange", "ZeroRange"}
_UNBOUNDED_KINDS = {"InverseEvenFactorial"}


def star_star_log_ratios(b: RateFunction, d: int, truncation: int | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(k, route via a_k, route via products of b) for d <= k <= K - d, in log space."""
    K = b.range.top if truncation is None else min(truncation, b.range.top)
    if K < 2 * d:
        return np.zeros(0, int), np.zeros(0), np.zeros(0)
    ell = log_increments(b, K)
    window = sliding_window_view(ell, d).sum(axis=1)  # window[j] = log a_{j+d} - log a_j
    k = np.arange(d, K - d + 1)
    via_a = window[k - d] - window[k]
    i = np.arange(d)[None, :]
    kk = k[:, None]
    via_b = (b.log(kk + i + 1, kk - i - 1) - b.log(kk - i, kk + i)).sum(axis=1)
    return k, via_a, via_b


def star_star_check(b: RateFunction, D=(1,), truncation: int | None = None, tol: float = 1e-10) -> StarStarReport:
    D = tuple(int(d) for d in D)
    if not D or any(d < 1 for d in D):
        raise ValueError("D must be a nonempty set of positive integers")
    rad = radius(b)
    g = math.gcd(*D)
    per_d, logs = [], {}
    all_bounded = True
    any_unbounded = False
    for d in D:
        k, via_a, via_b = star_star_log_ratios(b, d, truncation)
        gap = float(np.max(np.abs(np.expm1(via_a - via_b)))) if len(k) else 0.0
        if gap > tol:
            raise IdentityViolation(f"a-ratio and b-product routes differ by {gap:.3g} at d={d}")
        logs[d] = (k, via_a)
        if len(k) == 0:
            status = "bounded" if b.range.finite else "inconclusive"
            sup, arg = None, None
        else:
            j = int(np.argmax(via_a))
            sup, arg = float(np.exp(via_a[j])), int(k[j])
            if b.range.finite or b.kind in _BOUNDED_KINDS:
                status = "bounded"
            elif b.kind in _UNBOUNDED_KINDS:
                status = "unbounded"
            else:
                half = via_a[len(via_a) // 2 :]
                status = "bounded" if np.all(np.diff(half) <= 1e-12) else "inconclusive"
        all_bounded &= status == "bounded"
        any_unbounded |= status == "unbounded"
        per_d.append({"d": d, "sup": sup, "argmax_k": arg, "route_gap": gap, "status": status})
    certified_finite_radius = rad.symbolic is not None and rad.symbolic < np.inf
    if certified_finite_radius:
        holds, clause = True, "finite radius"
    elif g == 1 and all_bounded:
        holds, clause = True, "bounded ratios"
    elif g != 1 or any_unbounded:
        holds, clause = (False, None) if rad.symbolic is not None else (None, None)
    else:
        holds, clause = None, None
    return StarStarReport(holds, clause, rad.value, g, tuple(per_d), logs)


def countable_w_criterion(b: RateFunction, profile: FugacityProfile, D=(1,), truncation: int | None = None, n_terms: int = 1000) -> Verdict:
    """Countable W: under (**) ergodic iff sum lambda_i diverges; otherwise
    divergence of sum min(lambda_i, 1/lambda_i) still proves ergodicity."""
    if b.range.finite:
        raise ValueError("countable criterion needs a countable occupancy range")
    ss = star_star_check(b, D, truncation)
    evidence = {"star_star": ss.to_dict()}
    sum_cls = series_behaviour(profile, "sum")
    sym_cls = series_behaviour(profile, "symmetric")
    evidence["sum_class"] = sum_cls
    evidence["symmetric_class"] = sym_cls
    evidence["sum_partial_sums"] = _partial_sums(profile, "sum", min(n_terms, 50) if profile.kind == "factorial" else n_terms)
    if ss.holds and sum_cls is not None:
        return Verdict(ERGODIC if sum_cls == DIVERGES else NOT_ERGODIC, "countable-W under (**)", evidence)
    if sym_cls == DIVERGES:
        return Verdict(ERGODIC, "symmetric series", evidence)
    evidence["note"] = OPEN_QUESTION
    return Verdict(UNDECIDABLE, "countable-W", evidence)


@dataclass(frozen=True)
class MinekaSums:
    """terms[i] = sum_k min(mu_i(k), mu_i(k+d)); partial[I-1] = S(I)."""

    d: int
    terms: np.ndarray
    partial: np.ndarray
    tails: np.ndarray

    def S(self, I: int) -> float:
        return 0.0 if I == 0 else float(self.partial[I - 1])


def mineka_divergence_sum(b: RateFunction, profile: FugacityProfile, d: int, sites: int, truncation: int | None = None) -> MinekaSums:
    """Overlap masses between each marginal and its shift by d, summed over sites."""
    if d < 1:
        raise ValueError("d must be positive")
    ll = profile.log_values(sites)
    terms, tails = np.zeros(sites), np.zeros(sites)
    for i, v in enumerate(ll):
        if b.range.finite or truncation is not None:
            law = marginal(b, truncation=truncation, log_lam=float(v))
        else:
            law = marginal_window(b, log_lam=float(v))
        pmf = law.pmf
        if d < len(pmf):
            terms[i] = float(np.minimum(pmf[:-d], pmf[d:]).sum())
        tails[i] = law.tail_mass
    return MinekaSums(d, terms, np.cumsum(terms), tails)


def _ext_euclid(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def _bezout_in_order(D) -> tuple[int, list]:
    g, coeffs = D[0], [1]
    for d in D[1:]:
        g, u, v = _ext_euclid(g, d)
        coeffs = [c * u for c in coeffs] + [v]
    return g, coeffs


def gcd_bezout(D) -> tuple[int, list]:
    """(gcd(D), x) with sum x_i d_i = gcd(D), by iterated extended Euclid.

    Euclid is run on D as given and on D sorted ascending; the certificate
    with the smaller sum |x_i| is kept (the given order wins ties).
    """
    D = [int(d) for d in D]
    if not D:
        raise EmptySet("D must be nonempty")
    if any(d <= 0 for d in D):
        raise ValueError("D must contain positive integers")
    g, best = _bezout_in_order(D)
    order = sorted(range(len(D)), key=lambda i: D[i])
    g2, xs = _bezout_in_order([D[i] for i in order])
    alt = [0] * len(D)
    for pos, i in enumerate(order):
        alt[i] = xs[pos]
    if sum(map(abs, alt)) < sum(map(abs, best)):
        best = alt
    assert g == g2 and sum(x * d for x, d in zip(best, D)) == g
    return g, best
