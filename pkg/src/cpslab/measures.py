"""Product measures mu_lambda built from a rate function.

One-site marginals are ``mu(n) = a_n lambda^n / Z_lambda`` with
``a_k = prod_{i<k} b(1, i) / b(i+1, 0)``.  Everything is carried as log
weights; normalisation goes through log-sum-exp anchored at the mode so that
factorial-scale fugacities keep full relative precision near the bulk of the
law.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import MoveForbidden, RadiusExceeded, TruncationExceeded, TruncationInsufficient
from .model import Configuration, FugacityProfile, RateFunction

__all__ = [
    "DiscreteLaw",
    "Radius",
    "ProductMeasure",
    "AssumptionReport",
    "log_increments",
    "log_weights",
    "log_a",
    "radius",
    "marginal",
    "marginal_window",
    "product_measure",
    "sample_configuration",
    "rn_move_derivative",
    "check_assumptions",
]

MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteLaw:
    """A pmf on the integers ``offset .. offset + len(pmf) - 1``.

    ``tail_mass`` is probability known to lie outside the stored support
    (truncation loss); ``sum(pmf) + tail_mass`` is one up to rounding.
    """

    offset: int
    pmf: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        pmf = np.asarray(self.pmf)
        if pmf.dtype != object:
            pmf = pmf.astype(float)
        if pmf.ndim != 1 or len(pmf) == 0:
            raise ValueError("pmf must be a nonempty vector")
        if np.any(pmf < 0):
            raise ValueError("pmf entries must be nonnegative")
        total = pmf.sum() + self.tail_mass
        if abs(float(total) - 1.0) > MASS_TOL * max(1.0, len(pmf) ** 0.5):
            raise ValueError(f"pmf plus tail mass sums to {float(total)!r}, not 1")
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "offset", int(self.offset))

    @classmethod
    def point_mass(cls, n: int = 0) -> "DiscreteLaw":
        return cls(n, np.ones(1))

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.pmf))

    @property
    def upper(self) -> int:
        return self.offset + len(self.pmf) - 1

    def prob(self, n: int) -> float:
        i = n - self.offset
        return self.pmf[i] if 0 <= i < len(self.pmf) else 0.0

    def mean(self) -> float:
        return float(np.dot(self.support, self.pmf))

    def shifted(self, s: int) -> "DiscreteLaw":
        return DiscreteLaw(self.offset + s, self.pmf, self.tail_mass)

    def on(self, lo: int, hi: int) -> np.ndarray:
        """Probabilities on lo..hi, zero-padded outside the support."""
        out = np.zeros(hi - lo + 1, dtype=self.pmf.dtype)
        a, b = max(lo, self.offset), min(hi, self.upper)
        if a <= b:
            out[a - lo : b - lo + 1] = self.pmf[a - self.offset : b - self.offset + 1]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "pmf"])
        for n, p in zip(self.support, self.pmf):
            writer.writerow([int(n), repr(float(p))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"offset": self.offset, "pmf": [float(p) for p in self.pmf], "tail_mass": float(self.tail_mass)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class Radius:
    """Radius of convergence lambda* of the partition sum.

    ``estimate`` is the running infimum of b(j+1,0)/b(1,j) over the last half
    of the truncation window; ``symbolic`` is the exact value when the rate
    family determines it (None otherwise).  ``value`` prefers the symbolic one.
    """

    estimate: float
    log_estimate: float
    symbolic: float | None = None
    is_estimate: bool = True

    @property
    def value(self) -> float:
        return self.symbolic if self.symbolic is not None else self.estimate

    @property
    def log_value(self) -> float:
        if self.symbolic is not None:
            return float(np.log(self.symbolic)) if self.symbolic > 0 else -np.inf
        return self.log_estimate


def log_increments(b: RateFunction, k_max: int) -> np.ndarray:
    """log(a_{i+1} / a_i) = log b(1, i) - log b(i+1, 0) for i < k_max."""
    i = np.arange(k_max)
    return b.log(np.ones_like(i), i) - b.log(i + 1, np.zeros_like(i))


def log_weights(b: RateFunction, k_max: int | None = None) -> np.ndarray:
    """log a_0 .. log a_k_max."""
    k_max = b.range.top if k_max is None else k_max
    if k_max > b.range.top:
        raise TruncationExceeded(f"a_k requested up to {k_max} > level {b.range.top}")
    return np.concatenate([[0.0], np.cumsum(log_increments(b, k_max))])


def log_a(b: RateFunction, k: int) -> float:
    return float(log_weights(b, k)[k])


_SYMBOLIC_RADIUS = {
    "LinearZeroRange": np.inf,
    "ConstantZeroRange": 1.0,
    "InverseEvenFactorial": np.inf,
}


def radius(b: RateFunction, truncation: int | None = None, burn_in: int | None = None) -> Radius:
    if b.range.finite:
        return Radius(np.inf, np.inf, np.inf, False)
    K = b.range.top if truncation is None else truncation
    if K > b.range.top:
        raise TruncationExceeded(f"radius estimate needs b up to {K}")
    J = K // 2 if burn_in is None else burn_in
    j = np.arange(J, K)
    log_ratio = b.log(j + 1, np.zeros_like(j)) - b.log(np.ones_like(j), j)
    log_est = float(np.min(log_ratio))
    with np.errstate(over="ignore"):
        est = float(np.exp(log_est))
    symbolic = _SYMBOLIC_RADIUS.get(b.kind)
    if b.kind == "ZeroRange":
        g = np.asarray(b.params["g"])
        symbolic = float(g[-1] / g[1])
    return Radius(est, log_est, symbolic, symbolic is None)


def _log_radius(b: RateFunction) -> float:
    symbolic = _SYMBOLIC_RADIUS.get(b.kind)
    if symbolic is not None:
        return float(np.log(symbolic))
    return radius(b).log_value


def _geometric_tail(log_edge_weight: float, log_ratio: float) -> float:
    """log of sum_{j>=1} w r^j = w r / (1 - r); requires r < 1."""
    if log_ratio >= 0:
        raise TruncationInsufficient("weights are not decaying at the truncation edge")
    if log_ratio == -np.inf or log_edge_weight == -np.inf:
        return -np.inf
    return log_edge_weight + log_ratio - np.log(-np.expm1(log_ratio))


def _anchored_log_weights(inc: np.ndarray) -> np.ndarray:
    """Cumulative log weights re-anchored at their maximum.

    The anchor is recomputed by summing increments outward from the mode, so
    entries near the mode do not inherit rounding from a long prefix sum.
    """
    raw = np.concatenate([[0.0], np.cumsum(inc)])
    m = int(np.argmax(raw))
    out = np.empty_like(raw)
    out[m] = 0.0
    out[m + 1 :] = np.cumsum(inc[m:])
    out[:m] = -np.cumsum(inc[:m][::-1])[::-1]
    return out


def marginal(
    b: RateFunction,
    lam: float | None = None,
    truncation: int | None = None,
    *,
    log_lam: float | None = None,
    support: tuple[int, int] | None = None,
) -> DiscreteLaw:
    """One-site marginal a_n lambda^n / Z_lambda.

    For countable ranges the truncation defaults to the level of ``b``; mass
    beyond the computed window is bounded by a geometric series with the
    edge ratio and reported as ``tail_mass``.  ``support=(lo, hi)`` restricts
    the computation to a window (tails on both sides are bounded the same
    way), which is how factorial-scale fugacities are handled.
    """
    if log_lam is None:
        if lam is None or lam < 0:
            raise ValueError("fugacity must be given and nonnegative")
        with np.errstate(divide="ignore"):
            log_lam = float(np.log(lam))
    top = b.range.top if truncation is None else truncation
    if top > b.range.top:
        raise TruncationExceeded(f"marginal needs b up to {top}")
    if log_lam == -np.inf:
        return DiscreteLaw.point_mass(0)
    if not b.range.finite:
        log_rad = _log_radius(b)
        if log_lam >= log_rad:
            raise RadiusExceeded(f"log lambda = {log_lam:.6g} >= log lambda* = {log_rad:.6g}")
    lo, hi = (0, top) if support is None else (max(0, support[0]), min(top, support[1]))
    if lo > hi:
        raise ValueError("empty support window")
    i = np.arange(lo, hi)
    inc = log_increments_range(b, lo, hi) + log_lam
    lw = _anchored_log_weights(inc)
    tails = []
    range_end = b.range.top if b.range.finite else np.inf
    if hi < range_end:
        # edge ratio a_hi lambda / a_{hi-1}; decay beyond the window is assumed monotone
        if len(inc):
            ratio = float(inc[-1])
        elif hi < b.range.top:
            ratio = float(log_increments_range(b, hi, hi + 1)[0] + log_lam)
        else:
            raise TruncationInsufficient("cannot bound the tail of a single-point window")
        tails.append(_geometric_tail(lw[-1], ratio))
    if lo > 0:
        down = -float(log_increments_range(b, lo - 1, lo)[0] + log_lam)
        tails.append(_geometric_tail(lw[0], down))
    log_tail = logsumexp(tails) if tails else -np.inf
    log_norm = np.logaddexp(logsumexp(lw), log_tail)
    pmf = np.exp(lw - log_norm)
    tail = float(np.exp(log_tail - log_norm))
    pmf = pmf * ((1.0 - tail) / pmf.sum())
    return DiscreteLaw(lo, pmf, tail)


def marginal_window(
    b: RateFunction,
    lam: float | None = None,
    *,
    log_lam: float | None = None,
    tail_tol: float = 1e-15,
    half_width: int = 8,
    increments: np.ndarray | None = None,
) -> DiscreteLaw:
    """Marginal computed on a window around its mode.

    The half-width doubles until the certified tail mass is below
    ``tail_tol`` (relative to the window mass) or the window covers the
    whole range.  This is the route for fugacities whose laws sit far out,
    e.g. lambda of order (2k^2+1)! with its mode at k^2.  Pass the
    precomputed ``log_increments(b, top)`` when calling this in a loop.
    """
    if log_lam is None:
        with np.errstate(divide="ignore"):
            log_lam = float(np.log(lam))
    if log_lam == -np.inf:
        return DiscreteLaw.point_mass(0)
    top = b.range.top
    inc = (log_increments(b, top) if increments is None else increments) + log_lam
    mode = int(np.argmax(np.concatenate([[0.0], np.cumsum(inc)])))
    w = max(1, half_width)
    while True:
        lo, hi = max(0, mode - w), min(top, mode + w)
        law = marginal(b, truncation=top, log_lam=log_lam, support=(lo, hi))
        if law.tail_mass <= tail_tol * (1.0 - law.tail_mass) or (lo == 0 and hi == top):
            return law
        w *= 2


def log_increments_range(b: RateFunction, lo: int, hi: int) -> np.ndarray:
    """log(a_{i+1}/a_i) for lo <= i < hi."""
    i = np.arange(lo, hi)
    return b.log(np.ones_like(i), i) - b.log(i + 1, np.zeros_like(i))


@dataclass(frozen=True, eq=False)
class ProductMeasure:
    """mu_lambda on a finite window of sites; one DiscreteLaw per site."""

    b: RateFunction
    log_lam: np.ndarray
    laws: tuple
    truncation: int
    lambda_star: Radius
    log_a: np.ndarray = field(repr=False)

    @property
    def sites(self) -> int:
        return len(self.laws)

    @property
    def lam(self) -> np.ndarray:
        return np.exp(self.log_lam)

    @property
    def tail_bound(self) -> np.ndarray:
        return np.array([law.tail_mass for law in self.laws])

    @property
    def log_Z(self) -> np.ndarray:
        """log partition sums, including the tail estimate."""
        out = []
        for law, ll in zip(self.laws, self.log_lam):
            n = law.offset
            if law.pmf[0] > 0:
                out.append(self.log_a[n] + n * ll - np.log(law.pmf[0]) if n < len(self.log_a) else np.nan)
            else:
                out.append(np.nan)
        return np.array(out)

    def pmf_matrix(self, top: int | None = None) -> np.ndarray:
        """(sites, top+1) array of marginal probabilities on 0..top."""
        top = self.truncation if top is None else top
        return np.stack([law.on(0, top) for law in self.laws])

    def log_prob(self, eta) -> np.ndarray:
        """Log probability of configurations (last axis indexes sites)."""
        eta = np.asarray(eta, dtype=np.int64)
        out = np.zeros(eta.shape[:-1])
        with np.errstate(divide="ignore"):
            for x, law in enumerate(self.laws):
                logp = np.log(law.on(0, self.truncation))
                v = eta[..., x]
                ok = (v >= 0) & (v <= self.truncation)
                out = out + np.where(ok, logp[np.clip(v, 0, self.truncation)], -np.inf)
        return out

    def sample(self, seed=None, size: int | None = None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        n = 1 if size is None else size
        u = rng.random((n, self.sites))
        out = np.empty((n, self.sites), dtype=np.int64)
        for x, law in enumerate(self.laws):
            cdf = np.cumsum(law.pmf)
            idx = np.searchsorted(cdf, u[:, x], side="right")
            # draws landing in the truncated tail are clipped to the window edge
            out[:, x] = law.offset + np.minimum(idx, len(law.pmf) - 1)
        return out[0] if size is None else out

    def to_dict(self) -> dict:
        return {
            "b": self.b.to_dict(),
            "range": self.b.range.to_dict(),
            "log_lambda": [float(v) for v in self.log_lam],
            "truncation": self.truncation,
            "lambda_star": self.lambda_star.value,
            "tail_bound": self.tail_bound.tolist(),
        }


def product_measure(
    b: RateFunction,
    lam=None,
    truncation: int | None = None,
    *,
    log_lam=None,
    sites: int | None = None,
) -> ProductMeasure:
    """Build mu_lambda from per-site fugacities (array or FugacityProfile)."""
    if isinstance(lam, FugacityProfile):
        if sites is None:
            raise ValueError("a profile needs the number of sites")
        log_lam = lam.log_values(sites)
    elif log_lam is None:
        with np.errstate(divide="ignore"):
            log_lam = np.log(np.asarray(lam, dtype=float))
    log_lam = np.atleast_1d(np.asarray(log_lam, dtype=float))
    top = b.range.top if truncation is None else truncation
    cache = {}
    for ll in map(float, log_lam):
        if ll not in cache:
            cache[ll] = marginal(b, truncation=top, log_lam=ll)
    laws = tuple(cache[float(ll)] for ll in log_lam)
    return ProductMeasure(b, log_lam, laws, top, radius(b), log_weights(b, top))


def sample_configuration(measure: ProductMeasure, seed=None) -> Configuration:
    """One configuration drawn from the product measure (deterministic in seed)."""
    return Configuration(tuple(measure.sample(seed)), measure.b.range)


def rn_move_derivative(b: RateFunction, lam, eta, x: int, y: int) -> float:
    """Density of mu_lambda(d eta^{y,x}) against mu_lambda(d eta).

    Equals b(eta_y, eta_x) / b(eta_x + 1, eta_y - 1) * lambda_x / lambda_y.
    """
    eta = eta.occupancies if isinstance(eta, Configuration) else tuple(int(v) for v in eta)
    lam = np.asarray(lam, dtype=float)
    if x == y:
        raise MoveForbidden("x and y must differ")
    if eta[y] < 1:
        raise MoveForbidden(f"site {y} is empty")
    if b.range.finite and eta[x] >= b.range.top:
        raise MoveForbidden(f"site {x} is full")
    log_r = b.log(eta[y], eta[x]) - b.log(eta[x] + 1, eta[y] - 1)
    return float(np.exp(log_r) * lam[x] / lam[y])


@dataclass(frozen=True)
class AssumptionReport:
    passed: bool
    max_violation: float
    worst: tuple | None
    inf_ratio: float | None
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_violation": self.max_violation,
            "worst": list(self.worst) if self.worst else None,
            "inf_ratio": self.inf_ratio,
            "tolerance": self.tolerance,
        }


def check_assumptions(b: RateFunction, truncation: int | None = None, tol: float = 1e-10) -> AssumptionReport:
    """Check b(i+1,j-1)/b(j,i) = [b(1,j-1)/b(j,0)] [b(i+1,0)/b(1,i)].

    Scans 0 <= i < K, 1 <= j <= K and reports the largest relative
    violation together with the running infimum I of b(i+1,0)/b(1,i)
    (which must be positive when W is countable).
    """
    K = b.range.top if truncation is None else min(truncation, b.range.top)
    i = np.arange(0, K)[:, None]
    j = np.arange(1, K + 1)[None, :]
    one, zero = np.ones_like, np.zeros_like
    lhs = b.log(i + 1, j - 1) - b.log(j, i)
    rhs = (b.log(one(j), j - 1) - b.log(j, zero(j))) + (b.log(i + 1, zero(i)) - b.log(one(i), i))
    viol = np.abs(np.expm1(lhs - rhs))
    flat = int(np.argmax(viol))
    wi, wj = np.unravel_index(flat, viol.shape)
    max_v = float(viol.flat[flat])
    inf_ratio = None
    if not b.range.finite:
        ii = np.arange(K)
        inf_ratio = float(np.exp(np.min(b.log(ii + 1, zero(ii)) - b.log(one(ii), ii))))
    passed = max_v <= tol and (inf_ratio is None or inf_ratio > 0)
    return AssumptionReport(passed, max_v, (int(wi), int(wj) + 1), inf_ratio, tol)
