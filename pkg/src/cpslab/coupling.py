"""Partial-sum chains Z_n = s + sum_{n0 <= i < n} eta_i and their couplings.

Under a product measure the increments of Z are independent with the site
marginals as laws, so the law of Z_n is an exact convolution.  Total
variation between two such chains started from different counts probes the
tail sigma-algebra of partial sums; the Mineka coupling (optionally in
several phases with step sizes from a Bezout certificate) gives the matching
Monte Carlo upper bound through the coupling inequality.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import TailBudgetExceeded
from .ergodicity import gcd_bezout
from .measures import DiscreteLaw, marginal, marginal_window
from .model import FugacityProfile, RateFunction

__all__ = [
    "JointStepLaw",
    "CouplingTrace",
    "step_law",
    "convolve",
    "propagate",
    "tv_distance",
    "tv_with_slack",
    "tail_triviality_probe",
    "mineka_joint_step",
    "phase_targets",
    "simulate_coupling",
    "coupling_times",
]

DEFAULT_TAIL_BUDGET = 1e-9


def step_law(b: RateFunction, lam: float | None = None, truncation: int | None = None, *, log_lam: float | None = None) -> DiscreteLaw:
    """Law of one increment of Z: the one-site marginal at fugacity lambda."""
    if b.range.finite or truncation is not None:
        return marginal(b, lam, truncation, log_lam=log_lam)
    return marginal_window(b, lam, log_lam=log_lam)


def convolve(a: DiscreteLaw, b: DiscreteLaw) -> DiscreteLaw:
    pmf = np.convolve(a.pmf, b.pmf)
    tail = a.tail_mass + b.tail_mass - a.tail_mass * b.tail_mass
    return DiscreteLaw(a.offset + b.offset, pmf, tail)


def _trim(pmf: np.ndarray, eps: float) -> tuple[np.ndarray, int, float]:
    """Drop end entries whose cumulative mass from that end is below eps."""
    if eps <= 0 or len(pmf) < 2:
        return pmf, 0, 0.0
    lo_cum = np.cumsum(pmf)
    hi_cum = np.cumsum(pmf[::-1])
    lo = int(np.searchsorted(lo_cum, eps, side="right"))
    hi = int(np.searchsorted(hi_cum, eps, side="right"))
    lo = min(lo, len(pmf) - 1)
    hi = min(hi, len(pmf) - 1 - lo)
    dropped = (lo_cum[lo - 1] if lo else 0.0) + (hi_cum[hi - 1] if hi else 0.0)
    return pmf[lo : len(pmf) - hi], lo, float(dropped)


def propagate(
    initial: DiscreteLaw,
    steps,
    b: RateFunction | None = None,
    *,
    tail_budget: float = DEFAULT_TAIL_BUDGET,
    trim: bool = True,
    callback=None,
) -> DiscreteLaw:
    """Convolve ``initial`` with one increment law per step.

    ``steps`` holds fugacities (step laws are built from ``b`` and cached)
    or ready DiscreteLaws.  With ``trim`` the support is cut back after each
    step so that the total cut mass stays below half the budget; all cut mass
    is added to ``tail_mass``.  ``callback(i, law)`` sees the law after step
    i, which is how per-step TV sequences are produced in one pass.
    """
    steps = list(steps)
    cache = {}

    def law_of(step):
        if isinstance(step, DiscreteLaw):
            return step
        if b is None:
            raise ValueError("fugacity steps need a rate function")
        key = float(step)
        if key not in cache:
            cache[key] = step_law(b, key)
        return cache[key]

    eps = 0.25 * tail_budget / max(len(steps), 1) if trim else 0.0
    pmf, offset, tail = initial.pmf, initial.offset, initial.tail_mass
    for i, step in enumerate(steps):
        inc = law_of(step)
        pmf = np.convolve(pmf, inc.pmf)
        offset += inc.offset
        tail = tail + inc.tail_mass - tail * inc.tail_mass
        pmf, cut, dropped = _trim(pmf, eps)
        offset += cut
        tail += dropped
        if tail > tail_budget:
            raise TailBudgetExceeded(f"tracked tail mass {tail:.3g} exceeds budget {tail_budget:.3g}")
        if callback is not None:
            callback(i, DiscreteLaw(offset, pmf, tail))
    return DiscreteLaw(offset, pmf, tail)


def tv_distance(a: DiscreteLaw, b: DiscreteLaw) -> float:
    """1/2 sum_j |a(j) - b(j)| over the union of the stored supports."""
    lo, hi = min(a.offset, b.offset), max(a.upper, b.upper)
    return 0.5 * float(np.abs(a.on(lo, hi) - b.on(lo, hi)).sum())


def tv_with_slack(a: DiscreteLaw, b: DiscreteLaw) -> tuple[float, float]:
    """TV on the stored supports and the truncation slack bounding its error."""
    return tv_distance(a, b), a.tail_mass + b.tail_mass


def _shift_tv(pmf: np.ndarray, delta: int) -> float:
    """TV between a law and its translate by delta."""
    delta = abs(delta)
    if delta == 0:
        return 0.0
    if delta >= len(pmf):
        return float(pmf.sum())
    diff = np.concatenate([pmf[:delta], pmf[delta:] - pmf[:-delta], -pmf[-delta:]])
    return 0.5 * float(np.abs(diff).sum())


def tail_triviality_probe(
    b: RateFunction,
    profile: FugacityProfile,
    n0: int,
    s0: int,
    s: int,
    n_max: int,
    *,
    tail_budget: float = DEFAULT_TAIL_BUDGET,
    check_monotone: bool = True,
) -> np.ndarray:
    """TV(n) for n = n0..n_max between Z started at (n0, s0) and at (n0, s).

    Both chains share the increments' laws, so TV(n) is the distance between
    the law of sum_{n0 <= i < n} eta_i and its translate by s - s0.
    """
    if n_max < n0:
        raise ValueError("n_max must be at least n0")
    tv = np.zeros(n_max - n0 + 1)
    if s == s0:
        return tv
    tv[0] = 1.0
    log_lam = profile.log_values(n_max) if n_max else np.zeros(0)

    def record(i, law):
        tv[i + 1] = _shift_tv(law.pmf, s - s0)

    distinct = {}
    steps = []
    for v in log_lam[n0:n_max]:
        key = float(v)
        if key not in distinct:
            distinct[key] = step_law(b, log_lam=key)
        steps.append(distinct[key])
    propagate(DiscreteLaw.point_mass(0), steps, tail_budget=tail_budget, callback=record)
    if check_monotone:
        rises = np.diff(tv)
        if np.any(rises > 1e-12 + tail_budget):
            raise AssertionError(f"TV sequence increased by {rises.max():.3g}")
    return tv


@dataclass(frozen=True, eq=False)
class JointStepLaw:
    """Joint law of the step pair (R, R_hat) of a Mineka coupling.

    Entries (r, r_hat, prob) are stored as parallel arrays; probabilities
    may be Fractions when the input law is exact.
    """

    d: int
    r: np.ndarray
    r_hat: np.ndarray
    prob: np.ndarray

    def first_marginal(self, lo: int, hi: int) -> np.ndarray:
        return self._marginal(self.r, lo, hi)

    def second_marginal(self, lo: int, hi: int) -> np.ndarray:
        return self._marginal(self.r_hat, lo, hi)

    def _marginal(self, vals, lo, hi):
        out = np.zeros(hi - lo + 1, dtype=self.prob.dtype)
        if out.dtype == object:
            out[:] = Fraction(0)
        for v, p in zip(vals, self.prob):
            out[v - lo] += p
        return out

    @property
    def total(self):
        return self.prob.sum()

    @property
    def expected_difference(self):
        return (self.prob * (self.r_hat - self.r)).sum()

    @property
    def move_probability(self):
        """Probability that R_hat - R = +-d."""
        return self.prob[self.r != self.r_hat].sum()

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.prob.astype(float))


def mineka_joint_step(mu: DiscreteLaw, d: int) -> JointStepLaw:
    """(k-d, k) and (k, k-d) get alpha_{k-d}; (k, k) gets mu(k) - alpha_k - alpha_{k-d},
    with alpha_k = min(mu(k), mu(k+d)) / 2."""
    if d < 1:
        raise ValueError("d must be positive")
    pmf = mu.pmf
    exact = pmf.dtype == object
    half = Fraction(1, 2) if exact else 0.5
    n = len(pmf)
    zero = Fraction(0) if exact else 0.0
    alpha = np.array([half * min(pmf[k], pmf[k + d]) if k + d < n else zero for k in range(n)], dtype=pmf.dtype)
    r, rh, pr = [], [], []
    for k in range(n):
        a_prev = alpha[k - d] if k - d >= 0 else zero
        diag = pmf[k] - alpha[k] - a_prev
        if diag != 0:
            r.append(k), rh.append(k), pr.append(diag)
        if k - d >= 0 and a_prev != 0:
            r.append(k - d), rh.append(k), pr.append(a_prev)
            r.append(k), rh.append(k - d), pr.append(a_prev)
    off = mu.offset
    return JointStepLaw(
        d,
        np.array(r, dtype=np.int64) + off,
        np.array(rh, dtype=np.int64) + off,
        np.array(pr, dtype=pmf.dtype),
    )


def phase_targets(v0: int, D) -> tuple[list, list]:
    """Bezout phase plan: (certificate x, targets) with target_i = v0 sum_{j>i} x_j d_j."""
    g, x = gcd_bezout(D)
    if v0 % g:
        raise ValueError(f"difference {v0} is not a multiple of gcd(D) = {g}")
    scale = v0 // g
    targets = [scale * sum(xj * dj for xj, dj in zip(x[i + 1 :], D[i + 1 :])) for i in range(len(D))]
    return x, targets


@dataclass(frozen=True)
class CouplingTrace:
    """Outcome of one coupled run.

    ``T`` is the first time the two chains agree (None on timeout);
    ``phase_hits`` the times each phase target was reached.  ``V`` and
    ``Y`` (the difference and the first chain) are recorded when tracing.
    """

    T: int | None
    phase_schedule: tuple
    phase_targets: tuple
    phase_hits: tuple
    bezout: tuple
    V: tuple | None = None
    Y: tuple | None = None
    n0: int = 0

    @property
    def timed_out(self) -> bool:
        return self.T is None


class _StepSampler:
    """Per-site joint step laws for each d, cached by fugacity."""

    def __init__(self, b, profile, D, horizon):
        self.log_lam = profile.log_values(horizon) if horizon else np.zeros(0)
        self.D = list(D)
        self.b = b
        self.cache = {}

    def tables(self, t):
        key = float(self.log_lam[t])
        if key not in self.cache:
            mu = step_law(self.b, log_lam=key)
            out = []
            for d in self.D:
                j = mineka_joint_step(mu, d)
                out.append((j.cdf(), j.r, j.r_hat))
            self.cache[key] = out
        return self.cache[key]


def _draw(table, u):
    cdf, r, rh = table
    idx = np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), len(cdf) - 1)
    return r[idx], rh[idx]


def _replica_uniforms(seed, indices, length):
    return np.stack([np.random.default_rng(np.random.SeedSequence([seed, int(i)])).random(length) for i in indices]) if len(indices) else np.zeros((0, length))


def _run_block(sampler, n0, v0, D, targets, horizon, U):
    """Vectorised coupling over replicas; U[r, t - n0] drives replica r at time t."""
    R = U.shape[0]
    V = np.full(R, v0, dtype=np.int64)
    phase = np.zeros(R, dtype=np.int64)
    T = np.full(R, -1, dtype=np.int64)
    targ = np.array(targets, dtype=np.int64)

    def advance(active):
        # skip phases whose target already holds
        while True:
            idx = np.nonzero(active & (phase < len(D)) & (V == targ[np.minimum(phase, len(D) - 1)]))[0]
            if len(idx) == 0:
                return
            phase[idx] += 1

    active = np.ones(R, dtype=bool)
    if v0 == 0:
        T[:] = n0
        return T
    advance(active)
    for t in range(n0, horizon):
        live = np.nonzero(active)[0]
        if len(live) == 0:
            break
        tabs = sampler.tables(t)
        u = U[live, t - n0]
        ph = np.minimum(phase[live], len(D) - 1)
        for j in range(len(D)):
            sel = ph == j
            if not sel.any():
                continue
            r, rh = _draw(tabs[j], u[sel])
            V[live[sel]] += rh - r
        hit = live[V[live] == 0]
        T[hit] = t + 1
        active[hit] = False
        advance(active)
    return T


def coupling_times(
    b: RateFunction,
    profile: FugacityProfile,
    n0: int,
    s0: int,
    s: int,
    D,
    horizon: int,
    seed: int,
    replicas: int,
    *,
    threads: int = 1,
    chunk: int = 256,
) -> np.ndarray:
    """Coupling times of independent replicas (-1 marks a timeout).

    Replica r draws its uniforms from SeedSequence([seed, r]), so results do
    not depend on chunking or the thread count.
    """
    D = list(D)
    v0 = s - s0
    _, targets = phase_targets(v0, D) if v0 else (None, [0] * len(D))
    sampler = _StepSampler(b, profile, D, horizon)
    for t in range(n0, horizon):
        sampler.tables(t)  # fill the cache before threads share it
    starts = list(range(0, replicas, chunk))

    def work(start):
        idx = range(start, min(start + chunk, replicas))
        U = _replica_uniforms(seed, idx, max(horizon - n0, 1))
        return _run_block(sampler, n0, v0, D, targets, horizon, U)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(st) for st in starts]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def simulate_coupling(
    b: RateFunction,
    profile: FugacityProfile,
    n0: int,
    s0: int,
    s: int,
    D,
    horizon: int,
    seed: int,
    *,
    replica: int = 0,
) -> CouplingTrace:
    """One traced run of the phased Mineka coupling (replica ``replica`` of ``seed``).

    Phase i uses step size d_i until the difference V hits its Bezout target;
    if V reaches 0 earlier the chains are merged at once.  After merging both
    chains take identical steps, which the trace records and checks.
    """
    D = list(D)
    v0 = s - s0
    x, targets = phase_targets(v0, D) if v0 else (gcd_bezout(D)[1], [0] * len(D))
    sampler = _StepSampler(b, profile, D, horizon)
    u = _replica_uniforms(seed, [replica], max(horizon - n0, 1))[0]
    V, Y = [v0], [s0]
    hits = []
    phase = 0
    T = n0 if v0 == 0 else None
    while phase < len(D) and V[-1] == targets[phase] and T is None:
        hits.append(n0)
        phase += 1
    for t in range(n0, horizon):
        tabs = sampler.tables(t)
        if T is None:
            r, rh = _draw(tabs[min(phase, len(D) - 1)], u[t - n0 : t - n0 + 1])
            r, rh = int(r[0]), int(rh[0])
            step = rh - r
            if abs(step) not in (0, D[min(phase, len(D) - 1)]):
                raise AssertionError("difference moved by a foreign step size")
        else:
            r, _ = _draw(tabs[0], u[t - n0 : t - n0 + 1])
            r, step = int(r[0]), 0
        Y.append(Y[-1] + r)
        V.append(V[-1] + step)
        if T is None and V[-1] == 0:
            T = t + 1
            hits.extend([t + 1] * (len(D) - phase))
            phase = len(D)
        while T is None and phase < len(D) and V[-1] == targets[phase]:
            hits.append(t + 1)
            phase += 1
        if T is not None and t + 1 >= T and V[-1] != 0:
            raise AssertionError("chains separated after coupling")
        if T is not None and t + 1 >= T and phase == len(D):
            break
    return CouplingTrace(T, tuple(D), tuple(targets), tuple(hits), tuple(x), tuple(V), tuple(Y), n0)
