"""Stationarity of product measures and finite-system checks.

Two independent routes are provided.  ``stationarity_verdict`` classifies
(b, lambda, p) by the algebraic conditions (zero-range / gradient / general
rate, balance / reversibility of lambda).  ``generator_table`` computes
``int L 1{eta_A = v} d mu`` exactly for every local indicator on a support
A, once by summing moves directly and once through the change-of-variables
form ``int f sum_{x,y} b(eta_x, eta_y) [p(y,x) lambda_y / lambda_x - p(x,y)] d mu``.

``FiniteSystem`` enumerates the whole state space of a small window so that
quadratic forms, orbits and sector-conditioned laws can be checked by linear
algebra.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from .errors import IdentityViolation, TruncationInsufficient, UnsupportedFunction
from .measures import check_assumptions, marginal
from .model import Kernel, OccupancyRange, RateFunction, misanthrope, partial_exclusion, zero_range

__all__ = [
    "RateClass",
    "LambdaConditionReport",
    "StationarityVerdict",
    "LocalFunction",
    "FiniteSystem",
    "OrbitReport",
    "SectorReport",
    "classify_rate",
    "lambda_conditions",
    "stationarity_verdict",
    "generator_table",
    "generator_expectation",
    "quadratic_forms",
    "orbit_decomposition",
    "ergodic_components_finite",
    "random_stationary_triple",
    "random_strongly_connected",
    "spanning_supports",
]

TOL = 1e-10
CLASSIFY_LEVEL = 256


def _log_lambda(lam, log_lam) -> np.ndarray:
    if log_lam is not None:
        return np.asarray(log_lam, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(lam, dtype=float))


@dataclass(frozen=True)
class RateClass:
    name: str  # "ZeroRange" | "Gradient" | "General"
    zero_range_violation: float
    gradient_violation: float

    @property
    def is_gradient(self) -> bool:
        return self.name in ("ZeroRange", "Gradient")


def classify_rate(b: RateFunction, truncation: int | None = None, tol: float = TOL) -> RateClass:
    """Strongest of ZeroRange (b(n,k) = b(n,0)), Gradient
    (b(n,k) - b(k,n) = b(n,0) - b(k,0)) and General, checked exhaustively."""
    K = min(b.range.top, CLASSIFY_LEVEL if truncation is None else truncation)
    t = b.table(K)
    scale = max(float(t.max()), np.finfo(float).tiny)
    zr = float(np.max(np.abs(t - t[:, :1]))) / scale
    grad = float(np.max(np.abs((t - t.T) - (t[:, :1] - t[:, :1].T)))) / scale
    if zr <= tol:
        name = "ZeroRange"
    elif grad <= tol:
        name = "Gradient"
    else:
        name = "General"
    return RateClass(name, zr, grad)


@dataclass(frozen=True)
class LambdaConditionReport:
    """Balance, reversibility and the mixed condition for (lambda, p).

    Residuals are relative: balance compares inflow with outflow per site,
    reversibility compares lambda_x p(x,y) with lambda_y p(y,x) per pair, and
    the mixed residual compares lambda_x with lambda_y on every pair whose
    fluxes differ.
    """

    positive: bool
    balance_holds: bool
    balance_residual: float
    reversible: bool
    reversible_residual: float
    mixed_ok: bool
    mixed_residual: float
    tolerance: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _rel_gap(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    """|e^a - e^c| / max(e^a, e^c) for log values, zero when both are -inf."""
    both_zero = (a == -np.inf) & (c == -np.inf)
    hi = np.maximum(a, c)
    lo = np.minimum(a, c)
    with np.errstate(invalid="ignore"):
        gap = -np.expm1(lo - hi)
    return np.where(both_zero, 0.0, np.where(hi == -np.inf, 0.0, gap))


def lambda_conditions(lam, p: Kernel, *, log_lam=None, tol: float = TOL) -> LambdaConditionReport:
    ll = _log_lambda(lam, log_lam)
    if ll.shape != (p.sites,):
        raise ValueError("lambda and kernel must live on the same window")
    lp = p.log_rates
    flux = ll[:, None] + lp
    inflow = logsumexp(flux, axis=0)
    outflow = ll + logsumexp(lp, axis=1)
    bal = _rel_gap(inflow, outflow)
    rev = _rel_gap(flux, flux.T)
    broken = rev > tol
    rows = np.broadcast_to(ll[:, None], lp.shape)
    mix = _rel_gap(rows, rows.T)
    mixed_res = float(np.max(np.where(broken, mix, 0.0))) if broken.any() else 0.0
    return LambdaConditionReport(
        positive=bool(np.all(np.isfinite(ll))),
        balance_holds=bool(bal.max() <= tol),
        balance_residual=float(bal.max()),
        reversible=bool(rev.max() <= tol),
        reversible_residual=float(rev.max()),
        mixed_ok=mixed_res <= tol,
        mixed_residual=mixed_res,
        tolerance=tol,
    )


@dataclass(frozen=True)
class StationarityVerdict:
    stationary: bool
    case: str | None  # "a", "b", "c"
    reason: str
    rate_class: RateClass | None = None
    conditions: LambdaConditionReport | None = None

    def to_dict(self) -> dict:
        return {
            "stationary": self.stationary,
            "case": self.case,
            "reason": self.reason,
            "rate_class": None if self.rate_class is None else dict(self.rate_class.__dict__),
            "conditions": None if self.conditions is None else self.conditions.to_dict(),
        }


def stationarity_verdict(b: RateFunction, lam, p: Kernel, *, log_lam=None, truncation: int | None = None) -> StationarityVerdict:
    """Decide which of the three stationary cases applies, if any.

    (a) zero-range rate and lambda balanced; (b) gradient rate, lambda
    balanced and constant across every non-reversible edge; (c) any rate
    with lambda reversible for p.
    """
    cond = lambda_conditions(lam, p, log_lam=log_lam)
    if not cond.positive:
        return StationarityVerdict(False, None, "lambda must be strictly positive at every site", None, cond)
    K = min(b.range.top, CLASSIFY_LEVEL if truncation is None else truncation)
    assumptions = check_assumptions(b, K)
    if not assumptions.passed:
        return StationarityVerdict(False, None, "rate function fails the product-measure compatibility identity", None, cond)
    rc = classify_rate(b, K)
    if rc.name == "ZeroRange" and cond.balance_holds:
        return StationarityVerdict(True, "a", "zero-range rate with balanced lambda", rc, cond)
    if rc.is_gradient and cond.balance_holds and cond.mixed_ok:
        return StationarityVerdict(True, "b", "gradient rate, balanced lambda, constant on irreversible edges", rc, cond)
    if cond.reversible:
        return StationarityVerdict(True, "c", "lambda is reversible for p", rc, cond)
    if rc.name == "General":
        reason = "general rate requires reversible lambda"
    elif not cond.balance_holds:
        reason = "balance equation fails"
    else:
        reason = "lambda differs across an edge with non-reversible flux"
    return StationarityVerdict(False, None, reason, rc, cond)


@dataclass(frozen=True, eq=False)
class LocalFunction:
    """f(eta) = values[eta_A] for a finite support A of sites."""

    sites: tuple
    values: np.ndarray

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        if len(set(sites)) != len(sites):
            raise ValueError("support sites must be distinct")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != len(sites):
            raise ValueError("values must have one axis per support site")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, c: float = 1.0) -> "LocalFunction":
        return cls((), np.array(float(c)))

    @classmethod
    def indicator(cls, sites, pattern, top: int) -> "LocalFunction":
        vals = np.zeros((top + 1,) * len(sites))
        vals[tuple(pattern)] = 1.0
        return cls(tuple(sites), vals)

    @classmethod
    def from_callable(cls, sites, func, top: int) -> "LocalFunction":
        grid = np.indices((top + 1,) * len(sites)).reshape(len(sites), -1).T
        vals = np.array([func(*v) for v in grid], dtype=float).reshape((top + 1,) * len(sites))
        return cls(tuple(sites), vals)


def _shift(arr: np.ndarray, axis: int, delta: int) -> np.ndarray:
    """out[v] = arr[v + delta e_axis], zero where that index leaves the grid."""
    out = np.zeros_like(arr)
    n = arr.shape[axis]
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if delta >= 0:
        src[axis], dst[axis] = slice(delta, n), slice(0, n - delta)
    else:
        src[axis], dst[axis] = slice(0, n + delta), slice(-delta, n)
    out[tuple(dst)] = arr[tuple(src)]
    return out


def _axis_vec(vec: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = len(vec)
    return vec.reshape(shape)


def generator_table(
    sites,
    b: RateFunction,
    lam,
    p: Kernel,
    *,
    log_lam=None,
    top: int | None = None,
    tail_tol: float = 1e-13,
    agree_tol: float = TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """G[v] = int L 1{eta_A = v} d mu for all v in {0..top}^A, two ways.

    Returns (direct, rearranged).  Raises IdentityViolation if they differ by
    more than ``agree_tol`` times C_p sup b, and TruncationInsufficient when a
    marginal puts more than ``tail_tol`` mass above the grid.
    """
    A = tuple(int(s) for s in sites)
    ll = _log_lambda(lam, log_lam)
    M = p.sites
    if len(ll) != M:
        raise ValueError("lambda and kernel must live on the same window")
    L = b.range.top if top is None else min(top, b.range.top)
    laws = [marginal(b, truncation=L, log_lam=float(v)) for v in ll]
    for x, law in enumerate(laws):
        if law.tail_mass >= tail_tol:
            raise TruncationInsufficient(f"site {x} leaves {law.tail_mass:.3g} mass above {L}")
    pm = np.stack([law.on(0, L) for law in laws])
    bt = b.table(L)
    d = len(A)
    pos = {s: i for i, s in enumerate(A)}
    P = np.ones(())
    for i, s in enumerate(A):
        P = P * _axis_vec(pm[s], i, d)
    direct = np.zeros((L + 1,) * d)
    rearranged = np.zeros((L + 1,) * d)

    def pair_rate(x, y):
        """E[b(eta_x, eta_y) | eta_A] as an array over the grid."""
        if x in pos and y in pos:
            ix, iy = pos[x], pos[y]
            idx = np.indices((L + 1,) * d)
            return bt[idx[ix], idx[iy]]
        if x in pos:
            return _axis_vec(bt @ pm[y], pos[x], d)
        if y in pos:
            return _axis_vec(pm[x] @ bt, pos[y], d)
        return np.asarray(pm[x] @ bt @ pm[y])

    lp = p.log_rates
    for x in range(M):
        for y in range(M):
            if x == y:
                continue
            pxy, pyx = p.rates[x, y], p.rates[y, x]
            if pxy == 0.0 and pyx == 0.0:
                continue
            R = pair_rate(x, y)
            if pxy > 0 and (x in pos or y in pos):
                flux = pxy * P * R
                # move eta_x -> eta_x - 1, eta_y -> eta_y + 1 inside the grid
                if x in pos:
                    flux = flux * (_axis_vec(np.arange(L + 1), pos[x], d) >= 1)
                if y in pos:
                    flux = flux * (_axis_vec(np.arange(L + 1), pos[y], d) <= L - 1)
                moved = flux
                if x in pos:
                    moved = _shift(moved, pos[x], +1)
                if y in pos:
                    moved = _shift(moved, pos[y], -1)
                direct = direct + moved - flux
            back = np.exp(lp[y, x] + ll[y] - ll[x]) if pyx > 0 else 0.0
            rearranged = rearranged + P * R * (back - pxy)
    scale = max(p.c_p * float(bt.max()), 1.0)
    gap = float(np.max(np.abs(direct - rearranged))) if direct.size else 0.0
    if gap > agree_tol * scale:
        raise IdentityViolation(f"direct and rearranged generator sums differ by {gap:.3g}")
    return direct, rearranged


def generator_expectation(f: LocalFunction, b: RateFunction, lam, p: Kernel, *, log_lam=None, top: int | None = None) -> float:
    """int L f d mu for a local function, cross-checked against the rearranged form."""
    if not isinstance(f, LocalFunction):
        raise UnsupportedFunction("f must be a LocalFunction with an explicit finite support")
    L = b.range.top if top is None else min(top, b.range.top)
    if f.values.shape != (L + 1,) * len(f.sites):
        raise ValueError(f"f must be tabulated on {{0..{L}}} per support site")
    direct, _ = generator_table(f.sites, b, lam, p, log_lam=log_lam, top=L)
    return float(np.sum(f.values * direct))


@dataclass(frozen=True, eq=False)
class FiniteSystem:
    """The particle system on a finite window with its full state space.

    For countable ranges the space is cut at ``max_particles`` total
    particles, which is closed under the dynamics.
    """

    b: RateFunction
    p: Kernel
    max_particles: int | None = None

    def __post_init__(self):
        M = self.p.sites
        N = self.b.range.top
        if self.b.range.finite:
            states = np.indices((N + 1,) * M).reshape(M, -1).T
        else:
            if self.max_particles is None:
                raise ValueError("countable ranges need max_particles")
            top = min(N, self.max_particles)
            states = np.indices((top + 1,) * M).reshape(M, -1).T
            states = states[states.sum(1) <= self.max_particles]
        if len(states) > 10**6:
            raise ValueError(f"{len(states)} states is too many to enumerate")
        states = np.ascontiguousarray(states, dtype=np.int64)
        base = N + 2
        codes = states @ (base ** np.arange(M))
        order = np.argsort(codes)
        object.__setattr__(self, "states", states[order])
        object.__setattr__(self, "_codes", codes[order])
        object.__setattr__(self, "_base", base)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def index(self, eta) -> np.ndarray:
        eta = np.asarray(eta, dtype=np.int64)
        codes = eta @ (self._base ** np.arange(self.p.sites))
        idx = np.searchsorted(self._codes, codes)
        if np.any(idx >= len(self._codes)) or np.any(self._codes[np.minimum(idx, len(self._codes) - 1)] != codes):
            raise KeyError("configuration outside the state space")
        return idx

    def transitions(self):
        """(source index, target index, rate) over all allowed moves."""
        S = self.states
        src, dst, rate = [], [], []
        lt = self.b.log_table(self.b.range.top)
        for x, y in self.p.edges:
            # b(., N) = 0 on finite ranges; countable ranges stop at the truncation
            ok = (S[:, x] >= 1) & (S[:, y] < self.b.range.top)
            i = np.nonzero(ok)[0]
            r = self.p.rates[x, y] * np.exp(lt[S[i, x], S[i, y]])
            keep = r > 0
            i, r = i[keep], r[keep]
            tgt = S[i].copy()
            tgt[:, x] -= 1
            tgt[:, y] += 1
            src.append(i)
            dst.append(self.index(tgt))
            rate.append(r)
        if not src:
            return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
        return np.concatenate(src), np.concatenate(dst), np.concatenate(rate)

    def generator(self) -> sparse.csr_matrix:
        src, dst, rate = self.transitions()
        n = self.n_states
        Q = sparse.coo_matrix((rate, (src, dst)), shape=(n, n)).tocsr()
        out = np.asarray(Q.sum(axis=1)).ravel()
        return (Q - sparse.diags(out)).tocsr()

    def product_pmf(self, lam, *, log_lam=None) -> np.ndarray:
        """mu_lambda restricted to the window, as a vector over states."""
        ll = _log_lambda(lam, log_lam)
        top = int(self.states.max()) if self.n_states else 0
        logp = np.zeros(self.n_states)
        for x in range(self.p.sites):
            law = marginal(self.b, log_lam=float(ll[x]))
            with np.errstate(divide="ignore"):
                lv = np.log(law.on(0, top))
            logp += lv[self.states[:, x]]
        pmf = np.exp(logp)
        return pmf / pmf.sum()


def quadratic_forms(f, system: FiniteSystem, mu: np.ndarray) -> tuple[float, float]:
    """(Q, R) with Q = -sum mu f Lf and R = 1/2 sum mu sum_moves rate (grad f)^2."""
    fv = np.asarray([f(tuple(s)) for s in system.states], dtype=float) if callable(f) else np.asarray(f, dtype=float)
    src, dst, rate = system.transitions()
    n = system.n_states
    Lf = np.zeros(n)
    grad = fv[dst] - fv[src]
    np.add.at(Lf, src, rate * grad)
    Q = -float(np.dot(mu * fv, Lf))
    R = 0.5 * float(np.sum(mu[src] * rate * grad**2))
    return Q, R


@dataclass(frozen=True)
class OrbitReport:
    orbits: tuple  # tuple of index arrays
    totals: tuple  # particle count of each orbit
    matches_level_sets: bool

    def as_states(self, system: FiniteSystem) -> list:
        return [sorted(tuple(int(v) for v in system.states[i]) for i in orb) for orb in self.orbits]


def orbit_decomposition(system: FiniteSystem, check: bool = True) -> OrbitReport:
    """Communicating classes of the move graph, compared with particle-number sectors."""
    src, dst, rate = system.transitions()
    n = system.n_states
    adj = sparse.coo_matrix((np.ones_like(rate), (src, dst)), shape=(n, n)).tocsr()
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    totals_state = system.states.sum(1)
    orbits, totals = [], []
    for c in range(n_comp):
        members = np.nonzero(labels == c)[0]
        orbits.append(members)
        totals.append(set(totals_state[members].tolist()))
    ok = all(len(t) == 1 for t in totals)
    if ok:
        flat = [next(iter(t)) for t in totals]
        ok = len(set(flat)) == len(flat)
    if ok:
        order = np.argsort(flat)
        orbits = [orbits[i] for i in order]
        totals = tuple(flat[i] for i in order)
    else:
        totals = tuple(tuple(sorted(t)) for t in totals)
    if check and not ok:
        raise IdentityViolation("orbits do not coincide with particle-number level sets")
    return OrbitReport(tuple(orbits), totals, ok)


@dataclass(frozen=True)
class SectorReport:
    particles: int
    size: int
    weight: float
    max_error: float


def _stationary_law(Q: np.ndarray) -> np.ndarray:
    n = Q.shape[0]
    if n == 1:
        return np.ones(1)
    A = Q.T.copy()
    A[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    return np.linalg.solve(A, rhs)


def ergodic_components_finite(system: FiniteSystem, lam, *, log_lam=None, tol: float = TOL) -> tuple[list, float]:
    """Per-sector stationary laws versus mu_lambda conditioned on the sector.

    Returns (sector reports, mixture error) where the mixture error is
    max |mu_lambda - sum_m mu^(m) mu_lambda(sector m)|.
    """
    verdict = stationarity_verdict(system.b, lam, system.p, log_lam=log_lam)
    if not verdict.stationary:
        raise ValueError(f"mu_lambda is not stationary: {verdict.reason}")
    mu = system.product_pmf(lam, log_lam=log_lam)
    Q = system.generator().toarray()
    orbits = orbit_decomposition(system)
    mixture = np.zeros_like(mu)
    reports = []
    for m, orb in zip(orbits.totals, orbits.orbits):
        pi = _stationary_law(Q[np.ix_(orb, orb)])
        w = mu[orb].sum()
        cond = mu[orb] / w
        reports.append(SectorReport(int(m), len(orb), float(w), float(np.max(np.abs(pi - cond)))))
        mixture[orb] = pi * w
    return reports, float(np.max(np.abs(mixture - mu)))


# --- random stationary systems -------------------------------------------------


def random_strongly_connected(rng: np.random.Generator, sites: int, extra: float = 0.4) -> np.ndarray:
    """Random rate matrix whose support contains a random Hamiltonian cycle."""
    perm = rng.permutation(sites)
    rates = np.zeros((sites, sites))
    for i in range(sites):
        rates[perm[i], perm[(i + 1) % sites]] = rng.uniform(0.2, 2.0)
    extra_mask = rng.random((sites, sites)) < extra
    rates += extra_mask * rng.uniform(0.2, 2.0, (sites, sites))
    np.fill_diagonal(rates, 0.0)
    return rates


def _balanced_lambda(rates: np.ndarray) -> np.ndarray:
    """Positive solution of sum_x lam_x p(x,y) = lam_y sum_x p(y,x)."""
    Q = rates - np.diag(rates.sum(1))
    lam = _stationary_law(Q)
    return lam / lam.max()


def _random_circulation(rng: np.random.Generator, sites: int) -> np.ndarray:
    """Sum of random weighted cycles: in-rate equals out-rate at every site."""
    rates = np.zeros((sites, sites))
    for _ in range(rng.integers(2, 4)):
        length = rng.integers(2, sites + 1)
        cyc = rng.permutation(sites)[:length]
        w = rng.uniform(0.2, 2.0)
        for i in range(length):
            rates[cyc[i], cyc[(i + 1) % length]] += w
    perm = rng.permutation(sites)
    w = rng.uniform(0.2, 2.0)
    for i in range(sites):
        rates[perm[i], perm[(i + 1) % sites]] += w
    return rates


def random_stationary_triple(rng: np.random.Generator, case: str, sites: int | None = None):
    """(b, lambda, p) drawn so that mu_lambda is stationary in the given case."""
    M = int(rng.integers(2, 6)) if sites is None else sites
    if case == "a":
        g = np.concatenate([[0.0], np.arange(1, 9) * rng.uniform(0.5, 1.5, 8)])
        g[1:] = np.maximum.accumulate(g[1:])
        b = zero_range(g, truncation=40)
        rates = random_strongly_connected(rng, M)
        lam = _balanced_lambda(rates) * rng.uniform(0.3, 1.0)
    elif case == "b":
        b = partial_exclusion(int(rng.integers(1, 4)), scale=rng.uniform(0.5, 2.0))
        rates = _random_circulation(rng, M)
        lam = np.full(M, rng.uniform(0.3, 3.0))
    elif case == "c":
        # N = 1 misanthrope rates are gradient, which would land in case (b)
        N = int(rng.integers(2, 4))
        b = misanthrope(
            np.concatenate([[0.0], rng.uniform(0.5, 2.0, N)]),
            np.concatenate([rng.uniform(0.5, 2.0, N), [0.0]]),
            rng.uniform(0.5, 2.0, 2 * N + 1),
        )
        lam = rng.uniform(0.3, 3.0, M)
        cond = random_strongly_connected(rng, M)
        cond = cond + cond.T
        rates = cond / lam[:, None]
    else:
        raise ValueError("case must be 'a', 'b' or 'c'")
    return b, lam, Kernel.from_rates(rates)


def spanning_supports(sites: int, max_size: int = 3):
    for r in range(0, min(max_size, sites) + 1):
        yield from itertools.combinations(range(sites), r)
