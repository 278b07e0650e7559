"""Continuous-time simulation on finite windows.

``gillespie_run`` produces a single exact trajectory with local rate
updates.  Ensemble questions (is mu_lambda preserved? do the particle and
anti-particle dynamics agree in law?) use ``simulate_ensemble``, which
advances many independent replicas in lock-step with numpy.  Replicas are
processed in fixed-size chunks, chunk c drawing from
``SeedSequence([seed, c])``, so results do not depend on the thread count.
"""
from __future__ import annotations

import csv
import io
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import TruncationExceeded
from .measures import product_measure
from .model import Configuration, Kernel, RateFunction

__all__ = [
    "Trajectory",
    "gillespie_run",
    "simulate_ensemble",
    "run_ensemble",
    "stationarity_mc",
    "duality_mc",
    "empirical_laws",
]

CHUNK = 8192


@dataclass(frozen=True)
class Trajectory:
    start: tuple
    times: np.ndarray
    sources: np.ndarray
    targets: np.ndarray
    end: tuple
    t_end: float

    @property
    def total_jumps(self) -> int:
        return len(self.times)

    def replay(self, b: RateFunction, p: Kernel) -> list:
        """Configurations along the path, checking every event had positive rate."""
        eta = np.array(self.start, dtype=np.int64)
        path = [tuple(eta)]
        last = 0.0
        for t, x, y in zip(self.times, self.sources, self.targets):
            if not t > last:
                raise AssertionError("event times must increase strictly")
            if p.rates[x, y] * float(b(eta[x], eta[y])) <= 0:
                raise AssertionError(f"event {x}->{y} at t={t} had zero rate")
            eta[x] -= 1
            eta[y] += 1
            path.append(tuple(eta))
            last = t
        if tuple(eta) != self.end:
            raise AssertionError("replay does not reproduce the end configuration")
        return path

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "x", "y"])
        for t, x, y in zip(self.times, self.sources, self.targets):
            w.writerow([repr(float(t)), int(x), int(y)])
        return buf.getvalue()


def _rate_table(b: RateFunction) -> np.ndarray:
    return b.table(b.range.top)


def gillespie_run(b: RateFunction, p: Kernel, eta0, t_end: float, seed=None) -> Trajectory:
    """Exact jump-chain simulation up to time t_end."""
    rng = np.random.default_rng(seed)
    eta = np.array(eta0.occupancies if isinstance(eta0, Configuration) else eta0, dtype=np.int64)
    if len(eta) != p.sites:
        raise ValueError("configuration and kernel windows differ")
    bt = _rate_table(b)
    top = b.range.top
    ex = np.array([e[0] for e in p.edges], dtype=np.int64)
    ey = np.array([e[1] for e in p.edges], dtype=np.int64)
    pe = p.rates[ex, ey]
    touching = [np.nonzero((ex == s) | (ey == s))[0] for s in range(p.sites)]
    rates = pe * bt[eta[ex], eta[ey]] if len(ex) else np.zeros(0)
    t = 0.0
    times, src, dst = [], [], []
    while True:
        total = rates.sum()
        if total <= 0:
            break
        t += rng.exponential(1.0 / total)
        if t > t_end:
            break
        e = int(np.searchsorted(np.cumsum(rates), rng.random() * total, side="right"))
        e = min(e, len(rates) - 1)
        x, y = ex[e], ey[e]
        eta[x] -= 1
        eta[y] += 1
        if not b.range.finite and eta[y] >= top:
            raise TruncationExceeded(f"occupancy reached the truncation level {top}")
        times.append(t), src.append(x), dst.append(y)
        for idx in (touching[x], touching[y]):
            rates[idx] = pe[idx] * bt[eta[ex[idx]], eta[ey[idx]]]
    start = tuple(int(v) for v in (eta0.occupancies if isinstance(eta0, Configuration) else eta0))
    return Trajectory(start, np.array(times), np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64), tuple(int(v) for v in eta), float(t_end))


def simulate_ensemble(b: RateFunction, p: Kernel, states: np.ndarray, t_end: float, rng: np.random.Generator) -> np.ndarray:
    """Advance every row of ``states`` independently to time t_end."""
    S = np.array(states, dtype=np.int64, copy=True)
    if t_end <= 0 or len(S) == 0:
        return S
    bt = _rate_table(b)
    top = b.range.top
    ex = np.array([e[0] for e in p.edges], dtype=np.int64)
    ey = np.array([e[1] for e in p.edges], dtype=np.int64)
    if len(ex) == 0:
        return S
    pe = p.rates[ex, ey]
    clock = np.zeros(len(S))
    live = np.arange(len(S))
    while len(live):
        sub = S[live]
        rates = pe[None, :] * bt[sub[:, ex], sub[:, ey]]
        cum = np.cumsum(rates, axis=1)
        total = cum[:, -1]
        with np.errstate(divide="ignore"):
            dt = rng.exponential(size=len(live)) / total
        clock[live] += dt
        go = clock[live] <= t_end
        live = live[go]
        if not len(live):
            break
        cum, total = cum[go], total[go]
        u = rng.random(len(live)) * total
        e = np.minimum((cum <= u[:, None]).sum(axis=1), len(ex) - 1)
        np.subtract.at(S, (live, ex[e]), 1)
        np.add.at(S, (live, ey[e]), 1)
        if not b.range.finite and S[live].max() >= top:
            raise TruncationExceeded(f"occupancy reached the truncation level {top}")
    return S


def run_ensemble(b: RateFunction, p: Kernel, initial, t_end: float, replicas: int, seed: int, threads: int = 1) -> np.ndarray:
    """Final states of ``replicas`` runs; ``initial(rng, n)`` or a fixed configuration."""
    starts = list(range(0, replicas, CHUNK))

    def work(c):
        rng = np.random.default_rng(np.random.SeedSequence([seed, c]))
        n = min(CHUNK, replicas - starts[c])
        if callable(initial):
            init = initial(rng, n)
        else:
            init = np.broadcast_to(np.asarray(initial, dtype=np.int64), (n, p.sites))
        return simulate_ensemble(b, p, init, t_end, rng)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, range(len(starts))))
    else:
        parts = [work(c) for c in range(len(starts))]
    return np.concatenate(parts) if parts else np.zeros((0, p.sites), dtype=np.int64)


def empirical_laws(states: np.ndarray, top: int) -> np.ndarray:
    """(sites, top+1) empirical one-site laws."""
    return np.stack([np.bincount(states[:, x], minlength=top + 1)[: top + 1] for x in range(states.shape[1])]) / len(states)


def stationarity_mc(b: RateFunction, lam, p: Kernel, t: float, replicas: int, seed: int, threads: int = 1) -> dict:
    """Start from mu_lambda, run to time t and compare one-site laws with mu_lambda.

    For every site the report gives the empirical and exact mean occupation,
    the Monte Carlo standard error of the mean, the z-score, and the TV
    distance between empirical and exact one-site laws.
    """
    from .stationarity import stationarity_verdict

    verdict = stationarity_verdict(b, lam, p)
    if not verdict.stationary:
        warnings.warn(f"mu_lambda is not stationary for this system ({verdict.reason})", stacklevel=2)
    if not p.periodic:
        warnings.warn("open window: product stationarity can fail at the edges", stacklevel=2)
    measure = product_measure(b, lam)
    top = measure.truncation

    def init(rng, n):
        return measure.sample(rng, n)

    final = run_ensemble(b, p, init, t, replicas, seed, threads)
    exact = measure.pmf_matrix(top)
    emp = empirical_laws(final, top)
    n = np.arange(top + 1)
    mean = exact @ n
    var = exact @ n**2 - mean**2
    sigma = np.sqrt(var / replicas)
    emp_mean = final.mean(axis=0)
    z = (emp_mean - mean) / np.where(sigma > 0, sigma, np.inf)
    tv = 0.5 * np.abs(emp - exact).sum(axis=1)
    return {
        "stationary_verdict": verdict.case,
        "replicas": replicas,
        "t": t,
        "seed": seed,
        "mean": emp_mean.tolist(),
        "expected_mean": mean.tolist(),
        "sigma": sigma.tolist(),
        "z": z.tolist(),
        "tv": tv.tolist(),
    }


def duality_mc(b: RateFunction, p: Kernel, N: int, eta0, t: float, replicas: int, seed: int, threads: int = 1) -> dict:
    """Law of N - eta(t) under (b, p) versus the law of the dual process from N - eta0."""
    from .duality import dualize

    bd, pd = dualize(b, p, N)
    eta0 = np.asarray(eta0.occupancies if isinstance(eta0, Configuration) else eta0, dtype=np.int64)
    forward = N - run_ensemble(b, p, eta0, t, replicas, seed, threads)
    dual = run_ensemble(bd, pd, N - eta0, t, replicas, seed + 1, threads)
    lf, ld = empirical_laws(forward, N), empirical_laws(dual, N)
    tv = 0.5 * np.abs(lf - ld).sum(axis=1)
    return {"t": t, "replicas": replicas, "seed": seed, "tv": tv.tolist(), "max_tv": float(tv.max()), "law_primal": lf.tolist(), "law_dual": ld.tolist()}
