"""Core types: occupancy ranges, rate functions, kernels, fugacity profiles
and configurations, plus the elementary particle move.

Rate functions are evaluated in log space (``b.log``) because some of them
(the inverse even factorial rate) underflow double precision long before the
truncation levels we need.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import gammaln

from .errors import MoveForbidden, TruncationExceeded

__all__ = [
    "OccupancyRange",
    "RateFunction",
    "Kernel",
    "FugacityProfile",
    "Configuration",
    "apply_move",
    "move_rate",
    "exclusion",
    "partial_exclusion",
    "linear_zero_range",
    "constant_zero_range",
    "zero_range",
    "inverse_even_factorial",
    "misanthrope",
    "table_rate",
    "custom_rate",
    "is_irreducible",
]


@dataclass(frozen=True)
class OccupancyRange:
    """Either W = {0..N} (``finite=True``) or W = N truncated at level K."""

    level: int
    finite: bool = True

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("occupancy level must be >= 1")

    @classmethod
    def bounded(cls, n_max: int) -> "OccupancyRange":
        return cls(int(n_max), True)

    @classmethod
    def countable(cls, truncation: int) -> "OccupancyRange":
        return cls(int(truncation), False)

    @property
    def top(self) -> int:
        return self.level

    @property
    def size(self) -> int:
        return self.level + 1

    def contains(self, n) -> bool:
        n = np.asarray(n)
        return bool(np.all((n >= 0) & (n <= self.level)))

    def to_dict(self) -> dict:
        return {"finite": self.level} if self.finite else {"countable": self.level}


def _as_int_array(x):
    return np.asarray(x, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class RateFunction:
    """Jump-rate modifier b(n, k) on W x W.

    ``log_func`` must accept integer numpy arrays (broadcastable) and return
    log b, with ``-inf`` encoding a zero rate.  Calling the object returns
    b itself; ``log`` returns log b.  Arguments outside the range raise
    :class:`TruncationExceeded`.
    """

    range: OccupancyRange
    kind: str
    log_func: Callable = field(repr=False)
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        self.validate(min(self.range.top, 64))

    def _check(self, n, k):
        if not (self.range.contains(n) and self.range.contains(k)):
            lo = min(np.min(n), np.min(k))
            if lo < 0:
                raise ValueError("occupancies must be nonnegative")
            raise TruncationExceeded(
                f"b evaluated beyond occupancy level {self.range.top}"
            )

    def log(self, n, k):
        n, k = _as_int_array(n), _as_int_array(k)
        self._check(n, k)
        out = np.asarray(self.log_func(n, k), dtype=float)
        out = np.broadcast_to(out, np.broadcast(n, k).shape)
        # b(0, .) = 0 and b(., N) = 0 are enforced here rather than trusted
        out = np.where(n == 0, -np.inf, out)
        if self.range.finite:
            out = np.where(k == self.range.top, -np.inf, out)
        return out[()] if out.ndim == 0 else out

    def __call__(self, n, k):
        return np.exp(self.log(n, k))

    def log_table(self, top: int | None = None) -> np.ndarray:
        top = self.range.top if top is None else top
        idx = np.arange(top + 1)
        return self.log(idx[:, None], idx[None, :])

    def table(self, top: int | None = None) -> np.ndarray:
        return np.exp(self.log_table(top))

    def validate(self, upto: int | None = None) -> None:
        """Check the positivity pattern required of b on {0..upto}^2."""
        upto = self.range.top if upto is None else min(upto, self.range.top)
        lt = self.log_table(upto)
        if np.any(np.isnan(lt)) or np.any(lt == np.inf):
            raise ValueError(f"rate function {self.kind} is not finite")
        n = np.arange(upto + 1)[:, None]
        k = np.arange(upto + 1)[None, :]
        must_be_positive = (n > 0) & ~(self.range.finite & (k == self.range.top))
        if np.any(~np.isfinite(lt[np.broadcast_to(must_be_positive, lt.shape)])):
            raise ValueError(
                f"rate function {self.kind} vanishes away from b(0,.) and b(.,N)"
            )

    def with_truncation(self, truncation: int) -> "RateFunction":
        if self.range.finite:
            raise ValueError("finite ranges have no truncation level")
        return RateFunction(
            OccupancyRange.countable(truncation), self.kind, self.log_func, self.params
        )

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": _jsonable(self.params)}


def _jsonable(params):
    out = {}
    for key, val in params.items():
        if key.startswith("_"):
            continue
        if isinstance(val, np.ndarray):
            val = val.tolist()
        out[key] = val
    return out


def exclusion() -> RateFunction:
    """b(n, k) = n (1 - k) on W = {0, 1}."""
    return RateFunction(
        OccupancyRange.bounded(1),
        "Exclusion",
        lambda n, k: np.zeros(np.broadcast(n, k).shape),
    )


def partial_exclusion(n_max: int, scale: float = 1.0) -> RateFunction:
    """b(n, k) = scale * n (N - k); reduces to exclusion for N = 1."""
    log_scale = np.log(scale)

    def log_b(n, k):
        with np.errstate(divide="ignore"):
            return log_scale + np.log(n.astype(float)) + np.log((n_max - k).astype(float))

    return RateFunction(
        OccupancyRange.bounded(n_max),
        "PartialExclusion",
        log_b,
        {"N": n_max, "scale": scale},
    )


def linear_zero_range(truncation: int = 200, scale: float = 1.0) -> RateFunction:
    """b(n, k) = scale * n."""
    log_scale = np.log(scale)

    def log_b(n, k):
        with np.errstate(divide="ignore"):
            return log_scale + np.log(n.astype(float)) + 0.0 * k

    return RateFunction(
        OccupancyRange.countable(truncation),
        "LinearZeroRange",
        log_b,
        {"scale": scale},
    )


def constant_zero_range(truncation: int = 200) -> RateFunction:
    """b(n, k) = 1{n >= 1}."""
    return RateFunction(
        OccupancyRange.countable(truncation),
        "ConstantZeroRange",
        lambda n, k: np.zeros(np.broadcast(n, k).shape),
    )


def zero_range(g: Sequence[float], truncation: int | None = None) -> RateFunction:
    """Zero-range rate b(n, k) = g(n) from a table g[0..K] (g[0] is ignored).

    Beyond the table the last value is repeated, so ``truncation`` may exceed
    ``len(g) - 1``.
    """
    g = np.asarray(g, dtype=float)
    truncation = len(g) - 1 if truncation is None else truncation
    with np.errstate(divide="ignore"):
        log_g = np.log(g)

    def log_b(n, k):
        return log_g[np.minimum(n, len(g) - 1)] + 0.0 * k

    return RateFunction(
        OccupancyRange.countable(truncation), "ZeroRange", log_b, {"g": g}
    )


def inverse_even_factorial(truncation: int = 2000) -> RateFunction:
    """b(n, k) = 1{n >= 1} / (2(k+1))!, the deterministic-profile rate."""
    return RateFunction(
        OccupancyRange.countable(truncation),
        "InverseEvenFactorial",
        lambda n, k: -gammaln(2.0 * k + 3.0) + 0.0 * n,
    )


def misanthrope(g: Sequence[float], h: Sequence[float], c: Sequence[float] | None = None) -> RateFunction:
    """b(n, k) = g(n) h(k) c(n + k) on W = {0..N}, N = len(g) - 1.

    Rates of this form always satisfy the product-measure compatibility
    identity.  ``h[N]`` is forced to zero; ``c`` defaults to ones and must
    have length 2N + 1.
    """
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    n_max = len(g) - 1
    if len(h) != n_max + 1:
        raise ValueError("g and h must have equal length")
    c = np.ones(2 * n_max + 1) if c is None else np.asarray(c, dtype=float)
    if len(c) != 2 * n_max + 1:
        raise ValueError(f"c must have length 2N + 1 = {2 * n_max + 1}")
    with np.errstate(divide="ignore"):
        lg, lh, lc = np.log(g), np.log(h), np.log(c)

    def log_b(n, k):
        return lg[n] + lh[k] + lc[n + k]

    return RateFunction(
        OccupancyRange.bounded(n_max),
        "Misanthrope",
        log_b,
        {"g": g, "h": h, "c": c},
    )


def table_rate(values, finite: bool = True) -> RateFunction:
    """Rate function from an explicit (L+1) x (L+1) table of b(n, k)."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError("table must be square")
    level = values.shape[0] - 1
    with np.errstate(divide="ignore"):
        lv = np.log(values)
    rng = OccupancyRange(level, finite)
    return RateFunction(rng, "Table", lambda n, k: lv[n, k], {"values": values})


def custom_rate(func: Callable, occupancy: OccupancyRange, *, log: bool = False, kind: str = "Custom") -> RateFunction:
    """Wrap a scalar or vectorized python function b(n, k) (or log b)."""
    vec = np.vectorize(func, otypes=[float])
    if log:
        log_b = vec
    else:
        def log_b(n, k):
            with np.errstate(divide="ignore"):
                return np.log(vec(n, k))
    return RateFunction(occupancy, kind, log_b)


def is_irreducible(rates: np.ndarray) -> bool:
    """Strong connectivity of the directed graph {x -> y : rates[x, y] > 0}."""
    m = rates.shape[0]
    if m == 1:
        return True
    n_comp, _ = connected_components(csr_matrix(rates > 0), directed=True, connection="strong")
    return n_comp == 1


@dataclass(frozen=True, eq=False)
class Kernel:
    """Finite-range jump rates p(x, y) on the site window {0..M-1}.

    Rates are stored in log space (``-inf`` for absent edges) so that kernels
    whose reverse rates underflow (the deterministic-profile construction)
    stay representable.
    """

    log_rates: np.ndarray = field(repr=False)
    periodic: bool = False
    name: str = "explicit"
    require_irreducible: bool = True

    def __post_init__(self):
        lr = np.array(self.log_rates, dtype=float)
        if lr.ndim != 2 or lr.shape[0] != lr.shape[1]:
            raise ValueError("kernel must be a square matrix")
        if np.any(np.isfinite(np.diag(lr))):
            raise ValueError("p(x, x) must be zero")
        if np.any(np.isnan(lr)) or np.any(lr == np.inf):
            raise ValueError("kernel rates must be finite and nonnegative")
        lr.setflags(write=False)
        object.__setattr__(self, "log_rates", lr)
        rates = np.exp(lr)
        rates.setflags(write=False)
        object.__setattr__(self, "rates", rates)
        if self.require_irreducible and not is_irreducible(np.isfinite(lr)):
            raise ValueError(f"kernel {self.name} is not irreducible on its window")
        object.__setattr__(self, "c_p", float(np.max(rates.sum(0) + rates.sum(1))))
        xs, ys = np.nonzero(np.isfinite(lr))
        dist = np.abs(xs - ys)
        if self.periodic:
            dist = np.minimum(dist, lr.shape[0] - dist)
        object.__setattr__(self, "range_bound", int(dist.max()) if len(dist) else 0)
        object.__setattr__(self, "edges", tuple(zip(xs.tolist(), ys.tolist())))

    @classmethod
    def from_rates(cls, rates, periodic: bool = False, name: str = "explicit", **kw) -> "Kernel":
        rates = np.asarray(rates, dtype=float)
        if np.any(rates < 0):
            raise ValueError("kernel rates must be nonnegative")
        with np.errstate(divide="ignore"):
            return cls(np.log(rates), periodic, name, **kw)

    @classmethod
    def explicit(cls, sites: int, triples, **kw) -> "Kernel":
        rates = np.zeros((sites, sites))
        for x, y, r in triples:
            rates[int(x), int(y)] += float(r)
        return cls.from_rates(rates, **kw)

    @classmethod
    def cycle(cls, sites: int, right: float = 1.0, left: float = 1.0) -> "Kernel":
        rates = np.zeros((sites, sites))
        for i in range(sites):
            rates[i, (i + 1) % sites] += right
            rates[i, (i - 1) % sites] += left
        np.fill_diagonal(rates, 0.0)
        name = "cycle" if right == left else "asymmetric_cycle"
        return cls.from_rates(rates, periodic=True, name=name)

    @classmethod
    def asymmetric_cycle(cls, sites: int, rate: float = 1.0) -> "Kernel":
        """Totally asymmetric nearest-neighbour cycle p(i, i+1) = rate."""
        return cls.cycle(sites, right=rate, left=0.0)

    @classmethod
    def line(cls, sites: int, right: float = 1.0, left: float = 1.0) -> "Kernel":
        rates = np.zeros((sites, sites))
        for i in range(sites - 1):
            rates[i, i + 1] = right
            rates[i + 1, i] = left
        return cls.from_rates(rates, periodic=False, name="line")

    @property
    def sites(self) -> int:
        return self.log_rates.shape[0]

    def __call__(self, x: int, y: int) -> float:
        return float(self.rates[x, y])

    def transpose(self) -> "Kernel":
        return Kernel(self.log_rates.T.copy(), self.periodic, self.name + "^T", self.require_irreducible)

    def to_dict(self) -> dict:
        return {
            "explicit": [[x, y, float(self.rates[x, y])] for x, y in self.edges],
            "sites": self.sites,
            "periodic": self.periodic,
        }


@dataclass(frozen=True, eq=False)
class FugacityProfile:
    """Site fugacities lambda_i, i = 0, 1, ..., generated from a named family.

    Kinds and their parametrisation:

    - ``constant``: lambda_i = c
    - ``geometric``: lambda_i = scale * r**i
    - ``polynomial``: lambda_i = scale * (i + shift)**alpha
    - ``explicit``: a finite list (only usable on windows it covers)
    - ``factorial``: lambda_i = (2 i^2 + 1)!, carried as log-gamma values
    - ``custom``: user function of the site index; the series behaviour
      needed by the ergodicity criteria can be declared in ``divergence``
      with keys ``"sum"`` (sum of lambda_i) and ``"symmetric"``
      (sum of min(lambda_i, 1/lambda_i)), values ``"diverges"`` or
      ``"converges"``.
    """

    kind: str
    params: Mapping = field(default_factory=dict)
    func: Callable | None = field(default=None, repr=False)
    divergence: Mapping | None = None

    @classmethod
    def constant(cls, c: float) -> "FugacityProfile":
        return cls("constant", {"c": float(c)})

    @classmethod
    def geometric(cls, r: float, scale: float = 1.0) -> "FugacityProfile":
        return cls("geometric", {"r": float(r), "scale": float(scale)})

    @classmethod
    def polynomial(cls, alpha: float, scale: float = 1.0, shift: int = 1) -> "FugacityProfile":
        return cls("polynomial", {"alpha": float(alpha), "scale": float(scale), "shift": int(shift)})

    @classmethod
    def explicit(cls, values: Sequence[float], divergence: Mapping | None = None) -> "FugacityProfile":
        return cls("explicit", {"values": [float(v) for v in values]}, divergence=divergence)

    @classmethod
    def factorial(cls, scale: float = 1.0) -> "FugacityProfile":
        return cls("factorial", {"scale": float(scale)})

    @classmethod
    def custom(cls, func: Callable, *, log: bool = False, divergence: Mapping | None = None) -> "FugacityProfile":
        return cls("custom", {"log": log}, func, divergence)

    def log_values(self, n: int) -> np.ndarray:
        i = np.arange(n, dtype=float)
        p = self.params
        with np.errstate(divide="ignore"):
            if self.kind == "constant":
                return np.full(n, np.log(p["c"]))
            if self.kind == "geometric":
                return np.log(p["scale"]) + i * np.log(p["r"])
            if self.kind == "polynomial":
                return np.log(p["scale"]) + p["alpha"] * np.log(i + p["shift"])
            if self.kind == "explicit":
                vals = np.asarray(p["values"], dtype=float)
                if n > len(vals):
                    raise ValueError(f"explicit profile covers only {len(vals)} sites")
                return np.log(vals[:n])
            if self.kind == "factorial":
                return np.log(p["scale"]) + gammaln(2.0 * i * i + 2.0)
            if self.kind == "custom":
                vals = np.array([self.func(j) for j in range(n)], dtype=float)
                return vals if p["log"] else np.log(vals)
        raise ValueError(f"unknown profile kind {self.kind!r}")

    def values(self, n: int) -> np.ndarray:
        return np.exp(self.log_values(n))

    def reciprocal(self, c: float = 1.0) -> "FugacityProfile":
        """The profile c / lambda_i (anti-particle fugacities)."""
        p = self.params
        if self.kind == "constant":
            return FugacityProfile.constant(c / p["c"])
        if self.kind == "geometric":
            return FugacityProfile.geometric(1.0 / p["r"], c / p["scale"])
        if self.kind == "polynomial":
            return FugacityProfile.polynomial(-p["alpha"], c / p["scale"], p["shift"])
        if self.kind == "explicit":
            return FugacityProfile.explicit([c / v for v in p["values"]], self._reciprocal_tags())
        log_c = np.log(c)
        base = self
        return FugacityProfile.custom(
            lambda j: log_c - base.log_values(j + 1)[-1],
            log=True,
            divergence=self._reciprocal_tags(),
        )

    def _reciprocal_tags(self):
        # min(l, 1/l) and min(c/l, l/c) are comparable up to max(c, 1/c),
        # so only the symmetric-series tag survives the map l -> c/l.
        if self.kind == "factorial":
            return {"symmetric": "converges"}
        if self.divergence and "symmetric" in self.divergence:
            return {"symmetric": self.divergence["symmetric"]}
        return None

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "params": dict(self.params)}
        if self.divergence:
            out["divergence"] = dict(self.divergence)
        return out


@dataclass(frozen=True)
class Configuration:
    """Occupation numbers on a finite window of sites."""

    occupancies: tuple
    range: OccupancyRange

    def __post_init__(self):
        occ = tuple(int(v) for v in self.occupancies)
        object.__setattr__(self, "occupancies", occ)
        if any(v < 0 for v in occ):
            raise ValueError("occupancies must be nonnegative")
        if self.range.finite and any(v > self.range.top for v in occ):
            raise ValueError(f"occupancy above N={self.range.top}")

    @classmethod
    def of(cls, values, occupancy: OccupancyRange | int = 1) -> "Configuration":
        if isinstance(occupancy, int):
            occupancy = OccupancyRange.bounded(occupancy)
        return cls(tuple(values), occupancy)

    def __getitem__(self, x: int) -> int:
        return self.occupancies[x]

    def __len__(self) -> int:
        return len(self.occupancies)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.occupancies, dtype=np.int64)

    @property
    def total(self) -> int:
        return sum(self.occupancies)


def apply_move(eta: Configuration, x: int, y: int) -> Configuration:
    """Return eta - delta_x + delta_y, i.e. one particle moved from x to y."""
    m = len(eta)
    if not (0 <= x < m and 0 <= y < m) or x == y:
        raise MoveForbidden(f"invalid sites ({x}, {y}) on a window of {m}")
    if eta[x] < 1:
        raise MoveForbidden(f"site {x} is empty")
    if eta.range.finite and eta[y] >= eta.range.top:
        raise MoveForbidden(f"site {y} is full")
    occ = list(eta.occupancies)
    occ[x] -= 1
    occ[y] += 1
    return Configuration(tuple(occ), eta.range)


def move_rate(b: RateFunction, p: Kernel, eta: Configuration, x: int, y: int) -> float:
    """p(x, y) b(eta_x, eta_y); zero for forbidden moves."""
    if x == y:
        return 0.0
    pxy = p(x, y)
    if pxy == 0.0:
        return 0.0
    return pxy * float(b(eta[x], eta[y]))
