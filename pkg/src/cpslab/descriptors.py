"""JSON system descriptors shared by the command-line tools.

A descriptor names the occupancy range, the rate function, the kernel and
the fugacity profile::

    {"range": {"finite": 1},
     "b": {"kind": "Exclusion", "params": {}},
     "kernel": {"named": "asymmetric_cycle", "sites": 6},
     "lambda": {"kind": "constant", "params": {"c": 1.0}}}

Named descriptors shipped with the package live in ``cpslab/systems``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import model
from .model import FugacityProfile, Kernel, OccupancyRange, RateFunction

__all__ = ["System", "system_from_dict", "load_system", "named_systems", "rate_from_dict", "kernel_from_dict", "profile_from_dict"]


@dataclass(frozen=True, eq=False)
class System:
    b: RateFunction
    kernel: Kernel
    profile: FugacityProfile
    descriptor: dict

    @property
    def sites(self) -> int:
        return self.kernel.sites

    def lam(self) -> np.ndarray:
        return self.profile.values(self.sites)

    def log_lam(self) -> np.ndarray:
        return self.profile.log_values(self.sites)


def _range(d: dict) -> OccupancyRange:
    if "finite" in d:
        return OccupancyRange.bounded(int(d["finite"]))
    if "countable" in d:
        return OccupancyRange.countable(int(d["countable"]))
    raise ValueError('range must be {"finite": N} or {"countable": K}')


def rate_from_dict(d: dict, occupancy: OccupancyRange) -> RateFunction:
    kind = d["kind"]
    p = d.get("params", {})
    N = occupancy.top
    if kind == "Exclusion":
        if occupancy != OccupancyRange.bounded(1):
            raise ValueError("Exclusion needs range {\"finite\": 1}")
        return model.exclusion()
    if kind == "PartialExclusion":
        return model.partial_exclusion(N, p.get("scale", 1.0))
    if kind == "LinearZeroRange":
        return model.linear_zero_range(N, p.get("scale", 1.0))
    if kind == "ConstantZeroRange":
        return model.constant_zero_range(N)
    if kind == "ZeroRange":
        return model.zero_range(p["g"], N)
    if kind == "InverseEvenFactorial":
        return model.inverse_even_factorial(N)
    if kind == "Misanthrope":
        b = model.misanthrope(p["g"], p["h"], p.get("c"))
        if b.range != occupancy:
            raise ValueError("misanthrope tables do not match the declared range")
        return b
    if kind == "Table":
        b = model.table_rate(p["values"], finite=occupancy.finite)
        if b.range != occupancy:
            raise ValueError("table size does not match the declared range")
        return b
    raise ValueError(
        f"unknown rate kind {kind!r}; expected one of Exclusion, PartialExclusion, LinearZeroRange, "
        "ConstantZeroRange, ZeroRange, InverseEvenFactorial, Misanthrope, Table"
    )


def kernel_from_dict(d: dict) -> Kernel:
    if "explicit" in d:
        triples = d["explicit"]
        sites = d.get("sites") or 1 + max(max(int(x), int(y)) for x, y, _ in triples)
        k = Kernel.explicit(sites, triples)
        if d.get("periodic"):
            k = Kernel(k.log_rates, True, k.name)
        return k
    name = d.get("named")
    M = int(d["sites"])
    if name == "cycle":
        return Kernel.cycle(M, d.get("right", 1.0), d.get("left", 1.0))
    if name == "asymmetric_cycle":
        return Kernel.asymmetric_cycle(M, d.get("rate", 1.0))
    if name == "line":
        return Kernel.line(M, d.get("right", 1.0), d.get("left", 1.0))
    if name == "counterexample":
        from .counterexample import build_counterexample

        return build_counterexample(M - 1, d.get("p12", 0.5)).kernel
    raise ValueError('kernel must be {"named": cycle|line|asymmetric_cycle|counterexample, "sites": M} or {"explicit": [[x, y, rate], ...]}')


def profile_from_dict(d: dict) -> FugacityProfile:
    kind = d["kind"]
    p = d.get("params", {})
    if kind == "constant":
        return FugacityProfile.constant(p["c"])
    if kind == "geometric":
        return FugacityProfile.geometric(p["r"], p.get("scale", 1.0))
    if kind == "polynomial":
        return FugacityProfile.polynomial(p["alpha"], p.get("scale", 1.0), p.get("shift", 1))
    if kind == "explicit":
        return FugacityProfile.explicit(p["values"], d.get("divergence"))
    if kind == "factorial":
        return FugacityProfile.factorial(p.get("scale", 1.0))
    raise ValueError("lambda kind must be constant, geometric, polynomial, explicit or factorial")


def system_from_dict(d: dict) -> System:
    occupancy = _range(d["range"])
    b = rate_from_dict(d["b"], occupancy)
    kernel = kernel_from_dict(d["kernel"])
    profile = profile_from_dict(d.get("lambda", {"kind": "constant", "params": {"c": 1.0}}))
    return System(b, kernel, profile, d)


def named_systems() -> list:
    root = resources.files("cpslab") / "systems"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_system(source) -> System:
    """From a dict, a JSON file path, or the name of a shipped descriptor."""
    if isinstance(source, dict):
        return system_from_dict(source)
    path = Path(source)
    if path.exists():
        return system_from_dict(json.loads(path.read_text()))
    name = path.stem if path.suffix == ".json" else str(source)
    res = resources.files("cpslab") / "systems" / f"{name}.json"
    if res.is_file():
        return system_from_dict(json.loads(res.read_text()))
    raise FileNotFoundError(f"no descriptor file {source!r} and no shipped system of that name ({', '.join(named_systems())})")
