"""Catalog of nonnegative lattice distributions.

Supported kinds and their supports (index ``n``, time ``n * dt``):

==================  ===============  =====================================
kind                support          P(T = n)
==================  ===============  =====================================
geometric(p)        1, 2, ...        p (1-p)^(n-1)
poisson(lambda)     0, 1, ...        e^-lambda lambda^n / n!
discrete_weibull    1, 2, ...        q^((n-1)^b) - q^(n^b)
empirical           0 .. len-1       values[n]
==================  ===============  =====================================

Catalog kinds have ``dt = 1``; empirical distributions carry their own.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np
from scipy import stats

from .errors import NumericalError, ValidationError
from .transform import LatticePmf

KINDS = ("geometric", "poisson", "discrete_weibull", "empirical")
_PARAM_NAMES = {
    "geometric": ("p",),
    "poisson": ("lambda",),
    "discrete_weibull": ("q", "b"),
    "empirical": (),
}

MOMENT_TOL = 1e-14
MOMENT_RUN = 10
MOMENT_MAX_TERMS = 10**7
_BLOCK = 4096


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    params: Mapping[str, float] = field(default_factory=dict)
    values: tuple = ()
    dt: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown distribution kind {self.kind!r}")
        params = {k: float(v) for k, v in dict(self.params).items()}
        expected = set(_PARAM_NAMES[self.kind])
        if set(params) != expected:
            raise ValidationError(
                f"{self.kind} expects parameters {sorted(expected)}, got {sorted(params)}"
            )
        object.__setattr__(self, "params", MappingProxyType(params))
        kind = self.kind
        if kind == "geometric" and not 0 < params["p"] < 1:
            raise ValidationError(f"geometric p must be in (0, 1), got {params['p']}")
        if kind == "poisson" and not params["lambda"] > 0:
            raise ValidationError(f"poisson lambda must be > 0, got {params['lambda']}")
        if kind == "discrete_weibull":
            if not 0 < params["q"] < 1:
                raise ValidationError(f"discrete_weibull q must be in (0, 1), got {params['q']}")
            if not params["b"] > 0:
                raise ValidationError(f"discrete_weibull b must be > 0, got {params['b']}")
        if kind == "empirical":
            vals = tuple(float(v) for v in self.values)
            if not vals:
                raise ValidationError("empirical distribution needs at least one value")
            if any(not math.isfinite(v) or v < 0 for v in vals):
                raise ValidationError("empirical values must be finite and nonnegative")
            if math.fsum(vals) > 1 + 1e-12:
                raise ValidationError(f"empirical values sum to {math.fsum(vals)!r} > 1")
            object.__setattr__(self, "values", vals)
            if not (self.dt > 0 and math.isfinite(self.dt)):
                raise ValidationError(f"empirical dt must be positive, got {self.dt!r}")
        else:
            if self.values:
                raise ValidationError(f"{kind} does not take inline values")
            if self.dt != 1.0:
                raise ValidationError(f"{kind} is defined on the unit lattice (dt=1)")
        object.__setattr__(self, "dt", float(self.dt))

    # constructors ---------------------------------------------------------
    @classmethod
    def geometric(cls, p):
        return cls("geometric", {"p": p})

    @classmethod
    def poisson(cls, lam):
        return cls("poisson", {"lambda": lam})

    @classmethod
    def discrete_weibull(cls, q, b):
        return cls("discrete_weibull", {"q": q, "b": b})

    @classmethod
    def empirical(cls, values, dt=1.0):
        return cls("empirical", {}, tuple(values), dt)

    @property
    def key(self):
        return (self.kind, tuple(sorted(self.params.items())), self.values, self.dt)

    def __hash__(self):
        return hash(self.key)

    def __eq__(self, other):
        return isinstance(other, DistributionSpec) and self.key == other.key

    def to_text(self) -> str:
        """Canonical ``kind:key=val,...`` form (round-trips through ``parse``)."""
        if self.kind == "empirical":
            body = "[" + ",".join(repr(v) for v in self.values) + "]"
            return f"empirical:{body}" + (f",dt={self.dt!r}" if self.dt != 1.0 else "")
        return self.kind + ":" + ",".join(f"{k}={v!r}" for k, v in self.params.items())

    def to_json(self) -> dict:
        if self.kind == "empirical":
            return {"kind": "empirical", "params": {"values": list(self.values), "dt": self.dt}}
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_json(cls, obj) -> "DistributionSpec":
        if not isinstance(obj, Mapping) or "kind" not in obj:
            raise ValidationError(f"distribution must be an object with 'kind', got {obj!r}")
        params = dict(obj.get("params", {}))
        if obj["kind"] == "empirical":
            if "values" not in params:
                raise ValidationError("empirical distribution needs params.values")
            return cls.empirical(params["values"], params.get("dt", 1.0))
        try:
            return cls(obj["kind"], params)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"bad distribution parameters {params!r}: {exc}") from None


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    exact: bool = False

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise NumericalError("mean is not finite")
        if self.variance < 0:
            # round-off on near-deterministic variables
            if self.variance > -1e-9 * max(1.0, self.mean**2):
                object.__setattr__(self, "variance", 0.0)
            else:
                raise NumericalError(f"negative variance {self.variance!r}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def second_moment(self) -> float:
        return self.variance + self.mean**2

    def to_json(self) -> dict:
        return {"mean": self.mean, "variance": self.variance, "exact": self.exact}


_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*:\s*(.*)$", re.S)
_INLINE_RE = re.compile(r"^\[(.*)\]\s*(?:,\s*(.*))?$", re.S)


def _kv(text: str) -> dict:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise ValidationError(f"expected key=value, got {part!r}")
        k, v = (s.strip() for s in part.split("=", 1))
        try:
            out[k] = float(v)
        except ValueError:
            raise ValidationError(f"parameter {k!r} is not a number: {v!r}") from None
    return out


def parse_dist_spec(text: str) -> DistributionSpec:
    """Parse ``kind:key=val[,key=val...]``.

    Empirical distributions are written ``empirical:[0.2,0.8]`` or
    ``empirical:@probs.csv`` (one probability per line), optionally followed
    by ``,dt=...``.
    """
    m = _SPEC_RE.match(text)
    if not m:
        raise ValidationError(f"cannot parse distribution spec {text!r}")
    kind, rest = m.group(1), m.group(2).strip()
    if kind != "empirical":
        return DistributionSpec(kind, _kv(rest))
    if rest.startswith("@"):
        path, _, tail = rest[1:].partition(",")
        try:
            lines = Path(path.strip()).read_text().split()
        except OSError as exc:
            raise ValidationError(f"cannot read {path!r}: {exc}") from None
        values, extra = lines, _kv(tail)
    else:
        inline = _INLINE_RE.match(rest)
        if not inline:
            raise ValidationError(f"empirical spec needs [v0,v1,...] or @file, got {rest!r}")
        values = [s for s in inline.group(1).split(",") if s.strip()]
        extra = _kv(inline.group(2) or "")
    if set(extra) - {"dt"}:
        raise ValidationError(f"empirical only accepts dt, got {sorted(extra)}")
    try:
        vals = [float(v) for v in values]
    except ValueError as exc:
        raise ValidationError(f"bad empirical value: {exc}") from None
    return DistributionSpec.empirical(vals, extra.get("dt", 1.0))


# evaluation ---------------------------------------------------------------

def _dweibull(q: float, b: float, n: np.ndarray) -> np.ndarray:
    out = np.zeros(n.shape)
    pos = n >= 1
    lnq = math.log(q)
    a = (n[pos] - 1.0) ** b * lnq
    c = n[pos] ** b * lnq
    # q^a - q^c = q^a (1 - q^(c-a)), avoids cancellation in the tail
    out[pos] = np.exp(a) * -np.expm1(c - a)
    return out


def pmf_array(spec: DistributionSpec, n) -> np.ndarray:
    """Vectorised ``P(T = n * dt)`` for integer indices ``n``."""
    n = np.asarray(n, dtype=np.int64)
    kind, par = spec.kind, spec.params
    if kind == "geometric":
        p = par["p"]
        out = np.zeros(n.shape)
        pos = n >= 1
        out[pos] = p * np.exp((n[pos] - 1) * math.log1p(-p))
        return out
    if kind == "poisson":
        return np.where(n >= 0, stats.poisson.pmf(np.maximum(n, 0), par["lambda"]), 0.0)
    if kind == "discrete_weibull":
        return _dweibull(par["q"], par["b"], n)
    vals = np.asarray(spec.values)
    inside = (n >= 0) & (n < vals.size)
    return np.where(inside, vals[np.clip(n, 0, vals.size - 1)], 0.0)


def pmf_at(spec: DistributionSpec, n: int) -> float:
    return float(pmf_array(spec, np.array([n]))[0])


def tail(spec: DistributionSpec, n: int) -> float:
    """``P(T >= n * dt)``."""
    if n <= 0:
        return 1.0
    kind, par = spec.kind, spec.params
    if kind == "geometric":
        return (1 - par["p"]) ** (n - 1)
    if kind == "poisson":
        return float(stats.poisson.sf(n - 1, par["lambda"]))
    if kind == "discrete_weibull":
        # telescoping sum of the PMF from n onwards
        return par["q"] ** ((n - 1) ** par["b"])
    vals = spec.values
    missing = max(0.0, 1.0 - math.fsum(vals))
    return missing + math.fsum(vals[n:])


def sample_pmf(spec: DistributionSpec, N: int, dt: float | None = None) -> LatticePmf:
    """First ``N`` lattice probabilities; ``mass_deficit = P(T >= N dt)``."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    if dt is not None and not math.isclose(dt, spec.dt, rel_tol=1e-12):
        raise ValidationError(
            f"lattice step mismatch: {spec.kind} lives on dt={spec.dt}, requested dt={dt}"
        )
    values = pmf_array(spec, np.arange(N))
    return LatticePmf(values, spec.dt, tail(spec, N))


def _tail_sum(term, start: int = 0) -> float:
    """Sum ``term(n)`` for ``n >= start`` until the terms are negligible.

    Stops once ``MOMENT_RUN`` consecutive terms fall below
    ``MOMENT_TOL * (partial sum + 1)``.
    """
    acc, streak, n0 = 0.0, 0, start
    idx = np.arange(_BLOCK)
    while n0 - start < MOMENT_MAX_TERMS:
        t = term(np.arange(n0, n0 + _BLOCK, dtype=float))
        partial = acc + np.cumsum(t)
        small = t < MOMENT_TOL * (partial + 1)
        last_big = np.maximum.accumulate(np.where(small, -1, idx))
        # length of the run of small terms ending at each index
        run = np.where(last_big >= 0, idx - last_big, idx + 1 + streak)
        hit = np.flatnonzero(run >= MOMENT_RUN)
        if hit.size:
            return float(partial[hit[0]])
        acc, streak = float(partial[-1]), int(run[-1])
        n0 += _BLOCK
    raise NumericalError(f"moment summation did not converge within {MOMENT_MAX_TERMS} terms")


def moments(spec: DistributionSpec) -> MomentSummary:
    """Mean and variance in time units (index moments scaled by ``dt``)."""
    kind, par = spec.kind, spec.params
    if kind == "geometric":
        p = par["p"]
        return MomentSummary(1 / p, (1 - p) / p**2, exact=True)
    if kind == "poisson":
        lam = par["lambda"]
        return MomentSummary(lam, lam, exact=True)
    if kind == "discrete_weibull":
        q, b = par["q"], par["b"]
        lnq = math.log(q)
        # E[T] = sum_{n>=1} P(T>=n), E[T^2] = sum_{n>=1} (2n-1) P(T>=n)
        surv = lambda n: np.exp((n - 1) ** b * lnq)
        m1 = _tail_sum(surv, start=1)
        m2 = _tail_sum(lambda n: (2 * n - 1) * surv(n), start=1)
        return MomentSummary(m1, m2 - m1 * m1, exact=False)
    vals = np.asarray(spec.values)
    total = vals.sum()
    if abs(total - 1) > 1e-9:
        raise NumericalError(
            f"empirical distribution is defective (mass {total:.12g}); moments undefined"
        )
    n = np.arange(vals.size) * spec.dt
    m1 = float(np.dot(n, vals))
    m2 = float(np.dot(n * n, vals))
    return MomentSummary(m1, m2 - m1 * m1, exact=True)
