"""Error certificates for inverse-DFT PMF estimates.

Two families:

* a-priori: pick ``N`` so the tail ``P(T >= N dt)`` is at most ``epsilon``,
  using Markov (needs the mean) or Cantelli (needs mean and variance);
* a-posteriori: if the PMF is eventually nonincreasing (or nonincreasing
  at stride ``N/2``), the aliasing error at point ``n < N/2`` is bounded by
  the estimate at ``n + N/2``.

All returned ``N`` from the a-priori rules are powers of two.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ValidationError
from .lattice import MomentSummary
from .transform import LatticePmf

MAX_N = 2**30
METHODS = ("lemma_tail", "theorem1_compound", "markov", "cantelli",
           "monotone_tail", "periodic_tail")

CAVEAT = (
    "Bound covers aliasing/truncation error only. Error from arithmetic on "
    "approximate transforms (products and quotients in the first-passage "
    "formula) and floating-point round-off is excluded."
)


@dataclass(frozen=True)
class BoundCertificate:
    method: str
    epsilon: float
    pointwise_factor: int
    N_used: int
    per_point_bounds: np.ndarray | None = None
    threshold: float | None = None
    notes: str = CAVEAT
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown certificate method {self.method!r}")
        if self.epsilon < 0:
            raise ValidationError("epsilon must be >= 0")
        if self.pointwise_factor not in (1, 2):
            raise ValidationError("pointwise_factor must be 1 or 2")
        if self.per_point_bounds is not None:
            b = np.asarray(self.per_point_bounds, dtype=float)
            if b.size != self.N_used // 2 or (b.size and b.min() < 0):
                raise ValidationError("per_point_bounds must have N/2 nonnegative entries")
            b.setflags(write=False)
            object.__setattr__(self, "per_point_bounds", b)

    def pointwise_bound(self) -> np.ndarray:
        """Error bound for each reported point (N/2 points for tail methods)."""
        if self.per_point_bounds is not None:
            return self.per_point_bounds
        return np.full(self.N_used, self.pointwise_factor * self.epsilon)

    def to_json(self) -> dict:
        out = asdict(self)
        out.pop("per_point_bounds")
        if self.per_point_bounds is not None:
            out["per_point_bounds_max"] = float(self.per_point_bounds.max(initial=0.0))
            out["reported_points"] = int(self.per_point_bounds.size)
        else:
            out["reported_points"] = self.N_used
        return out


def next_pow2(x: float) -> int:
    """Smallest power of two ``>= x`` (1 for ``x <= 1``)."""
    if not math.isfinite(x):
        raise ValidationError(f"cannot round {x!r} to a power of two")
    if x <= 1:
        return 1
    n = 1 << max(0, math.ceil(math.log2(x)) - 1)
    while n < x:
        n <<= 1
    return n


def _checked(N: int) -> int:
    if N > MAX_N:
        raise ValidationError(f"required N={N} exceeds the limit 2^30")
    return N


def _check_eps(epsilon, dt):
    if not 0 < epsilon < 1:
        raise ValidationError(f"epsilon must be in (0, 1), got {epsilon!r}")
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt!r}")


def markov_threshold(moments: MomentSummary, epsilon: float, dt: float = 1.0) -> float:
    return moments.mean / (epsilon * dt)


def cantelli_threshold(moments: MomentSummary, epsilon: float, dt: float = 1.0) -> float:
    k = math.sqrt(1 / epsilon - 1)
    return (k * moments.std + moments.mean) / dt


def n_from_markov(moments: MomentSummary, epsilon: float, dt: float = 1.0) -> int:
    """Smallest power of two with ``E(T) / (N dt) <= epsilon``."""
    _check_eps(epsilon, dt)
    return _checked(next_pow2(markov_threshold(moments, epsilon, dt)))


def n_from_cantelli(moments: MomentSummary, epsilon: float, dt: float = 1.0) -> int:
    """Smallest power of two with ``N dt >= mu + k sigma``, ``1/(1+k^2) = epsilon``."""
    _check_eps(epsilon, dt)
    t = cantelli_threshold(moments, epsilon, dt)
    if moments.variance == 0:
        # point mass at mu: need N dt strictly beyond it
        return _checked(next_pow2(math.floor(t) + 1))
    return _checked(next_pow2(t))


def choose_bound(moments: MomentSummary, epsilon: float, dt: float = 1.0):
    """Pick the cheaper of Markov and Cantelli; ties go to Cantelli.

    Returns ``(N, certificate)``.  The certificate carries factor 2 because
    the transforms fed to the inversion are themselves approximations.
    """
    n_m = n_from_markov(moments, epsilon, dt)
    n_c = n_from_cantelli(moments, epsilon, dt)
    extra = {"markov_N": n_m, "cantelli_N": n_c,
             "markov_threshold": markov_threshold(moments, epsilon, dt),
             "cantelli_threshold": cantelli_threshold(moments, epsilon, dt)}
    if n_c <= n_m:
        method, N, thr = "cantelli", n_c, extra["cantelli_threshold"]
    else:
        method, N, thr = "markov", n_m, extra["markov_threshold"]
    return N, BoundCertificate(method, epsilon, 2, N, threshold=thr, extra=extra)


def tail_bound_at(moments: MomentSummary, N: int, dt: float = 1.0) -> tuple[str, float]:
    """Best of Markov/Cantelli for ``P(T >= N dt)`` at a given ``N``."""
    a = N * dt
    markov = min(1.0, moments.mean / a) if a > 0 else 1.0
    cantelli = 1.0
    gap = a - moments.mean
    if gap > 0:
        cantelli = 0.0 if moments.variance == 0 else 1 / (1 + gap**2 / moments.variance)
    if cantelli <= markov:
        return "cantelli", cantelli
    return "markov", markov


def certificate_for_n(moments: MomentSummary, N: int, dt: float = 1.0,
                      method: str = "auto") -> BoundCertificate:
    """Moment-based certificate for a caller-chosen ``N``."""
    a = N * dt
    if method == "auto":
        method, eps = tail_bound_at(moments, N, dt)
    elif method == "markov":
        eps = min(1.0, moments.mean / a)
    elif method == "cantelli":
        gap = a - moments.mean
        if gap <= 0:
            eps = 1.0
        else:
            eps = 0.0 if moments.variance == 0 else 1 / (1 + gap**2 / moments.variance)
    else:
        raise ValidationError(f"not a moment-based method: {method!r}")
    return BoundCertificate(method, eps, 2, N)


def _half_bounds(pmf_estimate: LatticePmf, M: int) -> np.ndarray:
    N = pmf_estimate.N
    if N % 2:
        raise ValidationError(f"tail certificates need an even N, got {N}")
    if M < 0:
        raise ValidationError("M must be nonnegative")
    if N <= 2 * M:
        raise ValidationError(f"tail certificates need N > 2M (N={N}, M={M})")
    return np.array(pmf_estimate.values[N // 2:], dtype=float)


def monotone_tail_certificate(pmf_estimate: LatticePmf, M: int) -> BoundCertificate:
    """Bound ``|f_n - P(T = n dt)| <= f_{N/2+n}`` for ``n < N/2``.

    Valid when the true PMF is nonincreasing beyond index ``M``; that is the
    caller's claim and is not checked here.  The upper half of the estimate
    is used up as bound material.
    """
    b = _half_bounds(pmf_estimate, M)
    return BoundCertificate("monotone_tail", float(b.max(initial=0.0)), 1,
                            pmf_estimate.N, per_point_bounds=b,
                            extra={"M": M, "hypothesis": "nonincreasing beyond M"})


def periodic_tail_certificate(pmf_estimate: LatticePmf, M: int) -> BoundCertificate:
    """Same bound as the monotone certificate under the weaker hypothesis
    that ``P(T = (n + j N/2) dt)`` is nonincreasing in ``j >= 1`` for every
    ``n < N/2``.
    """
    b = _half_bounds(pmf_estimate, M)
    return BoundCertificate("periodic_tail", float(b.max(initial=0.0)), 1,
                            pmf_estimate.N, per_point_bounds=b,
                            extra={"M": M, "hypothesis": "nonincreasing at stride N/2"})


def suggest_monotone_onset(values, rel_tol: float = 64 * np.finfo(float).eps) -> int:
    """Heuristic onset index past which ``values`` stop increasing.

    Increases smaller than ``rel_tol * max(values)`` are treated as noise.
    The result is a suggestion read off a noisy estimate, not a proof.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0
    tol = rel_tol * v.max()
    rises = np.flatnonzero(np.diff(v) > tol)
    return int(rises[-1] + 1) if rises.size else 0
