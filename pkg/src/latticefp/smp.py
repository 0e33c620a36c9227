"""Discrete-time semi-Markov processes and their first-passage times.

The first-passage transform from ``source`` to ``target`` is found bin by
bin.  With ``R`` the states reachable from ``source`` before hitting
``target``, and for every frequency ``omega_k``::

    g_i = sum_{j in R} p_ij h_ij(omega_k) g_j + p_it h_it(omega_k),  i in R

where ``h_ij`` is the transform of the holding time on edge ``i -> j``.
``g_source`` is the first-passage transform.  For the three-state loop
(1 -> 2, 2 -> 1 with prob ``p``, 2 -> 3 with prob ``1 - p``) this reduces to
``(1-p) h12 h23 / (1 - p h12 h21)``, see :func:`eval_loop_formula`.
"""
from __future__ import annotations

import math
import os
import time
from collections import defaultdict, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .errors import NumericalError, ValidationError
from .lattice import DistributionSpec, MomentSummary, moments, sample_pmf
from .transform import (LatticePmf, Spectrum, dft_forward, extract_real,
                        geometric_transform, inverse_raw, is_power_of_two)

MAX_STATES = 64
PROB_TOL = 1e-12
DEFAULT_MAX_N = 2**24
RESIDUE_LIMIT = 1e-8
COND_LIMIT = 1e10
_CHUNK = 8192


@dataclass(frozen=True)
class TransitionEdge:
    source: str
    target: str
    prob: float
    dist: DistributionSpec

    def __post_init__(self):
        if not (0 < self.prob <= 1):
            raise ValidationError(
                f"edge {self.source}->{self.target}: probability {self.prob!r} not in (0, 1]"
            )


@dataclass(frozen=True)
class SmpModel:
    states: tuple
    edges: tuple
    dt: float = 1.0

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        edges = tuple(self.edges)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "edges", edges)
        if len(set(states)) != len(states):
            raise ValidationError("state ids must be unique")
        if not states:
            raise ValidationError("model has no states")
        if len(states) > MAX_STATES:
            raise ValidationError(f"at most {MAX_STATES} states are supported")
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        known = set(states)
        out = defaultdict(list)
        for e in edges:
            for s in (e.source, e.target):
                if s not in known:
                    raise ValidationError(f"edge {e.source}->{e.target} references unknown state {s!r}")
            if e.source == e.target:
                raise ValidationError(f"self-loop on state {e.source!r} is not supported")
            if not math.isclose(e.dist.dt, self.dt, rel_tol=1e-12):
                raise ValidationError(
                    f"edge {e.source}->{e.target}: distribution step {e.dist.dt} "
                    f"differs from model dt {self.dt}"
                )
            out[e.source].append(e.prob)
        for s, probs in out.items():
            total = math.fsum(probs)
            if abs(total - 1) > PROB_TOL:
                raise ValidationError(
                    f"outgoing probabilities of state {s!r} sum to {total:.12g}, not 1"
                )

    def outgoing(self, state: str):
        return [e for e in self.edges if e.source == state]

    def _check_pair(self, source, target):
        for s in (source, target):
            if s not in self.states:
                raise ValidationError(f"unknown state {s!r}")
        if source == target:
            raise ValidationError("source and target must differ")

    def transient_states(self, source: str, target: str) -> list:
        """States reachable from ``source`` without passing through ``target``."""
        self._check_pair(source, target)
        seen, order, queue = {source}, [source], deque([source])
        while queue:
            s = queue.popleft()
            for e in self.outgoing(s):
                if e.target != target and e.target not in seen:
                    seen.add(e.target)
                    order.append(e.target)
                    queue.append(e.target)
        return order

    def can_reach(self, start: str, goal: str) -> bool:
        seen, queue = {start}, deque([start])
        while queue:
            s = queue.popleft()
            if s == goal:
                return True
            for e in self.outgoing(s):
                if e.target not in seen:
                    seen.add(e.target)
                    queue.append(e.target)
        return False


@dataclass
class FirstPassageResult:
    pmf: LatticePmf
    certificate: bounds.BoundCertificate
    moments: MomentSummary | None
    diagnostics: dict
    timing: dict = field(default_factory=dict)

    def error_bounds(self) -> np.ndarray:
        return self.certificate.pointwise_bound()

    @property
    def reported_points(self) -> int:
        return self.error_bounds().size


def edge_transform(dist: DistributionSpec, N: int, dt: float):
    """Transform of a holding-time law on the ``N``-point grid.

    Geometric laws use the closed form; everything else is sampled and
    pushed through the DFT.  Returns ``(spectrum, truncation)``.
    """
    if dist.kind == "geometric":
        return geometric_transform(dist.params["p"], N, dt), 0.0
    pmf = sample_pmf(dist, N, dt)
    return dft_forward(pmf), pmf.mass_deficit or 0.0


def _solve_bins(A, b, threads):
    nbins, S = b.shape
    g = np.empty(nbins, dtype=complex)
    cond = np.empty(nbins)

    def work(lo):
        hi = min(lo + _CHUNK, nbins)
        a, rhs = A[lo:hi], b[lo:hi]
        try:
            x = np.linalg.solve(a, rhs[..., None])[..., 0]
            inv = np.linalg.inv(a)
        except np.linalg.LinAlgError:
            raise NumericalError(
                f"singular first-passage system in bins {lo}..{hi - 1}"
            ) from None
        g[lo:hi] = x[:, 0]
        cond[lo:hi] = np.abs(a).sum(axis=1).max(axis=1) * np.abs(inv).sum(axis=1).max(axis=1)

    starts = range(0, nbins, _CHUNK)
    if threads > 1 and nbins > _CHUNK:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, starts))
    else:
        for lo in starts:
            work(lo)
    return g, cond


def _spectrum_and_diagnostics(model: SmpModel, source, target, N, threads=1):
    R = model.transient_states(source, target)
    if not model.can_reach(source, target):
        raise ValidationError(f"target {target!r} is not reachable from {source!r}")
    index = {s: i for i, s in enumerate(R)}
    S = len(R)
    A = np.zeros((N, S, S), dtype=complex)
    A[:, range(S), range(S)] = 1.0
    b = np.zeros((N, S), dtype=complex)
    cache, truncation = {}, 0.0
    for e in model.edges:
        if e.source not in index:
            continue
        if e.dist not in cache:
            cache[e.dist] = edge_transform(e.dist, N, model.dt)
        h, trunc = cache[e.dist]
        truncation += trunc
        i = index[e.source]
        if e.target == target:
            b[:, i] += e.prob * h.values
        else:
            A[:, i, index[e.target]] -= e.prob * h.values
    g, cond = _solve_bins(A, b, threads)
    diag = {
        "solver_condition_max": float(cond.max()),
        "solver_condition_flag": bool(cond.max() > COND_LIMIT),
        "edge_truncation": truncation,
        "transient_states": R,
    }
    return Spectrum(g, model.dt), diag


def first_passage_spectrum(model: SmpModel, source: str, target: str, N: int,
                           threads: int = 1) -> Spectrum:
    """First-passage transform on the ``N``-point grid, one linear solve per bin."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    spec, _ = _spectrum_and_diagnostics(model, source, target, N, threads)
    return spec


def eval_loop_formula(p: float, f12: Spectrum, f21: Spectrum, f23: Spectrum) -> Spectrum:
    """``(1-p) f12 f23 / (1 - p f12 f21)`` evaluated bin by bin."""
    if not (f12.N == f21.N == f23.N):
        raise ValidationError("spectra must share N")
    if not (f12.dt == f21.dt == f23.dt):
        raise ValidationError("spectra must share dt")
    a, b, c = f12.values, f21.values, f23.values
    denom = 1 - p * a * b
    if np.abs(denom).min() < 1e-14:
        raise NumericalError("loop formula denominator vanishes")
    return Spectrum((1 - p) * a * c / denom, f12.dt)


def _spectral_radius(Q: np.ndarray) -> float:
    if Q.size == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvals(Q)).max())


def first_passage_moments(model: SmpModel, source: str, target: str) -> MomentSummary:
    """Mean and variance of the first-passage time from two linear solves.

    ``m_i = sum_j p_ij mu_ij + sum_{j != t} p_ij m_j``
    ``s_i = sum_j p_ij E[T_ij^2] + sum_{j != t} p_ij (2 mu_ij m_j + s_j)``
    """
    R = model.transient_states(source, target)
    for s in R:
        if not model.can_reach(s, target):
            raise NumericalError(
                f"infinite expected first passage: state {s!r} cannot reach {target!r}"
            )
    index = {s: i for i, s in enumerate(R)}
    S = len(R)
    Q = np.zeros((S, S))
    r1 = np.zeros(S)
    r2 = np.zeros(S)
    C = np.zeros((S, S))  # p_ij * mu_ij into transient states
    exact = True
    for e in model.edges:
        if e.source not in index:
            continue
        mom = moments(e.dist)
        exact &= mom.exact
        i = index[e.source]
        r1[i] += e.prob * mom.mean
        r2[i] += e.prob * mom.second_moment
        if e.target != target:
            j = index[e.target]
            Q[i, j] += e.prob
            C[i, j] += e.prob * mom.mean
    if _spectral_radius(Q) >= 1 - 1e-12:
        raise NumericalError("infinite expected first passage: embedded chain does not escape")
    I = np.eye(S)
    m = np.linalg.solve(I - Q, r1)
    s2 = np.linalg.solve(I - Q, r2 + 2 * C @ m)
    k = index[source]
    return MomentSummary(float(m[k]), float(s2[k] - m[k] ** 2), exact=exact)


def _resolve_threads(threads: int) -> int:
    if threads == 0:
        return os.cpu_count() or 1
    return max(1, threads)


def first_passage_pmf(model: SmpModel, source: str, target: str,
                      epsilon: float = 1e-6, *, n_override: int | None = None,
                      bound: str = "auto", monotone_onset: int | None = None,
                      max_n: int = DEFAULT_MAX_N, threads: int = 1,
                      residue_limit: float = RESIDUE_LIMIT) -> FirstPassageResult:
    """First-passage PMF with an error certificate.

    ``bound`` is one of ``auto``, ``markov``, ``cantelli`` (N chosen from the
    first-passage moments unless ``n_override`` is given) or ``monotone`` /
    ``periodic`` (a-posteriori; needs ``monotone_onset``).
    """
    t0 = time.perf_counter()
    if bound not in ("auto", "markov", "cantelli", "monotone", "periodic"):
        raise ValidationError(f"unknown bound method {bound!r}")
    tail_method = bound in ("monotone", "periodic")
    if tail_method and monotone_onset is None:
        raise ValidationError(f"bound={bound} requires the monotonicity onset index M")
    threads = _resolve_threads(threads)

    try:
        mom = first_passage_moments(model, source, target)
    except NumericalError:
        if not tail_method:
            raise
        mom = None

    cert = None
    if n_override is not None:
        N = int(n_override)
        if N < 1:
            raise ValidationError("N must be >= 1")
    elif tail_method and mom is None:
        raise ValidationError("moments are unavailable; pass an explicit N")
    elif bound == "markov":
        N = bounds.n_from_markov(mom, epsilon, model.dt)
        cert = bounds.BoundCertificate("markov", epsilon, 2, N,
                                       threshold=bounds.markov_threshold(mom, epsilon, model.dt))
    elif bound == "cantelli":
        N = bounds.n_from_cantelli(mom, epsilon, model.dt)
        cert = bounds.BoundCertificate("cantelli", epsilon, 2, N,
                                       threshold=bounds.cantelli_threshold(mom, epsilon, model.dt))
    else:
        N, cert = bounds.choose_bound(mom, epsilon, model.dt)
    if N > max_n:
        raise NumericalError(f"selected N={N} exceeds the ceiling max_N={max_n}")
    t1 = time.perf_counter()

    spectrum, diag = _spectrum_and_diagnostics(model, source, target, N, threads)
    t2 = time.perf_counter()
    raw = inverse_raw(spectrum)
    pmf, residue = extract_real(raw, model.dt)
    t3 = time.perf_counter()
    if residue > residue_limit:
        raise NumericalError(f"imaginary residue {residue:.3e} exceeds {residue_limit:g}")

    if tail_method:
        make = (bounds.monotone_tail_certificate if bound == "monotone"
                else bounds.periodic_tail_certificate)
        cert = make(pmf, monotone_onset)
    elif cert is None:
        method = "auto" if bound == "auto" else bound
        cert = bounds.certificate_for_n(mom, N, model.dt, method)

    dc = spectrum.values[0]
    diag.update({
        "max_imag_residue": residue,
        "min_raw_value": float(raw.real.min()),
        "dc_value": [float(dc.real), float(dc.imag)],
        "fast_path": is_power_of_two(N),
        "suggested_monotone_onset_unverified":
            bounds.suggest_monotone_onset(pmf.values[: max(1, N // 2)]),
    })
    timing = {
        "moments_ms": 1e3 * (t1 - t0),
        "solve_ms": 1e3 * (t2 - t1),
        "transform_ms": 1e3 * (t3 - t2),
        "total_ms": 1e3 * (time.perf_counter() - t0),
    }
    return FirstPassageResult(pmf, cert, mom, diag, timing)
