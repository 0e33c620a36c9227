"""Monte Carlo first-passage sampler, used as an independent check.

Runs are processed in fixed-size blocks, each with its own child seed from
``numpy.random.SeedSequence(seed)``, so output depends only on ``seed`` and
``runs`` and not on the thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .lattice import DistributionSpec, pmf_array, tail
from .smp import SmpModel
from .transform import LatticePmf

MAX_STEPS = 10**7
BLOCK_RUNS = 1 << 16
_TABLE_TAIL = 1e-17


@dataclass(frozen=True)
class SimulationResult:
    pmf: LatticePmf
    counts: np.ndarray
    runs: int
    censored: int
    mean: float


class _Sampler:
    """Inverse-CDF holding-time draws (lattice index units)."""

    def __init__(self, dist: DistributionSpec):
        self.dist = dist
        if dist.kind in ("geometric", "discrete_weibull"):
            self.table = None
        else:
            if dist.kind == "empirical":
                probs = np.asarray(dist.values)
            else:
                n = 1
                while tail(dist, n) > _TABLE_TAIL:
                    n *= 2
                probs = pmf_array(dist, np.arange(n))
            self.table = np.cumsum(probs)

    def draw(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms in [0, 1) to indices; -1 marks a defective draw."""
        d = self.dist
        if d.kind == "geometric":
            x = np.log1p(-u) / math.log1p(-d.params["p"])
            return np.maximum(1, np.ceil(x)).astype(np.int64)
        if d.kind == "discrete_weibull":
            # P(T > n) = q^(n^b)  =>  T = ceil((log(1-u)/log q)^(1/b))
            x = (np.log1p(-u) / math.log(d.params["q"])) ** (1 / d.params["b"])
            return np.maximum(1, np.ceil(x)).astype(np.int64)
        idx = np.searchsorted(self.table, u, side="right")
        return np.where(idx < self.table.size, idx, -1)


def _plan(model: SmpModel, source: str, target: str):
    R = model.transient_states(source, target)
    index = {s: i for i, s in enumerate(R)}
    samplers = {}
    plan = []
    for s in R:
        edges = model.outgoing(s)
        cum = np.cumsum([e.prob for e in edges])
        # -2 marks arrival at the target
        nxt = [-2 if e.target == target else index[e.target] for e in edges]
        smp = [samplers.setdefault(e.dist, _Sampler(e.dist)) for e in edges]
        plan.append((cum, np.array(nxt), smp))
    return index[source], plan


def _run_block(start, plan, runs, seed_seq, max_steps):
    rng = np.random.default_rng(seed_seq)
    state = np.full(runs, start, dtype=np.int64)
    clock = np.zeros(runs, dtype=np.int64)
    alive = np.arange(runs)
    done_t = []
    censored = 0
    steps = 0
    while alive.size:
        if steps >= max_steps:
            censored += alive.size
            break
        steps += 1
        cur = state[alive]
        new_state = np.empty(alive.size, dtype=np.int64)
        for s, (cum, nxt, smp) in enumerate(plan):
            sel = np.flatnonzero(cur == s)
            if not sel.size:
                continue
            if cum.size == 0:
                new_state[sel] = -1
                continue
            pick = np.searchsorted(cum, rng.random(sel.size) * cum[-1], side="right")
            pick = np.minimum(pick, cum.size - 1)
            new_state[sel] = nxt[pick]
            u = rng.random(sel.size)
            hold = np.empty(sel.size, dtype=np.int64)
            for e in np.unique(pick):
                m = pick == e
                hold[m] = smp[e].draw(u[m])
            bad = hold < 0
            new_state[sel[bad]] = -1
            clock[alive[sel]] += np.maximum(hold, 0)
        hit = new_state == -2
        lost = new_state == -1
        done_t.append(clock[alive[hit]])
        censored += int(lost.sum())
        keep = ~(hit | lost)
        state[alive[keep]] = new_state[keep]
        alive = alive[keep]
    times = np.concatenate(done_t) if done_t else np.zeros(0, dtype=np.int64)
    return times, censored


def simulate_first_passage(model: SmpModel, source: str, target: str, runs: int,
                           seed: int, *, threads: int = 1,
                           max_steps: int = MAX_STEPS) -> SimulationResult:
    """Empirical first-passage PMF from ``runs`` simulated trajectories.

    Trajectories that exceed ``max_steps`` jumps or get stuck in a state
    that cannot reach the target are counted in ``censored`` and make up
    the PMF's ``mass_deficit``.
    """
    if not isinstance(runs, (int, np.integer)) or runs < 1:
        raise ValidationError(f"runs must be a positive integer, got {runs!r}")
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or seed < 0:
        raise ValidationError(f"seed must be a nonnegative integer, got {seed!r}")
    start, plan = _plan(model, source, target)
    sizes = [min(BLOCK_RUNS, runs - lo) for lo in range(0, runs, BLOCK_RUNS)]
    children = np.random.SeedSequence(int(seed)).spawn(len(sizes))
    jobs = list(zip(sizes, children))

    def work(job):
        return _run_block(start, plan, job[0], job[1], max_steps)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]
    times = np.concatenate([r[0] for r in results])
    censored = sum(r[1] for r in results)
    counts = np.bincount(times, minlength=1) if times.size else np.zeros(1, dtype=np.int64)
    pmf = LatticePmf(counts / runs, model.dt, censored / runs)
    mean = float(times.mean() * model.dt) if times.size else math.nan
    return SimulationResult(pmf, counts, runs, censored, mean)
