import math

from latticefp.smp import SmpModel, TransitionEdge


def loop_model(p, d12, d21, d23):
    """Three-state loop: 1 -> 2, then back to 1 with prob p or on to 3."""
    return SmpModel(
        ("1", "2", "3"),
        (
            TransitionEdge("1", "2", 1.0, d12),
            TransitionEdge("2", "1", p, d21),
            TransitionEdge("2", "3", 1 - p, d23),
        ),
    )


def brute_moments(q, b, terms=200_000):
    """Mean and variance of a discrete Weibull by direct summation of n * pmf(n)."""
    m1, m2 = [], []
    for n in range(1, terms):
        p = q ** ((n - 1) ** b) - q ** (n**b)
        m1.append(n * p)
        m2.append(n * n * p)
    mean = math.fsum(m1)
    return mean, math.fsum(m2) - mean**2
