import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from latticefp.bounds import (CAVEAT, BoundCertificate, cantelli_threshold, certificate_for_n,
                              choose_bound, monotone_tail_certificate, n_from_cantelli,
                              n_from_markov, next_pow2, periodic_tail_certificate,
                              suggest_monotone_onset, tail_bound_at)
from latticefp.errors import ValidationError
from latticefp.lattice import DistributionSpec as D
from latticefp.lattice import MomentSummary, moments, pmf_array, tail
from latticefp.transform import LatticePmf, Spectrum, dft_inverse


def ms(mean, var):
    return MomentSummary(mean, var)


def test_next_pow2():
    assert [next_pow2(x) for x in (0.3, 1, 1.5, 2, 25, 64, 65)] == [1, 1, 2, 2, 32, 64, 128]


# --- Markov ---------------------------------------------------------------

def test_markov_examples():
    assert n_from_markov(ms(1.25, 0), 0.05) == 32
    assert n_from_markov(ms(67.191, 4394.1), 1e-6) == 2**27
    assert n_from_markov(ms(0.5, 0), 0.9) == 1


def test_markov_guard():
    with pytest.raises(ValidationError):
        n_from_markov(ms(1e4, 0), 1e-6)


# --- Cantelli ---------------------------------------------------------------

def test_cantelli_textile():
    m = ms(67.191, 4394.1)
    assert cantelli_threshold(m, 1e-6) == pytest.approx(66356, abs=2)
    assert n_from_cantelli(m, 1e-6) == 2**17


def test_cantelli_degenerate_variance():
    assert n_from_cantelli(ms(10, 0), 0.01) == 16
    # point mass exactly at a power of two needs the next one up
    assert n_from_cantelli(ms(16, 0), 0.01) == 32


def test_cantelli_unit_k():
    assert cantelli_threshold(ms(5, 25), 0.5) == pytest.approx(10)
    assert n_from_cantelli(ms(5, 25), 0.5) == 16


@pytest.mark.parametrize("eps", [0, 1, -0.1, 2])
def test_epsilon_range(eps):
    with pytest.raises(ValidationError):
        n_from_cantelli(ms(1, 1), eps)


# --- choose_bound ---------------------------------------------------------

def test_choose_textile():
    N, cert = choose_bound(ms(67.191, 4394.1), 1e-6)
    assert (N, cert.method, cert.pointwise_factor) == (2**17, "cantelli", 2)
    assert cert.notes == CAVEAT


def test_choose_markov_when_cheaper():
    N, cert = choose_bound(ms(1, 1e6), 0.1)
    assert (N, cert.method) == (16, "markov")
    assert cert.extra["cantelli_N"] == 4096


def test_choose_tie_prefers_cantelli():
    # mean 2, var 0: Markov threshold 2/0.5 = 4 -> 4; Cantelli point mass at 2 -> 4
    N, cert = choose_bound(ms(2, 0), 0.5)
    assert N == 4 and cert.method == "cantelli"


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 1e3), st.floats(0, 1e6), st.floats(1e-6, 0.99))
def test_choose_matches_single_methods_and_is_minimal(mean, var, eps):
    m = ms(mean, var)
    n_m, n_c = n_from_markov(m, eps), n_from_cantelli(m, eps)
    N, cert = choose_bound(m, eps)
    assert N == min(n_m, n_c)
    assert cert.method == ("cantelli" if n_c <= n_m else "markov")
    if n_m > 1:
        assert n_m / 2 < mean / eps
    if n_c > 1 and var > 0:
        assert n_c / 2 < cantelli_threshold(m, eps)


catalog = st.one_of(
    st.floats(0.01, 0.99).map(D.geometric),
    st.floats(0.1, 50).map(D.poisson),
    st.tuples(st.floats(0.05, 0.9), st.floats(0.5, 3)).map(lambda a: D.discrete_weibull(*a)),
)


@settings(max_examples=80, deadline=None)
@given(catalog, st.floats(1e-6, 0.5))
def test_soundness_on_exact_tails(spec, eps):
    m = moments(spec)
    n_m = n_from_markov(m, eps)
    assume(n_m <= 2**26)
    assert tail(spec, n_m) <= eps
    assert tail(spec, n_from_cantelli(m, eps)) <= eps


def test_certificate_for_forced_n():
    m = ms(67.191, 4394.1)
    method, eps = tail_bound_at(m, 2**17)
    assert method == "cantelli" and eps < 1e-6
    assert certificate_for_n(m, 2**17, method="markov").epsilon == pytest.approx(67.191 / 2**17)
    assert certificate_for_n(m, 10, method="cantelli").epsilon == 1.0


def test_certificate_validation():
    with pytest.raises(ValidationError):
        BoundCertificate("guess", 0.1, 1, 4)
    with pytest.raises(ValidationError):
        BoundCertificate("markov", 0.1, 3, 4)
    with pytest.raises(ValidationError):
        BoundCertificate("monotone_tail", 0.1, 1, 4, per_point_bounds=[0.1])


# --- a-posteriori tail certificates ---------------------------------------

def aliasing_error(spec, N, terms=60):
    n = np.arange(N)
    return sum(pmf_array(spec, n + j * N) for j in range(1, terms))


def exact_inverse(spec, N, support=4096):
    """Invert exact transform samples computed by direct summation."""
    t = np.arange(support)
    p = pmf_array(spec, t)
    k = np.arange(N)
    F = np.exp(-2j * np.pi * (np.outer(k, t) % N) / N) @ p
    return dft_inverse(Spectrum(F))


@pytest.mark.parametrize("spec, N", [(D.geometric(0.1), 64), (D.geometric(0.3), 16),
                                     (D.poisson(20), 48), (D.poisson(5), 16)])
def test_monotone_bound_dominates_aliasing(spec, N):
    M = 0 if spec.kind == "geometric" else int(spec.params["lambda"])
    if N <= 2 * M:
        N = 2 * M + 2
    est = exact_inverse(spec, N)
    cert = monotone_tail_certificate(est, M)
    err = est.values[: N // 2] - pmf_array(spec, np.arange(N // 2))
    assert np.all(np.abs(err) <= cert.per_point_bounds + 1e-15)
    assert np.all(np.abs(err - aliasing_error(spec, N)[: N // 2]) < 1e-14)


def test_monotone_geometric_values():
    est = exact_inverse(D.geometric(0.1), 64)
    cert = monotone_tail_certificate(est, 0)
    assert cert.method == "monotone_tail"
    assert cert.per_point_bounds.size == 32
    np.testing.assert_array_equal(cert.per_point_bounds, est.values[32:])


def test_zero_upper_half_gives_zero_bounds():
    pmf = LatticePmf([0.5, 0.3, 0.2, 0, 0, 0])
    for make in (monotone_tail_certificate, periodic_tail_certificate):
        cert = make(pmf, 1)
        assert np.all(cert.per_point_bounds == 0) and cert.epsilon == 0


def test_periodic_equals_monotone_numerically():
    est = exact_inverse(D.geometric(0.2), 32)
    a, b = monotone_tail_certificate(est, 0), periodic_tail_certificate(est, 0)
    np.testing.assert_array_equal(a.per_point_bounds, b.per_point_bounds)
    assert b.method == "periodic_tail"


def test_periodic_bound_on_non_monotone_pmf():
    N, half = 64, 32
    r = np.arange(half)
    hump = np.exp(-((r - 5) ** 2) / 8) + 0.8 * np.exp(-((r - 25) ** 2) / 8)
    blocks = 40
    true = np.concatenate([hump * 0.3**j for j in range(blocks)])
    true /= true.sum()
    # hypothesis of the periodic certificate holds, plain monotonicity does not
    assert np.all(true[half:].reshape(-1, half) <= true[:-half].reshape(-1, half))
    assert np.any(np.diff(true[2 * half:3 * half]) > 0)
    t = np.arange(true.size)
    F = np.exp(-2j * np.pi * (np.outer(np.arange(N), t) % N) / N) @ true
    est = dft_inverse(Spectrum(F))
    cert = periodic_tail_certificate(est, 0)
    err = np.abs(est.values[:half] - true[:half])
    assert np.all(err <= cert.per_point_bounds + 1e-15)
    assert err.max() > 0


def test_tail_certificate_errors():
    with pytest.raises(ValidationError):
        monotone_tail_certificate(LatticePmf([0.2] * 5), 0)
    with pytest.raises(ValidationError):
        monotone_tail_certificate(LatticePmf([0.25] * 4), 2)
    with pytest.raises(ValidationError):
        periodic_tail_certificate(LatticePmf([0.25] * 4), -1)


def test_suggest_onset():
    v = np.array([0.0, 0.1, 0.05, 0.2, 0.15, 0.1, 0.05, 0.0])
    assert suggest_monotone_onset(v) == 3
    assert suggest_monotone_onset([0.5, 0.3, 0.2]) == 0
    noisy = np.array([0.5, 0.3, 0.2, 1e-18, 2e-18])
    assert suggest_monotone_onset(noisy) == 0


def test_certificate_json():
    cert = monotone_tail_certificate(LatticePmf([0.5, 0.3, 0.15, 0.05]), 0)
    doc = cert.to_json()
    assert doc["per_point_bounds_max"] == pytest.approx(0.15)
    assert doc["reported_points"] == 2
    assert math.isclose(cert.pointwise_bound()[1], 0.05)
