"""Forward and inverse DFTs of nonnegative lattice PMFs.

Conventions
-----------
A lattice PMF ``f`` lives on ``t_n = n * dt`` for ``n = 0 .. N-1``.  Its
transform is sampled on ``omega_k = k / (N * dt)`` with the forward kernel
``exp(-2 pi i omega t)``::

    F_k = sum_n f(t_n) exp(-2 pi i n k / N)
    f_n = (1/N) sum_k F_k exp(+2 pi i n k / N)

The characteristic function is ``phi(s) = F(-s / (2 pi))``; it is not
computed separately.

If ``P(T >= N dt) = eps``, each forward sample is within ``eps`` of the
exact transform, inverting exact samples gives each probability within
``eps``, and inverting samples that are themselves only known to ``eps``
gives ``2 eps``.  The ``bounds`` module turns these facts into certificates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError

CLAMP_TOLERANCE = 1e-9
BOUND_SLACK = 1e-9
NAIVE_MAX_N = 2**13
# non-power-of-two lengths go through the O(N^2) definition; keep it sane
DIRECT_MAX_N = 2**14
_EPS = np.finfo(float).eps


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def twiddles(N: int, sign: int = -1) -> np.ndarray:
    """``exp(sign * 2 pi i k / N)`` for ``k = 0 .. N-1``."""
    k = np.arange(N)
    return np.exp(sign * 2j * np.pi * k / N)


def _read_only(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LatticePmf:
    """PMF samples ``values[n] = P(T = n * dt)``.

    ``mass_deficit`` is ``P(T >= N * dt)`` when it is known, else ``None``.
    """

    values: np.ndarray
    dt: float = 1.0
    mass_deficit: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValidationError("PMF values must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(v)):
            raise ValidationError("PMF contains non-finite values")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        if v.min() < -CLAMP_TOLERANCE or v.max() > 1 + CLAMP_TOLERANCE:
            raise ValidationError("PMF values must lie in [0, 1]")
        if v.sum() > 1 + 10 * _EPS * v.size + CLAMP_TOLERANCE:
            raise ValidationError(f"PMF mass {v.sum():.17g} exceeds 1")
        if self.mass_deficit is not None and self.mass_deficit < 0:
            raise ValidationError("mass_deficit must be >= 0")
        object.__setattr__(self, "values", _read_only(v))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N) * self.dt

    def mean(self) -> float:
        return float(np.dot(self.times, self.values))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Transform samples on the grid ``omega_k = k / (N * dt)``."""

    values: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1 or v.size < 1:
            raise ValidationError("spectrum must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(v)):
            raise ValidationError("spectrum contains non-finite values")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        object.__setattr__(self, "values", _read_only(v))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def omega(self) -> np.ndarray:
        return np.arange(self.N) / (self.N * self.dt)

    def is_probability_transform(self, slack: float = BOUND_SLACK) -> bool:
        """True if every ``|F_k| <= 1 + slack``, as for any (sub-)PMF."""
        return bool(np.all(np.abs(self.values) <= 1 + slack))


def _direct(x: np.ndarray, sign: int) -> np.ndarray:
    # exact-definition transform, row blocks to bound memory
    N = x.size
    if N > DIRECT_MAX_N:
        raise ValidationError(
            f"N={N} is not a power of two and exceeds the direct-transform "
            f"limit {DIRECT_MAX_N}; use a power of two"
        )
    n = np.arange(N)
    out = np.empty(N, dtype=complex)
    block = max(1, 2**22 // N)
    for start in range(0, N, block):
        k = n[start:start + block]
        # reduce n*k mod N before scaling so the phase stays exact
        phase = np.outer(k, n) % N
        out[start:start + block] = np.exp(sign * 2j * np.pi * phase / N) @ x
    return out


def _forward(x: np.ndarray) -> np.ndarray:
    if is_power_of_two(x.size):
        return np.fft.fft(x)
    return _direct(x.astype(complex), -1)


def _inverse(x: np.ndarray) -> np.ndarray:
    if is_power_of_two(x.size):
        return np.fft.ifft(x)
    return _direct(x, +1) / x.size


def dft_forward(pmf: LatticePmf) -> Spectrum:
    """DFT of a lattice PMF; FFT for power-of-two lengths."""
    return Spectrum(_forward(pmf.values), pmf.dt)


def inverse_raw(spec: Spectrum) -> np.ndarray:
    """Complex inverse DFT, before any real-part extraction or clamping."""
    return _inverse(spec.values)


def extract_real(raw, dt: float, mass_deficit: float | None = None,
                 clamp_tolerance: float = CLAMP_TOLERANCE):
    """Real parts of an inverse transform as a PMF, plus ``max |imag|``.

    Values in ``[-clamp_tolerance, 0)`` are round-off and are set to zero.
    Anything more negative means the spectrum was not the transform of a
    PMF and raises ``NumericalError``.
    """
    raw = np.asarray(raw, dtype=complex)
    if not np.all(np.isfinite(raw)):
        raise NumericalError("inverse transform produced non-finite values")
    re = raw.real.copy()
    residue = float(np.abs(raw.imag).max()) if raw.size else 0.0
    lowest = re.min()
    if lowest < -clamp_tolerance:
        idx = int(re.argmin())
        raise NumericalError(
            f"inverse transform value {lowest:.3e} at n={idx} is below "
            f"-{clamp_tolerance:g}; the spectrum is not a valid PMF transform"
        )
    re[re < 0] = 0.0
    return LatticePmf(re, dt, mass_deficit), residue


def dft_inverse(spec: Spectrum) -> LatticePmf:
    """Inverse DFT to a PMF estimate (real part, clamped)."""
    pmf, _ = extract_real(inverse_raw(spec), spec.dt)
    return pmf


def naive_dft(pmf: LatticePmf) -> Spectrum:
    """O(N^2) DFT by direct summation, ascending ``n``.  Test oracle only."""
    N = pmf.N
    if N > NAIVE_MAX_N:
        raise ValidationError(f"naive_dft is limited to N <= {NAIVE_MAX_N}")
    k = np.arange(N)
    acc = np.zeros(N, dtype=complex)
    for n, f in enumerate(pmf.values):
        acc += f * np.exp(-2j * np.pi * ((n * k) % N) / N)
    return Spectrum(acc, pmf.dt)


def geometric_transform(p_success: float, N: int, dt: float = 1.0) -> Spectrum:
    """Closed-form transform of geometric(p) on ``{1, 2, ...}``.

    ``p z / (1 - (1 - p) z)`` with ``z = exp(-2 pi i k / N)``.
    """
    if not 0 < p_success < 1:
        raise ValidationError(f"geometric p must be in (0, 1), got {p_success!r}")
    if N < 1:
        raise ValidationError("N must be >= 1")
    z = twiddles(N)
    return Spectrum(p_success * z / (1 - (1 - p_success) * z), dt)
