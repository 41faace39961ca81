"""Periodic trajectories as truncated Fourier series in a rotating frame.

A loop with base period ``T`` on a ``2N``-dimensional state space is stored
as real coefficient vectors ``c_m`` for mode indices ``|m| <= n_max``; the
represented function is ``u(t) = sum_m exp((2*pi/T)*m*t*J) c_m`` with
``J = [[0, -I_N], [I_N, 0]]``.  Identifying the state ``(p, q)`` with the
complex vector ``p + i q`` turns ``J`` into multiplication by ``i`` and the
basis into plain complex harmonics, so synthesis/analysis are ordinary
discrete Fourier transforms.

Sign convention (asserted by test, used everywhere without re-derivation):
the quadratic form ``Q(u) = (1/2) * int_0^T J u'. u dt`` is diagonal with
per-mode value ``-pi * m * |c_m|^2``; hence the positive subspace consists
of the negative modes, the negative subspace of the positive modes, and the
constants are the null directions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import AliasingError, ConfigurationError

# coefficients smaller than this (relative to 1 + h_half) are treated as
# exactly zero by mode-support queries, so numerical noise cannot corrupt
# gcd-based period arithmetic
SUPPORT_EPS = 1e-13

# oversampling factor for the dense-grid sup norm (a lower bound of the sup)
SUP_OVERSAMPLE = 8


@dataclass(frozen=True)
class SystemSpec:
    """Base period and half state dimension of the phase space."""

    period_T: float
    half_dim_N: int

    def __post_init__(self):
        if not (self.period_T > 0):
            raise ConfigurationError(f"period_T must be positive, got {self.period_T}")
        if self.half_dim_N < 1:
            raise ConfigurationError(f"half_dim_N must be >= 1, got {self.half_dim_N}")

    @property
    def dim(self) -> int:
        return 2 * self.half_dim_N

    @property
    def omega(self) -> float:
        """Fundamental angular frequency 2*pi/T."""
        return 2.0 * np.pi / self.period_T


@dataclass(frozen=True, eq=False)
class SpectralLoop:
    """Trajectory as rotating-frame Fourier coefficients.

    ``coeffs`` has shape ``(2*n_max+1, 2N)``; row ``i`` holds mode
    ``m = i - n_max``.  Instances are immutable; arithmetic returns new loops.
    """

    system: SystemSpec
    n_max: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (2 * self.n_max + 1, self.system.dim):
            raise ConfigurationError(
                f"coefficient array must be shape {(2*self.n_max+1, self.system.dim)}, "
                f"got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ConfigurationError("non-finite loop coefficient")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def coeff(self, m: int) -> np.ndarray:
        if abs(m) > self.n_max:
            return np.zeros(self.system.dim)
        return self.coeffs[m + self.n_max]

    # loops form a vector space; the solver leans on this
    def __add__(self, other: "SpectralLoop") -> "SpectralLoop":
        _check_compatible(self, other)
        return SpectralLoop(self.system, self.n_max, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralLoop") -> "SpectralLoop":
        _check_compatible(self, other)
        return SpectralLoop(self.system, self.n_max, self.coeffs - other.coeffs)

    def __mul__(self, s: float) -> "SpectralLoop":
        return SpectralLoop(self.system, self.n_max, self.coeffs * float(s))

    __rmul__ = __mul__


@dataclass(frozen=True)
class SplitLoop:
    """Sign decomposition of a loop under the quadratic form.

    ``plus`` holds the negative modes (positive form values), ``minus`` the
    positive modes (negative form values), ``zero`` the constant component.
    Recombination is exact: the three parts partition the mode set.
    """

    plus: SpectralLoop
    minus: SpectralLoop
    zero: np.ndarray


@dataclass(frozen=True)
class TimeGrid:
    """Uniform collocation grid ``t_j = j*T/M`` over one base period."""

    system: SystemSpec
    sample_count_M: int

    def __post_init__(self):
        if self.sample_count_M < 1:
            raise ConfigurationError("sample_count_M must be positive")

    @property
    def times(self) -> np.ndarray:
        M = self.sample_count_M
        return np.arange(M) * (self.system.period_T / M)


@dataclass(frozen=True)
class LoopNorms:
    h_half: float
    l2: float
    sup: float


def _check_compatible(a: SpectralLoop, b: SpectralLoop) -> None:
    if a.system != b.system or a.n_max != b.n_max:
        raise ConfigurationError("loops live in different truncated spaces")


def zero_loop(system: SystemSpec, n_max: int) -> SpectralLoop:
    return SpectralLoop(system, n_max, np.zeros((2 * n_max + 1, system.dim)))


def loop_from_modes(system: SystemSpec, n_max: int, modes: dict) -> SpectralLoop:
    """Build a loop from a ``{mode index: coefficient vector}`` mapping."""
    c = np.zeros((2 * n_max + 1, system.dim))
    for m, vec in modes.items():
        if abs(m) > n_max:
            raise ConfigurationError(f"mode {m} outside |m| <= {n_max}")
        c[m + n_max] = np.asarray(vec, dtype=float)
    return SpectralLoop(system, n_max, c)


def _to_complex(coeffs: np.ndarray, N: int) -> np.ndarray:
    return coeffs[:, :N] + 1j * coeffs[:, N:]


def _from_complex(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag], axis=1)


def _phase_matrix(modes: np.ndarray, times: np.ndarray, T: float) -> np.ndarray:
    """exp(i * (2*pi/T) * m * t) with shape (len(times), len(modes))."""
    ang = (2.0 * np.pi / T) * np.outer(times, modes)
    return np.exp(1j * ang)


def synthesize(loop: SpectralLoop, grid: TimeGrid) -> np.ndarray:
    """Sample the loop on a grid; returns shape ``(M, 2N)``.

    Inverse discrete Fourier transform under the complex identification of
    the state space.
    """
    if grid.system.period_T != loop.system.period_T:
        raise ConfigurationError(
            f"grid period {grid.system.period_T} != loop period {loop.system.period_T}")
    z = _to_complex(loop.coeffs, loop.system.half_dim_N)
    E = _phase_matrix(loop.modes, grid.times, loop.system.period_T)
    return _from_complex(E @ z)


def analyze(samples: np.ndarray, n_max: int, system: SystemSpec) -> SpectralLoop:
    """Project uniform samples onto modes ``|m| <= n_max``.

    Exact inverse of :func:`synthesize` for band-limited input whenever
    ``M >= 2*n_max + 1``.
    """
    samples = np.asarray(samples, dtype=float)
    M = samples.shape[0]
    if M < 2 * n_max + 1:
        raise AliasingError(
            f"need M >= {2*n_max+1} samples to resolve n_max={n_max}, got {M}")
    times = np.arange(M) * (system.period_T / M)
    modes = np.arange(-n_max, n_max + 1)
    E = _phase_matrix(modes, times, system.period_T)
    z = (E.conj().T @ _to_complex(samples, system.half_dim_N)) / M
    return SpectralLoop(system, n_max, _from_complex(z))


def quadratic_form(loop: SpectralLoop) -> float:
    """Closed form of ``(1/2) * int_0^T J u'. u dt``: ``-pi * sum m |c_m|^2``."""
    m = loop.modes.astype(float)
    return float(-np.pi * np.sum(m * np.sum(loop.coeffs ** 2, axis=1)))


def split(loop: SpectralLoop) -> SplitLoop:
    """Decompose by per-mode sign of the quadratic form."""
    n = loop.n_max
    cp = np.array(loop.coeffs)
    cm = np.array(loop.coeffs)
    cp[n:, :] = 0.0          # plus part keeps modes m < 0
    cm[: n + 1, :] = 0.0     # minus part keeps modes m > 0
    return SplitLoop(
        plus=SpectralLoop(loop.system, n, cp),
        minus=SpectralLoop(loop.system, n, cm),
        zero=np.array(loop.coeffs[n]),
    )


def h_half_norm(loop: SpectralLoop) -> float:
    """sqrt(sum_{m != 0} pi |m| |c_m|^2 + |c_0|^2) — the split-form norm."""
    m = np.abs(loop.modes).astype(float)
    w = np.pi * m
    w[loop.n_max] = 1.0
    return float(np.sqrt(np.sum(w * np.sum(loop.coeffs ** 2, axis=1))))


def l2_norm(loop: SpectralLoop) -> float:
    return float(np.sqrt(loop.system.period_T * np.sum(loop.coeffs ** 2)))


def sup_norm(loop: SpectralLoop) -> float:
    """Max pointwise euclidean norm on a dense grid (lower bound of the sup)."""
    M = max(SUP_OVERSAMPLE * (2 * loop.n_max + 1), 64)
    u = synthesize(loop, TimeGrid(loop.system, M))
    return float(np.max(np.sqrt(np.sum(u ** 2, axis=1))))


def norms(loop: SpectralLoop) -> LoopNorms:
    return LoopNorms(h_half=h_half_norm(loop), l2=l2_norm(loop), sup=sup_norm(loop))


def time_shift(loop: SpectralLoop, s: float) -> SpectralLoop:
    """Loop representing ``t -> u(t+s)``: mode ``m`` rotated by ``(2*pi/T)*m*s``."""
    z = _to_complex(loop.coeffs, loop.system.half_dim_N)
    phase = np.exp(1j * loop.system.omega * s * loop.modes.astype(float))
    return SpectralLoop(loop.system, loop.n_max, _from_complex(phase[:, None] * z))


def time_reflect(loop: SpectralLoop) -> SpectralLoop:
    """Loop representing ``t -> u(-t)``: mode ``m`` takes the coefficient of ``-m``."""
    return SpectralLoop(loop.system, loop.n_max, loop.coeffs[::-1])


def rescale_to_long_period(loop: SpectralLoop, k: int) -> SpectralLoop:
    """Reinterpret ``u`` over period ``T`` as ``x(t) = u(t/k)`` over ``k*T``.

    Coefficient vectors are unchanged; mode ``m`` of ``u`` becomes mode ``m``
    of ``x`` relative to the long period.
    """
    if int(k) != k or k < 1:
        raise ConfigurationError(f"k must be a positive integer, got {k}")
    long_system = SystemSpec(loop.system.period_T * int(k), loop.system.half_dim_N)
    return SpectralLoop(long_system, loop.n_max, loop.coeffs)


def mode_support(loop: SpectralLoop, tol: float | None = None) -> list[int]:
    """Mode indices with coefficient norm above the significance threshold."""
    if tol is None:
        tol = SUPPORT_EPS * (1.0 + h_half_norm(loop))
    mags = np.sqrt(np.sum(loop.coeffs ** 2, axis=1))
    return [int(m) for m, g in zip(loop.modes, mags) if g > tol]


def pad_to_order(loop: SpectralLoop, n_max: int) -> SpectralLoop:
    """Embed into a larger truncation order by zero-padding (or truncate)."""
    if n_max == loop.n_max:
        return loop
    c = np.zeros((2 * n_max + 1, loop.system.dim))
    lo = min(n_max, loop.n_max)
    c[n_max - lo: n_max + lo + 1] = loop.coeffs[loop.n_max - lo: loop.n_max + lo + 1]
    return SpectralLoop(loop.system, n_max, c)


# -- serialization ----------------------------------------------------------
# plain JSON with shortest round-trip float repr (>= 17 significant digits)

def loop_to_dict(loop: SpectralLoop) -> dict:
    return {
        "T": loop.system.period_T,
        "N": loop.system.half_dim_N,
        "n_max": loop.n_max,
        "coeffs": [[int(m)] + [float(v) for v in loop.coeff(m)] for m in loop.modes],
    }


def loop_from_dict(d: dict) -> SpectralLoop:
    system = SystemSpec(float(d["T"]), int(d["N"]))
    n_max = int(d["n_max"])
    modes = {int(row[0]): np.array(row[1:], dtype=float) for row in d["coeffs"]}
    return loop_from_modes(system, n_max, modes)


def loop_to_json(loop: SpectralLoop) -> str:
    return json.dumps(loop_to_dict(loop))


def loop_from_json(text: str) -> SpectralLoop:
    return loop_from_dict(json.loads(text))
