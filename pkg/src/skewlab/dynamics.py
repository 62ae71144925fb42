"""Potentials, torus driving dynamics, and rational-approximation utilities.

The potential is a 1-periodic real-analytic function stored as a finite
table of exponentially decaying Fourier coefficients, evaluable on a
complex strip.  Phase sequences are produced by drivers: the d-dimensional
skew shift (last coordinate rotates, the others cascade) and the plain
circle rotation.  Continued fractions support the Diophantine diagnostics
and the min-sum bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .backend import kernels
from .errors import InvalidPotentialError, StripViolationError

#: (sqrt(5) - 1) / 2, the default driving frequency everywhere.
GOLDEN_MEAN = 0.6180339887498949

REALNESS_TOL = 1e-12

_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticPotential:
    """1-periodic real-analytic potential v(x) = sum_k c_k e^{2 pi i k x}.

    ``coeffs`` maps k >= 0 to c_k; negative frequencies are implied by
    realness (c_{-k} = conj(c_k)) and never stored.  ``rho`` parametrizes
    the analyticity strip: complex evaluation is offered for
    |Im z| < rho/5.  ``decay_amp`` is a constant A with
    |c_k| <= A e^{-rho |k|} for every stored k, and ``sup_bound`` bounds
    |v(z)| on the closed strip |Im z| <= rho/5.

    Treat instances as immutable (the coefficient map included).
    """

    coeffs: Mapping[int, complex]
    rho: float
    decay_amp: float
    sup_bound: float

    @classmethod
    def from_coeffs(cls, coeffs: Mapping[int, complex], rho: float,
                    decay_amp: float | None = None) -> "AnalyticPotential":
        """Validate and normalize a coefficient table.

        Accepts tables listing k >= 0 only, or full tables with negative
        keys; in the latter case c_{-k} must equal conj(c_k) to within
        1e-12 or the table is rejected.
        """
        if not coeffs:
            raise InvalidPotentialError("empty coefficient table")
        if rho <= 0:
            raise InvalidPotentialError(f"rho must be positive, got {rho}")
        half: dict[int, complex] = {}
        for k, c in coeffs.items():
            k = int(k)
            half.setdefault(abs(k), complex(0))
        for k in sorted(half):
            pos = coeffs.get(k)
            neg = coeffs.get(-k)
            if k == 0:
                c0 = complex(pos if pos is not None else neg)
                if abs(c0.imag) > REALNESS_TOL:
                    raise InvalidPotentialError(
                        f"coefficient at k=0 must be real, got {c0}")
                half[0] = complex(c0.real, 0.0)
                continue
            if pos is not None and neg is not None:
                if abs(complex(neg) - complex(pos).conjugate()) > REALNESS_TOL:
                    raise InvalidPotentialError(
                        f"coeff(-{k}) != conj(coeff({k})): {neg} vs {pos}")
                half[k] = complex(pos)
            elif pos is not None:
                half[k] = complex(pos)
            else:
                half[k] = complex(neg).conjugate()
        kmax = max(half)
        full = {k: half.get(k, complex(0)) for k in range(kmax + 1)}
        amp = max(abs(c) * math.exp(rho * k) for k, c in full.items())
        if decay_amp is None:
            decay_amp = amp
        elif amp > decay_amp * (1 + 1e-12):
            raise InvalidPotentialError(
                f"decay constant {decay_amp} violated: need >= {amp}")
        sup = sum(2.0 * abs(c) * math.exp(_TWO_PI * k * rho / 5.0)
                  for k, c in full.items() if k > 0)
        sup += abs(full[0])
        return cls(coeffs=full, rho=float(rho), decay_amp=float(decay_amp),
                   sup_bound=float(sup))

    @property
    def k_max(self) -> int:
        return max(self.coeffs)

    def kernel_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(cre, cim) arrays indexed by k = 0..k_max, for the kernels."""
        kmax = self.k_max
        cre = np.zeros(kmax + 1)
        cim = np.zeros(kmax + 1)
        for k, c in self.coeffs.items():
            cre[k] = c.real
            cim[k] = c.imag
        return cre, cim

    def values(self, phases: np.ndarray) -> np.ndarray:
        """v at an array of (already reduced) phases."""
        cre, cim = self.kernel_arrays()
        return kernels().eval_potential(np.asarray(phases, dtype=np.float64),
                                        cre, cim)

    def derivative_values(self, xs: np.ndarray) -> np.ndarray:
        """v'(x) on an array of points (vectorized, backend-independent)."""
        xs = np.asarray(xs, dtype=np.float64)
        out = np.zeros_like(xs)
        for k, c in self.coeffs.items():
            if k == 0:
                continue
            ang = _TWO_PI * k * xs
            out -= 2.0 * _TWO_PI * k * (c.real * np.sin(ang) + c.imag * np.cos(ang))
        return out

    def max_abs_derivative(self, grid: int = 8192) -> float:
        xs = np.arange(grid) / grid
        return float(np.max(np.abs(self.derivative_values(xs))))


def eval_potential(p: AnalyticPotential, x: float) -> float:
    """v(x) with x reduced mod 1; real by construction of the table."""
    if not p.coeffs:
        raise InvalidPotentialError("empty coefficient table")
    xr = x - math.floor(x)
    return float(p.values(np.array([xr]))[0])


def eval_potential_complex(p: AnalyticPotential, z: complex) -> complex:
    """Analytic continuation v(z) for |Im z| < rho/5.

    Reduces to :func:`eval_potential` exactly on the real axis (the
    imaginary part is a true zero there, not a rounding residue).
    """
    if not p.coeffs:
        raise InvalidPotentialError("empty coefficient table")
    z = complex(z)
    if abs(z.imag) >= p.rho / 5.0:
        raise StripViolationError(
            f"|Im z| = {abs(z.imag)} outside the strip |Im z| < rho/5 = {p.rho / 5.0}")
    xr = z.real - math.floor(z.real)
    cre, cim = p.kernel_arrays()
    vre, vim = kernels().eval_potential_complex(
        np.array([xr]), z.imag, cre, cim)
    return complex(vre[0], vim[0])


def cosine_potential(rho: float = 1.0) -> AnalyticPotential:
    """v(x) = cos(2 pi x)."""
    return AnalyticPotential.from_coeffs({1: 0.5 + 0j}, rho=rho)


def zero_potential(rho: float = 1.0) -> AnalyticPotential:
    """v identically 0 (stored as an explicit zero constant term)."""
    return AnalyticPotential.from_coeffs({0: 0j}, rho=rho)


def constant_potential(c: float = 1.0, rho: float = 1.0) -> AnalyticPotential:
    return AnalyticPotential.from_coeffs({0: complex(c)}, rho=rho)


def suggested_kmax(decay_amp: float, rho: float, floor: float = 1e-16) -> int:
    """Smallest K with decay_amp * e^{-rho K} below the noise floor."""
    if decay_amp <= floor:
        return 0
    return math.ceil(math.log(decay_amp / floor) / rho)


# ---------------------------------------------------------------------------
# Potential files
# ---------------------------------------------------------------------------

def load_potential(path: str | Path) -> AnalyticPotential:
    """Parse a key/value potential file.

    Format: one ``rho = <float>`` line and one ``<k> = <re> <im>`` line per
    frequency.  Tables may list k >= 0 only; if negative frequencies appear
    they must be the exact conjugates (strict realness validation).
    """
    rho = None
    coeffs: dict[int, complex] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidPotentialError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        parts = val.split()
        if key == "rho":
            if len(parts) != 1:
                raise InvalidPotentialError(f"{path}:{lineno}: rho takes one value")
            rho = float(parts[0])
            continue
        try:
            k = int(key)
        except ValueError:
            raise InvalidPotentialError(
                f"{path}:{lineno}: unknown key {key!r} (want 'rho' or an integer)")
        if len(parts) != 2:
            raise InvalidPotentialError(
                f"{path}:{lineno}: frequency {k} needs 're im'")
        if k in coeffs:
            raise InvalidPotentialError(f"{path}:{lineno}: duplicate frequency {k}")
        coeffs[k] = complex(float(parts[0]), float(parts[1]))
    if rho is None:
        raise InvalidPotentialError(f"{path}: missing rho")
    return AnalyticPotential.from_coeffs(coeffs, rho=rho)


def save_potential(p: AnalyticPotential, path: str | Path) -> None:
    lines = [f"rho = {p.rho!r}"]
    for k in sorted(p.coeffs):
        c = p.coeffs[k]
        lines.append(f"{k} = {c.real!r} {c.imag!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def named_potential(name: str) -> AnalyticPotential:
    """Resolve 'cosine', 'zero', 'constant' or 'constant:<c>'; else a file path."""
    if name == "cosine":
        return cosine_potential()
    if name == "zero":
        return zero_potential()
    if name == "constant":
        return constant_potential()
    if name.startswith("constant:"):
        return constant_potential(float(name.split(":", 1)[1]))
    return load_potential(name)


# ---------------------------------------------------------------------------
# Driving dynamics
# ---------------------------------------------------------------------------

def _frac(x: float) -> float:
    return x - math.floor(x)


@dataclass(frozen=True)
class SkewShiftParams:
    """Skew shift T(x_1,..,x_d) = (x_1+x_2, .., x_{d-1}+x_d, x_d+omega)."""

    d: int
    omega: float
    x0: tuple[float, ...]

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if len(self.x0) != self.d:
            raise ValueError(f"x0 has length {len(self.x0)}, want d = {self.d}")
        object.__setattr__(self, "omega", _frac(float(self.omega)))
        object.__setattr__(self, "x0", tuple(_frac(float(v)) for v in self.x0))


def _advance_state(x: list[float], omega: float, j: int) -> list[float]:
    """Apply T (or its inverse) |j| times; mirrors the kernel arithmetic."""
    d = len(x)
    x = list(x)
    if j >= 0:
        for _ in range(j):
            for i in range(d - 1):
                x[i] = _frac(x[i] + x[i + 1])
            x[d - 1] = _frac(x[d - 1] + omega)
    else:
        for _ in range(-j):
            x[d - 1] = _frac(x[d - 1] - omega)
            for i in range(d - 2, -1, -1):
                x[i] = _frac(x[i] - x[i + 1])
    return x


class PhaseDriver:
    """Deterministic generator of the phase sequence theta_j.

    Implementations must be pure: ``phases(j0, j1)`` returns
    theta_j = pi_1(T^j(base point)) for j in [j0, j1], and ``shifted(j)``
    returns the driver re-based at T^j of the base point.  Nothing beyond
    determinism is required of the underlying map (measurability of a
    hypothetical abstract base system is not testable here).
    """

    d: int

    def phases(self, j0: int, j1: int) -> np.ndarray:
        raise NotImplementedError

    def shifted(self, j: int) -> "PhaseDriver":
        raise NotImplementedError


@dataclass(frozen=True)
class SkewShiftDriver(PhaseDriver):
    params: SkewShiftParams

    @property
    def d(self) -> int:
        return self.params.d

    def phases(self, j0: int, j1: int) -> np.ndarray:
        return kernels().orbit_phases(
            np.asarray(self.params.x0, dtype=np.float64),
            self.params.omega, j0, j1)

    def shifted(self, j: int) -> "SkewShiftDriver":
        state = _advance_state(list(self.params.x0), self.params.omega, j)
        return SkewShiftDriver(SkewShiftParams(
            d=self.params.d, omega=self.params.omega, x0=tuple(state)))


@dataclass(frozen=True)
class RotationDriver(PhaseDriver):
    """d=1 circle rotation theta_j = x + j*omega mod 1."""

    x: float
    omega: float

    @property
    def d(self) -> int:
        return 1

    def phases(self, j0: int, j1: int) -> np.ndarray:
        return kernels().orbit_phases(np.array([self.x]), self.omega, j0, j1)

    def shifted(self, j: int) -> "RotationDriver":
        state = _advance_state([_frac(self.x)], self.omega, j)
        return RotationDriver(x=state[0], omega=self.omega)


@dataclass(frozen=True)
class SkewShiftFamily:
    """Factory mapping an initial torus point to a driver (used for sampling)."""

    d: int
    omega: float

    def __call__(self, x0) -> SkewShiftDriver:
        return SkewShiftDriver(SkewShiftParams(self.d, self.omega, tuple(x0)))


@dataclass(frozen=True)
class RotationFamily:
    omega: float
    d: int = 1

    def __call__(self, x0) -> RotationDriver:
        (x,) = tuple(x0)
        return RotationDriver(x=x, omega=self.omega)


def skew_orbit(params: SkewShiftParams, n: int) -> np.ndarray:
    """theta_1..theta_n, the first coordinates along the forward orbit."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n == 0:
        return np.empty(0, dtype=np.float64)
    return kernels().orbit_phases(
        np.asarray(params.x0, dtype=np.float64), params.omega, 1, n)


_FIXED_BITS = 128
_FIXED_ONE = 1 << _FIXED_BITS


def _to_fixed(x: float) -> int:
    return round(Fraction(x) * _FIXED_ONE)


def skew_orbit_fixedpoint(params: SkewShiftParams, j: int) -> float:
    """Closed-form theta_j for d <= 2 in 128-bit fixed point.

    Exact integer arithmetic on the closed form x + j y + j(j-1)/2 * omega
    (d=2) or x + j omega (d=1); immune to the catastrophic cancellation a
    float evaluation of C(j,2)*omega would suffer.  Validation oracle for
    the iterative orbit.
    """
    if params.d > 2:
        raise ValueError("closed-form path implemented for d <= 2 only")
    w = _to_fixed(params.omega)
    if params.d == 1:
        num = _to_fixed(params.x0[0]) + j * w
    else:
        x, y = params.x0
        num = _to_fixed(x) + j * _to_fixed(y) + (j * (j - 1) // 2) * w
    return (num % _FIXED_ONE) / _FIXED_ONE


# ---------------------------------------------------------------------------
# Continued fractions and Diophantine diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients and convergents of omega in (0,1).

    Computed by exact integer Euclid on the binary rational that the float
    ``omega`` denotes, so every stored convergent genuinely satisfies
    |omega - p/q| < 1/q^2 in exact arithmetic.
    """

    omega: float
    quotients: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]
    terminating: bool


def continued_fraction(omega: float, depth: int) -> ContinuedFraction:
    if not 0.0 < omega < 1.0:
        raise ValueError(f"omega must lie in (0,1), got {omega}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    rest = Fraction(omega)
    quotients: list[int] = []
    convergents: list[tuple[int, int]] = []
    p_prev, p_cur = 1, 0
    q_prev, q_cur = 0, 1
    terminating = False
    for _ in range(depth):
        if rest == 0:
            terminating = True
            break
        inv = 1 / rest
        a = int(inv)
        rest = inv - a
        quotients.append(a)
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        convergents.append((p_cur, q_cur))
        if rest == 0:
            terminating = True
            break
    return ContinuedFraction(omega=omega, quotients=tuple(quotients),
                             convergents=tuple(convergents),
                             terminating=terminating)


def best_convergent(omega: float, q_cap: int) -> tuple[int, int]:
    """Largest-denominator convergent with q <= q_cap (p/1 fallback)."""
    if q_cap < 1:
        raise ValueError(f"q_cap must be >= 1, got {q_cap}")
    best = (round(omega), 1)
    depth = 1
    while True:
        cf = continued_fraction(omega, depth)
        fitting = [(p, q) for p, q in cf.convergents if q <= q_cap]
        if fitting:
            best = fitting[-1]
        exhausted = cf.terminating and len(cf.quotients) <= depth
        overshot = cf.convergents and cf.convergents[-1][1] > q_cap
        if exhausted or overshot:
            return best
        depth += 8


@dataclass(frozen=True)
class DiophantineReport:
    c_omega_estimate: float
    worst_n: int


def circle_dist(x: float) -> float:
    """Distance from x to the nearest integer."""
    f = x - math.floor(x)
    return min(f, 1.0 - f)


def diophantine_check(cf: ContinuedFraction, alpha: float, n_max: int) -> DiophantineReport:
    """min over 2 <= n <= n_max of ||n omega|| * n * (log n)^alpha."""
    if n_max < 2:
        raise ValueError(f"n_max must be >= 2, got {n_max}")
    if alpha <= 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    omega = cf.omega
    best = math.inf
    worst = 2
    for n in range(2, n_max + 1):
        val = circle_dist(n * omega) * n * math.log(n) ** alpha
        if val < best:
            best = val
            worst = n
    return DiophantineReport(c_omega_estimate=best, worst_n=worst)
