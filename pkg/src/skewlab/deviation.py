"""Exponential-sum estimates and large-deviation measurements.

Quadratic Weyl sums S_N = sum_j e^{2 pi i k (j y + j(j-1)/2 omega)}, the
van der Corput differencing inequality, the min-sum bound for rotations,
and empirical statistics of u_n(x) = (1/n) log ||M_n(x)||: Fourier decay of
the x-profile and the measure of the set where u_n strays from its mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import streams
from .backend import kernels
from .dynamics import (AnalyticPotential, SkewShiftDriver, SkewShiftParams,
                       best_convergent)
from .errors import CocycleNumericError, ThresholdUndefinedError
from .parallel import indexed_map

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Weyl sums and the differencing / min-sum inequalities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeylSumRecord:
    k: int
    N: int
    y: float
    omega: float
    value: complex

    @property
    def modulus(self) -> float:
        return abs(self.value)


def weyl_sum(k: int, y: float, omega: float, N: int) -> WeylSumRecord:
    """S_N = sum_{j=1}^{N} e^{2 pi i k (j y + j(j-1)/2 omega)} directly."""
    if k == 0:
        raise ValueError("k must be nonzero")
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    re, im = kernels().weyl_sum(k, y, omega, N)
    return WeylSumRecord(k=k, N=N, y=y, omega=omega, value=complex(re, im))


def _phase_table(k: int, y: float, omega: float, N: int) -> np.ndarray:
    """f(j) = k(j y + j(j-1)/2 omega) mod 1 for j = 1..N, built by the same
    incremental second-difference recurrence the direct sum uses."""
    f = np.empty(N)
    kw = (k * omega) % 1.0
    t = (k * y) % 1.0
    d = (t + kw) % 1.0
    f[0] = t
    for j in range(1, N):
        t = (t + d) % 1.0
        d = (d + kw) % 1.0
        f[j] = t
    return f


@dataclass(frozen=True)
class DifferenceBoundRecord:
    lhs: float
    rhs: float
    holds: bool
    k: int
    N: int
    y: float
    omega: float
    order: int


def weyl_difference_bound(k: int, y: float, omega: float, N: int,
                          order: int = 1) -> DifferenceBoundRecord:
    """Van der Corput differencing: |S_N|^{2^m} against the shifted sums.

    With P = N and m = order,

        |S|^{2^m} <= 2^{2^m - 1} P^{2^m - m - 1}
                     sum_{h_1..h_m = 0}^{P-1} |sum_x e^{2 pi i D_h f(x)}|

    where D_h is the iterated forward difference and x runs over
    1..P - (h_1 + .. + h_m).  Both sides are enumerated directly.  One
    differencing step (order=1) already linearizes the quadratic phase.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if N ** (order + 1) > 100_000_000:
        raise ValueError(f"enumeration too large: N={N}, order={order}")
    rec = weyl_sum(k, y, omega, N)
    lhs = rec.modulus ** (2 ** order)
    f = _phase_table(k, y, omega, N)

    def inner_total(table: np.ndarray, depth: int) -> float:
        p = len(table)
        total = 0.0
        for h in range(N):
            if h >= p:
                # Empty difference range contributes nothing.
                continue
            diff = table[h:] - table[:p - h]
            if depth == 1:
                total += abs(np.exp(TWO_PI * 1j * diff).sum())
            else:
                total += inner_total(diff, depth - 1)
        return total

    total = inner_total(f, order)
    rhs = (2.0 ** (2 ** order - 1)) * (float(N) ** (2 ** order - order - 1)) * total
    return DifferenceBoundRecord(lhs=lhs, rhs=rhs,
                                 holds=bool(lhs <= rhs * (1.0 + 1e-9)),
                                 k=k, N=N, y=y, omega=omega, order=order)


@dataclass(frozen=True)
class MinSumRecord:
    lhs: float
    rhs: float
    q_used: int
    holds: bool
    omega: float
    P: int
    Q: int
    beta: float


def minsum_bound(omega: float, P: int, Q: int, beta: float) -> MinSumRecord:
    """sum_{x=1}^{Q} min(P, 1/||omega x + beta||) <= 4(1 + Q/q)(P + q log P).

    q is the denominator of the best rational approximation p/q to omega
    with q <= Q, so |omega - p/q| <= 1/q^2 and the inequality is
    unconditional.  Exact zeros of ||omega x + beta|| are capped at P by
    the min itself.
    """
    if P < 2:
        raise ValueError(f"P must be >= 2, got {P}")
    if Q < 1:
        raise ValueError(f"Q must be >= 1, got {Q}")
    x = np.arange(1, Q + 1, dtype=float)
    t = (omega * x + beta) % 1.0
    dist = np.minimum(t, 1.0 - t)
    with np.errstate(divide="ignore"):
        terms = np.minimum(float(P), np.where(dist > 0.0, 1.0 / dist, np.inf))
    lhs = float(np.sum(terms))
    _, q = best_convergent(omega, Q)
    rhs = 4.0 * (1.0 + Q / q) * (P + q * math.log(P))
    return MinSumRecord(lhs=lhs, rhs=rhs, q_used=q, holds=bool(lhs <= rhs),
                        omega=omega, P=P, Q=Q, beta=beta)


# ---------------------------------------------------------------------------
# u_n profiles over x
# ---------------------------------------------------------------------------

def _quadratic_shifts(y: float, omega: float, n: int) -> np.ndarray:
    """theta_j - x for the d=2 skew orbit: j y + j(j-1)/2 omega mod 1."""
    driver = SkewShiftDriver(SkewShiftParams(2, omega, (0.0, y)))
    return driver.phases(1, n)


@dataclass(frozen=True)
class UProfile:
    """u_n(x) sampled on an x-grid at fixed y."""

    xs: np.ndarray
    values: np.ndarray
    n: int
    grid_size: int
    lam: float
    energy: float
    omega: float
    y: float

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


def u_n_profile(p: AnalyticPotential, lam: float, energy: float, omega: float,
                y: float, n: int, grid_size: int) -> UProfile:
    """u_n(x) = (1/n) log ||M_n(x, y)|| on the uniform grid x = i/grid."""
    if grid_size < 16:
        raise ValueError(f"grid_size must be >= 16, got {grid_size}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    xs = np.arange(grid_size, dtype=float) / grid_size
    shifts = _quadratic_shifts(y, omega, n)
    cre, cim = p.kernel_arrays()
    values = kernels().profile_u(xs, shifts, lam, energy, cre, cim)
    bad = np.flatnonzero(~np.isfinite(values))
    if len(bad):
        raise CocycleNumericError(
            f"non-finite u_{n} at grid index {int(bad[0])} "
            f"(x = {xs[int(bad[0])]:.6f})", step=int(bad[0]))
    return UProfile(xs=xs, values=values, n=n, grid_size=grid_size, lam=lam,
                    energy=energy, omega=omega, y=y)


@dataclass(frozen=True)
class FourierReport:
    sup_k_khat: float
    argmax_k: int
    coeffs: np.ndarray
    variance: float
    parseval_residual: float
    grid_size: int


def fourier_decay(profile: UProfile) -> FourierReport:
    """sup of |k| |u-hat(k)| over 1 <= |k| <= grid/4 from the discrete
    transform of the sampled profile.

    The range is capped at a quarter of the grid to keep aliasing out of
    the reported supremum.  ``coeffs`` holds u-hat(0..grid/4).  The
    Parseval residual |sum_{k != 0} |u-hat|^2 - var(u)| is a consistency
    check on the transform and should sit at rounding level.
    """
    g = profile.grid_size
    if g < 64 or (g & (g - 1)) != 0:
        raise ValueError(f"grid_size must be a power of two >= 64, got {g}")
    hat = np.fft.rfft(profile.values) / g
    mags = np.abs(hat)
    k_hi = g // 4
    ks = np.arange(1, k_hi + 1)
    weighted = ks * mags[1:k_hi + 1]
    arg = int(np.argmax(weighted))
    var = float(np.mean((profile.values - np.mean(profile.values)) ** 2))
    power = 2.0 * float(np.sum(mags[1:g // 2] ** 2)) + float(mags[g // 2] ** 2)
    return FourierReport(sup_k_khat=float(weighted[arg]), argmax_k=int(ks[arg]),
                         coeffs=hat[:k_hi + 1].copy(), variance=var,
                         parseval_residual=abs(power - var), grid_size=g)


# ---------------------------------------------------------------------------
# Large-deviation measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeviationProfile:
    n: int
    threshold: float
    fraction: float
    grid_size: int
    L_n_ref: float
    threshold_factor: float
    x_grid: int
    y_samples: int
    seed: int
    lam: float
    energy: float
    omega: float


def deviation_measure(p: AnalyticPotential, lam: float, energy: float,
                      omega: float, n: int, x_grid: int, y_samples: int,
                      threshold_factor: float = 1.0 / 40.0, seed: int = 0,
                      d: int = 2, workers: int = 1) -> DeviationProfile:
    """Fraction of the sample set where |u_n - mean| exceeds the threshold.

    The x-grid is uniform with one seeded jitter offset per run (so the
    grid never locks onto a rational relation with omega); the remaining
    torus coordinates are drawn uniformly per y-sample.  L_n_ref is the
    mean of u_n over all x_grid * y_samples points and the threshold is
    threshold_factor * L_n_ref.
    """
    if x_grid < 256:
        raise ValueError(f"x_grid must be >= 256, got {x_grid}")
    if y_samples < 1:
        raise ValueError(f"y_samples must be >= 1, got {y_samples}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    offset = streams.stream(seed, streams.DOMAIN_DEVIATION_X, 0).random()
    xs = (np.arange(x_grid, dtype=float) + offset) / x_grid
    cre, cim = p.kernel_arrays()

    def one(t: int) -> np.ndarray:
        rest = streams.torus_point(seed, streams.DOMAIN_DEVIATION_Y, t, d - 1)
        driver = SkewShiftDriver(
            SkewShiftParams(d, omega, (0.0, *map(float, rest))))
        shifts = driver.phases(1, n)
        return kernels().profile_u(xs, shifts, lam, energy, cre, cim)

    rows = indexed_map(one, y_samples, workers)
    u = np.stack(rows)
    l_ref = float(np.mean(u))
    if l_ref <= 0.0:
        raise ThresholdUndefinedError(
            f"reference mean {l_ref:.6g} is not positive; the relative "
            f"threshold is undefined (raise lambda)")
    threshold = threshold_factor * l_ref
    exceeding = int(np.count_nonzero(np.abs(u - l_ref) > threshold))
    total = x_grid * y_samples
    return DeviationProfile(
        n=n, threshold=float(threshold), fraction=exceeding / total,
        grid_size=total, L_n_ref=l_ref, threshold_factor=threshold_factor,
        x_grid=x_grid, y_samples=y_samples, seed=seed, lam=lam,
        energy=energy, omega=omega)


# ---------------------------------------------------------------------------
# Birkhoff average vs. spatial mean
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BirkhoffRecord:
    birkhoff_avg: float
    L_n_ref: float
    gap: float
    shift_max: float
    shift_bound: float
    shift_holds: bool
    n: int
    N_birkhoff: int


def birkhoff_vs_mean(p: AnalyticPotential, lam: float, energy: float,
                     omega: float, x: float, y: float, n: int,
                     N_birkhoff: int, grid_size: int = 1024) -> BirkhoffRecord:
    """Ergodic average of u_n along the skew orbit vs. the x-grid mean.

    Computes (1/N) sum_{m=0}^{N-1} u_n(T^m(x, y)), its gap to the uniform
    x-grid mean at the same y, and the largest single-shift increment
    max_m |u_n(T^{m+1}) - u_n(T^m)| against the a-priori bound C/n with
    C = 2 log((2 C_v + 2) lambda), which follows from conjugating M_n by
    one transfer step.
    """
    if N_birkhoff < 1:
        raise ValueError(f"N_birkhoff must be >= 1, got {N_birkhoff}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cre, cim = p.kernel_arrays()
    driver = SkewShiftDriver(SkewShiftParams(2, omega, (x, y)))
    phases = driver.phases(1, N_birkhoff - 1 + n)
    diag = lam * kernels().eval_potential(phases, cre, cim)
    u_vals = np.empty(N_birkhoff)
    for m in range(N_birkhoff):
        out = kernels().transfer_product(diag[m:m + n], energy)
        log_scale = out[4]
        norm = kernels().norm_2x2(out[0], out[1], out[2], out[3])
        u_vals[m] = (log_scale + math.log(norm)) / n
    birkhoff_avg = float(np.mean(u_vals))
    ref = u_n_profile(p, lam, energy, omega, y, n,
                      max(16, grid_size)).mean
    shift_max = float(np.max(np.abs(np.diff(u_vals)))) if N_birkhoff > 1 else 0.0
    c_shift = 2.0 * math.log((2.0 * p.sup_bound + 2.0) * lam)
    shift_bound = c_shift / n
    return BirkhoffRecord(
        birkhoff_avg=birkhoff_avg, L_n_ref=ref,
        gap=abs(birkhoff_avg - ref), shift_max=shift_max,
        shift_bound=shift_bound, shift_holds=bool(shift_max <= shift_bound),
        n=n, N_birkhoff=N_birkhoff)
