"""Transfer-matrix cocycles and finite-scale Lyapunov exponents.

The one-step matrix at phase theta is [[E - lam*v(theta), -1], [1, 0]];
products are renormalized every step by the max-abs entry, with the
extracted log magnitudes accumulated separately, so nothing overflows even
at lam^n growth.  u_n = (1/n) log ||M_n|| is read off with the exact
spectral norm only at the end.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .backend import kernels
from .dynamics import (GOLDEN_MEAN, AnalyticPotential, PhaseDriver,
                       SkewShiftFamily)
from .errors import (CocycleNumericError, PreconditionError,
                     StripViolationError)
from .parallel import indexed_map


@dataclass(frozen=True)
class TransferAccumulator:
    """Renormalized product: true matrix = exp(log_scale) * m."""

    m: np.ndarray
    log_scale: float
    steps: int

    @property
    def norm(self) -> float:
        """Spectral norm of the normalized factor (in [0.5, 2] by design)."""
        return kernels().norm_2x2(self.m[0, 0], self.m[0, 1],
                                  self.m[1, 0], self.m[1, 1])

    @property
    def u_n(self) -> float:
        """(1/n) log of the true product norm."""
        return (self.log_scale + math.log(self.norm)) / self.steps

    def reconstruct(self) -> np.ndarray:
        """The unnormalized product (overflows beyond modest n; tests only)."""
        return math.exp(self.log_scale) * self.m

    @property
    def det_reconstructed(self) -> float:
        m = self.m
        return math.exp(2.0 * self.log_scale) * (
            m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def _finite_or_raise(diag: np.ndarray) -> None:
    bad = np.flatnonzero(~np.isfinite(diag))
    if bad.size:
        step = int(bad[0]) + 1
        raise CocycleNumericError(
            f"non-finite potential value at step {step}", step=step)


def transfer_product(driver: PhaseDriver, p: AnalyticPotential, lam: float,
                     energy: float, n: int) -> TransferAccumulator:
    """M_n along the driver's phase sequence theta_1..theta_n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    phases = driver.phases(1, n)
    diag = lam * p.values(phases)
    _finite_or_raise(diag)
    m00, m01, m10, m11, log_scale = kernels().transfer_product(diag, energy)
    return TransferAccumulator(
        m=np.array([[m00, m01], [m10, m11]]), log_scale=log_scale, steps=n)


@dataclass(frozen=True)
class LyapunovEntry:
    n: int
    L_n: float
    stderr: float
    samples: int


@dataclass(frozen=True)
class LyapunovCurve:
    entries: tuple[LyapunovEntry, ...]
    lam: float
    energy: float
    d: int
    omega: float
    seed: int

    @property
    def cauchy_gaps(self) -> list[float]:
        """|L_{n_{j+1}} - L_{n_j}| between consecutive scales."""
        ls = [e.L_n for e in self.entries]
        return [abs(b - a) for a, b in zip(ls, ls[1:])]


def _u_sample_rows(family, p: AnalyticPotential, lam: float, energy: float,
                   ns: np.ndarray, samples: int, seed: int, domain: int,
                   workers: int) -> np.ndarray:
    """u_n checkpoints per sampled initial point; rows in sample order."""
    cre, cim = p.kernel_arrays()
    n_max = int(ns[-1])

    def one(i: int) -> np.ndarray:
        x0 = streams.torus_point(seed, domain, i, family.d)
        phases = family(x0).phases(1, n_max)
        diag = lam * kernels().eval_potential(phases, cre, cim)
        _finite_or_raise(diag)
        return kernels().transfer_u_checkpoints(diag, energy, ns)

    return np.array(indexed_map(one, samples, workers))


def _mean_stderr(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = rows.mean(axis=0)
    if rows.shape[0] > 1:
        stderr = rows.std(axis=0, ddof=1) / math.sqrt(rows.shape[0])
    else:
        stderr = np.zeros(rows.shape[1])
    return mean, stderr


def lyapunov_curve(family, p: AnalyticPotential, lam: float, energy: float,
                   n_list, samples: int, seed: int,
                   workers: int = 1) -> LyapunovCurve:
    """L_n averaged over seeded uniform initial points, at each n in n_list.

    Only finite-scale values are computed; judge convergence by the Cauchy
    gaps between consecutive scales, never by a claimed limit.
    """
    n_list = list(n_list)
    if not n_list:
        raise ValueError("empty n_list")
    if any(b <= a for a, b in zip(n_list, n_list[1:])) or n_list[0] < 1:
        raise ValueError(f"n_list must be strictly increasing positive, got {n_list}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    ns = np.asarray(n_list, dtype=np.int64)
    rows = _u_sample_rows(family, p, lam, energy, ns, samples, seed,
                          streams.DOMAIN_LYAPUNOV, workers)
    mean, stderr = _mean_stderr(rows)
    entries = tuple(
        LyapunovEntry(n=int(n), L_n=float(m), stderr=float(s), samples=samples)
        for n, m, s in zip(n_list, mean, stderr))
    return LyapunovCurve(entries=entries, lam=lam, energy=energy,
                         d=family.d, omega=getattr(family, "omega", math.nan),
                         seed=seed)


@dataclass(frozen=True)
class PositivityRow:
    energy: float
    L_n: float
    stderr: float
    ratio: float
    near_spectrum: bool


@dataclass(frozen=True)
class PositivityScan:
    min_ratio: float
    argmin_energy: float
    table: tuple[PositivityRow, ...]
    lam: float
    n: int
    samples: int
    seed: int
    strict: bool


def positivity_scan(p: AnalyticPotential, lam: float, energy_grid, n: int,
                    samples: int, seed: int, *, family=None,
                    spectrum_ref=None, spectrum_tol: float | None = None,
                    strict: bool = False, workers: int = 1) -> PositivityScan:
    """min over the grid of L_n(E)/log(lambda), with the full table.

    ``spectrum_ref`` (a sorted array of finite-volume eigenvalues) marks
    each energy as near-spectrum when it lies within ``spectrum_tol``
    (default 0.05*lambda) of some eigenvalue; in strict mode only those
    energies count toward min_ratio.
    """
    if lam <= 1:
        raise ValueError(f"scan undefined for lambda <= 1 (log lambda <= 0), got {lam}")
    energy_grid = [float(e) for e in energy_grid]
    if not energy_grid:
        raise ValueError("empty energy grid")
    cap = (p.sup_bound + 1.0) * lam
    for e in energy_grid:
        if abs(e) > cap:
            raise ValueError(f"energy {e} outside [-(C_v+1)*lambda, (C_v+1)*lambda]")
    if strict and spectrum_ref is None:
        raise ValueError("strict mode needs a spectrum reference")
    if family is None:
        family = SkewShiftFamily(d=2, omega=GOLDEN_MEAN)
    if spectrum_tol is None:
        spectrum_tol = 0.05 * lam
    cre, cim = p.kernel_arrays()
    log_lam = math.log(lam)
    ns = np.array([n], dtype=np.int64)

    def sample_diag(i: int) -> np.ndarray:
        x0 = streams.torus_point(seed, streams.DOMAIN_LYAPUNOV, i, family.d)
        phases = family(x0).phases(1, n)
        diag = lam * kernels().eval_potential(phases, cre, cim)
        _finite_or_raise(diag)
        return diag

    diags = indexed_map(sample_diag, samples, workers)

    spec = None
    if spectrum_ref is not None:
        spec = np.sort(np.asarray(spectrum_ref, dtype=np.float64))

    def scan_energy(e_idx: int) -> PositivityRow:
        energy = energy_grid[e_idx]
        us = np.array([kernels().transfer_u_checkpoints(diag, energy, ns)[0]
                       for diag in diags])
        mean, stderr = _mean_stderr(us.reshape(-1, 1))
        near = True
        if spec is not None and spec.size:
            pos = np.searchsorted(spec, energy)
            dist = min(
                abs(energy - spec[max(pos - 1, 0)]),
                abs(energy - spec[min(pos, spec.size - 1)]))
            near = dist <= spectrum_tol
        return PositivityRow(energy=energy, L_n=float(mean[0]),
                             stderr=float(stderr[0]),
                             ratio=float(mean[0]) / log_lam,
                             near_spectrum=near)

    table = indexed_map(scan_energy, len(energy_grid), workers)
    counted = [r for r in table if (r.near_spectrum or not strict)]
    if not counted:
        raise ValueError("strict mode left no on-spectrum energies to scan")
    best = min(counted, key=lambda r: r.ratio)
    return PositivityScan(min_ratio=best.ratio, argmin_energy=best.energy,
                          table=tuple(table), lam=lam, n=n, samples=samples,
                          seed=seed, strict=strict)


@dataclass(frozen=True)
class ComplexBoundReport:
    u_n_complex: float
    epsilon_est: float
    bound: float
    holds: bool
    y0: float
    n: int
    lam: float
    energy: float
    tolerance: float


def complex_lower_bound(p: AnalyticPotential, lam: float, energy: float,
                        y0: float, n: int, *, driver: PhaseDriver = None,
                        x_grid: int = 2048,
                        tolerance: float = 0.01) -> ComplexBoundReport:
    """Growth of the cocycle at complexified phase theta + i*y0.

    When inf_x |lam*v(x+i*y0) - E| = lam*eps > 1, every step matrix expands
    the first coordinate by at least lam*eps - 1, so
    u_n >= log(lam*eps - 1); ``holds`` reports that inequality up to
    ``tolerance``.  eps is estimated as the min over a dense x-grid.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if y0 <= 0:
        raise ValueError(f"y0 must be positive, got {y0}")
    if y0 >= p.rho / 5.0:
        raise StripViolationError(
            f"y0 = {y0} outside the strip (0, rho/5) = (0, {p.rho / 5.0})")
    cre, cim = p.kernel_arrays()
    xs = np.arange(x_grid) / x_grid
    vre, vim = kernels().eval_potential_complex(xs, y0, cre, cim)
    dist = np.hypot(lam * vre - energy, lam * vim)
    i_min = int(np.argmin(dist))
    epsilon_est = float(dist[i_min]) / lam
    if lam * epsilon_est <= 1.0:
        raise PreconditionError(
            f"lambda*epsilon = {lam * epsilon_est:.6g} <= 1 "
            f"(closest approach at x = {xs[i_min]:.6g})")
    if driver is None:
        from .dynamics import SkewShiftDriver, SkewShiftParams
        driver = SkewShiftDriver(SkewShiftParams(d=2, omega=GOLDEN_MEAN,
                                                 x0=(0.0, 0.0)))
    phases = driver.phases(1, n)
    pre_, pim_ = kernels().eval_potential_complex(phases, y0, cre, cim)
    dre = lam * pre_
    dim = lam * pim_
    out = kernels().transfer_product_complex(dre, dim, energy)
    log_scale = out[8]
    nrm = kernels().norm_2x2_complex(*out[:8])
    u_n_complex = (log_scale + math.log(nrm)) / n
    bound = math.log(lam * epsilon_est - 1.0)
    return ComplexBoundReport(
        u_n_complex=u_n_complex, epsilon_est=epsilon_est, bound=bound,
        holds=u_n_complex >= bound - tolerance, y0=y0, n=n, lam=lam,
        energy=energy, tolerance=tolerance)
