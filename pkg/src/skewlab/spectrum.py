"""Spectrum-interval evidence: admissible energies, finite-volume spectra,
eigenvalue parametrizations and their extensions across window scales.

The chain of custody runs: admissible_energies finds the energies v attains
with |v'| >= delta (unions of closed intervals); spectrum_union collects
finite-volume eigenvalues over random phases; interval_coverage probes how
close the admissible energies (scaled by lambda) sit to that spectrum; and
parametrize/extension_check build the windowed eigenvalue families whose
stability across growing windows is the constructive localization signal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import streams
from .backend import kernels
from .dynamics import (AnalyticPotential, SkewShiftDriver, SkewShiftFamily,
                       SkewShiftParams, circle_dist)
from .errors import (CoverageVacuousError, IncompleteRecordError,
                     OutOfRangeError, ParametrizationFailedError,
                     PreconditionError)
from .lattice import FiniteVolumeOperator, eigen_all, eigenvalues_only
from .parallel import indexed_map

_SAMPLE_GRID = 8192


# ---------------------------------------------------------------------------
# Admissible energies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdmissibleSet:
    """Closed energy intervals {v(x) : |v'(x)| >= delta}, in units of v."""

    delta: float
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        last = -math.inf
        for lo, hi in self.intervals:
            if hi < lo:
                raise ValueError(f"empty interval ({lo}, {hi})")
            if lo < last:
                raise ValueError("intervals must be sorted and disjoint")
            last = hi

    @property
    def total_length(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    def contains(self, e: float) -> bool:
        return any(lo <= e <= hi for lo, hi in self.intervals)


def _true_runs_circular(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True in a circular boolean array, as (start, stop)
    index pairs with stop exclusive; a wrapping run uses stop > len."""
    n = len(mask)
    if mask.all():
        return [(0, n)]
    if not mask.any():
        return []
    # Rotate so position 0 is False, then read off linear runs.
    first_false = int(np.argmin(mask))
    rolled = np.roll(mask, -first_false)
    runs = []
    start = None
    for i in range(n + 1):
        val = rolled[i] if i < n else False
        if val and start is None:
            start = i
        elif not val and start is not None:
            runs.append(((start + first_false) % n,
                         (i + first_false - 1) % n + 1))
            start = None
    out = []
    for s, e in runs:
        out.append((s, e if e > s else e + n))
    return out


def admissible_energies(p: AnalyticPotential, delta: float,
                        grid_size: int = _SAMPLE_GRID) -> AdmissibleSet:
    """Assemble {v(x) : |v'(x)| >= delta} by sampling and root refinement.

    On each maximal run where |v'| >= delta the potential is strictly
    monotone, so the run contributes the closed interval between the v
    values at its endpoints; endpoints are sharpened by solving
    |v'(x)| = delta on the straddling grid cells.  A delta above max|v'|
    yields the empty set (not an error).
    """
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    xs = np.arange(grid_size, dtype=float) / grid_size
    dv = p.derivative_values(xs)
    mask = np.abs(dv) >= delta
    runs = _true_runs_circular(mask)
    if not runs:
        return AdmissibleSet(delta=delta, intervals=())

    def crossing(i_out: int, i_in: int) -> float:
        """|v'| = delta between grid cells i_out (below) and i_in (at/above)."""
        a = xs[i_out % grid_size] + (i_out // grid_size)
        b = xs[i_in % grid_size] + (i_in // grid_size)
        g = lambda x: abs(float(p.derivative_values(np.array([x % 1.0]))[0])) - delta
        ga, gb = g(a), g(b)
        if ga >= 0.0 or gb < 0.0:
            return b
        return brentq(g, a, b, xtol=1e-14)

    raw = []
    for s, e in runs:
        if e - s >= grid_size:
            lo_x, hi_x = 0.0, 1.0
        else:
            lo_x = crossing(s - 1, s)
            hi_x = crossing(e, e - 1)
        va = float(p.values(np.array([lo_x % 1.0]))[0])
        vb = float(p.values(np.array([hi_x % 1.0]))[0])
        raw.append((min(va, vb), max(va, vb)))
    raw.sort()
    merged: list[list[float]] = []
    for lo, hi in raw:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return AdmissibleSet(delta=delta,
                         intervals=tuple((a, b) for a, b in merged))


# ---------------------------------------------------------------------------
# Finite-volume spectrum union and coverage
# ---------------------------------------------------------------------------

def spectrum_union(p: AnalyticPotential, lam: float, omega: float, d: int,
                   N: int, x_samples: int, seed: int,
                   workers: int = 1) -> np.ndarray:
    """Sorted union of eigenvalues over random-phase volumes [1, N].

    Values closer than 1e-9 * scale are thinned to one representative
    (finite-volume eigenvalues from different phases often coincide to
    solver resolution).
    """
    if N < 8:
        raise ValueError(f"N must be >= 8, got {N}")
    if x_samples < 1:
        raise ValueError(f"x_samples must be >= 1, got {x_samples}")
    family = SkewShiftFamily(d=d, omega=omega)
    cre, cim = p.kernel_arrays()

    def one(i: int) -> np.ndarray:
        x0 = streams.torus_point(seed, streams.DOMAIN_SPECTRUM, i, d)
        phases = family(x0).phases(1, N)
        diag = lam * kernels().eval_potential(phases, cre, cim)
        op = FiniteVolumeOperator(interval=(1, N), diag=diag)
        return eigenvalues_only(op)

    chunks = indexed_map(one, x_samples, workers)
    allvals = np.sort(np.concatenate(chunks))
    scale = lam * p.sup_bound + 2.0
    resolution = 1e-9 * scale
    kept = [float(allvals[0])]
    for v in allvals[1:]:
        if float(v) - kept[-1] > resolution:
            kept.append(float(v))
    return np.array(kept)


@dataclass(frozen=True)
class CoverageReport:
    max_gap: float
    worst_E: float
    covered: bool
    tol: float
    probes: np.ndarray
    dists: np.ndarray


def interval_coverage(adm: AdmissibleSet, lam: float, spec: np.ndarray,
                      probe_count: int, tol: float) -> CoverageReport:
    """Probe lambda * admissible intervals against the computed spectrum.

    Probes are distributed over the scaled intervals proportionally to
    length (ends included); max_gap is the worst distance from a probe to
    the spectrum and covered = (max_gap <= tol).  An empty admissible set
    has nothing to probe; an empty spectrum yields the +inf sentinel.
    """
    if probe_count < 10:
        raise ValueError(f"probe_count must be >= 10, got {probe_count}")
    if not adm.intervals:
        raise CoverageVacuousError(
            f"admissible set is empty at delta = {adm.delta}; "
            f"coverage is vacuous")
    lengths = np.array([hi - lo for lo, hi in adm.intervals])
    total = float(lengths.sum())
    if total == 0.0:
        counts = np.full(len(lengths), probe_count // len(lengths))
    else:
        quota = probe_count * lengths / total
        counts = np.floor(quota).astype(int)
        remainder = probe_count - int(counts.sum())
        order = np.argsort(-(quota - counts))
        for idx in order[:remainder]:
            counts[idx] += 1
    counts = np.maximum(counts, 1)
    probes = []
    for (lo, hi), c in zip(adm.intervals, counts):
        probes.append(np.linspace(lam * lo, lam * hi, max(2, int(c))))
    probe_arr = np.concatenate(probes)
    spec_sorted = np.sort(np.asarray(spec, dtype=float))
    if len(spec_sorted) == 0:
        dists = np.full(len(probe_arr), np.inf)
    else:
        pos = np.searchsorted(spec_sorted, probe_arr)
        left = spec_sorted[np.clip(pos - 1, 0, len(spec_sorted) - 1)]
        right = spec_sorted[np.clip(pos, 0, len(spec_sorted) - 1)]
        dists = np.minimum(np.abs(probe_arr - left), np.abs(probe_arr - right))
    worst = int(np.argmax(dists))
    max_gap = float(dists[worst])
    return CoverageReport(max_gap=max_gap, worst_E=float(probe_arr[worst]),
                          covered=bool(max_gap <= tol), tol=tol,
                          probes=probe_arr, dists=dists)


# ---------------------------------------------------------------------------
# Isolation and parametrization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsolationRecord:
    isolated: bool
    gap: float
    index: int
    count_inside: int


def isolated_eigenvalue(op: FiniteVolumeOperator, E0: float,
                        epsilon: float) -> IsolationRecord:
    """Is there exactly one (simple) eigenvalue within epsilon of E0?

    ``gap`` is the distance from that eigenvalue to the rest of the
    spectrum (inf for a 1-site operator); simplicity requires the gap to
    clear the solver resolution.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    vals = eigenvalues_only(op)
    inside = np.flatnonzero(np.abs(vals - E0) <= epsilon)
    resolution = 10.0 * 1e-13 * op.scale
    if len(inside) == 1:
        idx = int(inside[0])
        others = np.delete(vals, idx)
        gap = float(np.min(np.abs(others - vals[idx]))) if len(others) else math.inf
        return IsolationRecord(isolated=bool(gap > resolution), gap=gap,
                               index=idx, count_inside=1)
    idx = int(np.argmin(np.abs(vals - E0)))
    others = np.delete(vals, idx)
    gap = float(np.min(np.abs(others - vals[idx]))) if len(others) else math.inf
    return IsolationRecord(isolated=False, gap=gap, index=idx,
                           count_inside=int(len(inside)))


@dataclass(frozen=True)
class ParametrizationRecord:
    """A windowed eigenvalue family x -> zeta(x) keeping E0 isolated.

    The window operator at (x, y) lives on sites [-M, M] with phases from
    the orbit of (y, x): site 0 sees lambda*v(y), so at M=0 the family is
    the scalar equation lambda*v(zeta) = E0.  ``x_samples`` holds the
    admitted grid points, ``vectors`` the window eigenvectors (rows),
    ``gaps`` the isolation gaps.

    ``epsilon`` is in units of the potential, like admissible-set
    energies: the absolute isolation radius on the operator's energy axis
    is epsilon * lam (that keeps epsilon commensurable with the
    dimensionless slope budget in the validity condition
    L_cap + epsilon <= 1/3).
    """

    M: int
    E0: float
    epsilon: float
    L_cap: float
    x_samples: np.ndarray
    zeta_values: np.ndarray
    slope_sup: float
    measure_est: float
    grid_size: int
    lam: float
    omega: float
    vectors: np.ndarray | None = None
    gaps: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return (self.slope_sup <= self.L_cap
                and self.L_cap + self.epsilon <= 1.0 / 3.0
                and self.measure_est >= 1.0 / math.sqrt(max(self.M, 1)))


def _window_operator(p: AnalyticPotential, lam: float, omega: float,
                     x: float, y: float, M: int) -> FiniteVolumeOperator:
    driver = SkewShiftDriver(SkewShiftParams(2, omega, (y, x)))
    phases = driver.phases(-M, M)
    diag = lam * p.values(phases)
    return FiniteVolumeOperator(interval=(-M, M), diag=diag)


def _anchor_root(p: AnalyticPotential, lam: float, E0: float) -> float:
    """Smallest y in [0, 1) with lambda * v(y) = E0 (the scale-zero seed)."""
    target = E0 / lam
    xs = np.arange(_SAMPLE_GRID + 1, dtype=float) / _SAMPLE_GRID
    vals = p.values(xs % 1.0) - target
    if np.max(vals) < 0.0 or np.min(vals) > 0.0:
        raise OutOfRangeError(
            f"E0/lambda = {target:.6g} outside the sampled range of v "
            f"[{np.min(vals) + target:.6g}, {np.max(vals) + target:.6g}]")
    for i in range(_SAMPLE_GRID):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            return float(xs[i])
        if a * b < 0.0:
            f = lambda t: float(p.values(np.array([t % 1.0]))[0]) - target
            return float(brentq(f, xs[i], xs[i + 1], xtol=1e-15))
    if vals[-1] == 0.0:
        return 0.0
    raise OutOfRangeError(
        f"no sign change found for E0/lambda = {target:.6g}")


def _nearest_branch(pairs, E0: float, scale: float):
    """Pair with eigenvalue nearest E0; ties go to larger center mass."""
    dists = [abs(q.value - E0) for q in pairs]
    best = min(dists)
    tol = best + 1e-9 * scale
    candidates = [q for q, dd in zip(pairs, dists) if dd <= tol]
    if len(candidates) == 1:
        return candidates[0]
    center = (len(pairs[0].vector) - 1) // 2
    return max(candidates, key=lambda q: abs(q.vector[center]))


def parametrize(p: AnalyticPotential, lam: float, omega: float, E0: float,
                M: int, x_grid: int, epsilon: float, L_cap: float,
                workers: int = 1) -> ParametrizationRecord:
    """Build the eigenvalue parametrization zeta on an x-grid.

    For each grid x, Newton's method (derivative from first-order
    eigenvalue perturbation: de/dy = sum_j psi_j^2 lambda v'(theta_j))
    moves y from the scale-zero anchor until the branch eigenvalue nearest
    E0 hits E0.  A point is admitted when the root converges, E0 is
    epsilon-isolated there, and the finite-difference slope to the
    previously admitted neighbor stays within L_cap (steep points are
    dropped, later point first, keeping the slope bound by construction).
    """
    if M < 0:
        raise ValueError(f"M must be >= 0, got {M}")
    if x_grid < 2:
        raise ValueError(f"x_grid must be >= 2, got {x_grid}")
    if epsilon <= 0.0 or L_cap <= 0.0:
        raise ValueError("epsilon and L_cap must be positive")
    if L_cap + epsilon > 1.0 / 3.0:
        raise PreconditionError(
            f"L_cap + epsilon = {L_cap + epsilon:.4f} exceeds 1/3")
    y0 = _anchor_root(p, lam, E0)
    scale = lam * p.sup_bound + 2.0
    tol_e = 1e-10 * scale
    epsilon_abs = epsilon * lam
    xs_all = np.arange(x_grid, dtype=float) / x_grid

    def solve_one(i: int):
        x = float(xs_all[i])
        y = y0
        for _ in range(30):
            op = _window_operator(p, lam, omega, x, y, M)
            pairs = eigen_all(op)
            q = _nearest_branch(pairs, E0, scale)
            err = q.value - E0
            if abs(err) <= tol_e:
                iso = isolated_eigenvalue(op, E0, epsilon_abs)
                if not iso.isolated:
                    return None
                return (x, y % 1.0, q.vector, iso.gap)
            driver = SkewShiftDriver(SkewShiftParams(2, omega, (y, x)))
            phases = driver.phases(-M, M)
            dv = p.derivative_values(phases)
            de = float(np.sum(q.vector ** 2 * lam * dv))
            if not np.isfinite(de) or abs(de) < 1e-300:
                return None
            y = y - err / de
            if not np.isfinite(y):
                return None
        return None

    solved = indexed_map(solve_one, x_grid, workers)
    kept_idx: list[int] = []
    slope_sup = 0.0
    for i, item in enumerate(solved):
        if item is None:
            continue
        if kept_idx and kept_idx[-1] == i - 1:
            dz = circle_dist(item[1] - solved[kept_idx[-1]][1])
            slope = dz * x_grid
            if slope > L_cap:
                continue
            slope_sup = max(slope_sup, slope)
        kept_idx.append(i)
    # Wrap-around neighbor (grid is circular).
    if len(kept_idx) >= 2 and kept_idx[0] == 0 and kept_idx[-1] == x_grid - 1:
        dz = circle_dist(solved[0][1] - solved[kept_idx[-1]][1])
        slope_sup = max(slope_sup, dz * x_grid)
    if not kept_idx:
        raise ParametrizationFailedError(
            f"no grid point admitted at M={M}, E0={E0:.6g}")
    xs = np.array([solved[i][0] for i in kept_idx])
    zetas = np.array([solved[i][1] for i in kept_idx])
    vectors = np.stack([solved[i][2] for i in kept_idx])
    gaps = np.array([solved[i][3] for i in kept_idx])
    dvy0 = abs(float(p.derivative_values(np.array([y0]))[0]))
    c1 = 10.0 * p.max_abs_derivative()
    c2 = max(dvy0, 1.0) / 10.0
    diag = {"y0": y0, "C1": c1, "C2": c2, "threshold": c2 ** 5 / (2.0 * c1)}
    return ParametrizationRecord(
        M=M, E0=E0, epsilon=epsilon, L_cap=L_cap, x_samples=xs,
        zeta_values=zetas, slope_sup=float(slope_sup),
        measure_est=len(kept_idx) / x_grid, grid_size=x_grid, lam=lam,
        omega=omega, vectors=vectors, gaps=gaps, diagnostics=diag)


# ---------------------------------------------------------------------------
# Extension check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtensionReport:
    delta: float
    subset_ok: bool
    epsilon_ok: bool
    scale_ok: bool
    slope_ok: bool
    zeta_close_ok: bool
    eigenfunction_ok: bool
    weighted_distance: float

    @property
    def passed(self) -> bool:
        return (self.subset_ok and self.epsilon_ok and self.scale_ok
                and self.slope_ok and self.zeta_close_ok
                and self.eigenfunction_ok)


def _pad_centered(v: np.ndarray, m_small: int, m_big: int) -> np.ndarray:
    out = np.zeros(2 * m_big + 1)
    out[m_big - m_small: m_big + m_small + 1] = v
    return out


def extension_check(rec1: ParametrizationRecord, rec2: ParametrizationRecord,
                    delta: float, allow_equal: bool = False) -> ExtensionReport:
    """Does rec2 extend rec1 to a larger window within tolerance delta?

    Checks, in order: admitted set containment (on a shared grid), epsilon
    shrinkage, window growth, slope budget L2 <= L1 + delta, sup of
    |zeta1 - zeta2| over the shared points, and the (1 + n^2)-weighted
    eigenvector distance min_{a = +-1} ||psi1 - a psi2|| with psi1
    zero-padded to the larger window.

    ``allow_equal`` is the self-test convention: it relaxes the two strict
    comparisons (M2 > M1 and eps2 < eps1) to non-strict so a record can be
    checked against itself.
    """
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    if rec1.M > rec2.M:
        raise PreconditionError(
            f"rec1.M = {rec1.M} exceeds rec2.M = {rec2.M}")
    if rec1.vectors is None or rec2.vectors is None:
        raise IncompleteRecordError(
            "both records need stored eigenvectors for the extension check")
    if rec1.grid_size != rec2.grid_size:
        raise ValueError(
            f"records use different grids ({rec1.grid_size} vs "
            f"{rec2.grid_size}); containment is grid-relative")
    g = rec1.grid_size
    idx1 = {int(round(x * g)): j for j, x in enumerate(rec1.x_samples)}
    shared = []
    subset_ok = True
    for j2, x in enumerate(rec2.x_samples):
        key = int(round(x * g))
        if key in idx1:
            shared.append((idx1[key], j2))
        else:
            subset_ok = False
    if allow_equal:
        epsilon_ok = rec2.epsilon <= rec1.epsilon
        scale_ok = rec2.M >= rec1.M
    else:
        epsilon_ok = rec2.epsilon < rec1.epsilon
        scale_ok = rec2.M > rec1.M
    slope_ok = rec2.L_cap <= rec1.L_cap + delta
    zeta_sup = 0.0
    wdist = 0.0
    for j1, j2 in shared:
        zeta_sup = max(zeta_sup, circle_dist(
            float(rec1.zeta_values[j1]) - float(rec2.zeta_values[j2])))
        psi1 = _pad_centered(rec1.vectors[j1], rec1.M, rec2.M)
        psi2 = rec2.vectors[j2]
        n_idx = np.arange(-rec2.M, rec2.M + 1, dtype=float)
        w = 1.0 + n_idx ** 2
        d_plus = math.sqrt(float(np.sum(w * (psi1 - psi2) ** 2)))
        d_minus = math.sqrt(float(np.sum(w * (psi1 + psi2) ** 2)))
        wdist = max(wdist, min(d_plus, d_minus))
    return ExtensionReport(
        delta=delta, subset_ok=subset_ok, epsilon_ok=epsilon_ok,
        scale_ok=scale_ok, slope_ok=slope_ok,
        zeta_close_ok=bool(zeta_sup <= delta),
        eigenfunction_ok=bool(wdist <= delta), weighted_distance=wdist)
