"""Regularity diagnostics for L_n as a function of energy and scale.

Three probes: a Lipschitz-in-energy bound at fixed scale (paired sampling
so orbit noise cancels), second differences of L_n across a doubling
ladder of scales (the numerical shadow of the inductive multi-scale
scheme), and a weak-Hoelder modulus fit h(t) = exp(-c |log t|^tau) to
measured Lyapunov gaps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import streams
from .backend import kernels
from .dynamics import GOLDEN_MEAN, AnalyticPotential, SkewShiftFamily
from .errors import FitUndefinedError, PreconditionError
from .parallel import indexed_map

_LOG_HUGE = 709.0  # exp threshold for float64


@dataclass(frozen=True)
class TrotterRecord:
    lhs: float
    rhs: float
    log_rhs: float
    holds: bool
    stderr: float
    energy: float
    energy2: float
    n: int
    samples: int
    seed: int


def trotter_check(p: AnalyticPotential, lam: float, energy: float,
                  energy2: float, n: int, samples: int, seed: int,
                  omega: float = GOLDEN_MEAN, workers: int = 1) -> TrotterRecord:
    """|L_n(E) - L_n(E')| against the a-priori bound (C_v lambda)^{n-1} |E - E'|.

    Both Lyapunov estimates use the same phase samples, so the difference
    of means is the mean of per-sample differences and orbit-to-orbit
    noise cancels.  The right side is kept in log form; ``rhs`` is inf
    when it overflows linearly, and the comparison always happens in the
    log domain.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if lam <= 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    family = SkewShiftFamily(d=2, omega=omega)
    cre, cim = p.kernel_arrays()

    def one(i: int) -> float:
        x0 = streams.torus_point(seed, streams.DOMAIN_TROTTER, i, family.d)
        phases = family(x0).phases(1, n)
        diag = lam * kernels().eval_potential(phases, cre, cim)
        diffs = []
        for e in (energy, energy2):
            out = kernels().transfer_product(diag, energy=e)
            norm = kernels().norm_2x2(out[0], out[1], out[2], out[3])
            diffs.append((out[4] + math.log(norm)) / n)
        return diffs[0] - diffs[1]

    gaps = np.array(indexed_map(one, samples, workers))
    lhs = abs(float(np.mean(gaps)))
    stderr = float(np.std(gaps, ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    de = abs(energy - energy2)
    if de == 0.0:
        log_rhs = -math.inf
    else:
        log_rhs = (n - 1) * math.log(p.sup_bound * lam) + math.log(de)
    rhs = math.inf if log_rhs > _LOG_HUGE else math.exp(log_rhs)
    holds = lhs == 0.0 or math.log(lhs) <= log_rhs
    return TrotterRecord(lhs=lhs, rhs=rhs, log_rhs=log_rhs, holds=bool(holds),
                         stderr=stderr, energy=energy, energy2=energy2, n=n,
                         samples=samples, seed=seed)


@dataclass(frozen=True)
class ScaleLadder:
    """L_n estimates along n_0, 2 n_0, 4 n_0, ... with second differences.

    ``second_diffs[j]`` is |L_{n_{j+2}} - 2 L_{n_{j+1}} + L_{n_j}| over
    consecutive scale triples; ``second_diff_stderrs`` comes from the
    per-sample second differences (scales share phase samples, so the
    triple combination is a paired statistic).
    """

    n_list: tuple[int, ...]
    L_values: tuple[float, ...]
    stderrs: tuple[float, ...]
    second_diffs: tuple[float, ...]
    second_diff_stderrs: tuple[float, ...]
    truncated: bool
    lam: float
    energy: float
    omega: float
    samples: int
    seed: int

    def __post_init__(self):
        k = len(self.n_list)
        if len(self.L_values) != k or len(self.stderrs) != k:
            raise ValueError("ladder field lengths inconsistent")
        if len(self.second_diffs) != max(0, k - 2):
            raise ValueError("second_diffs length inconsistent")
        if any(d < 0 for d in self.second_diffs):
            raise ValueError("second differences must be nonnegative")


def scale_ladder(p: AnalyticPotential, lam: float, energy: float, omega: float,
                 n0: int, levels: int, samples: int, seed: int,
                 n_cap: int = 1 << 20, workers: int = 1) -> ScaleLadder:
    """Estimate L_n on the doubling ladder n_0 * 2^j, j < levels.

    Doubling substitutes for the theoretically motivated super-fast scale
    schedule, which leaves the desk-scale range after one step; the decay
    of the second differences is the scale-coupling signal either way.
    Scales past ``n_cap`` are dropped and the ladder is flagged truncated.
    """
    if n0 < 1:
        raise ValueError(f"n0 must be >= 1, got {n0}")
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    ns = []
    truncated = False
    for j in range(levels):
        n = n0 << j
        if n > n_cap:
            truncated = True
            break
        ns.append(n)
    if not ns:
        raise ValueError(f"n0 = {n0} already above the cap {n_cap}")
    family = SkewShiftFamily(d=2, omega=omega)
    cre, cim = p.kernel_arrays()
    n_max = ns[-1]

    def one(i: int) -> np.ndarray:
        x0 = streams.torus_point(seed, streams.DOMAIN_LADDER, i, family.d)
        phases = family(x0).phases(1, n_max)
        diag = lam * kernels().eval_potential(phases, cre, cim)
        return kernels().transfer_u_checkpoints(diag, energy, ns)

    u = np.stack(indexed_map(one, samples, workers))
    L = u.mean(axis=0)
    if samples > 1:
        se = u.std(axis=0, ddof=1) / math.sqrt(samples)
    else:
        se = np.zeros(len(ns))
    sds, sd_ses = [], []
    for j in range(len(ns) - 2):
        per_sample = u[:, j + 2] - 2.0 * u[:, j + 1] + u[:, j]
        sds.append(abs(float(per_sample.mean())))
        if samples > 1:
            sd_ses.append(float(per_sample.std(ddof=1) / math.sqrt(samples)))
        else:
            sd_ses.append(0.0)
    return ScaleLadder(
        n_list=tuple(ns), L_values=tuple(float(v) for v in L),
        stderrs=tuple(float(v) for v in se), second_diffs=tuple(sds),
        second_diff_stderrs=tuple(sd_ses), truncated=truncated, lam=lam,
        energy=energy, omega=omega, samples=samples, seed=seed)


@dataclass(frozen=True)
class ModulusFit:
    c: float
    tau: float
    r2: float
    pairs_used: int


DEFAULT_TAU_GRID = (0.25, 0.5, 0.75, 1.0)


def modulus_fit(pairs: Sequence[tuple[float, float]],
                tau_grid: Sequence[float] = DEFAULT_TAU_GRID) -> ModulusFit:
    """Fit gap(t) = exp(-c |log t|^tau) to (t, gap) pairs.

    For each tau on the grid, c comes from the least-squares line of
    log(gap) against -|log t|^tau through the origin; the (c, tau) with
    the best r2 wins.  Requires >= 8 usable pairs whose t values span at
    least three decades.
    """
    usable = [(t, g) for t, g in pairs if t > 0.0 and g > 0.0]
    if len(usable) < 8:
        raise PreconditionError(
            f"need >= 8 pairs with positive gap and separation, "
            f"got {len(usable)}")
    ts = np.array([t for t, _ in usable])
    gs = np.array([g for _, g in usable])
    if float(ts.max()) == float(ts.min()):
        raise FitUndefinedError("all pairs share the same separation t")
    if ts.max() / ts.min() < 1e3:
        raise PreconditionError(
            f"separations span {math.log10(ts.max() / ts.min()):.2f} decades; "
            f"need >= 3")
    y = np.log(gs)
    best = None
    for tau in tau_grid:
        if tau <= 0.0:
            raise ValueError(f"tau grid entries must be positive, got {tau}")
        x = -np.abs(np.log(ts)) ** tau
        sxx = float(np.dot(x, x))
        if sxx == 0.0:
            continue
        c = float(np.dot(x, y)) / sxx
        resid = y - c * x
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        if ss_tot == 0.0:
            raise FitUndefinedError("all gaps identical; fit undefined")
        r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot
        if best is None or r2 > best[2]:
            best = (c, tau, r2)
    if best is None:
        raise FitUndefinedError("no tau on the grid produced a fit")
    return ModulusFit(c=best[0], tau=best[1], r2=best[2],
                      pairs_used=len(usable))
