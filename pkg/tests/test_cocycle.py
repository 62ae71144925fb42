"""Transfer-matrix products and finite-scale Lyapunov statistics."""
from __future__ import annotations

import math

import numpy as np
import pytest

import oracles
from skewlab.cocycle import (complex_lower_bound, lyapunov_curve,
                             positivity_scan, transfer_product)
from skewlab.dynamics import (AnalyticPotential, RotationFamily,
                              SkewShiftDriver, SkewShiftFamily,
                              SkewShiftParams, constant_potential,
                              zero_potential)
from skewlab.errors import (CocycleNumericError, PreconditionError,
                            StripViolationError)


def _driver(golden, x=0.3, y=0.7):
    return SkewShiftDriver(SkewShiftParams(2, golden, (x, y)))


def _hyperbolic_rate(a: float) -> float:
    """log of the large eigenvalue of [[a, -1], [1, 0]] for |a| > 2."""
    return math.log((abs(a) + math.sqrt(a * a - 4.0)) / 2.0)


# ---------------------------------------------------------------------------
# Transfer products against the extended-precision oracle
# ---------------------------------------------------------------------------

def test_product_matches_longdouble_direct(cosine, golden):
    rng = np.random.default_rng(101)
    for _ in range(25):
        n = int(rng.integers(1, 26))
        x, y = rng.random(2)
        energy = float(rng.uniform(-3, 3))
        lam = float(rng.uniform(0.5, 3.0))
        drv = _driver(golden, x, y)
        acc = transfer_product(drv, cosine, lam, energy, n)
        diag = lam * cosine.values(drv.phases(1, n))
        want = oracles.transfer_direct(diag, energy).astype(float)
        got = acc.reconstruct()
        assert np.allclose(got, want, rtol=1e-10, atol=1e-12)
        want_u = math.log(oracles.spectral_norm_2x2(want)) / n
        assert acc.u_n == pytest.approx(want_u, abs=1e-10)


def test_unimodularity_is_preserved(cosine, golden):
    # Meaningful only at small n: the determinant of the normalized factor
    # shrinks like exp(-2 log_scale) and drowns in rounding beyond that.
    acc = transfer_product(_driver(golden), cosine, 2.0, 1.3, 6)
    assert acc.det_reconstructed == pytest.approx(1.0, rel=1e-6)
    assert 0.5 <= acc.norm <= 2.0 + 1e-12
    assert acc.steps == 6


def test_free_elliptic_energy_has_zero_growth(zero_pot, golden):
    # At E = 0 the step matrix is a quarter turn: the product over any
    # number of steps is orthogonal and u_n vanishes identically.
    for n in (4, 8, 100, 401):
        acc = transfer_product(_driver(golden), zero_pot, 1.0, 0.0, n)
        assert acc.u_n == 0.0


def test_free_hyperbolic_energy_rate(zero_pot, golden):
    acc = transfer_product(_driver(golden), zero_pot, 1.0, 3.0, 2000)
    assert acc.u_n == pytest.approx(_hyperbolic_rate(3.0), abs=5e-3)


def test_transfer_validation(cosine, golden):
    with pytest.raises(ValueError):
        transfer_product(_driver(golden), cosine, 1.0, 0.0, 0)
    with pytest.raises(ValueError):
        transfer_product(_driver(golden), cosine, -1.0, 0.0, 5)


def test_nonfinite_potential_reports_step(golden):
    huge = AnalyticPotential.from_coeffs({1: 1e308}, rho=1.0)
    with pytest.raises(CocycleNumericError) as ei:
        transfer_product(_driver(golden), huge, 1.0, 0.0, 50)
    assert ei.value.step >= 1


# ---------------------------------------------------------------------------
# Lyapunov curves
# ---------------------------------------------------------------------------

def test_lyapunov_curve_shape_and_determinism(cosine, golden):
    fam = SkewShiftFamily(d=2, omega=golden)
    a = lyapunov_curve(fam, cosine, 8.0, 0.5, [20, 40, 80], 12, seed=5)
    b = lyapunov_curve(fam, cosine, 8.0, 0.5, [20, 40, 80], 12, seed=5)
    assert [e.L_n for e in a.entries] == [e.L_n for e in b.entries]
    assert [e.n for e in a.entries] == [20, 40, 80]
    assert all(e.stderr >= 0.0 for e in a.entries)
    assert all(e.samples == 12 for e in a.entries)
    assert len(a.cauchy_gaps) == 2
    c = lyapunov_curve(fam, cosine, 8.0, 0.5, [20, 40, 80], 12, seed=6)
    assert [e.L_n for e in a.entries] != [e.L_n for e in c.entries]


def test_lyapunov_curve_worker_invariance(cosine, golden):
    fam = SkewShiftFamily(d=2, omega=golden)
    a = lyapunov_curve(fam, cosine, 8.0, 0.5, [16, 32], 8, seed=5, workers=1)
    b = lyapunov_curve(fam, cosine, 8.0, 0.5, [16, 32], 8, seed=5, workers=3)
    assert [e.L_n for e in a.entries] == [e.L_n for e in b.entries]


def test_lyapunov_curve_rotation_family(cosine):
    fam = RotationFamily(omega=0.31)
    curve = lyapunov_curve(fam, cosine, 6.0, 0.2, [32], 6, seed=2)
    assert curve.d == 1
    assert math.isfinite(curve.entries[0].L_n)


def test_lyapunov_curve_validation(cosine, golden):
    fam = SkewShiftFamily(d=2, omega=golden)
    with pytest.raises(ValueError):
        lyapunov_curve(fam, cosine, 8.0, 0.5, [], 4, seed=1)
    with pytest.raises(ValueError):
        lyapunov_curve(fam, cosine, 8.0, 0.5, [30, 30], 4, seed=1)
    with pytest.raises(ValueError):
        lyapunov_curve(fam, cosine, 8.0, 0.5, [10], 0, seed=1)


# ---------------------------------------------------------------------------
# Positivity scans
# ---------------------------------------------------------------------------

def test_positivity_scan_free_rates(zero_pot, golden):
    # Zero potential: L(E) is the closed-form hyperbolic rate, independent
    # of the sampled phases, so the finite-n estimate is tight.
    scan = positivity_scan(zero_pot, 4.0, [2.5, 3.0], n=400, samples=4,
                           seed=3)
    assert scan.min_ratio == pytest.approx(
        _hyperbolic_rate(2.5) / math.log(4.0), abs=0.02)
    assert scan.argmin_energy == 2.5
    ratios = [r.ratio for r in scan.table]
    assert ratios[0] < ratios[1]
    assert all(r.near_spectrum for r in scan.table)  # no reference given


def test_positivity_scan_strict_mode(zero_pot):
    scan = positivity_scan(zero_pot, 4.0, [2.5, 3.0], n=200, samples=4,
                           seed=3, spectrum_ref=[2.6], spectrum_tol=0.2,
                           strict=True)
    # Only 2.5 sits near the reference; 3.0 is excluded from the minimum.
    assert scan.argmin_energy == 2.5
    assert [r.near_spectrum for r in scan.table] == [True, False]
    with pytest.raises(ValueError):
        positivity_scan(zero_pot, 4.0, [3.0], n=100, samples=4, seed=3,
                        spectrum_ref=[0.0], spectrum_tol=0.1, strict=True)


def test_positivity_scan_validation(zero_pot, cosine):
    with pytest.raises(ValueError):
        positivity_scan(zero_pot, 1.0, [0.5], n=10, samples=2, seed=0)
    with pytest.raises(ValueError):
        positivity_scan(zero_pot, 4.0, [], n=10, samples=2, seed=0)
    with pytest.raises(ValueError):  # outside the a-priori energy window
        positivity_scan(zero_pot, 4.0, [5.0], n=10, samples=2, seed=0)
    with pytest.raises(ValueError):  # strict without a reference
        positivity_scan(cosine, 4.0, [0.5], n=10, samples=2, seed=0,
                        strict=True)


# ---------------------------------------------------------------------------
# Complexified cocycle bound
# ---------------------------------------------------------------------------

def test_complex_bound_cosine_closed_form(cosine):
    rep = complex_lower_bound(cosine, 10.0, 0.0, 0.1, 50)
    # inf_x |cos(2 pi (x + i y))| = sinh(2 pi y), attained at cos = 0.
    assert rep.epsilon_est == pytest.approx(math.sinh(0.2 * math.pi),
                                            abs=1e-12)
    assert rep.bound == pytest.approx(
        math.log(10.0 * math.sinh(0.2 * math.pi) - 1.0), abs=1e-12)
    assert rep.holds
    assert rep.u_n_complex >= rep.bound - rep.tolerance


def test_complex_bound_preconditions(cosine):
    with pytest.raises(StripViolationError):
        complex_lower_bound(cosine, 10.0, 0.0, cosine.rho / 5.0, 20)
    with pytest.raises(PreconditionError):
        # lambda * epsilon <= 1: no expansion guarantee to check.
        complex_lower_bound(cosine, 1.0, 0.0, 0.1, 20)
    with pytest.raises(ValueError):
        complex_lower_bound(cosine, 10.0, 0.0, -0.1, 20)
    with pytest.raises(ValueError):
        complex_lower_bound(cosine, 10.0, 0.0, 0.1, 0)
