"""Potentials, torus drivers, and rational-approximation utilities."""
from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

import oracles
from skewlab.dynamics import (GOLDEN_MEAN, AnalyticPotential, RotationDriver,
                              RotationFamily, SkewShiftDriver,
                              SkewShiftFamily, SkewShiftParams,
                              best_convergent, circle_dist,
                              constant_potential, continued_fraction,
                              cosine_potential, diophantine_check,
                              eval_potential, eval_potential_complex,
                              load_potential, named_potential, save_potential,
                              skew_orbit, skew_orbit_fixedpoint,
                              suggested_kmax, zero_potential)
from skewlab.errors import InvalidPotentialError, StripViolationError


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

def test_cosine_point_values(cosine):
    assert eval_potential(cosine, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert eval_potential(cosine, 0.5) == pytest.approx(-1.0, abs=1e-15)
    assert abs(eval_potential(cosine, 0.25)) < 1e-15
    assert eval_potential(cosine, 1.25) == pytest.approx(
        eval_potential(cosine, 0.25), abs=1e-15)


def test_constant_and_zero_values():
    c = constant_potential(2.5)
    xs = np.linspace(0, 1, 7, endpoint=False)
    assert np.all(c.values(xs) == 2.5)
    z = zero_potential()
    assert np.all(z.values(xs) == 0.0)
    assert z.sup_bound == 0.0


def test_values_match_direct_series():
    coeffs = {0: 0.3 + 0j, 1: 0.25 - 0.1j, 3: 0.02 + 0.07j}
    p = AnalyticPotential.from_coeffs(coeffs, rho=0.8)
    xs = np.array([0.0, 0.1, 0.377, 0.5, 0.925])
    direct = np.zeros_like(xs)
    for k, c in coeffs.items():
        if k == 0:
            direct += c.real
        else:
            ang = 2.0 * math.pi * k * xs
            direct += 2.0 * (c.real * np.cos(ang) - c.imag * np.sin(ang))
    assert np.allclose(p.values(xs), direct, atol=1e-14)


def test_sup_and_decay_bounds_are_bounds(cosine):
    xs = np.arange(4096) / 4096.0
    assert float(np.max(np.abs(cosine.values(xs)))) <= cosine.sup_bound
    for k, c in cosine.coeffs.items():
        assert abs(c) <= cosine.decay_amp * math.exp(-cosine.rho * k) * (1 + 1e-12)


def test_from_coeffs_realness_validation():
    with pytest.raises(InvalidPotentialError):
        AnalyticPotential.from_coeffs({}, rho=1.0)
    with pytest.raises(InvalidPotentialError):
        AnalyticPotential.from_coeffs({0: 1j}, rho=1.0)
    with pytest.raises(InvalidPotentialError):
        AnalyticPotential.from_coeffs({1: 1j, -1: 1j}, rho=1.0)
    with pytest.raises(InvalidPotentialError):
        AnalyticPotential.from_coeffs({1: 0.5}, rho=-1.0)
    # A consistent two-sided table is accepted.
    p = AnalyticPotential.from_coeffs(
        {1: 0.3 + 0.4j, -1: 0.3 - 0.4j}, rho=1.0)
    assert p.coeffs[1] == 0.3 + 0.4j


def test_negative_only_frequency_is_conjugated():
    p = AnalyticPotential.from_coeffs({-2: 1.0 + 2.0j, 0: 0.5}, rho=1.0)
    assert p.coeffs[2] == 1.0 - 2.0j
    xs = np.array([0.1, 0.62])
    # Values are real by construction.
    assert np.all(np.isreal(p.values(xs)))


def test_decay_amp_violation_rejected():
    with pytest.raises(InvalidPotentialError):
        AnalyticPotential.from_coeffs({1: 0.5}, rho=1.0, decay_amp=0.1)


def test_complex_evaluation_matches_cosine_closed_form(cosine):
    for x, y in [(0.0, 0.05), (0.3, 0.1), (0.77, -0.15)]:
        got = eval_potential_complex(cosine, complex(x, y))
        want = cmath.cos(2.0 * math.pi * complex(x, y))
        assert abs(got - want) < 1e-12 * max(1.0, abs(want))


def test_complex_evaluation_real_axis_is_exactly_real(cosine):
    z = eval_potential_complex(cosine, complex(0.3, 0.0))
    assert z.imag == 0.0
    assert z.real == pytest.approx(eval_potential(cosine, 0.3), abs=1e-15)


def test_complex_evaluation_strip_enforced(cosine):
    with pytest.raises(StripViolationError):
        eval_potential_complex(cosine, complex(0.1, cosine.rho / 5.0))


def test_save_load_round_trip(tmp_path):
    p = AnalyticPotential.from_coeffs(
        {0: 0.125, 1: 0.5 - 0.25j, 4: 1e-3 + 2e-3j}, rho=0.7)
    path = tmp_path / "pot.txt"
    save_potential(p, path)
    q = load_potential(path)
    assert q.rho == p.rho
    assert q.coeffs == p.coeffs
    assert q.decay_amp == p.decay_amp
    assert q.sup_bound == p.sup_bound


def test_load_potential_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("rho = 1.0\nnot-a-line\n")
    with pytest.raises(InvalidPotentialError, match=":2"):
        load_potential(bad)
    bad.write_text("1 = 0.5 0.0\n")
    with pytest.raises(InvalidPotentialError, match="missing rho"):
        load_potential(bad)
    bad.write_text("rho = 1.0\n1 = 0.5 0.0\n1 = 0.25 0.0\n")
    with pytest.raises(InvalidPotentialError, match="duplicate"):
        load_potential(bad)
    bad.write_text("rho = 1.0\nfoo = 0.5 0.0\n")
    with pytest.raises(InvalidPotentialError, match="unknown key"):
        load_potential(bad)


def test_named_potential_dispatch(tmp_path):
    assert named_potential("cosine").coeffs[1] == 0.5
    assert named_potential("zero").sup_bound == 0.0
    assert eval_potential(named_potential("constant:2.5"), 0.3) == 2.5
    p = cosine_potential()
    path = tmp_path / "v.txt"
    save_potential(p, path)
    assert named_potential(str(path)).coeffs == p.coeffs


def test_suggested_kmax():
    assert suggested_kmax(1.0, 1.0) == math.ceil(math.log(1e16))
    assert suggested_kmax(1e-20, 1.0) == 0
    assert suggested_kmax(1.0, 0.5) == 2 * suggested_kmax(1.0, 1.0)


# ---------------------------------------------------------------------------
# Drivers and orbits
# ---------------------------------------------------------------------------

def test_skew_params_validation_and_reduction():
    with pytest.raises(ValueError):
        SkewShiftParams(0, 0.5, ())
    with pytest.raises(ValueError):
        SkewShiftParams(2, 0.5, (0.1,))
    prm = SkewShiftParams(1, 1.618, (2.25,))
    assert prm.omega == pytest.approx(0.618, abs=1e-12)
    assert prm.x0[0] == 0.25


def test_orbit_matches_exact_rational_arithmetic(golden):
    x, y = 0.2437, 0.7113
    prm = SkewShiftParams(2, golden, (x, y))
    got = skew_orbit(prm, 400)
    for j in [1, 2, 3, 50, 199, 400]:
        want = oracles.orbit_exact_d2(x, y, golden, j)
        assert abs(circle_dist(got[j - 1] - want)) < 1e-10, j


def test_orbit_matches_fixedpoint_closed_form(golden):
    prm = SkewShiftParams(2, golden, (0.9, 0.1))
    got = skew_orbit(prm, 300)
    for j in [1, 7, 128, 300]:
        want = skew_orbit_fixedpoint(prm, j)
        assert circle_dist(got[j - 1] - want) < 1e-10


def test_fixedpoint_agrees_with_fraction_oracle(golden):
    prm = SkewShiftParams(2, golden, (0.31, 0.65))
    for j in [0, 1, 17, 1000, 12345]:
        a = skew_orbit_fixedpoint(prm, j)
        b = oracles.orbit_exact_d2(0.31, 0.65, golden, j)
        assert circle_dist(a - b) < 1e-14


def test_rotation_orbit_is_linear():
    drv = RotationDriver(x=0.2, omega=0.3)
    ph = drv.phases(0, 10)
    for j in range(11):
        assert circle_dist(ph[j] - (0.2 + 0.3 * j)) < 1e-12


def test_driver_shift_rebases_orbit(golden):
    drv = SkewShiftDriver(SkewShiftParams(3, golden, (0.12, 0.34, 0.56)))
    base = drv.phases(-6, 9)
    for s in (-4, 0, 3, 7):
        moved = drv.shifted(s)
        ph = moved.phases(0, 2)
        for k in range(3):
            assert circle_dist(ph[k] - base[s + k + 6]) < 1e-11, (s, k)


def test_phase_zero_is_first_coordinate(golden):
    drv = SkewShiftDriver(SkewShiftParams(2, golden, (0.41, 0.77)))
    assert drv.phases(0, 0)[0] == pytest.approx(0.41, abs=1e-15)


def test_backward_orbit_inverts_forward(golden):
    drv = SkewShiftDriver(SkewShiftParams(2, golden, (0.3, 0.9)))
    ph = drv.phases(-40, 40)
    # The exact closed form covers negative j as well.
    for j in (-40, -13, -1):
        want = oracles.orbit_exact_d2(0.3, 0.9, golden, j)
        assert circle_dist(ph[j + 40] - want) < 1e-10


def test_orbit_values_stay_on_torus(golden):
    vals = skew_orbit(SkewShiftParams(2, golden, (0.5, 0.5)), 1000)
    assert np.all(vals >= 0.0) and np.all(vals < 1.0)
    assert skew_orbit(SkewShiftParams(2, golden, (0.5, 0.5)), 0).size == 0
    with pytest.raises(ValueError):
        skew_orbit(SkewShiftParams(2, golden, (0.5, 0.5)), -1)


def test_families_produce_drivers(golden):
    fam = SkewShiftFamily(d=2, omega=golden)
    drv = fam((0.1, 0.2))
    assert isinstance(drv, SkewShiftDriver)
    assert drv.d == 2
    rot = RotationFamily(omega=0.25)((0.5,))
    assert rot.phases(1, 1)[0] == pytest.approx(0.75, abs=1e-15)


def test_equidistribution_sanity(golden):
    # Birkhoff average of cos(2 pi theta_j) along the skew orbit decays.
    vals = skew_orbit(SkewShiftParams(2, golden, (0.0, 0.33)), 20000)
    avg = float(np.mean(np.cos(2.0 * math.pi * vals)))
    assert abs(avg) < 0.02


# ---------------------------------------------------------------------------
# Continued fractions
# ---------------------------------------------------------------------------

def test_golden_mean_continued_fraction(golden):
    cf = continued_fraction(golden, 25)
    assert cf.quotients == (1,) * 25
    assert not cf.terminating
    fib = [(1, 1), (1, 2), (2, 3), (3, 5), (5, 8), (8, 13), (13, 21)]
    assert cf.convergents[:7] == tuple(fib)


def test_rational_continued_fraction_terminates():
    cf = continued_fraction(0.5, 10)
    assert cf.terminating
    assert cf.convergents[-1] == (1, 2)
    cf = continued_fraction(0.375, 10)  # 3/8
    assert cf.terminating
    assert cf.convergents[-1] == (3, 8)


def test_continued_fraction_validation():
    with pytest.raises(ValueError):
        continued_fraction(0.0, 5)
    with pytest.raises(ValueError):
        continued_fraction(1.5, 5)
    with pytest.raises(ValueError):
        continued_fraction(0.5, 0)


def test_best_convergent_matches_bruteforce(golden):
    rng = np.random.default_rng(7)
    omegas = [golden, 0.5, 0.375, math.pi - 3.0, 0.7221, 1.0 / 3.0 + 1e-9]
    omegas += list(rng.uniform(0.01, 0.99, size=6))
    for omega in omegas:
        for cap in (1, 2, 3, 10, 57, 800):
            got = best_convergent(omega, cap)
            want = oracles.best_rational_bruteforce(omega, cap)
            assert got == want, (omega, cap)
    with pytest.raises(ValueError):
        best_convergent(golden, 0)


def test_circle_dist_basics():
    assert circle_dist(0.75) == 0.25
    assert circle_dist(-0.3) == pytest.approx(0.3, abs=1e-15)
    assert circle_dist(4.0) == 0.0
    assert circle_dist(0.5) == 0.5


def test_diophantine_check_matches_direct_scan(golden):
    cf = continued_fraction(golden, 20)
    rep = diophantine_check(cf, alpha=2.0, n_max=50)
    best = math.inf
    worst = 2
    for n in range(2, 51):
        val = circle_dist(n * golden) * n * math.log(n) ** 2
        if val < best:
            best, worst = val, n
    assert rep.c_omega_estimate == pytest.approx(best, rel=1e-12)
    assert rep.worst_n == worst
    with pytest.raises(ValueError):
        diophantine_check(cf, alpha=1.0, n_max=50)
    with pytest.raises(ValueError):
        diophantine_check(cf, alpha=2.0, n_max=1)
