"""Finite-volume operators: determinants, Green functions, eigenproblems."""
from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

import oracles
from skewlab.dynamics import SkewShiftDriver, SkewShiftParams
from skewlab.errors import FitUndefinedError, ResolventSingularError
from skewlab.lattice import (DecayFit, EigenPair, FiniteVolumeOperator,
                             build_operator, decay_fit, determinant_sequence,
                             eigen_all, eigenvalues_only, green_decay_scan,
                             green_entry, reconstruct_check, sturm_count)


def _op(diag, start=1) -> FiniteVolumeOperator:
    diag = np.asarray(diag, dtype=float)
    return FiniteVolumeOperator(
        interval=(start, start + len(diag) - 1), diag=diag)


def _free_op(n: int) -> FiniteVolumeOperator:
    return _op(np.zeros(n))


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def test_operator_validation():
    with pytest.raises(ValueError):
        FiniteVolumeOperator(interval=(3, 2), diag=np.zeros(1))
    with pytest.raises(ValueError):
        FiniteVolumeOperator(interval=(1, 3), diag=np.zeros(2))
    op = _op([1.0, -4.0, 2.0])
    assert op.n_sites == 3
    assert op.scale == 6.0


def test_apply_matches_dense():
    rng = np.random.default_rng(3)
    diag = rng.uniform(-5, 5, 7)
    op = _op(diag)
    v = rng.standard_normal(7)
    want = oracles.dense_tridiag(diag) @ v
    assert np.allclose(op.apply(v), want, atol=1e-13)


def test_build_operator_samples_orbit(cosine, golden):
    drv = SkewShiftDriver(SkewShiftParams(2, golden, (0.2, 0.9)))
    op = build_operator(drv, cosine, 3.0, (-2, 4))
    assert op.interval == (-2, 4)
    want = 3.0 * cosine.values(drv.phases(-2, 4))
    assert np.array_equal(op.diag, want)
    with pytest.raises(ValueError):
        build_operator(drv, cosine, 3.0, (2, 1))


# ---------------------------------------------------------------------------
# Determinants vs cofactor expansion
# ---------------------------------------------------------------------------

def test_determinants_match_cofactor_oracle():
    rng = np.random.default_rng(12345)
    for _ in range(60):
        n = int(rng.integers(1, 9))
        diag = rng.uniform(-5, 5, n)
        energy = float(rng.uniform(-6, 6))
        seq = determinant_sequence(_op(diag), energy)
        assert not seq.overflowed
        want = oracles.det_cofactor(
            oracles.dense_tridiag(diag) - energy * np.eye(n))
        got = seq.values[-1]
        assert got == pytest.approx(want, rel=1e-10, abs=1e-10)
        # The signed-log form tracks the same number.
        if want != 0.0:
            assert seq.final_sign == math.copysign(1, want)
            assert seq.final_logabs == pytest.approx(
                math.log(abs(want)), abs=1e-9)


def test_determinant_prefixes_are_leading_minors():
    rng = np.random.default_rng(99)
    diag = rng.uniform(-4, 4, 6)
    energy = 0.7
    seq = determinant_sequence(_op(diag), energy)
    for k in range(1, 7):
        want = oracles.det_cofactor(
            oracles.dense_tridiag(diag[:k]) - energy * np.eye(k))
        assert seq.values[k - 1] == pytest.approx(want, rel=1e-10, abs=1e-10)
    assert seq.signs[0] == 1 and seq.logabs[0] == 0.0  # D_0 = 1


def test_determinant_overflow_falls_back_to_logs():
    seq = determinant_sequence(_op(np.full(400, 50.0)), 0.0)
    assert seq.overflowed
    assert seq.values is None
    assert np.isfinite(seq.final_logabs)
    # log|D_N| ~ N log 50 for a strongly diagonal-dominant volume.
    assert seq.final_logabs == pytest.approx(400 * math.log(50.0), rel=0.01)


# ---------------------------------------------------------------------------
# Green functions vs dense inversion
# ---------------------------------------------------------------------------

def test_green_matches_dense_inverse():
    rng = np.random.default_rng(2025)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        diag = rng.uniform(-5, 5, n)
        energy = float(rng.uniform(-6, 6))
        op = _op(diag)
        want = oracles.green_dense(diag, energy)
        for i in range(n):
            for j in range(n):
                got = green_entry(op, energy, 1 + i, 1 + j)
                assert got == pytest.approx(want[i, j], rel=1e-8, abs=1e-8)


def test_green_solves_the_resolvent_identity():
    rng = np.random.default_rng(77)
    n = 7
    diag = rng.uniform(-5, 5, n)
    energy = 0.31
    op = _op(diag)
    g = np.array([[green_entry(op, energy, 1 + i, 1 + j) for j in range(n)]
                  for i in range(n)])
    lhs = (oracles.dense_tridiag(diag) - energy * np.eye(n)) @ g
    assert np.allclose(lhs, np.eye(n), atol=1e-8)
    assert np.allclose(g, g.T, atol=0.0)  # symmetric by construction


def test_green_index_validation_and_offsets():
    op = FiniteVolumeOperator(interval=(-3, 3), diag=np.arange(7, dtype=float))
    with pytest.raises(ValueError):
        green_entry(op, 0.5, -4, 0)
    # Index labels are interval-relative: shifting the interval must not
    # change the values.
    op2 = FiniteVolumeOperator(interval=(10, 16),
                               diag=np.arange(7, dtype=float))
    a = green_entry(op, 9.5, -3 + 1, -3 + 5)
    b = green_entry(op2, 9.5, 10 + 1, 10 + 5)
    assert a == b


def test_green_singular_energy_raises():
    op = _free_op(40)
    bad = -2.0 * math.cos(math.pi / 41.0)  # exact eigenvalue
    with pytest.raises(ResolventSingularError) as ei:
        green_entry(op, bad, 1, 40)
    assert ei.value.dist_estimate < 1e-8


# ---------------------------------------------------------------------------
# Eigenvalues
# ---------------------------------------------------------------------------

def test_free_volume_eigenvalues_closed_form():
    n = 30
    got = eigenvalues_only(_free_op(n))
    assert np.allclose(got, oracles.free_eigenvalues(n), atol=1e-11)


def test_eigenvalues_match_scipy():
    rng = np.random.default_rng(17)
    for n in (3, 20, 60):
        diag = rng.uniform(-6, 6, n)
        op = _op(diag)
        want = eigh_tridiagonal(diag, -np.ones(n - 1),
                                eigvals_only=True)
        got = eigenvalues_only(op)
        assert np.allclose(got, np.sort(want), atol=1e-11 * op.scale)


def test_sturm_count_consistent_with_eigenvalues():
    rng = np.random.default_rng(31)
    diag = rng.uniform(-5, 5, 35)
    op = _op(diag)
    vals = eigenvalues_only(op)
    for energy in rng.uniform(-8, 8, 50):
        assert sturm_count(op, float(energy)) == int(
            np.sum(vals < float(energy)))


def test_gershgorin_containment():
    rng = np.random.default_rng(8)
    diag = rng.uniform(-5, 5, 25)
    vals = eigenvalues_only(_op(diag))
    assert np.all(vals >= diag.min() - 2.0)
    assert np.all(vals <= diag.max() + 2.0)


# ---------------------------------------------------------------------------
# Eigenvectors
# ---------------------------------------------------------------------------

def test_eigen_all_residuals_and_orthogonality():
    rng = np.random.default_rng(11)
    diag = rng.uniform(-5, 5, 40)
    op = _op(diag)
    pairs = eigen_all(op)
    assert len(pairs) == 40
    vals = [q.value for q in pairs]
    assert vals == sorted(vals)
    vecs = np.stack([q.vector for q in pairs])
    for q in pairs:
        assert q.converged
        assert q.residual <= 1e-8 * op.scale
        assert np.linalg.norm(q.vector) == pytest.approx(1.0, abs=1e-12)
        peak = q.vector[int(np.argmax(np.abs(q.vector)))]
        assert peak > 0.0  # sign convention
    gram = vecs @ vecs.T
    assert np.allclose(gram, np.eye(40), atol=1e-6)


def test_eigenvectors_match_scipy_directions():
    rng = np.random.default_rng(23)
    diag = rng.uniform(-4, 4, 24)
    op = _op(diag)
    pairs = eigen_all(op)
    w, v = eigh_tridiagonal(diag, -np.ones(23))
    order = np.argsort(w)
    for k, q in enumerate(pairs):
        ref = v[:, order[k]]
        assert abs(float(np.dot(ref, q.vector))) == pytest.approx(1.0,
                                                                  abs=1e-8)


def test_free_volume_eigenvectors_are_sines():
    n = 20
    pairs = eigen_all(_free_op(n))
    for k in (1, 7, 20):
        ref = oracles.free_eigenvector(n, k)
        got = pairs[k - 1].vector
        assert abs(float(np.dot(ref, got))) == pytest.approx(1.0, abs=1e-9)


def test_near_degenerate_cluster_stays_orthogonal():
    # Two far-apart deep wells produce an almost exactly degenerate doublet.
    diag = np.zeros(30)
    diag[4] = -50.0
    diag[25] = -50.0
    op = _op(diag)
    pairs = eigen_all(op)
    assert abs(pairs[0].value - pairs[1].value) < 1e-7 * op.scale
    dot = float(np.dot(pairs[0].vector, pairs[1].vector))
    assert abs(dot) < 1e-8
    assert pairs[0].converged and pairs[1].converged


# ---------------------------------------------------------------------------
# Reconstruction identity and decay fits
# ---------------------------------------------------------------------------

def test_reconstruction_identity_on_exact_eigenpairs():
    # Closed-form sine eigenpairs keep solver error out of the identity;
    # the window Green function can amplify any eigenvector inaccuracy by
    # 1/dist(E, spec(window)), so only exact pairs give a sharp check.
    rng = np.random.default_rng(41)
    checked = 0
    attempts = 0
    while checked < 10 and attempts < 40:
        attempts += 1
        n = int(rng.integers(24, 48))
        k = int(rng.integers(1, n + 1))
        op = _free_op(n)
        pair = EigenPair(value=-2.0 * math.cos(k * math.pi / (n + 1)),
                         vector=oracles.free_eigenvector(n, k), residual=0.0)
        a1 = int(rng.integers(2, 6))
        b1 = int(rng.integers(n - 6, n - 1))
        try:
            resid = reconstruct_check(op, pair, (1 + a1, 1 + b1))
        except ResolventSingularError:
            continue  # window resonant at this eigenvalue; draw again
        assert resid <= 1e-8
        checked += 1
    assert checked == 10


def test_reconstruction_identity_on_solved_pairs_when_well_conditioned():
    # Solver eigenpairs satisfy the identity when the eigenvalue keeps a
    # healthy distance from the window restriction's spectrum.
    rng = np.random.default_rng(42)
    checked = 0
    attempts = 0
    while checked < 5 and attempts < 60:
        attempts += 1
        n = 30
        diag = rng.uniform(-5, 5, n)
        op = _op(diag)
        pairs = eigen_all(op)
        q = pairs[int(rng.integers(0, n))]
        window = (4, n - 3)
        wdiag = diag[window[0] - 1: window[1]]
        wvals = eigenvalues_only(FiniteVolumeOperator(
            interval=(1, len(wdiag)), diag=wdiag))
        if float(np.min(np.abs(wvals - q.value))) < 0.05:
            continue
        resid = reconstruct_check(op, q, window)
        assert resid <= 1e-6
        checked += 1
    assert checked == 5


def test_reconstruction_window_validation():
    op = _free_op(10)
    pairs = eigen_all(op)
    with pytest.raises(ValueError):
        reconstruct_check(op, pairs[0], (1, 9))   # touches the left edge
    with pytest.raises(ValueError):
        reconstruct_check(op, pairs[0], (2, 10))  # touches the right edge


def test_decay_fit_recovers_synthetic_rate():
    n = 64
    center = 30
    rate = 0.3
    vec = np.exp(-rate * np.abs(np.arange(n) - center))
    vec /= np.linalg.norm(vec)
    pair = EigenPair(value=0.0, vector=vec, residual=0.0)
    fit = decay_fit(pair)
    assert isinstance(fit, DecayFit)
    assert fit.rate == pytest.approx(rate, abs=1e-9)
    assert fit.center == center
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_decay_fit_guards():
    with pytest.raises(ValueError):
        decay_fit(EigenPair(value=0.0, vector=np.ones(8), residual=0.0))
    flat = np.full(20, 1e-20)
    flat[3] = 1.0
    with pytest.raises(FitUndefinedError):
        decay_fit(EigenPair(value=0.0, vector=flat, residual=0.0))


# ---------------------------------------------------------------------------
# Green decay scan
# ---------------------------------------------------------------------------

def test_green_decay_scan_fields_and_determinism(cosine):
    scan = green_decay_scan(cosine, 1000.0, 300.0, N=40, x_samples=25,
                            seed=9)
    assert scan.samples == 25
    assert scan.violations + scan.skipped <= 25
    assert 0.0 <= scan.violation_fraction <= 1.0
    assert scan.threshold == pytest.approx(
        math.exp(-40 * math.log(1000.0) / 20.0), rel=1e-12)
    again = green_decay_scan(cosine, 1000.0, 300.0, N=40, x_samples=25,
                             seed=9, workers=3)
    assert again.violation_fraction == scan.violation_fraction
    assert again.violations == scan.violations


def test_green_decay_scan_flags_slow_decay(zero_pot):
    # The free operator at a mid-band energy has oscillatory, non-decaying
    # Green entries, so essentially every sample violates the threshold.
    scan = green_decay_scan(zero_pot, 100.0, 0.43, N=40, x_samples=10,
                            seed=1)
    assert scan.violation_fraction > 0.9


def test_green_decay_scan_validation(cosine):
    with pytest.raises(ValueError):
        green_decay_scan(cosine, 100.0, 0.0, N=10, x_samples=5, seed=0)
