"""Bit-for-bit agreement between the compiled and pure-Python kernels.

The compiled extension is built with FP contraction off, so both
implementations perform the same float64 operations in the same order;
every comparison here is exact equality, not a tolerance.
"""
from __future__ import annotations

import numpy as np
import pytest

from skewlab import backend
from skewlab.backend import forced, kernels
from skewlab.cocycle import lyapunov_curve
from skewlab.dynamics import SkewShiftDriver, SkewShiftFamily, SkewShiftParams

pytestmark = pytest.mark.skipif(
    "compiled" not in backend.available(),
    reason="compiled backend not built")


def _both(fn):
    with forced("python"):
        a = fn(kernels())
    with forced("compiled"):
        b = fn(kernels())
    return a, b


def _assert_same(a, b):
    if isinstance(a, tuple):
        assert len(a) == len(b)
        for x, y in zip(a, b):
            _assert_same(x, y)
    elif isinstance(a, np.ndarray):
        assert np.array_equal(np.asarray(a), np.asarray(b))
    else:
        assert a == b


@pytest.mark.parametrize("d", [1, 2, 3])
def test_orbit_phases_parity(golden, d):
    x0 = np.array([0.123, 0.456, 0.789][:d])
    a, b = _both(lambda k: k.orbit_phases(x0, golden, -5, 12))
    _assert_same(a, b)


def test_potential_evaluation_parity(cosine):
    # Large sample on purpose: compiler-fused trig (e.g. cos/sin pairs
    # collapsed into glibc sincos) diverges from separate libm calls by
    # 1 ulp on roughly 1 phase in 1000, which a small array can miss.
    rng = np.random.default_rng(1)
    phases = rng.random(20_000)
    cre, cim = cosine.kernel_arrays()
    _assert_same(*_both(lambda k: k.eval_potential(phases, cre, cim)))
    _assert_same(*_both(
        lambda k: k.eval_potential_complex(phases, 0.05, cre, cim)))


def test_potential_evaluation_parity_with_sine_modes():
    from skewlab.dynamics import AnalyticPotential
    p = AnalyticPotential.from_coeffs(
        {0: 0.1, 1: 0.3 - 0.2j, -1: 0.3 + 0.2j,
         2: 0.05 + 0.07j, -2: 0.05 - 0.07j}, rho=0.5)
    rng = np.random.default_rng(8)
    phases = rng.random(20_000)
    cre, cim = p.kernel_arrays()
    _assert_same(*_both(lambda k: k.eval_potential(phases, cre, cim)))
    _assert_same(*_both(
        lambda k: k.eval_potential_complex(phases, 0.03, cre, cim)))


def test_transfer_product_parity():
    rng = np.random.default_rng(2)
    diag = rng.uniform(-4, 4, 64)
    _assert_same(*_both(lambda k: k.transfer_product(diag, 0.37)))
    ns = np.array([4, 16, 64])
    _assert_same(*_both(lambda k: k.transfer_u_checkpoints(diag, 0.37, ns)))
    dre = rng.uniform(-3, 3, 20)
    dim = rng.uniform(-0.5, 0.5, 20)
    _assert_same(*_both(lambda k: k.transfer_product_complex(dre, dim, 0.9)))


def test_profile_parity(cosine, golden):
    rng = np.random.default_rng(3)
    xs = rng.random(32)
    shifts = SkewShiftDriver(
        SkewShiftParams(2, golden, (0.0, 0.3))).phases(1, 20)
    cre, cim = cosine.kernel_arrays()
    _assert_same(*_both(lambda k: k.profile_u(xs, shifts, 3.5, 0.9, cre, cim)))


def test_continuant_parity():
    rng = np.random.default_rng(4)
    diag = rng.uniform(-5, 5, 40)
    _assert_same(*_both(lambda k: k.continuant_logs(diag, 0.21)))
    _assert_same(*_both(lambda k: k.continuant_plain(diag[:12], 0.21)))


def test_eigensolver_parity():
    rng = np.random.default_rng(5)
    diag = rng.uniform(-3, 3, 24)
    scale = float(np.max(np.abs(diag))) + 2.0
    _assert_same(*_both(lambda k: k.sturm_count(diag, 0.11)))
    _assert_same(*_both(lambda k: k.eigenvalues_bisect(diag, 1e-13 * scale)))
    rhs = rng.standard_normal(24)
    _assert_same(*_both(
        lambda k: k.tridiag_shifted_solve(diag, 0.11, rhs)))


def test_scalar_kernel_parity(golden):
    _assert_same(*_both(lambda k: k.weyl_sum(3, 0.41, golden, 200)))
    _assert_same(*_both(lambda k: k.norm_2x2(1.3, -0.2, 0.7, 2.1)))
    _assert_same(*_both(
        lambda k: k.norm_2x2_complex(1.3, 0.1, -0.2, 0.4, 0.7, -0.9, 2.1, 0.0)))


def test_end_to_end_curve_parity(cosine, golden):
    fam = SkewShiftFamily(d=2, omega=golden)

    def curve():
        return lyapunov_curve(fam, cosine, 6.0, 0.8, [16, 32], samples=6,
                              seed=9)

    with forced("python"):
        a = curve()
    with forced("compiled"):
        b = curve()
    for ea, eb in zip(a.entries, b.entries):
        assert ea.L_n == eb.L_n
        assert ea.stderr == eb.stderr
