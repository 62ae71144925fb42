"""Pure-Python numeric kernels.

This module is the reference implementation of the hot loops; the compiled
extension ``_ckernels`` mirrors it operation for operation (same expression
shapes, same evaluation order, same guards) so that both backends agree to
rounding error.  Keep the two files in sync.

Arrays are converted to Python lists at entry (exact for float64) because
scalar loops over numpy arrays pay a boxing cost.  Accumulation paths avoid
numpy reductions: the compiled twin accumulates sequentially and the two
must round identically wherever bit-stability matters (the eigenvalue
bisection in particular).  The one exception is ``eigenvalues_bisect``,
which vectorizes across *independent* eigenvalue indices; the per-index
arithmetic is unchanged.
"""
from __future__ import annotations

import math

import numpy as np

TWO_PI = 6.283185307179586476925287  # rounds to the double nearest 2*pi

BACKEND_NAME = "python"

_TINY = 1e-300


def _frac(x: float) -> float:
    return x - math.floor(x)


# ---------------------------------------------------------------------------
# Orbits and potential evaluation
# ---------------------------------------------------------------------------

def orbit_phases(x0: np.ndarray, omega: float, j0: int, j1: int) -> np.ndarray:
    """First coordinates of T^j(x0) for j in [j0, j1] (inclusive).

    T is the skew shift on the d-torus: the last coordinate rotates by
    ``omega`` and each other coordinate is shifted by its right neighbour.
    Backward steps invert the map exactly, coordinate by coordinate.
    """
    if j1 < j0:
        raise ValueError("empty orbit range")
    x = [_frac(float(v)) for v in x0]
    d = len(x)
    omega = float(omega)
    out = np.empty(j1 - j0 + 1, dtype=np.float64)

    def step_forward(state):
        for i in range(d - 1):
            state[i] = _frac(state[i] + state[i + 1])
        state[d - 1] = _frac(state[d - 1] + omega)

    def step_backward(state):
        state[d - 1] = _frac(state[d - 1] - omega)
        for i in range(d - 2, -1, -1):
            state[i] = _frac(state[i] - state[i + 1])

    if j0 >= 0:
        for _ in range(j0):
            step_forward(x)
    else:
        for _ in range(-j0):
            step_backward(x)
    out[0] = x[0]
    for idx in range(1, j1 - j0 + 1):
        step_forward(x)
        out[idx] = x[0]
    return out


def eval_potential(phases: np.ndarray, cre: np.ndarray, cim: np.ndarray) -> np.ndarray:
    """Evaluate v(theta) = c0 + sum_k 2*(re_k cos(2 pi k theta) - im_k sin(...)).

    ``cre[k]``/``cim[k]`` hold the coefficient of e^{2 pi i k theta} for
    k = 0..K; negative modes are the conjugates, which is what makes the
    real form above exact.
    """
    ph = [float(t) for t in phases]
    re = [float(c) for c in cre]
    im = [float(c) for c in cim]
    kmax = len(re) - 1
    out = np.empty(len(ph), dtype=np.float64)
    for idx, theta in enumerate(ph):
        val = re[0]
        for k in range(1, kmax + 1):
            ang = (TWO_PI * k) * theta
            c = math.cos(ang)
            if im[k] != 0.0:
                s = math.sin(ang)
                val += 2.0 * (re[k] * c - im[k] * s)
            else:
                val += 2.0 * (re[k] * c)
        out[idx] = val
    return out


def eval_potential_complex(phases: np.ndarray, y0: float, cre: np.ndarray,
                           cim: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate v(theta + i*y0) pairing the +k and -k modes.

    Returns (real part, imaginary part).  With w = 2 pi k y0 the pair sum is
    2*cosh(w)*(re*cos - im*sin) - i*2*sinh(w)*(re*sin + im*cos); y0 = 0
    reduces exactly to :func:`eval_potential`.
    """
    ph = [float(t) for t in phases]
    re = [float(c) for c in cre]
    im = [float(c) for c in cim]
    y0 = float(y0)
    kmax = len(re) - 1
    out_re = np.empty(len(ph), dtype=np.float64)
    out_im = np.empty(len(ph), dtype=np.float64)
    cosh_w = [1.0] * (kmax + 1)
    sinh_w = [0.0] * (kmax + 1)
    for k in range(1, kmax + 1):
        w = (TWO_PI * k) * y0
        cosh_w[k] = math.cosh(w)
        sinh_w[k] = math.sinh(w)
    for idx, theta in enumerate(ph):
        vre = re[0]
        vim = 0.0
        for k in range(1, kmax + 1):
            ang = (TWO_PI * k) * theta
            c = math.cos(ang)
            s = math.sin(ang)
            vre += 2.0 * cosh_w[k] * (re[k] * c - im[k] * s)
            vim -= 2.0 * sinh_w[k] * (re[k] * s + im[k] * c)
        out_re[idx] = vre
        out_im[idx] = vim
    return out_re, out_im


# ---------------------------------------------------------------------------
# Transfer-matrix products
# ---------------------------------------------------------------------------

def _norm_2x2(m00: float, m01: float, m10: float, m11: float) -> float:
    """Largest singular value of a real 2x2 matrix (closed form)."""
    fro2 = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11
    det = m00 * m11 - m01 * m10
    disc = fro2 * fro2 - 4.0 * (det * det)
    if disc < 0.0:
        disc = 0.0
    return math.sqrt(0.5 * (fro2 + math.sqrt(disc)))


def norm_2x2(m00: float, m01: float, m10: float, m11: float) -> float:
    return _norm_2x2(m00, m01, m10, m11)


def norm_2x2_complex(m00r, m00i, m01r, m01i, m10r, m10i, m11r, m11i) -> float:
    fro2 = (m00r * m00r + m00i * m00i + m01r * m01r + m01i * m01i
            + m10r * m10r + m10i * m10i + m11r * m11r + m11i * m11i)
    detr = (m00r * m11r - m00i * m11i) - (m01r * m10r - m01i * m10i)
    deti = (m00r * m11i + m00i * m11r) - (m01r * m10i + m01i * m10r)
    det2 = detr * detr + deti * deti
    disc = fro2 * fro2 - 4.0 * det2
    if disc < 0.0:
        disc = 0.0
    return math.sqrt(0.5 * (fro2 + math.sqrt(disc)))


def transfer_product(diag: np.ndarray, energy: float):
    """Product of one-step matrices [[energy - diag[j], -1], [1, 0]].

    Steps run j = 0..n-1 (left multiplication by later steps).  Entries are
    rescaled by their max modulus every step; returns
    ``(m00, m01, m10, m11, log_scale)`` with the true product equal to
    exp(log_scale) times the returned matrix.
    """
    dl = [float(v) for v in diag]
    energy = float(energy)
    m00 = 1.0
    m01 = 0.0
    m10 = 0.0
    m11 = 1.0
    log_scale = 0.0
    for dj in dl:
        a = energy - dj
        t00 = a * m00 - m10
        t01 = a * m01 - m11
        s = abs(t00)
        if abs(t01) > s:
            s = abs(t01)
        if abs(m00) > s:
            s = abs(m00)
        if abs(m01) > s:
            s = abs(m01)
        m10 = m00 / s
        m11 = m01 / s
        m00 = t00 / s
        m01 = t01 / s
        log_scale += math.log(s)
    return m00, m01, m10, m11, log_scale


def transfer_u_checkpoints(diag: np.ndarray, energy: float,
                           ns: np.ndarray) -> np.ndarray:
    """Values of u_n = log||M_n|| / n at the checkpoints ``ns`` (ascending)."""
    dl = [float(v) for v in diag]
    nl = [int(v) for v in ns]
    energy = float(energy)
    out = np.empty(len(nl), dtype=np.float64)
    ptr = 0
    m00 = 1.0
    m01 = 0.0
    m10 = 0.0
    m11 = 1.0
    log_scale = 0.0
    for j, dj in enumerate(dl):
        a = energy - dj
        t00 = a * m00 - m10
        t01 = a * m01 - m11
        s = abs(t00)
        if abs(t01) > s:
            s = abs(t01)
        if abs(m00) > s:
            s = abs(m00)
        if abs(m01) > s:
            s = abs(m01)
        m10 = m00 / s
        m11 = m01 / s
        m00 = t00 / s
        m01 = t01 / s
        log_scale += math.log(s)
        while ptr < len(nl) and nl[ptr] == j + 1:
            nrm = _norm_2x2(m00, m01, m10, m11)
            out[ptr] = (log_scale + math.log(nrm)) / (j + 1)
            ptr += 1
    if ptr != len(nl):
        raise ValueError("checkpoint beyond the diagonal length")
    return out


def transfer_product_complex(dre: np.ndarray, dim: np.ndarray, energy: float):
    """Complex transfer product for diagonal values dre[j] + i*dim[j].

    Returns (m00r, m00i, m01r, m01i, m10r, m10i, m11r, m11i, log_scale).
    Rescaling uses the max over entries of max(|re|, |im|).
    """
    rl = [float(v) for v in dre]
    il = [float(v) for v in dim]
    energy = float(energy)
    m00r, m00i = 1.0, 0.0
    m01r, m01i = 0.0, 0.0
    m10r, m10i = 0.0, 0.0
    m11r, m11i = 1.0, 0.0
    log_scale = 0.0
    for j in range(len(rl)):
        ar = energy - rl[j]
        ai = -il[j]
        t00r = (ar * m00r - ai * m00i) - m10r
        t00i = (ar * m00i + ai * m00r) - m10i
        t01r = (ar * m01r - ai * m01i) - m11r
        t01i = (ar * m01i + ai * m01r) - m11i
        s = abs(t00r)
        if abs(t00i) > s:
            s = abs(t00i)
        if abs(t01r) > s:
            s = abs(t01r)
        if abs(t01i) > s:
            s = abs(t01i)
        if abs(m00r) > s:
            s = abs(m00r)
        if abs(m00i) > s:
            s = abs(m00i)
        if abs(m01r) > s:
            s = abs(m01r)
        if abs(m01i) > s:
            s = abs(m01i)
        m10r = m00r / s
        m10i = m00i / s
        m11r = m01r / s
        m11i = m01i / s
        m00r = t00r / s
        m00i = t00i / s
        m01r = t01r / s
        m01i = t01i / s
        log_scale += math.log(s)
    return m00r, m00i, m01r, m01i, m10r, m10i, m11r, m11i, log_scale


def profile_u(xs: np.ndarray, shifts: np.ndarray, lam: float, energy: float,
              cre: np.ndarray, cim: np.ndarray) -> np.ndarray:
    """u_n over a grid of first coordinates with a shared shift table.

    For each x in ``xs`` the j-th diagonal entry is
    lam * v(frac(x + shifts[j])); returns u_n(x) = log||M_n(x)|| / n.
    This fuses phase evaluation, potential evaluation and the transfer
    product; it is the hot path of the deviation experiments.
    """
    xl = [float(v) for v in xs]
    sh = [float(v) for v in shifts]
    re = [float(c) for c in cre]
    im = [float(c) for c in cim]
    lam = float(lam)
    energy = float(energy)
    kmax = len(re) - 1
    n = len(sh)
    out = np.empty(len(xl), dtype=np.float64)
    for g, x in enumerate(xl):
        m00 = 1.0
        m01 = 0.0
        m10 = 0.0
        m11 = 1.0
        log_scale = 0.0
        for j in range(n):
            theta = x + sh[j]
            theta = theta - math.floor(theta)
            val = re[0]
            for k in range(1, kmax + 1):
                ang = (TWO_PI * k) * theta
                c = math.cos(ang)
                if im[k] != 0.0:
                    s_ = math.sin(ang)
                    val += 2.0 * (re[k] * c - im[k] * s_)
                else:
                    val += 2.0 * (re[k] * c)
            a = energy - lam * val
            t00 = a * m00 - m10
            t01 = a * m01 - m11
            s = abs(t00)
            if abs(t01) > s:
                s = abs(t01)
            if abs(m00) > s:
                s = abs(m00)
            if abs(m01) > s:
                s = abs(m01)
            m10 = m00 / s
            m11 = m01 / s
            m00 = t00 / s
            m01 = t01 / s
            log_scale += math.log(s)
        nrm = _norm_2x2(m00, m01, m10, m11)
        out[g] = (log_scale + math.log(nrm)) / n
    return out


# ---------------------------------------------------------------------------
# Continuants and Sturm counts
# ---------------------------------------------------------------------------

def _signed_log_add(sa: int, la: float, sb: int, lb: float):
    """sa*e^la + sb*e^lb as (sign, log|.|); signs in {-1, 0, +1}."""
    if sa == 0:
        return sb, lb
    if sb == 0:
        return sa, la
    if la >= lb:
        big_s, big_l, small_s, small_l = sa, la, sb, lb
    else:
        big_s, big_l, small_s, small_l = sb, lb, sa, la
    r = math.exp(small_l - big_l)
    if big_s == small_s:
        return big_s, big_l + math.log1p(r)
    if r >= 1.0:
        return 0, -math.inf
    return big_s, big_l + math.log1p(-r)


def continuant_logs(diag: np.ndarray, energy: float):
    """Log-scaled determinant recursion D_k = (diag[k-1]-E) D_{k-1} - D_{k-2}.

    Returns (signs, logabs), each of length N+1, for D_0..D_N with D_0 = 1.
    Signs are -1/0/+1; logabs is -inf where the determinant vanishes.
    """
    dl = [float(v) for v in diag]
    energy = float(energy)
    n = len(dl)
    signs = np.empty(n + 1, dtype=np.int8)
    logs = np.empty(n + 1, dtype=np.float64)
    s_prev2, l_prev2 = 0, -math.inf      # D_{-1} = 0
    s_prev, l_prev = 1, 0.0              # D_0 = 1
    signs[0] = 1
    logs[0] = 0.0
    for k in range(1, n + 1):
        a = dl[k - 1] - energy
        if a == 0.0 or s_prev == 0:
            s1, l1 = 0, -math.inf
        else:
            s1 = s_prev if a > 0.0 else -s_prev
            l1 = l_prev + math.log(abs(a))
        s, logv = _signed_log_add(s1, l1, -s_prev2, l_prev2)
        signs[k] = s
        logs[k] = logv
        s_prev2, l_prev2 = s_prev, l_prev
        s_prev, l_prev = s, logv
    return signs, logs


def continuant_plain(diag: np.ndarray, energy: float) -> np.ndarray:
    """Unscaled determinant recursion; may overflow for large volumes."""
    dl = [float(v) for v in diag]
    energy = float(energy)
    n = len(dl)
    out = np.empty(n + 1, dtype=np.float64)
    d_prev2 = 0.0
    d_prev = 1.0
    out[0] = 1.0
    for k in range(1, n + 1):
        d = (dl[k - 1] - energy) * d_prev - d_prev2
        out[k] = d
        d_prev2 = d_prev
        d_prev = d
    return out


def sturm_count(diag: np.ndarray, energy: float) -> int:
    """Number of eigenvalues of the volume operator strictly below ``energy``.

    Classic Sturm sequence on the shifted tridiagonal (off-diagonal -1):
    q_k = (diag[k]-E) - 1/q_{k-1}; count the negative q_k.
    """
    dl = [float(v) for v in diag]
    energy = float(energy)
    count = 0
    q = 0.0
    for i, di in enumerate(dl):
        if i == 0:
            q = di - energy
        else:
            q = (di - energy) - 1.0 / q
        if q < 0.0:
            count += 1
        elif q == 0.0:
            q = _TINY
    return count


def _sturm_counts_vec(diag: np.ndarray, energies: np.ndarray) -> np.ndarray:
    """Vectorized Sturm counts over independent shifts (same per-shift math)."""
    counts = np.zeros(len(energies), dtype=np.int64)
    q = diag[0] - energies
    counts += q < 0.0
    q = np.where(q == 0.0, _TINY, q)
    for i in range(1, len(diag)):
        q = (diag[i] - energies) - 1.0 / q
        counts += q < 0.0
        q = np.where(q == 0.0, _TINY, q)
    return counts


def eigenvalues_bisect(diag: np.ndarray, tol: float) -> np.ndarray:
    """All eigenvalues of the tridiagonal (diag, off-diagonal -1) by bisection.

    Bisection on the Sturm count inside the Gershgorin bracket, run to
    absolute interval width ``tol`` (or the ulp floor).  All eigenvalue
    indices advance in lockstep with converged intervals frozen, which
    reproduces the per-index serial bisection of the compiled backend
    exactly: the intervals of distinct indices never interact.
    """
    diag = np.asarray(diag, dtype=np.float64)
    n = len(diag)
    lo0 = float(np.min(diag)) - 2.0
    hi0 = float(np.max(diag)) + 2.0
    lo = np.full(n, lo0)
    hi = np.full(n, hi0)
    targets = np.arange(1, n + 1)
    while True:
        active = (hi - lo) > tol
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        stuck = (mid == lo) | (mid == hi)
        active &= ~stuck
        if not active.any():
            break
        counts = _sturm_counts_vec(diag, mid)
        go_left = counts >= targets
        hi = np.where(active & go_left, mid, hi)
        lo = np.where(active & ~go_left, mid, lo)
    return 0.5 * (lo + hi)


def tridiag_shifted_solve(diag: np.ndarray, shift: float,
                          rhs: np.ndarray) -> np.ndarray:
    """Solve (T - shift) x = rhs for T tridiagonal with off-diagonal -1.

    Band LU with partial pivoting (the tridiagonal variant with a second
    superdiagonal of fill-in).  Zero pivots are clamped to a tiny value so
    inverse iteration can shift exactly onto an eigenvalue.
    """
    n = len(diag)
    dd = [float(diag[i]) - shift for i in range(n)]
    uu = [-1.0] * (n - 1) + [0.0] if n > 1 else [0.0]
    zz = [0.0] * n
    b = [float(v) for v in rhs]
    for i in range(n - 1):
        if abs(dd[i]) >= 1.0:
            m = -1.0 / dd[i]
            dd[i + 1] -= m * uu[i]
            b[i + 1] -= m * b[i]
        else:
            piv_d = dd[i + 1]
            piv_u = uu[i + 1] if i + 1 <= n - 2 else 0.0
            m = dd[i] / -1.0
            new_d1 = uu[i] - m * piv_d
            new_u1 = 0.0 - m * piv_u
            dd[i] = -1.0
            uu[i] = piv_d
            zz[i] = piv_u
            dd[i + 1] = new_d1
            if i + 1 <= n - 2:
                uu[i + 1] = new_u1
            tb = b[i]
            b[i] = b[i + 1]
            b[i + 1] = tb - m * b[i]
    x = np.empty(n, dtype=np.float64)
    for i in range(n - 1, -1, -1):
        acc = b[i]
        if i + 1 < n:
            acc -= uu[i] * x[i + 1]
        if i + 2 < n:
            acc -= zz[i] * x[i + 2]
        piv = dd[i]
        if piv == 0.0:
            piv = _TINY
        x[i] = acc / piv
    return x


# ---------------------------------------------------------------------------
# Exponential sums
# ---------------------------------------------------------------------------

def weyl_sum(k: int, y: float, omega: float, n: int) -> tuple[float, float]:
    """sum_{j=1}^{n} e^{2 pi i k (j y + j(j-1)/2 omega)} as (re, im).

    The phase is tracked mod 1 with the incremental recurrence
    t_{j+1} = t_j + (k y + j k omega), which keeps the cos/sin arguments
    small regardless of j.
    """
    k = float(k)
    y = float(y)
    omega = float(omega)
    kw = _frac(k * omega)
    t = _frac(k * y)
    delta = _frac(k * y + k * omega)
    sre = 0.0
    sim = 0.0
    for _ in range(int(n)):
        ang = TWO_PI * t
        sre += math.cos(ang)
        sim += math.sin(ang)
        t = _frac(t + delta)
        delta = _frac(delta + kw)
    return sre, sim
