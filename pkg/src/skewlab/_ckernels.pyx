# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels.

Mirror of ``_pykernels`` operation for operation: same expression shapes,
same evaluation order, same guards, so both backends agree to rounding
error.  Keep the two files in sync.  Built with -ffp-contract=off so the
compiler cannot fuse multiply-adds that the Python twin rounds separately.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport (INFINITY, cos, cosh, exp, fabs, floor, log, log1p,
                        sin, sinh, sqrt)

cnp.import_array()

cdef double TWO_PI = 6.283185307179586476925287

BACKEND_NAME = "compiled"

cdef double _TINY = 1e-300


cdef inline double _frac(double x) nogil:
    return x - floor(x)


# ---------------------------------------------------------------------------
# Orbits and potential evaluation
# ---------------------------------------------------------------------------

def orbit_phases(x0, double omega, long long j0, long long j1):
    """First coordinates of T^j(x0) for j in [j0, j1] (inclusive).

    T is the skew shift on the d-torus: the last coordinate rotates by
    ``omega`` and each other coordinate is shifted by its right neighbour.
    Backward steps invert the map exactly, coordinate by coordinate.
    """
    if j1 < j0:
        raise ValueError("empty orbit range")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xarr = np.ascontiguousarray(x0, dtype=np.float64).copy()
    cdef double[::1] x = xarr
    cdef Py_ssize_t d = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] outarr = np.empty(j1 - j0 + 1, dtype=np.float64)
    cdef double[::1] out = outarr
    cdef Py_ssize_t i
    cdef long long m, idx
    with nogil:
        for i in range(d):
            x[i] = _frac(x[i])
        if j0 >= 0:
            for m in range(j0):
                for i in range(d - 1):
                    x[i] = _frac(x[i] + x[i + 1])
                x[d - 1] = _frac(x[d - 1] + omega)
        else:
            for m in range(-j0):
                x[d - 1] = _frac(x[d - 1] - omega)
                for i in range(d - 2, -1, -1):
                    x[i] = _frac(x[i] - x[i + 1])
        out[0] = x[0]
        for idx in range(1, j1 - j0 + 1):
            for i in range(d - 1):
                x[i] = _frac(x[i] + x[i + 1])
            x[d - 1] = _frac(x[d - 1] + omega)
            out[idx] = x[0]
    return outarr


def eval_potential(phases, cre, cim):
    """Evaluate v(theta) = c0 + sum_k 2*(re_k cos(2 pi k theta) - im_k sin(...)).

    ``cre[k]``/``cim[k]`` hold the coefficient of e^{2 pi i k theta} for
    k = 0..K; negative modes are the conjugates, which is what makes the
    real form above exact.
    """
    cdef double[::1] ph = np.ascontiguousarray(phases, dtype=np.float64)
    cdef double[::1] re = np.ascontiguousarray(cre, dtype=np.float64)
    cdef double[::1] im = np.ascontiguousarray(cim, dtype=np.float64)
    cdef Py_ssize_t kmax = re.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] outarr = np.empty(ph.shape[0], dtype=np.float64)
    cdef double[::1] out = outarr
    cdef Py_ssize_t idx, k
    cdef double theta, val, ang, c, s
    with nogil:
        for idx in range(ph.shape[0]):
            theta = ph[idx]
            val = re[0]
            for k in range(1, kmax + 1):
                ang = (TWO_PI * k) * theta
                c = cos(ang)
                if im[k] != 0.0:
                    s = sin(ang)
                    val += 2.0 * (re[k] * c - im[k] * s)
                else:
                    val += 2.0 * (re[k] * c)
            out[idx] = val
    return outarr


def eval_potential_complex(phases, double y0, cre, cim):
    """Evaluate v(theta + i*y0) pairing the +k and -k modes.

    Returns (real part, imaginary part).  With w = 2 pi k y0 the pair sum is
    2*cosh(w)*(re*cos - im*sin) - i*2*sinh(w)*(re*sin + im*cos); y0 = 0
    reduces exactly to :func:`eval_potential`.
    """
    cdef double[::1] ph = np.ascontiguousarray(phases, dtype=np.float64)
    cdef double[::1] re = np.ascontiguousarray(cre, dtype=np.float64)
    cdef double[::1] im = np.ascontiguousarray(cim, dtype=np.float64)
    cdef Py_ssize_t kmax = re.shape[0] - 1
    cdef Py_ssize_t n = ph.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_re_arr = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_im_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out_re = out_re_arr
    cdef double[::1] out_im = out_im_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cw_arr = np.empty(kmax + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sw_arr = np.empty(kmax + 1, dtype=np.float64)
    cdef double[::1] cosh_w = cw_arr
    cdef double[::1] sinh_w = sw_arr
    cdef Py_ssize_t idx, k
    cdef double w, theta, vre, vim, ang, c, s
    with nogil:
        cosh_w[0] = 1.0
        sinh_w[0] = 0.0
        for k in range(1, kmax + 1):
            w = (TWO_PI * k) * y0
            cosh_w[k] = cosh(w)
            sinh_w[k] = sinh(w)
        for idx in range(n):
            theta = ph[idx]
            vre = re[0]
            vim = 0.0
            for k in range(1, kmax + 1):
                ang = (TWO_PI * k) * theta
                c = cos(ang)
                s = sin(ang)
                vre += 2.0 * cosh_w[k] * (re[k] * c - im[k] * s)
                vim -= 2.0 * sinh_w[k] * (re[k] * s + im[k] * c)
            out_re[idx] = vre
            out_im[idx] = vim
    return out_re_arr, out_im_arr


# ---------------------------------------------------------------------------
# Transfer-matrix products
# ---------------------------------------------------------------------------

cdef inline double _norm_2x2_c(double m00, double m01, double m10, double m11) nogil:
    cdef double fro2 = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11
    cdef double det = m00 * m11 - m01 * m10
    cdef double disc = fro2 * fro2 - 4.0 * (det * det)
    if disc < 0.0:
        disc = 0.0
    return sqrt(0.5 * (fro2 + sqrt(disc)))


def norm_2x2(double m00, double m01, double m10, double m11):
    return _norm_2x2_c(m00, m01, m10, m11)


def norm_2x2_complex(double m00r, double m00i, double m01r, double m01i,
                     double m10r, double m10i, double m11r, double m11i):
    cdef double fro2 = (m00r * m00r + m00i * m00i + m01r * m01r + m01i * m01i
                        + m10r * m10r + m10i * m10i + m11r * m11r + m11i * m11i)
    cdef double detr = (m00r * m11r - m00i * m11i) - (m01r * m10r - m01i * m10i)
    cdef double deti = (m00r * m11i + m00i * m11r) - (m01r * m10i + m01i * m10r)
    cdef double det2 = detr * detr + deti * deti
    cdef double disc = fro2 * fro2 - 4.0 * det2
    if disc < 0.0:
        disc = 0.0
    return sqrt(0.5 * (fro2 + sqrt(disc)))


def transfer_product(diag, double energy):
    """Product of one-step matrices [[energy - diag[j], -1], [1, 0]].

    Steps run j = 0..n-1 (left multiplication by later steps).  Entries are
    rescaled by their max modulus every step; returns
    ``(m00, m01, m10, m11, log_scale)`` with the true product equal to
    exp(log_scale) times the returned matrix.
    """
    cdef double[::1] dl = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0
    cdef double log_scale = 0.0
    cdef double a, t00, t01, s
    cdef Py_ssize_t j
    with nogil:
        for j in range(dl.shape[0]):
            a = energy - dl[j]
            t00 = a * m00 - m10
            t01 = a * m01 - m11
            s = fabs(t00)
            if fabs(t01) > s:
                s = fabs(t01)
            if fabs(m00) > s:
                s = fabs(m00)
            if fabs(m01) > s:
                s = fabs(m01)
            m10 = m00 / s
            m11 = m01 / s
            m00 = t00 / s
            m01 = t01 / s
            log_scale += log(s)
    return m00, m01, m10, m11, log_scale


def transfer_u_checkpoints(diag, double energy, ns):
    """Values of u_n = log||M_n|| / n at the checkpoints ``ns`` (ascending)."""
    cdef double[::1] dl = np.ascontiguousarray(diag, dtype=np.float64)
    cdef long long[::1] nl = np.ascontiguousarray(ns, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] outarr = np.empty(nl.shape[0], dtype=np.float64)
    cdef double[::1] out = outarr
    cdef Py_ssize_t ptr = 0, j
    cdef double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0
    cdef double log_scale = 0.0
    cdef double a, t00, t01, s, nrm
    with nogil:
        for j in range(dl.shape[0]):
            a = energy - dl[j]
            t00 = a * m00 - m10
            t01 = a * m01 - m11
            s = fabs(t00)
            if fabs(t01) > s:
                s = fabs(t01)
            if fabs(m00) > s:
                s = fabs(m00)
            if fabs(m01) > s:
                s = fabs(m01)
            m10 = m00 / s
            m11 = m01 / s
            m00 = t00 / s
            m01 = t01 / s
            log_scale += log(s)
            while ptr < nl.shape[0] and nl[ptr] == j + 1:
                nrm = _norm_2x2_c(m00, m01, m10, m11)
                out[ptr] = (log_scale + log(nrm)) / (j + 1)
                ptr += 1
    if ptr != nl.shape[0]:
        raise ValueError("checkpoint beyond the diagonal length")
    return outarr


def transfer_product_complex(dre, dim, double energy):
    """Complex transfer product for diagonal values dre[j] + i*dim[j].

    Returns (m00r, m00i, m01r, m01i, m10r, m10i, m11r, m11i, log_scale).
    Rescaling uses the max over entries of max(|re|, |im|).
    """
    cdef double[::1] rl = np.ascontiguousarray(dre, dtype=np.float64)
    cdef double[::1] il = np.ascontiguousarray(dim, dtype=np.float64)
    cdef double m00r = 1.0, m00i = 0.0, m01r = 0.0, m01i = 0.0
    cdef double m10r = 0.0, m10i = 0.0, m11r = 1.0, m11i = 0.0
    cdef double log_scale = 0.0
    cdef double ar, ai, t00r, t00i, t01r, t01i, s
    cdef Py_ssize_t j
    with nogil:
        for j in range(rl.shape[0]):
            ar = energy - rl[j]
            ai = -il[j]
            t00r = (ar * m00r - ai * m00i) - m10r
            t00i = (ar * m00i + ai * m00r) - m10i
            t01r = (ar * m01r - ai * m01i) - m11r
            t01i = (ar * m01i + ai * m01r) - m11i
            s = fabs(t00r)
            if fabs(t00i) > s:
                s = fabs(t00i)
            if fabs(t01r) > s:
                s = fabs(t01r)
            if fabs(t01i) > s:
                s = fabs(t01i)
            if fabs(m00r) > s:
                s = fabs(m00r)
            if fabs(m00i) > s:
                s = fabs(m00i)
            if fabs(m01r) > s:
                s = fabs(m01r)
            if fabs(m01i) > s:
                s = fabs(m01i)
            m10r = m00r / s
            m10i = m00i / s
            m11r = m01r / s
            m11i = m01i / s
            m00r = t00r / s
            m00i = t00i / s
            m01r = t01r / s
            m01i = t01i / s
            log_scale += log(s)
    return m00r, m00i, m01r, m01i, m10r, m10i, m11r, m11i, log_scale


def profile_u(xs, shifts, double lam, double energy, cre, cim):
    """u_n over a grid of first coordinates with a shared shift table.

    For each x in ``xs`` the j-th diagonal entry is
    lam * v(frac(x + shifts[j])); returns u_n(x) = log||M_n(x)|| / n.
    This fuses phase evaluation, potential evaluation and the transfer
    product; it is the hot path of the deviation experiments.
    """
    cdef double[::1] xl = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] sh = np.ascontiguousarray(shifts, dtype=np.float64)
    cdef double[::1] re = np.ascontiguousarray(cre, dtype=np.float64)
    cdef double[::1] im = np.ascontiguousarray(cim, dtype=np.float64)
    cdef Py_ssize_t kmax = re.shape[0] - 1
    cdef Py_ssize_t n = sh.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] outarr = np.empty(xl.shape[0], dtype=np.float64)
    cdef double[::1] out = outarr
    cdef Py_ssize_t g, j, k
    cdef double x, m00, m01, m10, m11, log_scale
    cdef double theta, val, ang, c, s_, a, t00, t01, s, nrm
    with nogil:
        for g in range(xl.shape[0]):
            x = xl[g]
            m00 = 1.0
            m01 = 0.0
            m10 = 0.0
            m11 = 1.0
            log_scale = 0.0
            for j in range(n):
                theta = x + sh[j]
                theta = theta - floor(theta)
                val = re[0]
                for k in range(1, kmax + 1):
                    ang = (TWO_PI * k) * theta
                    c = cos(ang)
                    if im[k] != 0.0:
                        s_ = sin(ang)
                        val += 2.0 * (re[k] * c - im[k] * s_)
                    else:
                        val += 2.0 * (re[k] * c)
                a = energy - lam * val
                t00 = a * m00 - m10
                t01 = a * m01 - m11
                s = fabs(t00)
                if fabs(t01) > s:
                    s = fabs(t01)
                if fabs(m00) > s:
                    s = fabs(m00)
                if fabs(m01) > s:
                    s = fabs(m01)
                m10 = m00 / s
                m11 = m01 / s
                m00 = t00 / s
                m01 = t01 / s
                log_scale += log(s)
            nrm = _norm_2x2_c(m00, m01, m10, m11)
            out[g] = (log_scale + log(nrm)) / n
    return outarr


# ---------------------------------------------------------------------------
# Continuants and Sturm counts
# ---------------------------------------------------------------------------

cdef inline void _signed_log_add(int sa, double la, int sb, double lb,
                                 int* out_s, double* out_l) nogil:
    cdef int big_s, small_s
    cdef double big_l, small_l, r
    if sa == 0:
        out_s[0] = sb
        out_l[0] = lb
        return
    if sb == 0:
        out_s[0] = sa
        out_l[0] = la
        return
    if la >= lb:
        big_s = sa
        big_l = la
        small_s = sb
        small_l = lb
    else:
        big_s = sb
        big_l = lb
        small_s = sa
        small_l = la
    r = exp(small_l - big_l)
    if big_s == small_s:
        out_s[0] = big_s
        out_l[0] = big_l + log1p(r)
        return
    if r >= 1.0:
        out_s[0] = 0
        out_l[0] = -INFINITY
        return
    out_s[0] = big_s
    out_l[0] = big_l + log1p(-r)


def continuant_logs(diag, double energy):
    """Log-scaled determinant recursion D_k = (diag[k-1]-E) D_{k-1} - D_{k-2}.

    Returns (signs, logabs), each of length N+1, for D_0..D_N with D_0 = 1.
    Signs are -1/0/+1; logabs is -inf where the determinant vanishes.
    """
    cdef double[::1] dl = np.ascontiguousarray(diag, dtype=np.float64)
    cdef Py_ssize_t n = dl.shape[0]
    cdef cnp.ndarray[cnp.int8_t, ndim=1] signs_arr = np.empty(n + 1, dtype=np.int8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] logs_arr = np.empty(n + 1, dtype=np.float64)
    cdef signed char[::1] signs = signs_arr
    cdef double[::1] logs = logs_arr
    cdef int s_prev2 = 0, s_prev = 1, s1, s
    cdef double l_prev2 = -INFINITY, l_prev = 0.0, l1, logv, a
    cdef Py_ssize_t k
    with nogil:
        signs[0] = 1
        logs[0] = 0.0
        for k in range(1, n + 1):
            a = dl[k - 1] - energy
            if a == 0.0 or s_prev == 0:
                s1 = 0
                l1 = -INFINITY
            else:
                s1 = s_prev if a > 0.0 else -s_prev
                l1 = l_prev + log(fabs(a))
            _signed_log_add(s1, l1, -s_prev2, l_prev2, &s, &logv)
            signs[k] = <signed char>s
            logs[k] = logv
            s_prev2 = s_prev
            l_prev2 = l_prev
            s_prev = s
            l_prev = logv
    return signs_arr, logs_arr


def continuant_plain(diag, double energy):
    """Unscaled determinant recursion; may overflow for large volumes."""
    cdef double[::1] dl = np.ascontiguousarray(diag, dtype=np.float64)
    cdef Py_ssize_t n = dl.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] outarr = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] out = outarr
    cdef double d_prev2 = 0.0, d_prev = 1.0, d
    cdef Py_ssize_t k
    with nogil:
        out[0] = 1.0
        for k in range(1, n + 1):
            d = (dl[k - 1] - energy) * d_prev - d_prev2
            out[k] = d
            d_prev2 = d_prev
            d_prev = d
    return outarr


cdef inline long _sturm_count_c(double[::1] dl, double energy) nogil:
    cdef long count = 0
    cdef double q = 0.0
    cdef Py_ssize_t i
    for i in range(dl.shape[0]):
        if i == 0:
            q = dl[0] - energy
        else:
            q = (dl[i] - energy) - 1.0 / q
        if q < 0.0:
            count += 1
        elif q == 0.0:
            q = _TINY
    return count


def sturm_count(diag, double energy):
    """Number of eigenvalues of the volume operator strictly below ``energy``.

    Classic Sturm sequence on the shifted tridiagonal (off-diagonal -1):
    q_k = (diag[k]-E) - 1/q_{k-1}; count the negative q_k.
    """
    cdef double[::1] dl = np.ascontiguousarray(diag, dtype=np.float64)
    return _sturm_count_c(dl, energy)


def eigenvalues_bisect(diag, double tol):
    """All eigenvalues of the tridiagonal (diag, off-diagonal -1) by bisection.

    Bisection on the Sturm count inside the Gershgorin bracket, run to
    absolute interval width ``tol`` (or the ulp floor), one eigenvalue
    index at a time.
    """
    cdef double[::1] dl = np.ascontiguousarray(diag, dtype=np.float64)
    cdef Py_ssize_t n = dl.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] outarr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = outarr
    cdef double lo0, hi0, lo, hi, mid
    cdef Py_ssize_t i, k
    cdef long cnt
    with nogil:
        lo0 = dl[0]
        hi0 = dl[0]
        for i in range(1, n):
            if dl[i] < lo0:
                lo0 = dl[i]
            if dl[i] > hi0:
                hi0 = dl[i]
        lo0 = lo0 - 2.0
        hi0 = hi0 + 2.0
        for k in range(n):
            lo = lo0
            hi = hi0
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if mid == lo or mid == hi:
                    break
                cnt = _sturm_count_c(dl, mid)
                if cnt >= k + 1:
                    hi = mid
                else:
                    lo = mid
            out[k] = 0.5 * (lo + hi)
    return outarr


def tridiag_shifted_solve(diag, double shift, rhs):
    """Solve (T - shift) x = rhs for T tridiagonal with off-diagonal -1.

    Band LU with partial pivoting (the tridiagonal variant with a second
    superdiagonal of fill-in).  Zero pivots are clamped to a tiny value so
    inverse iteration can shift exactly onto an eigenvalue.
    """
    cdef double[::1] dg = np.ascontiguousarray(diag, dtype=np.float64)
    cdef Py_ssize_t n = dg.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dd_arr = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] uu_arr = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] zz_arr = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b_arr = np.array(rhs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] dd = dd_arr
    cdef double[::1] uu = uu_arr
    cdef double[::1] zz = zz_arr
    cdef double[::1] b = b_arr
    cdef double[::1] x = x_arr
    cdef Py_ssize_t i
    cdef double m, piv_d, piv_u, new_d1, new_u1, tb, acc, piv
    with nogil:
        for i in range(n):
            dd[i] = dg[i] - shift
        for i in range(n - 1):
            uu[i] = -1.0
        for i in range(n - 1):
            if fabs(dd[i]) >= 1.0:
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
    return x_arr


# ---------------------------------------------------------------------------
# Exponential sums
# ---------------------------------------------------------------------------

def weyl_sum(long long k, double y, double omega, long long n):
    """sum_{j=1}^{n} e^{2 pi i k (j y + j(j-1)/2 omega)} as (re, im).

    The phase is tracked mod 1 with the incremental recurrence
    t_{j+1} = t_j + (k y + j k omega), which keeps the cos/sin arguments
    small regardless of j.
    """
    cdef double kd = <double>k
    cdef double kw = _frac(kd * omega)
    cdef double t = _frac(kd * y)
    cdef double delta = _frac(kd * y + kd * omega)
    cdef double sre = 0.0
    cdef double sim = 0.0
    cdef double ang
    cdef long long j
    with nogil:
        for j in range(n):
            ang = TWO_PI * t
            sre += cos(ang)
            sim += sin(ang)
            t = _frac(t + delta)
            delta = _frac(delta + kw)
    return sre, sim
