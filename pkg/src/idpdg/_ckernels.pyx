# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the hot loops of one forward Euler stage.

Every kernel mirrors a numpy reference in ``low_order`` or ``limiting``;
pair data come in row-sorted (CSR) order so the row loops are independent and
run under OpenMP.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport parallel, prange
from libc.math cimport fabs, sqrt, pow, isfinite
from libc.stdlib cimport malloc, free

cnp.import_array()


# plain comparisons; libm fmin/fmax are out-of-line calls with NaN handling
cdef inline double fmax(double a, double b) noexcept nogil:
    return a if a >= b else b


cdef inline double fmin(double a, double b) noexcept nogil:
    return a if a <= b else b


cdef inline void _row_flux(
    Py_ssize_t i,
    const cnp.int64_t[::1] indptr,
    const cnp.int64_t[::1] col,
    const cnp.int64_t[::1] axis,
    const double[:, ::1] cvec,
    const cnp.uint8_t[::1] selfflag,
    const double[::1] dij,
    const double[:, ::1] u,
    const double[:, :, ::1] F,
    double[:, :, ::1] r,
    double[::1] lo,
    double[::1] hi,
    double[::1] rowsum,
    int comp,
) noexcept nogil:
    cdef Py_ssize_t q, j, c, k, ax
    cdef Py_ssize_t nc = u.shape[1]
    cdef Py_ssize_t d = F.shape[2]
    cdef double dd, s = 0.0, mn, mx, v, fj, fi, bj = 0.0, bi = 0.0
    mn = u[i, comp]
    mx = mn
    for q in range(indptr[i], indptr[i + 1]):
        j = col[q]
        ax = axis[q]
        dd = dij[q]
        s += dd
        for c in range(nc):
            fj = 0.0
            fi = 0.0
            for k in range(d):
                fj += cvec[q, k] * F[j, c, k]
                fi += cvec[q, k] * F[i, c, k]
            if c == comp:
                bj = fj
                bi = fi
            if not selfflag[q]:
                fi = 0.0
            r[ax, i, c] += fj + fi + dd * (u[j, c] - u[i, c])
        if dd > 0.0:
            v = 0.5 * (u[i, comp] + u[j, comp]) + (bj - bi) / (2.0 * dd)
        else:
            v = u[i, comp]
        mn = fmin(mn, v)
        mx = fmax(mx, v)
    lo[i] = mn
    hi[i] = mx
    rowsum[i] = s


cdef inline void _row_linear(
    Py_ssize_t i,
    const cnp.int64_t[::1] indptr,
    const cnp.int64_t[::1] col,
    const cnp.int64_t[::1] axis,
    const double[::1] coef,
    const double[::1] scoef,
    const double[::1] dij,
    const double[:, ::1] u,
    double[:, :, ::1] r,
    double[::1] lo,
    double[::1] hi,
    double[::1] rowsum,
    int comp,
) noexcept nogil:
    cdef Py_ssize_t q, j, c, ax
    cdef Py_ssize_t nc = u.shape[1]
    cdef double dd, s = 0.0, mn, mx, v, a
    mn = u[i, comp]
    mx = mn
    for q in range(indptr[i], indptr[i + 1]):
        j = col[q]
        ax = axis[q]
        dd = dij[q]
        a = coef[q]
        s += dd
        for c in range(nc):
            r[ax, i, c] += a * u[j, c] + scoef[q] * u[i, c] + dd * (u[j, c] - u[i, c])
        if dd > 0.0:
            v = 0.5 * (u[i, comp] + u[j, comp]) + a * (u[j, comp] - u[i, comp]) / (2.0 * dd)
        else:
            v = u[i, comp]
        mn = fmin(mn, v)
        mx = fmax(mx, v)
    lo[i] = mn
    hi[i] = mx
    rowsum[i] = s


def low_order_sweep_flux(
    const cnp.int64_t[::1] indptr,
    const cnp.int64_t[::1] col,
    const cnp.int64_t[::1] axis,
    const double[:, ::1] cvec,
    const cnp.uint8_t[::1] selfflag,
    const double[::1] dij,
    const double[:, ::1] u,
    const double[:, :, ::1] F,
    double[:, :, ::1] r,
    int comp,
    int threads=1,
):
    """Add the pair terms ``c_ij.F_j (+ c_ij.F_i on faces) + d_ij (u_j - u_i)`` into ``r`` (d, N, nc).

    Pairs are row-sorted (CSR).  Returns (lo, hi, rowsum): min/max of
    component ``comp`` over the node and its bar states, and the viscosity row
    sums.
    """
    cdef Py_ssize_t N = indptr.shape[0] - 1
    cdef Py_ssize_t i
    lo_a = np.empty(N)
    hi_a = np.empty(N)
    rs_a = np.empty(N)
    cdef double[::1] lo = lo_a
    cdef double[::1] hi = hi_a
    cdef double[::1] rs = rs_a
    for i in prange(N, nogil=True, num_threads=threads, schedule="static"):
        _row_flux(i, indptr, col, axis, cvec, selfflag, dij, u, F, r, lo, hi, rs, comp)
    return lo_a, hi_a, rs_a


def low_order_sweep_linear(
    const cnp.int64_t[::1] indptr,
    const cnp.int64_t[::1] col,
    const cnp.int64_t[::1] axis,
    const double[::1] coef,
    const double[::1] scoef,
    const double[::1] dij,
    const double[:, ::1] u,
    double[:, :, ::1] r,
    int comp,
    int threads=1,
):
    """Linear-flux variant: the pair terms are ``coef u_j + scoef u_i + d_ij (u_j - u_i)``."""
    cdef Py_ssize_t N = indptr.shape[0] - 1
    cdef Py_ssize_t i
    lo_a = np.empty(N)
    hi_a = np.empty(N)
    rs_a = np.empty(N)
    cdef double[::1] lo = lo_a
    cdef double[::1] hi = hi_a
    cdef double[::1] rs = rs_a
    for i in prange(N, nogil=True, num_threads=threads, schedule="static"):
        _row_linear(i, indptr, col, axis, coef, scoef, dij, u, r, lo, hi, rs, comp)
    return lo_a, hi_a, rs_a


def zalesak_ratios(
    const double[:, ::1] plus,
    const double[:, ::1] minus,
    const double[::1] umin,
    const double[::1] umax,
    const double[::1] uL,
    const double[::1] md,
    double slack,
    int threads=1,
):
    """Subcell Zalesak coefficients from face fluxes ``plus``/``minus`` (d, N).

    Returns (alpha, bad) where ``bad`` is the first node whose low-order value
    lies outside its bounds (or -1).
    """
    cdef Py_ssize_t d = plus.shape[0]
    cdef Py_ssize_t N = plus.shape[1]
    cdef Py_ssize_t i, k
    cdef double Pp, Pm, Qp, Qm, su, tol, tiny, Rp, Rm, rp, rm
    out_a = np.empty(N)
    flag_a = np.zeros(N, dtype=np.uint8)
    cdef double[::1] out = out_a
    cdef cnp.uint8_t[::1] flag = flag_a
    for i in prange(N, nogil=True, num_threads=threads, schedule="static"):
        Pp = 0.0
        Pm = 0.0
        for k in range(d):
            rp = plus[k, i]
            rm = -minus[k, i]
            Pp = Pp + fmax(rp, 0.0) + fmax(rm, 0.0)
            Pm = Pm + fmin(rp, 0.0) + fmin(rm, 0.0)
        su = fmax(1.0, fabs(uL[i]))
        tol = slack * fmax(su, fmax(fabs(umin[i]), fabs(umax[i])))
        if uL[i] < umin[i] - tol or uL[i] > umax[i] + tol:
            flag[i] = 1
        Qp = fmax(md[i] * (umax[i] - uL[i]), 0.0)
        Qm = fmin(md[i] * (umin[i] - uL[i]), 0.0)
        tiny = 1e-14 * md[i] * su
        if Pp <= tiny:
            Rp = 1.0
        else:
            Rp = fmin(1.0, Qp / Pp)
        if -Pm <= tiny:
            Rm = 1.0
        else:
            Rm = fmin(1.0, Qm / Pm)
        out[i] = fmin(fmax(fmin(Rp, Rm), 0.0), 1.0)
    bad = np.flatnonzero(flag_a)
    return out_a, (int(bad[0]) if bad.size else -1)


cdef inline double _zalesak_node(double Pp, double Pm, double uL, double umin, double umax, double md, double slack, bint* bad) noexcept nogil:
    cdef double su = fmax(1.0, fabs(uL))
    cdef double tol = slack * fmax(su, fmax(fabs(umin), fabs(umax)))
    cdef double Qp, Qm, tiny, Rp, Rm
    if uL < umin - tol or uL > umax + tol:
        bad[0] = True
    Qp = fmax(md * (umax - uL), 0.0)
    Qm = fmin(md * (umin - uL), 0.0)
    tiny = 1e-14 * md * su
    Rp = 1.0 if Pp <= tiny else fmin(1.0, Qp / Pp)
    Rm = 1.0 if -Pm <= tiny else fmin(1.0, Qm / Pm)
    return fmin(fmax(fmin(Rp, Rm), 0.0), 1.0)


def subcell_limit_scalar(
    const double[:, ::1] rH,
    const double[:, ::1] rL,
    const double[::1] uL,
    const double[::1] umin,
    const double[::1] umax,
    const double[::1] md,
    double slack,
    Py_ssize_t n,
    int threads=1,
):
    """Fused scalar subcell limiter: face fluxes, Zalesak coefficients, face minima, correction.

    ``rH``/``rL`` are directional residuals (d, N) of one component and
    ``md = m / dt``.  Returns (corr, alpha_tilde, bad) with the limited update
    ``uL + corr / md``; ``bad`` is a node whose low-order value violates its
    bounds, or -1.
    """
    cdef Py_ssize_t d = rH.shape[0]
    cdef Py_ssize_t N = rH.shape[1]
    cdef Py_ssize_t nloc = n ** d
    cdef Py_ssize_t nel = N // nloc
    cdef Py_ssize_t e, k, line, p, base, stride, node, nlines, l
    cdef double cs, f, fa
    cdef double* buf
    cdef bint badflag
    corr_a = np.zeros(N)
    alpha_a = np.empty(N)
    flag_a = np.zeros(N, dtype=np.uint8)
    cdef double[::1] corr = corr_a
    cdef double[::1] alpha = alpha_a
    cdef cnp.uint8_t[::1] flag = flag_a
    nlines = nloc // n
    buf = NULL
    with nogil, parallel(num_threads=threads):
        # per-thread scratch: face fluxes (d, nloc) and the Zalesak sums P+ and P-
        buf = <double*> malloc(sizeof(double) * (d * nloc + 2 * nloc))
        for e in prange(nel, schedule="static"):
            base = e * nloc
            for l in range(2 * nloc):
                buf[d * nloc + l] = 0.0
            for k in range(d):
                stride = 1 if k == 0 else n
                for line in range(nlines):
                    # first node of the line: lines of x run over rows, lines of y over columns
                    node = line * n if k == 0 else line
                    cs = 0.0
                    for p in range(n):
                        l = node + p * stride
                        cs = cs + rH[k, base + l] - rL[k, base + l]
                        # flux through the face to the right of position p
                        buf[k * nloc + l] = cs if p < n - 1 else 0.0
                    for p in range(n - 1):
                        l = node + p * stride
                        f = buf[k * nloc + l]
                        # +f leaves node p through its right face, -f enters p+1
                        if f > 0.0:
                            buf[d * nloc + l] += f
                            buf[d * nloc + nloc + l + stride] -= f
                        else:
                            buf[d * nloc + nloc + l] += f
                            buf[d * nloc + l + stride] -= f
            for l in range(nloc):
                badflag = False
                alpha[base + l] = _zalesak_node(
                    buf[d * nloc + l], buf[d * nloc + nloc + l], uL[base + l],
                    umin[base + l], umax[base + l], md[base + l], slack, &badflag,
                )
                if badflag:
                    flag[base + l] = 1
            for k in range(d):
                stride = 1 if k == 0 else n
                for line in range(nlines):
                    node = line * n if k == 0 else line
                    for p in range(n - 1):
                        l = node + p * stride
                        fa = fmin(alpha[base + l], alpha[base + l + stride])
                        f = fa * buf[k * nloc + l]
                        corr[base + l] += f
                        corr[base + l + stride] -= f
        free(buf)
    bad = np.flatnonzero(flag_a)
    return corr_a, alpha_a, (int(bad[0]) if bad.size else -1)


cdef inline double _psi(const double* u, const double* dv, Py_ssize_t nc, double a, double K, double g) noexcept nogil:
    cdef Py_ssize_t c
    cdef double rho = u[0] + a * dv[0]
    cdef double m2 = 0.0, mc
    for c in range(1, nc - 1):
        mc = u[c] + a * dv[c]
        m2 = m2 + mc * mc
    return (u[nc - 1] + a * dv[nc - 1]) - 0.5 * m2 / rho - K * pow(fabs(rho), g)


cdef inline double _dpsi(const double* u, const double* dv, Py_ssize_t nc, double a, double K, double g) noexcept nogil:
    cdef Py_ssize_t c
    cdef double rho = u[0] + a * dv[0]
    cdef double drho = dv[0]
    cdef double m2 = 0.0, mdm = 0.0, mc
    for c in range(1, nc - 1):
        mc = u[c] + a * dv[c]
        m2 = m2 + mc * mc
        mdm = mdm + mc * dv[c]
    return dv[nc - 1] - mdm / rho + 0.5 * m2 * drho / (rho * rho) - K * g * pow(fabs(rho), g - 1.0) * drho


cdef double _search_one(const double* u, const double* dv, Py_ssize_t nc, double K, double g, double tol, int maxit) noexcept nogil:
    cdef double rho0 = u[0]
    cdef double drho = dv[0]
    cdef double floor = 1e-12 * rho0
    cdef double lo = 0.0, hi = 1.0, plo, phi, width, a, ps, gd, mid
    cdef int it
    if rho0 + drho < floor:
        hi = fmin(fmax((rho0 - floor) / (-drho), 0.0), 1.0)
    plo = _psi(u, dv, nc, 0.0, K, g)
    if not (plo >= 0.0) or not (rho0 > 0.0):
        return 0.0
    phi = _psi(u, dv, nc, hi, K, g)
    if phi >= 0.0:
        return hi
    for it in range(maxit):
        width = hi - lo
        if width <= tol:
            break
        # chord root, feasible by concavity
        a = lo + plo * width / (plo - phi)
        if not isfinite(a) or a <= lo or a >= hi:
            a = 0.5 * (lo + hi)
        ps = _psi(u, dv, nc, a, K, g)
        if ps >= 0.0:
            lo = a
            plo = ps
        else:
            hi = a
            phi = ps
        # Newton step from the infeasible end
        gd = _dpsi(u, dv, nc, hi, K, g)
        a = hi - phi / gd
        if not isfinite(a) or a <= lo or a >= hi:
            a = 0.5 * (lo + hi)
        ps = _psi(u, dv, nc, a, K, g)
        if ps >= 0.0:
            lo = a
            plo = ps
        else:
            hi = a
            phi = ps
        if hi - lo > 0.5 * width:
            mid = 0.5 * (lo + hi)
            ps = _psi(u, dv, nc, mid, K, g)
            if ps >= 0.0:
                lo = mid
                plo = ps
            else:
                hi = mid
                phi = ps
    return lo


def entropy_line_search(
    const double[:, ::1] u0,
    const double[:, ::1] dv,
    const double[::1] K,
    double gamma,
    double tol=1e-10,
    int maxit=50,
    int threads=1,
):
    """Largest admissible alpha per state; ``K = exp((gamma-1) s_min)``."""
    cdef Py_ssize_t nb = u0.shape[0]
    cdef Py_ssize_t nc = u0.shape[1]
    cdef Py_ssize_t i
    out_a = np.empty(nb)
    cdef double[::1] out = out_a
    if nb == 0:
        return out_a
    for i in prange(nb, nogil=True, num_threads=threads, schedule="dynamic", chunksize=256):
        out[i] = _search_one(&u0[i, 0], &dv[i, 0], nc, K[i], gamma, tol, maxit)
    return out_a


def convex_limit_directions(
    const double[:, :, ::1] plus,
    const double[:, :, ::1] minus,
    const double[:, ::1] uL,
    const double[::1] K,
    const double[::1] fac,
    double gamma,
    double tol=1e-10,
    int maxit=50,
    int threads=1,
):
    """Per node, the smallest line-search coefficient over the 2d subcell states.

    Direction k contributes ``uL + fac * plus[k]`` and ``uL - fac * minus[k]``.
    """
    cdef Py_ssize_t d = plus.shape[0]
    cdef Py_ssize_t N = plus.shape[1]
    cdef Py_ssize_t nc = plus.shape[2]
    cdef Py_ssize_t i, k, c, side
    cdef double a, amin
    cdef double* dv
    cdef bint nonzero
    out_a = np.empty(N)
    cdef double[::1] out = out_a
    dv = NULL
    with nogil, parallel(num_threads=threads):
        # thread-private direction buffer
        dv = <double*> malloc(sizeof(double) * nc)
        for i in prange(N, schedule="dynamic", chunksize=256):
            amin = 1.0
            for k in range(d):
                for side in range(2):
                    nonzero = False
                    for c in range(nc):
                        if side == 0:
                            dv[c] = fac[i] * plus[k, i, c]
                        else:
                            dv[c] = -fac[i] * minus[k, i, c]
                        if dv[c] != 0.0:
                            nonzero = True
                    if nonzero:
                        a = _search_one(&uL[i, 0], dv, nc, K[i], gamma, tol, maxit)
                        amin = fmin(amin, a)
            out[i] = amin
        free(dv)
    return out_a


def euler_wave_speed(
    const double[:, ::1] um,
    const double[:, ::1] up,
    const double[:, ::1] n,
    double g,
    bint gms=True,
    int threads=1,
):
    """Upper bound of the maximal wave speed of the 1D Riemann problem along ``n``."""
    cdef Py_ssize_t m = um.shape[0]
    cdef Py_ssize_t d = n.shape[1]
    cdef Py_ssize_t i, k
    cdef double rl, rr, vl, vr, ml2, mr2, pl, pr, cl, cr, z, num, den, ps, a, l1, l3
    out_a = np.empty(m)
    cdef double[::1] out = out_a
    z = (g - 1.0) / (2.0 * g)
    a = (g + 1.0) / (2.0 * g)
    for i in prange(m, nogil=True, num_threads=threads, schedule="static"):
        rl = um[i, 0]
        rr = up[i, 0]
        vl = 0.0
        vr = 0.0
        ml2 = 0.0
        mr2 = 0.0
        for k in range(d):
            vl = vl + um[i, 1 + k] * n[i, k]
            vr = vr + up[i, 1 + k] * n[i, k]
            ml2 = ml2 + um[i, 1 + k] * um[i, 1 + k]
            mr2 = mr2 + up[i, 1 + k] * up[i, 1 + k]
        vl = vl / rl
        vr = vr / rr
        pl = (g - 1.0) * (um[i, d + 1] - 0.5 * ml2 / rl)
        pr = (g - 1.0) * (up[i, d + 1] - 0.5 * mr2 / rr)
        cl = sqrt(g * pl / rl)
        cr = sqrt(g * pr / rr)
        if not gms:
            out[i] = fmax(fabs(vl) + cl, fabs(vr) + cr)
        else:
            num = fmax(cl + cr - 0.5 * (g - 1.0) * (vr - vl), 0.0)
            den = cl * pow(pl, -z) + cr * pow(pr, -z)
            ps = pow(num / den, 1.0 / z)
            l1 = vl - cl * sqrt(1.0 + a * fmax((ps - pl) / pl, 0.0))
            l3 = vr + cr * sqrt(1.0 + a * fmax((ps - pr) / pr, 0.0))
            out[i] = fmax(fabs(l1), fabs(l3))
    return out_a
