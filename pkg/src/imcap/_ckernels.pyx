# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same functions and semantics as imcap._pykernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double[8] XGK = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
]
cdef double[8] WGK = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
]
cdef double[4] WG = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
]
cdef double[5] BREAKS = [0.0, 0.5, 2.0, 8.0, 32.0]
cdef double ABS_FLOOR = 1e-15


cdef inline double log_mixture(double rho, const double* inv_s, const double* log_s, int t) nogil:
    cdef double m = -1e308
    cdef double a, acc = 0.0
    cdef int j
    for j in range(t):
        a = -rho * inv_s[j] - log_s[j]
        if a > m:
            m = a
    for j in range(t):
        acc += exp(-rho * inv_s[j] - log_s[j] - m)
    return m + log(acc) - log(<double>t)


cdef inline double integrand(double u, double sl, double log_sl,
                             const double* inv_s, const double* log_s, int t) nogil:
    return exp(-u) * (-u - log_sl - log_mixture(sl * u, inv_s, log_s, t))


cdef void gk15(double a, double b, double sl, double log_sl, const double* inv_s,
               const double* log_s, int t, double* res, double* err) nogil:
    cdef double c = 0.5 * (a + b)
    cdef double h = 0.5 * (b - a)
    cdef double fc = integrand(c, sl, log_sl, inv_s, log_s, t)
    cdef double resk = fc * WGK[7]
    cdef double resg = fc * WG[3]
    cdef double f1, f2, dx
    cdef int j
    for j in range(7):
        dx = h * XGK[j]
        f1 = integrand(c - dx, sl, log_sl, inv_s, log_s, t)
        f2 = integrand(c + dx, sl, log_sl, inv_s, log_s, t)
        resk += WGK[j] * (f1 + f2)
        if j % 2 == 1:
            resg += WG[j // 2] * (f1 + f2)
    res[0] = resk * h
    err[0] = fabs((resk - resg) * h)


cdef double tail(double u_max, double sl, double log_sl, const double* inv_s,
                 const double* log_s, int t) nogil:
    cdef double rho = sl * u_max
    cdef double m = -1e308
    cdef double a, w, wsum = 0.0, wdot = 0.0
    cdef int j
    for j in range(t):
        a = -rho * inv_s[j] - log_s[j]
        if a > m:
            m = a
    for j in range(t):
        w = exp(-rho * inv_s[j] - log_s[j] - m)
        wsum += w
        wdot += w * inv_s[j]
    cdef double phi = -u_max - log_sl - log_mixture(rho, inv_s, log_s, t)
    cdef double dphi = -1.0 + sl * wdot / wsum
    return exp(-u_max) * (phi + dphi)


cdef int kl_hop(double sl, const double* inv_s, const double* log_s, int t,
                double rel_tol, int max_sub, double u_max,
                double* ia, double* ib, double* iv, double* ie,
                double* value, double* abserr) nogil:
    """Global adaptive GK15 on [0, u_max]; returns 1 when converged."""
    cdef double log_sl = log(sl)
    cdef int n = 0, i, k, imax
    cdef double total, err, emax, a, b, m
    cdef int converged = 0
    # edges: fixed breaks plus the breaks rescaled to each narrower hop;
    # staged in iv, then insertion-sorted and deduplicated
    cdef int np_ = 0, j
    cdef double r, x
    for k in range(5):
        if BREAKS[k] < u_max:
            iv[np_] = BREAKS[k]
            np_ += 1
    for j in range(t):
        r = sl * inv_s[j]
        if r > 1.0:
            r = 1.0 / r
            for k in range(1, 5):
                x = r * BREAKS[k]
                if x > 0.0 and x < u_max:
                    iv[np_] = x
                    np_ += 1
    for i in range(1, np_):
        x = iv[i]
        k = i - 1
        while k >= 0 and iv[k] > x:
            iv[k + 1] = iv[k]
            k -= 1
        iv[k + 1] = x
    ia[0] = iv[0]
    n = 1
    for i in range(1, np_):
        if iv[i] > ia[n - 1] * (1.0 + 1e-12):
            ia[n] = iv[i]
            n += 1
    for i in range(n - 1):
        ib[i] = ia[i + 1]
    ib[n - 1] = u_max
    for i in range(n):
        gk15(ia[i], ib[i], sl, log_sl, inv_s, log_s, t, &iv[i], &ie[i])
    cdef int n_eval = n
    while True:
        total = 0.0
        err = 0.0
        emax = -1.0
        imax = 0
        for i in range(n):
            total += iv[i]
            err += ie[i]
            if ie[i] > emax:
                emax = ie[i]
                imax = i
        if err <= rel_tol * fabs(total) or err <= ABS_FLOOR:
            converged = 1
            break
        if n_eval >= max_sub:
            break
        a = ia[imax]
        b = ib[imax]
        m = 0.5 * (a + b)
        ib[imax] = m
        gk15(a, m, sl, log_sl, inv_s, log_s, t, &iv[imax], &ie[imax])
        ia[n] = m
        ib[n] = b
        gk15(m, b, sl, log_sl, inv_s, log_s, t, &iv[n], &ie[n])
        n += 1
        n_eval += 1
    value[0] = total + tail(u_max, sl, log_sl, inv_s, log_s, t)
    abserr[0] = err
    return converged


cdef int index_mi_core(const double* s, int t, double rel_tol, int max_sub,
                       double u_max, double* inv_s, double* log_s,
                       double* ia, double* ib, double* iv, double* ie,
                       double* value, double* abserr) nogil:
    cdef int l, ok = 1
    cdef double v, e, vsum = 0.0, esum = 0.0
    for l in range(t):
        inv_s[l] = 1.0 / s[l]
        log_s[l] = log(s[l])
    for l in range(t):
        ok &= kl_hop(s[l], inv_s, log_s, t, rel_tol, max_sub, u_max,
                     ia, ib, iv, ie, &v, &e)
        vsum += v
        esum += e
    value[0] = vsum / t
    abserr[0] = esum / t
    return ok


def index_mi_nats(s, double rel_tol, int max_sub, double u_max):
    """Mean over hops of the KL terms, ``I(y; l)`` in nats: ``(value, abs_error, converged)``."""
    vals, errs, ok = index_mi_batch(np.asarray(s, dtype=float).reshape(1, -1),
                                    rel_tol, max_sub, u_max)
    return float(vals[0]), float(errs[0]), bool(ok[0])


def index_mi_batch(S, double rel_tol, int max_sub, double u_max):
    """Row-wise index mutual information (nats) over a 2-D array of sigma vectors."""
    cdef double[:, ::1] sv = np.ascontiguousarray(S, dtype=float)
    cdef Py_ssize_t n = sv.shape[0], i
    cdef int t = <int>sv.shape[1]
    values = np.empty(n)
    errors = np.empty(n)
    ok = np.empty(n, dtype=np.uint8)
    cdef double[::1] vv = values
    cdef double[::1] ev = errors
    cdef unsigned char[::1] okv = ok
    cdef int cap = max_sub + 4 * t + 8
    cdef double* work = <double*>malloc((2 * t + 4 * cap) * sizeof(double))
    if work == NULL:
        raise MemoryError()
    cdef double* inv_s = work
    cdef double* log_s = work + t
    cdef double* ia = work + 2 * t
    cdef double* ib = ia + cap
    cdef double* iv = ib + cap
    cdef double* ie = iv + cap
    try:
        with nogil:
            for i in range(n):
                okv[i] = index_mi_core(&sv[i, 0], t, rel_tol, max_sub, u_max,
                                       inv_s, log_s, ia, ib, iv, ie, &vv[i], &ev[i])
    finally:
        free(work)
    return values, errors, ok.astype(bool)


def mc_log_ratio(s, labels, expo):
    """Per-sample ``ln f(rho|l) - ln q(rho)`` for ``rho = s_l * expo``."""
    cdef double[::1] sv = np.ascontiguousarray(s, dtype=float)
    cdef cnp.int64_t[::1] lv = np.ascontiguousarray(labels, dtype=np.int64)
    cdef double[::1] xv = np.ascontiguousarray(expo, dtype=float)
    cdef int t = <int>sv.shape[0]
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n)
    cdef double[::1] ov = out
    cdef double* inv_s = <double*>malloc(2 * t * sizeof(double))
    if inv_s == NULL:
        raise MemoryError()
    cdef double* log_s = inv_s + t
    cdef int j
    cdef double sl
    try:
        for j in range(t):
            inv_s[j] = 1.0 / sv[j]
            log_s[j] = log(sv[j])
        with nogil:
            for i in range(n):
                sl = sv[lv[i]]
                ov[i] = (-xv[i] - log(sl)) - log_mixture(sl * xv[i], inv_s, log_s, t)
    finally:
        free(inv_s)
    return out
