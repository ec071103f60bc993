"""Pure-Python/NumPy implementation of the hot kernels.

Mirrors :mod:`imcap._ckernels` function by function; :mod:`imcap._backend`
picks one at import time.

The index mutual information is computed per hop ``l`` as the KL divergence
between the exponential law of ``rho = |y|^2`` given ``l`` and the uniform
mixture over hops, after the substitution ``rho = s_l u``:

    KL_l = int_0^inf e^-u [ -u - ln s_l - ln q(s_l u) ] du,
    q(rho) = (1/t) sum_j e^(-rho/s_j) / s_j.
"""
import math

import numpy as np

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15)
XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-XGK[:-1], XGK[::-1]])  # 15 nodes, ascending
_WK = np.concatenate([WGK[:-1], WGK[::-1]])
_WG = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes
_WG[[1, 3, 5]] = WG[:3]
_WG[7] = WG[3]
_WG[[9, 11, 13]] = WG[2::-1]

BREAKS = (0.0, 0.5, 2.0, 8.0, 32.0)
ABS_FLOOR = 1e-15


def log_mixture(rho, s, log_s):
    """``ln q(rho)`` for ``q(rho) = (1/t) sum_j exp(-rho/s_j)/s_j`` (max-shifted)."""
    a = -np.multiply.outer(rho, 1.0 / s) - log_s
    m = a.max(axis=-1)
    return m + np.log(np.exp(a - m[..., None]).sum(axis=-1)) - math.log(s.size)


def hop_breaks(sl, s, u_max):
    """Initial interval edges for hop ``sl``: the fixed breaks plus the same
    breaks rescaled to every narrower hop, where the mixture changes regime."""
    pts = {b for b in BREAKS if b < u_max}
    for sj in s:
        if sj < sl:
            r = sj / sl
            pts.update(r * b for b in BREAKS[1:] if 0.0 < r * b < u_max)
    edges = sorted(pts)
    # drop edges that coincide to rounding
    out = [edges[0]]
    for e in edges[1:]:
        if e > out[-1] * (1.0 + 1e-12):
            out.append(e)
    return out + [u_max]


def _kl_integrand(u, sl, s, log_s):
    return np.exp(-u) * (-u - math.log(sl) - log_mixture(sl * u, s, log_s))


def _tail(u_max, sl, s, log_s):
    """Linear extrapolation of the bracket beyond ``u_max`` integrated against e^-u."""
    rho = sl * u_max
    a = -rho / s - log_s
    w = np.exp(a - a.max())
    w /= w.sum()
    phi = -u_max - math.log(sl) - log_mixture(np.array([rho]), s, log_s)[0]
    dphi = -1.0 + sl * float(np.dot(w, 1.0 / s))
    return math.exp(-u_max) * (phi + dphi)


def _gk15(a, b, sl, s, log_s):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    f = _kl_integrand(c + h * _NODES, sl, s, log_s)
    k = h * float(np.dot(_WK, f))
    g = h * float(np.dot(_WG, f))
    return k, abs(k - g)


def kl_hop(sl, s, rel_tol, max_sub, u_max):
    """Adaptive (global bisection) integral of one hop's KL term.

    Returns ``(value, abs_error, converged)`` in nats.
    """
    log_s = np.log(s)
    edges = hop_breaks(sl, s, u_max)
    intervals = []
    for a, b in zip(edges[:-1], edges[1:]):
        k, e = _gk15(a, b, sl, s, log_s)
        intervals.append([e, a, b, k])
    n_eval = len(intervals)
    while True:
        total = math.fsum(iv[3] for iv in intervals)
        err = math.fsum(iv[0] for iv in intervals)
        if err <= max(rel_tol * abs(total), ABS_FLOOR):
            converged = True
            break
        if n_eval >= max_sub:
            converged = False
            break
        i = max(range(len(intervals)), key=lambda j: intervals[j][0])
        _, a, b, _ = intervals[i]
        m = 0.5 * (a + b)
        k1, e1 = _gk15(a, m, sl, s, log_s)
        k2, e2 = _gk15(m, b, sl, s, log_s)
        intervals[i] = [e1, a, m, k1]
        intervals.append([e2, m, b, k2])
        n_eval += 1
    total += _tail(u_max, sl, s, log_s)
    return total, err, converged


def index_mi_nats(s, rel_tol, max_sub, u_max):
    """Mean over hops of the KL terms, ``I(y; l)`` in nats.

    Returns ``(value, abs_error, converged)``.
    """
    s = np.ascontiguousarray(s, dtype=float)
    t = s.size
    vals = []
    errs = []
    ok = True
    for sl in s:
        v, e, c = kl_hop(float(sl), s, rel_tol, max_sub, u_max)
        vals.append(v)
        errs.append(e)
        ok = ok and c
    return math.fsum(vals) / t, math.fsum(errs) / t, ok


def index_mi_batch(S, rel_tol, max_sub, u_max):
    """Row-wise :func:`index_mi_nats` over a 2-D array of sigma vectors."""
    S = np.ascontiguousarray(S, dtype=float)
    n = S.shape[0]
    values = np.empty(n)
    errors = np.empty(n)
    ok = np.empty(n, dtype=bool)
    for i in range(n):
        values[i], errors[i], ok[i] = index_mi_nats(S[i], rel_tol, max_sub, u_max)
    return values, errors, ok


def mc_log_ratio(s, labels, expo):
    """Per-sample ``ln f(rho|l) - ln q(rho)`` for ``rho = s_l * expo``."""
    s = np.ascontiguousarray(s, dtype=float)
    log_s = np.log(s)
    sl = s[labels]
    rho = sl * expo
    return (-expo - np.log(sl)) - log_mixture(rho, s, log_s)
