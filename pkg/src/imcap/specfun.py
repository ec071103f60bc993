"""Special functions behind the ergodic closed forms.

Upper incomplete gamma for real (including non-positive) order, the
exponential integral for negative argument, and the ``E_s`` / ``Upsilon``
helpers, where ``Upsilon(n, beta) = E{ln(1 + X / beta)}`` for
``X ~ Gamma(n, 1)``.

Internally everything is built on the *scaled* incomplete gamma

    G(s, x) = e^x x^(-s) Gamma(s, x),

which stays O(1)-ish where ``Gamma(s, x)`` itself under- or overflows. In
terms of ``G`` the downward recurrence reads ``G(s-1) = (x G(s) - 1) / (s-1)``.
"""
from __future__ import annotations

import math
from fractions import Fraction

from scipy.special import zeta

from .errors import AccuracyError, DomainError

__all__ = [
    "upper_incomplete_gamma",
    "scaled_upper_gamma",
    "ei_neg",
    "exp_ei_neg",
    "e_sub_s",
    "upsilon",
    "upsilon_sequence",
    "upsilon_stable",
    "upsilon_stable_sequence",
    "inverse_moment",
]

EULER_GAMMA = 0.57721566490153286060651209008240243
_EPS = 2.220446049250313e-16
_TINY = 1e-300
_SWITCH = 1.5
_MAX_ORDER = 1000.0
_MAX_SHAPE = 170
# relative error assumed for one scaled-gamma evaluation when judging cancellation
_G_REL_ERR = 1e-14


def _check_args(s, x):
    if not x > 0 or not math.isfinite(x):
        raise DomainError(f"incomplete gamma needs x > 0, got {x!r}")
    if not math.isfinite(s) or abs(s) > _MAX_ORDER:
        raise DomainError(f"incomplete gamma order must satisfy |s| <= {_MAX_ORDER:g}, got {s!r}")


def _cf_scaled(s, x, max_iter=20000):
    """Modified Lentz evaluation of the continued fraction for G(s, x)."""
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b if b != 0 else 1.0 / _TINY
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise AccuracyError(
        f"continued fraction for Gamma({s}, {x}) did not converge",
        estimate=h,
        achieved=abs(delta - 1.0),
    )


def _lower_series(s, x, max_iter=20000):
    """Sum_{n>=0} x^n / (s (s+1) ... (s+n)), i.e. e^x x^-s gamma(s, x)."""
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(max_iter):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total
    raise AccuracyError(f"series for gamma({s}, {x}) did not converge", estimate=total)


# lgamma(1+s) = -euler*s + sum_{k>=2} (-1)^k zeta(k) s^k / k for |s| < 1
_LGAMMA1P_COEFFS = [(-1) ** k * float(zeta(k)) / k for k in range(2, 60)]


def _gamma1p_m1_over_s(s):
    """``(Gamma(1+s) - 1) / s`` without cancellation near ``s = 0``."""
    if abs(s) >= 0.25:
        return math.expm1(math.lgamma(1.0 + s)) / s
    acc = 0.0
    for c in reversed(_LGAMMA1P_COEFFS):
        acc = acc * s + c
    lg_over_s = -EULER_GAMMA + s * acc
    lg = s * lg_over_s
    if lg == 0.0:
        return lg_over_s
    return math.expm1(lg) / lg * lg_over_s


def _small_x_anchor(s, x):
    """Gamma(s, x) for s in [-0.5, 1] and 0 < x < 1.5, free of the Gamma(s) - gamma(s,x) cancellation.

    Uses Gamma(s, x) = (Gamma(1+s) - 1)/s - (x^s - 1)/s - x^s sum_{k>=1} (-x)^k / (k! (s+k)).
    """
    lnx = math.log(x)
    if s == 0.0:
        head = -EULER_GAMMA - lnx
    else:
        sl = s * lnx
        head = _gamma1p_m1_over_s(s) - (math.expm1(sl) / sl * lnx if sl != 0.0 else lnx)
    term = 1.0
    tail = 0.0
    for k in range(1, 200):
        term *= -x / k
        add = term / (s + k)
        tail += add
        if abs(add) < _EPS * abs(tail):
            break
    return head - math.exp(s * lnx) * tail


def scaled_upper_gamma(s, x):
    """Return ``e^x * x^(-s) * Gamma(s, x)``.

    Valid for real ``|s| <= 1000`` and ``x > 0``.
    """
    s = float(s)
    x = float(x)
    _check_args(s, x)
    if x >= _SWITCH and x >= s + 1.0:
        return _cf_scaled(s, x)
    if s > 1.0:
        # x < s + 1: complement of the lower series; Q stays O(1) here
        log_norm = x - s * math.log(x) + math.lgamma(s)
        if log_norm > 709.0:
            raise OverflowError(f"Gamma({s}, {x}) overflows")
        return math.exp(log_norm) - _lower_series(s, x)
    # remaining region: s <= 1 and x < 1.5
    if s >= -0.5:
        return math.exp(x - s * math.log(x)) * _small_x_anchor(s, x)
    m = round(s)
    a = s - m
    g = math.exp(x - a * math.log(x)) * _small_x_anchor(a, x)
    b = a
    for _ in range(int(-m)):
        g = (x * g - 1.0) / (b - 1.0)
        b -= 1.0
    return g


def upper_incomplete_gamma(s, x):
    """Upper incomplete gamma ``int_x^inf u^(s-1) e^(-u) du`` for real ``s``.

    Parameters
    ----------
    s : float
        Order, ``|s| <= 1000``. Non-positive orders are allowed.
    x : float
        Lower limit, strictly positive.

    Notes
    -----
    Orders ``s <= 0`` with ``x < 1.5`` are reached by downward recurrence from
    an anchor in ``[-0.5, 0.5]``; each step multiplies the error by
    ``x / |s|`` so the recurrence is only used where that is below one. For
    ``x >= 1.5`` the continued fraction is used directly. Results below the
    smallest double underflow to ``0.0``.
    """
    s = float(s)
    x = float(x)
    _check_args(s, x)
    if s > 1.0 and not (x >= _SWITCH and x >= s + 1.0):
        # Gamma(s) Q(s, x); avoids the x^-s factor of the scaled form
        lg = math.lgamma(s)
        if lg > 709.0:
            raise OverflowError(f"Gamma({s}, {x}) overflows")
        p = math.exp(s * math.log(x) - x - lg) * _lower_series(s, x)
        return math.exp(lg) * (1.0 - p)
    g = scaled_upper_gamma(s, x)
    return math.exp(s * math.log(x) - x + math.log(g))


def exp_ei_neg(x):
    """``e^x Ei(-x)`` for ``x > 0`` (no underflow at large ``x``)."""
    return -scaled_upper_gamma(0.0, x)


def ei_neg(x):
    """Exponential integral at negative argument, ``Ei(-x) = -Gamma(0, x)``."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"ei_neg needs x > 0, got {x!r}")
    return -upper_incomplete_gamma(0.0, x)


def _check_shape(rr, beta):
    if int(rr) != rr or rr < 1:
        raise DomainError(f"shape must be a positive integer, got {rr!r}")
    if rr > _MAX_SHAPE:
        raise DomainError(f"shape above {_MAX_SHAPE} is not supported, got {rr!r}")
    if not beta > 0 or not math.isfinite(beta):
        raise DomainError(f"beta must be positive, got {beta!r}")
    return int(rr), Fraction(float(beta))


def _to_float(q):
    try:
        return float(q)
    except OverflowError:
        raise AccuracyError("intermediate sum overflows double precision", achieved=math.inf)


class _UpsilonState:
    """Exact rational accumulators for the truncated-exponential sum and the double sum.

    ``poly`` holds ``sum_{j<n} (-b)^j / j!`` and ``double`` holds
    ``sum_{j=1}^{n-1} sum_{k=1}^{j} (k-1)!/j! (-b)^(j-k)`` for the current ``n``.
    """

    def __init__(self, beta):
        self.b = beta
        self.n = 1
        self.poly = Fraction(1)
        self.double = Fraction(0)
        self._power = Fraction(1)  # (-b)^(n-1)
        self._fact = 1  # (n-1)!
        self._inner = Fraction(0)  # T_{n-1} = sum_{k=1}^{n-1} (k-1)! (-b)^(n-1-k)

    def advance(self):
        n = self.n
        # T_n = (-b) T_{n-1} + (n-1)!
        self._inner = -self.b * self._inner + self._fact
        self.double += self._inner / (self._fact * n)
        self._power *= -self.b
        self._fact *= n
        self.poly += self._power / self._fact
        self.n = n + 1


def _e_sub_s_from(poly, eexp):
    return eexp * _to_float(poly)


def e_sub_s(rr, beta):
    """``e^beta Ei(-beta) sum_{j=0}^{rr-1} (-beta)^j / j!``.

    The truncated exponential sum is accumulated in exact rational
    arithmetic, so the only rounding is in the final product.
    """
    rr, b = _check_shape(rr, beta)
    state = _UpsilonState(b)
    while state.n < rr:
        state.advance()
    return _e_sub_s_from(state.poly, exp_ei_neg(float(beta)))


def _upsilon_from(state, eexp, beta):
    es = _e_sub_s_from(state.poly, eexp)
    value = _to_float(state.double - Fraction(es))
    bound = abs(es) * _G_REL_ERR
    rel = bound / abs(value) if value != 0 else math.inf
    if rel > 1e-8:
        raise AccuracyError(
            f"Upsilon({state.n}, {beta}) loses accuracy to cancellation "
            f"(relative error bound {rel:.2e})",
            estimate=value,
            achieved=rel,
        )
    return value


def upsilon(rr, beta):
    """``Upsilon(rr, beta) = E{ln(1 + X / beta)}``, ``X ~ Gamma(rr, 1)``.

    Evaluated from the finite double sum minus ``E_s(rr, beta)``. Both sums
    are exact; the final subtraction cancels when ``beta`` is large relative
    to ``1 / rr`` and then :class:`AccuracyError` is raised with the estimate
    attached. :func:`upsilon_stable` covers that regime.
    """
    rr, b = _check_shape(rr, beta)
    state = _UpsilonState(b)
    while state.n < rr:
        state.advance()
    return _upsilon_from(state, exp_ei_neg(float(beta)), beta)


def upsilon_sequence(rr0, count, beta):
    """``[Upsilon(rr0 + k, beta) for k in range(count)]`` sharing the running sums.

    Results are identical to independent :func:`upsilon` calls. Entries that
    fail the accuracy check are returned as the :class:`AccuracyError`
    instance instead of a float so callers can fall back per entry.
    """
    rr0, b = _check_shape(rr0, beta)
    if count < 0:
        raise DomainError("count must be nonnegative")
    if rr0 + count - 1 > _MAX_SHAPE:
        raise DomainError(f"shape above {_MAX_SHAPE} is not supported")
    state = _UpsilonState(b)
    while state.n < rr0:
        state.advance()
    eexp = exp_ei_neg(float(beta))
    out = []
    for k in range(count):
        if k:
            state.advance()
        try:
            out.append(_upsilon_from(state, eexp, beta))
        except AccuracyError as exc:
            out.append(exc)
    return out


def upsilon_stable_sequence(n_max, beta):
    """Cumulative positive-term evaluation ``[Upsilon(n, beta) for n in 1..n_max]``.

    Integration by parts gives ``Upsilon(n, b) = sum_{k=0}^{n-1} G(-k, b)``
    with every term positive, so there is no cancellation at any ``beta``.
    """
    beta = float(beta)
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    if n_max < 1:
        return []
    out = []
    total = []
    if beta < _SWITCH:
        # downward recurrence is stable here (amplification beta / (k+1) < 1.5)
        g = scaled_upper_gamma(0.0, beta)
        for k in range(n_max):
            if k:
                g = (1.0 - beta * g) / k
            total.append(g)
            out.append(math.fsum(total))
    else:
        for k in range(n_max):
            total.append(_cf_scaled(-float(k), beta))
            out.append(math.fsum(total))
    return out


def upsilon_stable(rr, beta):
    """Cancellation-free ``Upsilon`` for any positive integer shape."""
    if int(rr) != rr or rr < 1:
        raise DomainError(f"shape must be a positive integer, got {rr!r}")
    return upsilon_stable_sequence(int(rr), beta)[-1]


def inverse_moment(shape, beta):
    """``E{1 / (1 + X / beta)} = beta^shape e^beta Gamma(1 - shape, beta)`` for ``X ~ Gamma(shape, 1)``.

    Computed as ``beta * G(1 - shape, beta)``; real shapes are allowed.
    """
    if not shape > 0:
        raise DomainError(f"shape must be positive, got {shape!r}")
    return float(beta) * scaled_upper_gamma(1.0 - shape, beta)
