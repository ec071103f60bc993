"""Instantaneous index-modulation capacity from a sigma vector.

``sigma`` below is always the vector of per-hop received variances
``sigma_l^2 = 1 + gamma ||h_l||^2`` (see :func:`imcap.core.sigma_vector`);
the batched functions accept any leading shape ``(..., t)``.

The capacity series is

    C = log2(H(s) / e) - sum_{n>=1} A(s^n) / (2^(2n-1) n!) * g^(2n)(0)

with ``g(y) = log2 sum_l exp(-|y|^2/s_l) / (pi s_l)``; truncating after
``n = 0, 1, 2`` gives the order-0, -2 and -4 closed forms.
"""
from __future__ import annotations

import math

import numpy as np

from .core import CapacityEstimate, arithmetic_mean, harmonic_mean
from .errors import InvalidInputError, UnsupportedError

__all__ = [
    "ORDERS",
    "mutual_info_symbol",
    "g_value",
    "g_deriv2_at0",
    "g_deriv4_at0",
    "closed_form",
    "capacity_closed_form",
    "g_derivatives_at",
    "remainder_estimate",
    "remainder_limit_high_snr",
]

LN2 = math.log(2.0)
ORDERS = (0, 2, 4)


def _sigma(sigma):
    s = np.asarray(sigma, dtype=float)
    if s.ndim == 0 or s.shape[-1] < 1:
        raise InvalidInputError("sigma vector must have at least one component")
    if not np.all(np.isfinite(s)) or np.any(s <= 0):
        raise InvalidInputError("sigma components must be finite and positive")
    return s


def _inverse_power_sums(s):
    inv = 1.0 / s
    inv2 = inv * inv
    return inv.sum(-1), inv2.sum(-1), (inv2 * inv).sum(-1)


def _spread(s, s1, s2):
    """``H(s)/H(s^3) - H(s)^2/H(s^2)^2`` as a weighted variance of ``1/s`` (never negative)."""
    inv = 1.0 / s
    c = inv - (s2 / s1)[..., None]
    return (inv * c * c).sum(-1) / s1


def mutual_info_symbol(sigma):
    """Symbol information given the hop, ``mean_l log2(sigma_l^2)``."""
    return np.mean(np.log2(_sigma(sigma)), axis=-1)


def g_value(y1, y2, sigma):
    """``g(y) = log2 sum_l exp(-(y1^2 + y2^2)/s_l) / (pi s_l)``, max-shifted."""
    s = _sigma(sigma)
    rho = np.asarray(y1, dtype=float) ** 2 + np.asarray(y2, dtype=float) ** 2
    a = -np.multiply.outer(rho, 1.0 / s) - np.log(np.pi * s)
    m = a.max(axis=-1)
    return (m + np.log(np.exp(a - m[..., None]).sum(axis=-1))) / LN2


def g_deriv2_at0(sigma):
    """Second derivative of ``g`` along ``y1`` at the origin: ``-(2/ln2) H(s)/H(s^2)``."""
    s1, s2, _ = _inverse_power_sums(_sigma(sigma))
    return -(2.0 / LN2) * s2 / s1


def g_deriv4_at0(sigma):
    """Fourth derivative at the origin: ``(12/ln2) (H(s)/H(s^3) - H(s)^2/H(s^2)^2)``."""
    s = _sigma(sigma)
    s1, s2, _ = _inverse_power_sums(s)
    return (12.0 / LN2) * _spread(s, s1, s2)


def closed_form(sigma, order=2):
    """Order-0/2/4 capacity (bpcu) for one or many sigma vectors.

    Order 0 is ``log2(H(s)/e)`` and is returned unclipped, so it goes
    negative at low SNR.
    """
    if order not in ORDERS:
        raise UnsupportedError(f"capacity order must be one of {ORDERS}, got {order!r}")
    s = _sigma(sigma)
    t = s.shape[-1]
    if t == 1:
        # single hop: every order reduces to log2(s) exactly
        return np.log2(s[..., 0])
    s1, s2, _ = _inverse_power_sums(s)
    c = np.log2(t / s1) - 1.0 / LN2
    if order == 0:
        return c
    # n = 1 term: A(s) H(s)/H(s^2) / ln2
    c = c + np.mean(s, axis=-1) * (s2 / s1) / LN2
    if order == 2:
        return c
    return c - 0.75 * np.mean(s * s, axis=-1) * _spread(s, s1, s2) / LN2


def capacity_closed_form(sigma, order=2):
    """Closed-form capacity of a single sigma vector as a :class:`CapacityEstimate`."""
    s = _sigma(sigma)
    if s.ndim != 1:
        raise InvalidInputError("capacity_closed_form takes one sigma vector; use closed_form for batches")
    return CapacityEstimate(float(closed_form(s, order)), f"order{order}")


def _cumulants(rho, s):
    """Mean and central moments of ``a_l = 1/s_l`` under weights ``w_l ~ exp(-rho/s_l)/s_l``.

    The ratios ``f_n / f_2`` of the mixture moments are raw moments of ``a``
    under these softmax weights, and the derivatives of ``g`` are its
    cumulants. Central moments vanish identically when all ``s_l`` agree,
    so the higher derivatives do not suffer cancellation.
    """
    inv = 1.0 / s
    a = -np.multiply.outer(rho, inv) - np.log(s)
    w = np.exp(a - a.max(axis=-1, keepdims=True))
    w = w / w.sum(axis=-1, keepdims=True)
    m = (w * inv).sum(-1)
    c = inv - m[..., None]
    c2 = c * c
    mu2 = (w * c2).sum(-1)
    mu3 = (w * c2 * c).sum(-1)
    mu4 = (w * c2 * c2).sum(-1)
    return m, mu2, mu3, mu4 - 3.0 * mu2 * mu2


def g_derivatives_at(y1, y2, sigma):
    """First four partial derivatives of ``g`` with respect to ``y1`` at ``(y1, y2)``.

    With ``u = y1^2`` and the cumulants of :func:`_cumulants`,

        d1 = -2 y1 m / ln2
        d2 = 2 (2 u mu2 - m) / ln2
        d3 = 4 y1 (3 mu2 - 2 u mu3) / ln2
        d4 = 4 (3 mu2 - 12 u mu3 + 4 u^2 k4) / ln2

    Returns
    -------
    tuple of 4 floats or arrays
        ``(d1, d2, d3, d4)``.
    """
    s = _sigma(sigma)
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if not (np.all(np.isfinite(y1)) and np.all(np.isfinite(y2))):
        raise InvalidInputError("evaluation point must be finite")
    m, mu2, mu3, k4 = _cumulants(y1**2 + y2**2, s)
    u = y1 * y1
    d1 = -2.0 * y1 / LN2 * m
    d2 = 2.0 / LN2 * (2.0 * u * mu2 - m)
    d3 = 4.0 * y1 / LN2 * (3.0 * mu2 - 2.0 * u * mu3)
    d4 = 4.0 / LN2 * (3.0 * mu2 - 12.0 * u * mu3 + 4.0 * u * u * k4)
    return d1, d2, d3, d4


def remainder_estimate(sigma, xi=(0.0, 0.0)):
    """Fourth-order remainder ``A(s^2)/32 * (d4g/dy1^4 + d4g/dy2^4)`` at ``xi``.

    The ``y2`` derivative is the ``y1`` derivative with the coordinates swapped.
    """
    s = _sigma(sigma)
    x1, x2 = xi
    d4_1 = g_derivatives_at(x1, x2, s)[3]
    d4_2 = g_derivatives_at(x2, x1, s)[3]
    return arithmetic_mean(s * s) / 32.0 * (d4_1 + d4_2)


def remainder_limit_high_snr(column_power):
    """Large-SNR limit of the remainder for fixed column powers ``||h_l||^2``.

    ``3/(4 ln2) A(k^2) (H(k)/H(k^3) - H(k)^2/H(k^2)^2)`` with ``k_l = ||h_l||^2``.
    """
    k = _sigma(column_power)
    h1, h2, h3 = harmonic_mean(k), harmonic_mean(k**2), harmonic_mean(k**3)
    return 3.0 / (4.0 * LN2) * arithmetic_mean(k**2) * (h1 / h3 - (h1 / h2) ** 2)
