"""Channel and sigma algebra shared by every capacity computation.

A channel realization is an ``(r, t)`` complex array whose columns are the
selectable index-modulation channels. Most functions also accept a stack of
realizations with shape ``(..., r, t)`` and broadcast over the leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidInputError

__all__ = [
    "CapacityEstimate",
    "as_channel",
    "sigma_vector",
    "column_power",
    "means",
    "arithmetic_mean",
    "harmonic_mean",
    "double_factorial",
    "gaussian_central_moment",
    "db_to_linear",
]

METHODS = ("order0", "order2", "order4", "quadrature", "montecarlo", "mimo")


@dataclass(frozen=True)
class CapacityEstimate:
    """Capacity in bits per channel use, tagged with the method that produced it."""

    value: float
    method: str
    std_error: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method tag {self.method!r}")

    def __float__(self):
        return float(self.value)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def as_channel(H):
    """Validate and return ``H`` as a complex array of shape ``(..., r, t)``."""
    H = np.asarray(H)
    if H.ndim == 1:
        # a single receive antenna
        H = H[np.newaxis, :]
    if H.ndim < 2 or H.shape[-1] < 1 or H.shape[-2] < 1:
        raise InvalidInputError(f"channel must have shape (..., r, t), got {H.shape}")
    H = H.astype(complex, copy=False)
    if not np.all(np.isfinite(H)):
        raise InvalidInputError("channel contains non-finite entries")
    return H


def column_power(H):
    """Squared column norms ``||h_l||^2``, shape ``(..., t)``."""
    H = as_channel(H)
    return np.sum(H.real**2 + H.imag**2, axis=-2)


def sigma_vector(H, gamma):
    """Per-hop received variances ``1 + gamma * ||h_l||^2``.

    Parameters
    ----------
    H : array_like, shape (..., r, t)
        Channel realization(s). No normalization is applied.
    gamma : float or array_like
        Average SNR (linear). Broadcasts against the leading axes of ``H``.

    Returns
    -------
    ndarray, shape (..., t)
    """
    gamma = np.asarray(gamma, dtype=float)
    if np.any(~np.isfinite(gamma)) or np.any(gamma < 0):
        raise DomainError("gamma must be finite and nonnegative")
    if gamma.ndim:
        gamma = gamma[..., np.newaxis]
    return 1.0 + gamma * column_power(H)


def _positive(v):
    v = np.asarray(v, dtype=float)
    if v.ndim == 0 or v.shape[-1] < 1:
        raise InvalidInputError("mean of an empty vector")
    if np.any(~(v > 0)):
        raise DomainError("means require strictly positive components")
    return v


def arithmetic_mean(v):
    return np.mean(_positive(v), axis=-1)


def harmonic_mean(v):
    v = _positive(v)
    return v.shape[-1] / np.sum(1.0 / v, axis=-1)


def means(v):
    """Return ``(arithmetic, harmonic)`` means along the last axis."""
    return arithmetic_mean(v), harmonic_mean(v)


def double_factorial(n):
    if n < 0:
        raise DomainError("double factorial of a negative number")
    if n > 30:
        raise DomainError("double factorial order above 30 is out of range")
    out = 1
    for k in range(n, 0, -2):
        out *= k
    return out


def gaussian_central_moment(n, sigma_sq):
    """Central moment of order ``n`` of one real component of ``CN(0, sigma_sq)``.

    Each real component has variance ``sigma_sq / 2``, so even moments are
    ``(n-1)!! * (sigma_sq / 2) ** (n / 2)`` and odd moments vanish.
    """
    if int(n) != n or n < 0:
        raise DomainError("moment order must be a nonnegative integer")
    n = int(n)
    if not sigma_sq > 0:
        raise DomainError("sigma_sq must be positive")
    if n % 2:
        return 0.0
    if n == 0:
        return 1.0
    return double_factorial(n - 1) * (sigma_sq / 2.0) ** (n // 2)
