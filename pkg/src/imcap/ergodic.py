"""Closed-form ergodic capacity for two hops (t = 2), second-order form.

For ``t = 2`` the order-2 capacity averages to

    C = 1 + 2 E1 - E2 - (1 - E3) / ln 2,
    E1 = E{log2 s_1},  E2 = E{log2(s_1 + s_2)},  E3 = E{s_1 / s_2},

and for Gamma-distributed column powers each term reduces to ``Upsilon``
and the incomplete gamma function (:mod:`imcap.specfun`).

Rice channels use the Poisson mixture of central chi-squares. Two details
differ from a naive single-mixture evaluation and are required for the
result to match simulation:

* ``||h_1||^2 + ||h_2||^2`` has twice the noncentrality of one column, so
  ``E2`` mixes with Poisson weights of mean ``lambda`` rather than
  ``lambda / 2``;
* ``s_1`` and ``s_2`` carry independent mixture indices, so ``E3`` is the
  product of two separately mixed means.

:func:`table_one` evaluates the compact per-distribution rows. Its Rice row
is the naive variant (one Poisson sum over ``k`` shared by all three terms,
``lambda = 2 r nu^2``), kept for comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import CapacityEstimate
from .errors import AccuracyError, DomainError, InvalidInputError
from .specfun import inverse_moment, upsilon_sequence, upsilon_stable_sequence

__all__ = [
    "Rayleigh",
    "Rice",
    "Nakagami",
    "ErgodicTerms",
    "ergodic_terms",
    "ergodic_capacity",
    "table_one",
    "log_expectation_gamma",
    "poisson_window",
]

LN2 = math.log(2.0)
MAX_SHAPE = 170


@dataclass(frozen=True)
class Rayleigh:
    """Entries ``CN(0, 2 varrho^2)``; ``varrho`` is the per-dimension standard deviation."""

    varrho: float
    r: int = 1

    def __post_init__(self):
        if not self.varrho > 0:
            raise InvalidInputError("varrho must be positive")
        _check_r(self.r)

    def as_nakagami(self):
        return Nakagami(m=1.0, omega=2.0 * self.varrho**2, r=self.r)


@dataclass(frozen=True)
class Rice:
    """Entries with mean ``nu (1 + j)`` and per-dimension variance ``varrho^2``.

    ``E|h|^2 = 2 (nu^2 + varrho^2)``; the Rice factor is ``K = nu^2 / varrho^2``.
    """

    nu: float
    varrho: float
    r: int = 1

    def __post_init__(self):
        if not self.varrho > 0:
            raise InvalidInputError("varrho must be positive")
        if not self.nu >= 0:
            raise InvalidInputError("nu must be nonnegative")
        _check_r(self.r)

    @classmethod
    def from_k_factor(cls, k, r=1, power=1.0):
        """Rice entries with factor ``k`` and ``E|h|^2 = power``."""
        varrho2 = power / (2.0 * (1.0 + k))
        return cls(nu=math.sqrt(k * varrho2), varrho=math.sqrt(varrho2), r=r)

    @property
    def noncentrality(self):
        """``lambda = 2 r nu^2 / varrho^2`` of ``||h_l||^2 / varrho^2``."""
        return 2.0 * self.r * self.nu**2 / self.varrho**2


@dataclass(frozen=True)
class Nakagami:
    """Envelope Nakagami-m with ``E|h|^2 = omega``; power ``~ Gamma(m, omega/m)``."""

    m: float
    omega: float
    r: int = 1

    def __post_init__(self):
        if not self.m >= 0.5:
            raise InvalidInputError("Nakagami m must be at least 0.5")
        if not self.omega > 0:
            raise InvalidInputError("omega must be positive")
        _check_r(self.r)


def _check_r(r):
    if int(r) != r or r < 1:
        raise InvalidInputError("receive dimension r must be a positive integer")


@dataclass(frozen=True)
class ErgodicTerms:
    e1: float
    e2: float
    e3: float

    @property
    def capacity(self):
        return 1.0 + 2.0 * self.e1 - self.e2 - (1.0 - self.e3) / LN2


def poisson_window(mean, tol, max_terms):
    """Poisson(mean) weights on the smallest window around the mode with tail mass < tol.

    Returns ``(k0, weights)``: weights for ``k = k0, k0 + 1, ...``. ``mean = 0``
    gives the single weight ``1`` at ``k = 0`` (``0^0 := 1``).
    """
    if mean == 0.0:
        return 0, np.ones(1)

    def logw(k):
        return -mean + k * math.log(mean) - math.lgamma(k + 1.0)

    mode = int(math.floor(mean))
    lo = hi = mode
    w = {mode: math.exp(logw(mode))}
    total = w[mode]
    while 1.0 - total >= tol:
        if hi - lo + 1 >= max_terms:
            raise AccuracyError(
                f"Poisson mixture (mean {mean:g}) did not converge within {max_terms} terms",
                achieved=1.0 - total,
            )
        # grow toward the heavier neighbour
        w_hi = math.exp(logw(hi + 1))
        w_lo = math.exp(logw(lo - 1)) if lo > 0 else -1.0
        if w_hi >= w_lo:
            hi += 1
            w[hi] = w_hi
            total += w_hi
        else:
            lo -= 1
            w[lo] = w_lo
            total += w_lo
    return lo, np.array([w[k] for k in range(lo, hi + 1)])


def log_expectation_gamma(shape, beta, rel_tol=1e-8):
    """``E{ln(1 + X / beta)}``, ``X ~ Gamma(shape, 1)`` for real ``shape`` by adaptive quadrature.

    The ``x^(shape-1)`` factor near the origin is handled as an algebraic
    quadrature weight, so small and fractional shapes are exact at the end
    point.
    """
    a = float(shape)
    b = float(beta)
    lg = math.lgamma(a)

    def bracket(x):
        return math.log1p(x / b) * math.exp(-x - lg)

    def full(x):
        return math.log1p(x / b) * math.exp((a - 1.0) * math.log(x) - x - lg)

    c = min(b, a, 1.0)
    head, e_head = integrate.quad(bracket, 0.0, c, weight="alg", wvar=(a - 1.0, 0.0), epsabs=0.0, epsrel=1e-12)
    top = a + 60.0 + 12.0 * math.sqrt(a)
    points = sorted({p for p in (b, 10.0 * b, a, a + 5.0 * math.sqrt(a)) if c < p < top})
    body, e_body = integrate.quad(full, c, top, points=points or None, epsabs=0.0, epsrel=1e-12, limit=400)
    value = head + body
    err = e_head + e_body
    if err > rel_tol * abs(value):
        raise AccuracyError(
            f"quadrature for E ln(1 + X/{b}) with shape {a} missed rel_tol={rel_tol:g}",
            estimate=value,
            achieved=err / abs(value),
        )
    return value


def _upsilon_range(n0, count, beta):
    """``Upsilon(n, beta)`` for ``n = n0 .. n0 + count - 1`` with per-entry fallback."""
    stable = None
    out = []
    exact_count = max(0, min(count, MAX_SHAPE - n0 + 1))
    seq = upsilon_sequence(n0, exact_count, beta) if exact_count else []
    for k in range(count):
        v = seq[k] if k < exact_count else None
        if v is None or isinstance(v, AccuracyError):
            if stable is None:
                stable = upsilon_stable_sequence(n0 + count - 1, beta)
            v = stable[n0 + k - 1]
        out.append(v)
    return out


def _upsilon_any(shape, beta):
    if float(shape).is_integer():
        return _upsilon_range(int(shape), 1, beta)[0]
    return log_expectation_gamma(shape, beta)


def _nakagami_terms(m, omega, r, gamma):
    a = m * r
    if not float(a).is_integer() and a > MAX_SHAPE:
        raise DomainError(f"non-integer shape m*r = {a} above {MAX_SHAPE} is out of range")
    beta = m / (gamma * omega)
    e1 = _upsilon_any(a, beta) / LN2
    e2 = 1.0 + _upsilon_any(2.0 * a, 2.0 * beta) / LN2
    e3 = (1.0 + a / beta) * inverse_moment(a, beta)
    return ErgodicTerms(e1, e2, e3)


def _rice_terms(spec, gamma, series_tol):
    lam = spec.noncentrality
    r = spec.r
    beta = 1.0 / (2.0 * gamma * spec.varrho**2)
    max_terms = int(10 * lam + 200)
    k1, w1 = poisson_window(lam / 2.0, series_tol, max_terms)
    k2, w2 = poisson_window(lam, series_tol, max_terms)
    shapes1 = r + k1 + np.arange(w1.size)
    ups1 = _upsilon_range(r + k1, w1.size, beta)
    ups2 = _upsilon_range(2 * r + k2, w2.size, 2.0 * beta)
    e1 = math.fsum(w1 * ups1) / LN2
    e2 = 1.0 + math.fsum(w2 * ups2) / LN2
    mean_s = math.fsum(w1 * (1.0 + shapes1 / beta))
    mean_inv = math.fsum(w * inverse_moment(int(n), beta) for w, n in zip(w1, shapes1))
    return ErgodicTerms(e1, e2, mean_s * mean_inv)


def ergodic_terms(spec, gamma, series_tol=1e-10):
    """``E1, E2, E3`` for the given fading distribution at SNR ``gamma`` (linear)."""
    if not gamma > 0 or not math.isfinite(gamma):
        raise DomainError("gamma must be positive and finite")
    if isinstance(spec, Rayleigh):
        spec = spec.as_nakagami()
    if isinstance(spec, Nakagami):
        return _nakagami_terms(spec.m, spec.omega, spec.r, gamma)
    if isinstance(spec, Rice):
        if not 0 < series_tol <= 1e-3:
            raise DomainError("series_tol must lie in (0, 1e-3]")
        return _rice_terms(spec, gamma, series_tol)
    raise InvalidInputError(f"unsupported fading spec {spec!r}")


def ergodic_capacity(spec, gamma, series_tol=1e-10):
    """Ergodic order-2 capacity for ``t = 2`` hops (bpcu)."""
    return CapacityEstimate(ergodic_terms(spec, gamma, series_tol).capacity, "order2")


def _table_row(shape, beta):
    return (
        2.0 * _upsilon_any(shape, beta)
        - _upsilon_any(2 * shape, 2.0 * beta)
        + (1.0 + shape / beta) * inverse_moment(shape, beta)
        - 1.0
    )


def table_one(spec, gamma, series_tol=1e-10):
    """Ergodic capacity from the compact one-line form per distribution.

    The Rice row uses ``lambda = 2 r nu^2`` and one Poisson sum shared by all
    terms; it disagrees with simulation (see the module notes). Use
    :func:`ergodic_capacity` for the exact value.
    """
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    if isinstance(spec, Rayleigh):
        beta = 1.0 / (gamma * 2.0 * spec.varrho**2)
        return _table_row(spec.r, beta) / LN2
    if isinstance(spec, Nakagami):
        return _table_row(spec.m * spec.r, spec.m / (gamma * spec.omega)) / LN2
    if isinstance(spec, Rice):
        lam = 2.0 * spec.r * spec.nu**2
        beta = 1.0 / (2.0 * gamma * spec.varrho**2)
        k0, w = poisson_window(lam / 2.0, series_tol, int(10 * lam + 200))
        rows = [_table_row(spec.r + k0 + i, beta) for i in range(w.size)]
        return math.fsum(w * rows) / LN2
    raise InvalidInputError(f"unsupported fading spec {spec!r}")
