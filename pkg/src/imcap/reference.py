"""Ground-truth estimators the closed forms are checked against.

Radial reduction
----------------
Given hop ``l`` the sufficient statistic is ``y ~ CN(0, s_l)``, whose density
depends on ``y`` only through ``rho = |y|^2``; ``rho`` is exponential with
mean ``s_l``. The area element is ``dy = pi d(rho) d(theta)/(2 pi)`` and the
factor is common to every hop, so it cancels inside the log-likelihood
ratio and

    I(y; l) = I(rho; l) = (1/t) sum_l KL( Exp(s_l) || (1/t) sum_j Exp(s_j) ).

Each KL term is a 1-D integral, evaluated by adaptive Gauss-Kronrod after
the substitution ``rho = s_l u`` (see :mod:`imcap._pykernels`). The cutoff
``radial_cutoff_sigmas = c`` stops the radial integral at ``|y| = c sqrt(s_l)``,
i.e. ``u = c^2``; the remaining tail is added in closed form.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import CapacityEstimate, as_channel, sigma_vector
from .errors import AccuracyError, DomainError, InvalidInputError
from .instcap import mutual_info_symbol

__all__ = [
    "QuadratureSettings",
    "CurvePair",
    "index_mi_quadrature",
    "index_mi_quadrature_batch",
    "index_mi_montecarlo",
    "capacity_integral",
    "integral_batch",
    "mimo_capacity",
    "normalized_error",
    "normalized_error_arrays",
    "per_point_mse",
    "mc_generator",
]

LN2 = math.log(2.0)
MC_BLOCK = 1 << 16


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    radial_cutoff_sigmas: float = 12.0

    def __post_init__(self):
        if not 0 < self.rel_tol <= 1e-2:
            raise InvalidInputError("rel_tol must lie in (0, 1e-2]")
        if self.max_subdivisions < 1:
            raise InvalidInputError("max_subdivisions must be positive")
        if not self.radial_cutoff_sigmas > 0:
            raise InvalidInputError("radial_cutoff_sigmas must be positive")

    @property
    def u_max(self):
        return self.radial_cutoff_sigmas**2


DEFAULT_SETTINGS = QuadratureSettings()


@dataclass(frozen=True)
class CurvePair:
    """Approximate and reference capacity curves on a common SNR grid (dB)."""

    snr_grid: np.ndarray
    approx: np.ndarray
    reference: np.ndarray

    def __post_init__(self):
        grid = np.atleast_1d(np.asarray(self.snr_grid, dtype=float))
        approx = np.atleast_1d(np.asarray(self.approx, dtype=float))
        ref = np.atleast_1d(np.asarray(self.reference, dtype=float))
        if not (grid.shape == approx.shape == ref.shape) or grid.ndim != 1 or grid.size < 1:
            raise InvalidInputError("curves must be 1-D and of equal nonzero length")
        if np.any(np.diff(grid) <= 0):
            raise InvalidInputError("snr_grid must be strictly ascending")
        object.__setattr__(self, "snr_grid", grid)
        object.__setattr__(self, "approx", approx)
        object.__setattr__(self, "reference", ref)


def _check_sigma(sigma):
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 1 or s.size < 1:
        raise InvalidInputError("expected a single sigma vector")
    if not np.all(np.isfinite(s)) or np.any(s <= 0):
        raise InvalidInputError("sigma components must be finite and positive")
    return s


def _clamp(value, t, tol):
    upper = math.log2(t)
    if -tol <= value < 0.0:
        return 0.0
    if upper < value <= upper * (1.0 + tol) + tol:
        return upper
    return value


def index_mi_quadrature(sigma, settings=DEFAULT_SETTINGS):
    """Index information ``I(y; l)`` in bits by radial quadrature.

    Raises
    ------
    AccuracyError
        If ``settings.rel_tol`` is not met within ``settings.max_subdivisions``
        bisections; the exception carries the achieved estimate.
    """
    s = _check_sigma(sigma)
    t = s.size
    if t == 1 or np.all(s == s[0]):
        return 0.0
    value, err, ok = _backend.kernels.index_mi_nats(s, settings.rel_tol, settings.max_subdivisions, settings.u_max)
    value /= LN2
    err /= LN2
    if not ok:
        raise AccuracyError(
            f"index quadrature missed rel_tol={settings.rel_tol:g}",
            estimate=value,
            achieved=err / abs(value) if value else err,
        )
    return _clamp(value, t, settings.rel_tol)


def index_mi_quadrature_batch(S, settings=DEFAULT_SETTINGS):
    """Row-wise :func:`index_mi_quadrature` that flags instead of raising.

    Returns
    -------
    values : ndarray
        Index information in bits per row.
    ok : ndarray of bool
        False where the tolerance was not met (value is the achieved estimate).
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[1] < 1:
        raise InvalidInputError("expected a 2-D array of sigma vectors")
    if not np.all(np.isfinite(S)) or np.any(S <= 0):
        raise InvalidInputError("sigma components must be finite and positive")
    n, t = S.shape
    values = np.zeros(n)
    ok = np.ones(n, dtype=bool)
    if t == 1:
        return values, ok
    live = ~np.all(S == S[:, :1], axis=1)
    if np.any(live):
        v, _, good = _backend.kernels.index_mi_batch(
            S[live], settings.rel_tol, settings.max_subdivisions, settings.u_max
        )
        v = v / LN2
        values[live] = [_clamp(x, t, settings.rel_tol) for x in v]
        ok[live] = good
    return values, ok


def mc_generator(seed, block):
    """Counter-based generator for one fixed-size block of a Monte-Carlo run."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def _mc_block(s, seed, block, size):
    rng = mc_generator(seed, block)
    labels = rng.integers(0, s.size, size=size)
    expo = rng.standard_exponential(size)
    return _backend.kernels.mc_log_ratio(s, labels, expo)


def index_mi_montecarlo(sigma, n_samples, seed, workers=1):
    """Monte-Carlo estimate of ``I(y; l)`` in bits.

    Draws the hop uniformly and ``|y|^2`` from its exponential law, and
    averages ``log2 f(y|l) / ((1/t) sum_j f(y|j))``. Samples are generated in
    fixed blocks of 65536, block ``b`` from its own counter-based stream
    keyed by ``(seed, b)``, and summed exactly; the result does not depend
    on ``workers``.

    Returns
    -------
    estimate, std_error : float
    """
    s = _check_sigma(sigma)
    n_samples = int(n_samples)
    if n_samples < 1000:
        raise DomainError("index_mi_montecarlo needs at least 1000 samples")
    if s.size == 1:
        return 0.0, 0.0
    n_blocks = -(-n_samples // MC_BLOCK)
    sizes = [min(MC_BLOCK, n_samples - b * MC_BLOCK) for b in range(n_blocks)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _mc_block(s, seed, b, sizes[b]), range(n_blocks)))
    else:
        parts = [_mc_block(s, seed, b, sizes[b]) for b in range(n_blocks)]
    x = np.concatenate(parts) / LN2
    mean = math.fsum(x) / n_samples
    var = math.fsum((x - mean) ** 2) / (n_samples - 1)
    return mean, math.sqrt(var / n_samples)


def capacity_integral(H, gamma, settings=DEFAULT_SETTINGS):
    """Exact instantaneous capacity ``I1 + I2`` of one channel realization."""
    H = as_channel(H)
    if H.ndim != 2:
        raise InvalidInputError("capacity_integral takes a single (r, t) channel")
    s = sigma_vector(H, gamma)
    value = float(mutual_info_symbol(s)) + index_mi_quadrature(s, settings)
    return CapacityEstimate(value, "quadrature")


def integral_batch(sigma, settings=DEFAULT_SETTINGS):
    """``I1 + I2`` (bits) for a stack of sigma vectors ``(n, t)``; returns ``(values, ok)``."""
    S = np.asarray(sigma, dtype=float)
    i2, ok = index_mi_quadrature_batch(S, settings)
    return mutual_info_symbol(S) + i2, ok


def mimo_capacity(H, gamma):
    """No-CSIT MIMO capacity ``sum_n log2(1 + gamma/t * lambda_n)`` over nonzero eigenvalues of ``H^H H``."""
    H = as_channel(H)
    if not gamma >= 0:
        raise DomainError("gamma must be nonnegative")
    t = H.shape[-1]
    lam = np.linalg.eigvalsh(np.swapaxes(H.conj(), -1, -2) @ H)
    lam_max = lam.max(axis=-1, keepdims=True)
    lam = np.where(lam > 1e-12 * lam_max, lam, 0.0)
    return np.sum(np.log2(1.0 + gamma / t * lam), axis=-1)


def normalized_error_arrays(approx, reference):
    """``|sum_n (approx_n - ref_n)|^2 / |sum_n ref_n|^2`` over matching 1-D samples.

    Signed differences are summed before squaring, so errors of opposite
    sign cancel.
    """
    approx = np.asarray(approx, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if approx.shape != reference.shape or approx.ndim != 1:
        raise InvalidInputError("approx and reference must be 1-D of equal length")
    denom = math.fsum(reference) ** 2
    if denom == 0.0:
        raise DomainError("reference sums to zero")
    return math.fsum(approx - reference) ** 2 / denom


def normalized_error(curves):
    """Normalized error of a :class:`CurvePair` across its SNR grid."""
    return normalized_error_arrays(curves.approx, curves.reference)


def per_point_mse(curves):
    """Mean over grid points of ``(approx_n - ref_n)^2``."""
    return float(np.mean((curves.approx - curves.reference) ** 2))
