"""Channel ensembles for spatial, polarization and frequency index modulation.

Every ensemble exposes ``sample(rng, n) -> (n, r, t)`` complex array, and
:func:`ergodic_mc` averages an instantaneous capacity over draws from it.
Randomness in :func:`ergodic_mc` comes in fixed blocks of draws, block ``b``
using a Philox stream keyed by ``(seed, b)``, so results do not depend on
how blocks are scheduled or on the number of workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import CapacityEstimate, as_channel, sigma_vector
from .ergodic import Nakagami, Rayleigh, Rice
from .errors import AccuracyError, DomainError, InvalidInputError, UnsupportedError
from .instcap import closed_form, mutual_info_symbol
from .reference import (
    DEFAULT_SETTINGS,
    index_mi_montecarlo,
    integral_batch,
    mc_generator,
    mimo_capacity,
    normalized_error_arrays,
)

__all__ = [
    "CORRELATION_LEVELS",
    "CorrelationProfile",
    "correlation_matrix",
    "apply_kronecker",
    "InvalidCorrelationError",
    "OutOfBandError",
    "ETU_DELAYS_NS",
    "ETU_POWERS_DB",
    "TapProfile",
    "ETU",
    "load_tap_profile",
    "EtuSpec",
    "DualPolSpec",
    "IidEnsemble",
    "EtuSmodEnsemble",
    "EtuFmodEnsemble",
    "DualPolEnsemble",
    "gen_iid",
    "gen_etu_fmod",
    "gen_etu_smod",
    "gen_dualpol",
    "capacity_draws",
    "ergodic_mc",
    "sweep_point",
    "error_analysis",
    "PointResult",
    "METHODS",
    "DRAW_BLOCK",
]

DRAW_BLOCK = 1024
RB_HZ = 180e3


class InvalidCorrelationError(InvalidInputError):
    """Correlation matrix is not Hermitian positive semidefinite."""


class OutOfBandError(DomainError):
    """Requested subcarriers fall outside the simulated band."""


# ---------------------------------------------------------------------------
# antenna correlation

CORRELATION_LEVELS = {"none": (0.0, 0.0), "medium": (0.3, 0.9), "high": (0.9, 0.9)}


@dataclass(frozen=True)
class CorrelationProfile:
    """Transmit base ``alpha`` and receive base ``beta_c`` for a named level."""

    level: str = "none"

    def __post_init__(self):
        if self.level not in CORRELATION_LEVELS:
            raise InvalidInputError(f"correlation level must be one of {sorted(CORRELATION_LEVELS)}")

    @property
    def alpha(self):
        return CORRELATION_LEVELS[self.level][0]

    @property
    def beta_c(self):
        return CORRELATION_LEVELS[self.level][1]

    def matrices(self, r, t):
        """``(r_tx, r_rx)`` for ``t`` transmit and ``r`` receive elements."""
        return correlation_matrix(self.level, t, "tx"), correlation_matrix(self.level, r, "rx")


def correlation_matrix(level, n, side="tx"):
    """Standard ``n x n`` correlation matrix (``n`` in 1, 2, 4) for one side of the link.

    ``side`` picks the base: ``alpha`` for ``"tx"``, ``beta_c`` for ``"rx"``.
    The 4 x 4 pattern raises the base to 1/9 and 4/9 off the diagonal.
    """
    if isinstance(level, CorrelationProfile):
        level = level.level
    if level not in CORRELATION_LEVELS:
        raise InvalidInputError(f"correlation level must be one of {sorted(CORRELATION_LEVELS)}")
    if side not in ("tx", "rx"):
        raise InvalidInputError("side must be 'tx' or 'rx'")
    a = complex(CORRELATION_LEVELS[level][0 if side == "tx" else 1])
    if n == 1:
        return np.ones((1, 1), dtype=complex)
    if n == 2:
        return np.array([[1.0, a], [a.conjugate(), 1.0]])
    if n == 4:
        a1, a4 = a ** (1.0 / 9.0), a ** (4.0 / 9.0)
        up = np.array([
            [1.0, a1, a4, a],
            [0.0, 1.0, a1, a4],
            [0.0, 0.0, 1.0, a1],
            [0.0, 0.0, 0.0, 1.0],
        ], dtype=complex)
        return np.triu(up) + np.triu(up, 1).conj().T
    raise UnsupportedError(f"correlation matrices exist for n in (1, 2, 4), got {n!r}")


def _psd_sqrt(R):
    R = np.asarray(R, dtype=complex)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise InvalidCorrelationError("correlation matrix must be square")
    if not np.allclose(R, R.conj().T, rtol=0.0, atol=1e-12):
        raise InvalidCorrelationError("correlation matrix must be Hermitian")
    w, V = np.linalg.eigh(R)
    if w.min() < -1e-10:
        raise InvalidCorrelationError(f"correlation matrix is not PSD (eigenvalue {w.min():.3g})")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.conj().T


def _is_identity(R):
    R = np.asarray(R)
    return R.ndim == 2 and R.shape[0] == R.shape[1] and np.array_equal(R, np.eye(R.shape[0]))


def apply_kronecker(H, r_tx, r_rx):
    """``R_rx^(1/2) H R_tx^(1/2)`` with Hermitian principal square roots.

    Works on a single ``(r, t)`` matrix or a stack ``(..., r, t)``. Identity
    correlations return the input unchanged.
    """
    H = as_channel(H)
    r, t = H.shape[-2:]
    if np.shape(r_tx) != (t, t) or np.shape(r_rx) != (r, r):
        raise InvalidInputError(f"correlation shapes {np.shape(r_rx)}, {np.shape(r_tx)} do not fit channel {r}x{t}")
    out = H
    if not _is_identity(r_tx):
        out = out @ _psd_sqrt(r_tx)
    if not _is_identity(r_rx):
        out = _psd_sqrt(r_rx) @ out
    return out


# ---------------------------------------------------------------------------
# tapped delay line profiles

# 3GPP TS 36.104 Annex B.2, Extended Typical Urban model
ETU_DELAYS_NS = (0.0, 50.0, 120.0, 200.0, 230.0, 500.0, 1600.0, 2300.0, 5000.0)
ETU_POWERS_DB = (-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0)


@dataclass(frozen=True)
class TapProfile:
    """Power-delay profile with tap powers normalized to unit sum."""

    delays_s: np.ndarray
    powers: np.ndarray

    @classmethod
    def from_db(cls, delays_ns, powers_db):
        d = np.asarray(delays_ns, dtype=float)
        p = 10.0 ** (np.asarray(powers_db, dtype=float) / 10.0)
        if d.ndim != 1 or d.shape != p.shape or d.size == 0:
            raise InvalidInputError("tap profile needs matching nonempty delay and power lists")
        if np.any(d < 0) or not np.all(np.isfinite(d)) or not np.all(np.isfinite(p)):
            raise InvalidInputError("tap delays must be finite and nonnegative")
        return cls(d * 1e-9, p / p.sum())


ETU = TapProfile.from_db(ETU_DELAYS_NS, ETU_POWERS_DB)


def load_tap_profile(path):
    """Read a ``delay_ns power_db`` text file (one tap per line, ``#`` comments)."""
    delays, powers = [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidInputError(f"{path}:{lineno}: expected 'delay_ns power_db'")
        try:
            delays.append(float(parts[0]))
            powers.append(float(parts[1]))
        except ValueError:
            raise InvalidInputError(f"{path}:{lineno}: non-numeric tap entry") from None
    return TapProfile.from_db(delays, powers)


def _tap_gains(rng, profile, shape):
    """Independent ``CN(0, p_k)`` tap gains with trailing tap axis."""
    n_taps = profile.powers.size
    z = rng.standard_normal(shape + (n_taps, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(profile.powers / 2.0)


def _frequency_response(gains, profile, freqs):
    """``sum_k g_k exp(-2 pi j f tau_k)`` at each frequency; gains ``(..., K)`` -> ``(..., F)``."""
    phase = np.exp(-2j * np.pi * np.multiply.outer(profile.delays_s, freqs))
    return gains @ phase


@dataclass(frozen=True)
class EtuSpec:
    """Subcarrier selection for frequency index modulation.

    Column ``i`` is subcarrier ``first + i * separation_rb * 180 kHz / spacing``.
    ``separation_rb = 0`` puts every column on the same subcarrier.
    """

    n_subcarriers: int = 1200
    subcarrier_spacing: float = 15e3
    separation_rb: int = 1
    t: int = 2
    r: int = 1
    first: int = 0

    def __post_init__(self):
        if self.n_subcarriers < 1 or self.t < 1 or self.r < 1:
            raise InvalidInputError("n_subcarriers, t and r must be positive")
        if not self.subcarrier_spacing > 0:
            raise InvalidInputError("subcarrier_spacing must be positive")
        if self.separation_rb < 0 or self.first < 0:
            raise InvalidInputError("separation_rb and first must be nonnegative")

    @property
    def step(self):
        return int(round(self.separation_rb * RB_HZ / self.subcarrier_spacing))

    def indices(self):
        idx = self.first + self.step * np.arange(self.t)
        if idx[-1] >= self.n_subcarriers:
            raise OutOfBandError(
                f"subcarrier {idx[-1]} outside band of {self.n_subcarriers} (separation {self.separation_rb} RB)"
            )
        return idx


@dataclass(frozen=True)
class DualPolSpec:
    """Two-polarization channel: direct + specular + diffuse components.

    Column ``l`` has direct amplitude ``sqrt(k_l / (k_l + 1))`` on the
    co-polar branch, diffuse power ``1 / (k_l + 1)`` split between co- and
    cross-polar branches by ``xpd``, and a specular ray ``j * specular_gain``
    in quadrature with the direct ray, so the average column power is
    ``1 + specular_gain^2``.
    """

    k_v: float = 0.0
    k_h: float = 0.0
    xpd: float = 10.0
    specular_gain: float = 0.0
    diffuse_corr: float = 0.0

    def __post_init__(self):
        if not (self.k_v >= 0 and self.k_h >= 0 and math.isfinite(self.k_v) and math.isfinite(self.k_h)):
            raise InvalidInputError("K-factors must be finite and nonnegative")
        if not math.isfinite(self.xpd):
            raise InvalidInputError("xpd must be finite")
        if not (self.specular_gain >= 0 and math.isfinite(self.specular_gain)):
            raise InvalidInputError("specular_gain must be finite and nonnegative")
        if not 0.0 <= self.diffuse_corr < 1.0:
            raise InvalidInputError("diffuse_corr must lie in [0, 1)")


# ---------------------------------------------------------------------------
# ensembles


def _cn(rng, shape, var=1.0):
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(var / 2.0)


class _Correlated:
    correlation = None

    def _check_correlation(self):
        if self.correlation is not None:
            CorrelationProfile(self.correlation).matrices(self.r, self.t)

    def _correlate(self, H):
        if self.correlation is None:
            return H
        r_tx, r_rx = CorrelationProfile(self.correlation).matrices(*H.shape[-2:])
        return apply_kronecker(H, r_tx, r_rx)


class IidEnsemble(_Correlated):
    """Independent Rayleigh, Rice or Nakagami entries, optionally Kronecker-correlated."""

    def __init__(self, spec, t, correlation=None):
        if not isinstance(spec, (Rayleigh, Rice, Nakagami)):
            raise InvalidInputError(f"unsupported fading spec {spec!r}")
        if int(t) != t or t < 1:
            raise InvalidInputError("t must be a positive integer")
        self.spec = spec
        self.r = spec.r
        self.t = int(t)
        self.correlation = correlation
        self._check_correlation()

    def sample(self, rng, n):
        shape = (n, self.r, self.t)
        spec = self.spec
        if isinstance(spec, Rayleigh):
            H = _cn(rng, shape, 2.0 * spec.varrho**2)
        elif isinstance(spec, Rice):
            H = spec.nu * (1.0 + 1.0j) + _cn(rng, shape, 2.0 * spec.varrho**2)
        else:
            # power ~ Gamma(m, omega / m); phase does not affect capacity but is drawn uniformly
            power = rng.gamma(spec.m, spec.omega / spec.m, size=shape)
            phase = rng.uniform(0.0, 2.0 * np.pi, size=shape)
            H = np.sqrt(power) * np.exp(1j * phase)
        return self._correlate(H)


class EtuSmodEnsemble(_Correlated):
    """Spatial IM: each antenna pair an independent ETU channel, observed at one subcarrier."""

    def __init__(self, r, t, correlation=None, profile=ETU, frequency=0.0):
        self.r = int(r)
        self.t = int(t)
        self.correlation = correlation
        self.profile = profile
        self.frequency = float(frequency)
        self._check_correlation()

    def sample(self, rng, n):
        g = _tap_gains(rng, self.profile, (n, self.r, self.t))
        H = _frequency_response(g, self.profile, np.array([self.frequency]))[..., 0]
        return self._correlate(H)


class EtuFmodEnsemble:
    """Frequency IM: columns are one ETU response sampled at ``t`` subcarriers."""

    def __init__(self, spec, profile=ETU):
        self.spec = spec
        self.profile = profile
        self.r = spec.r
        self.t = spec.t
        self._freqs = spec.indices() * spec.subcarrier_spacing

    def sample(self, rng, n):
        g = _tap_gains(rng, self.profile, (n, self.r))
        return _frequency_response(g, self.profile, self._freqs)


class DualPolEnsemble:
    """Polarization IM over a 2 x 2 dual-polarized link."""

    r = 2
    t = 2

    def __init__(self, spec):
        self.spec = spec

    def sample(self, rng, n):
        sp = self.spec
        k = np.array([sp.k_v, sp.k_h])
        direct = np.sqrt(k / (k + 1.0)) + 1j * sp.specular_gain
        chi = 10.0 ** (-sp.xpd / 10.0)
        diffuse = 1.0 / (k + 1.0)
        co_var = diffuse / (1.0 + chi)
        x_var = diffuse * chi / (1.0 + chi)
        rho = sp.diffuse_corr
        # two correlated pairs: (co_v, co_h) and (x_v, x_h), unit variance
        z = _cn(rng, (n, 2, 2))
        z[:, :, 1] = rho * z[:, :, 0] + math.sqrt(1.0 - rho * rho) * z[:, :, 1]
        H = np.empty((n, 2, 2), dtype=complex)
        H[:, 0, 0] = direct[0] + np.sqrt(co_var[0]) * z[:, 0, 0]
        H[:, 1, 1] = direct[1] + np.sqrt(co_var[1]) * z[:, 0, 1]
        H[:, 1, 0] = np.sqrt(x_var[0]) * z[:, 1, 0]
        H[:, 0, 1] = np.sqrt(x_var[1]) * z[:, 1, 1]
        return H


def _rng(seed):
    return mc_generator(seed, 0)


def gen_iid(spec, t, seed, correlation=None):
    """One ``r x t`` draw of i.i.d. fading (deterministic per seed)."""
    return IidEnsemble(spec, t, correlation).sample(_rng(seed), 1)[0]


def gen_etu_smod(r, t, seed, correlation=None, profile=ETU):
    return EtuSmodEnsemble(r, t, correlation, profile).sample(_rng(seed), 1)[0]


def gen_etu_fmod(spec, seed, profile=ETU):
    """One ETU frequency-IM realization ``(r, t)``; raises :class:`OutOfBandError` if the selection leaves the band."""
    return EtuFmodEnsemble(spec, profile).sample(_rng(seed), 1)[0]


def gen_dualpol(spec, seed):
    return DualPolEnsemble(spec).sample(_rng(seed), 1)[0]


# ---------------------------------------------------------------------------
# Monte-Carlo ergodic capacity

METHODS = ("order0", "order2", "order4", "integral", "mc", "mimo")
MC_SAMPLES = 4096


def _draw_seed(seed, block, i):
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(block), int(i)))
    return int(ss.generate_state(1, np.uint64)[0])


def capacity_draws(H, gamma, method="order2", settings=DEFAULT_SETTINGS, mc_samples=MC_SAMPLES, seed=0, block=0):
    """Instantaneous capacity of every channel in a stack ``(n, r, t)``.

    ``method="mc"`` replaces the index-information quadrature by its
    Monte-Carlo estimate (``mc_samples`` per draw, seeded from
    ``(seed, block, draw)``).

    Returns
    -------
    values : ndarray
    ok : ndarray of bool
        False where the integral missed its tolerance (the value is then the
        achieved estimate).
    """
    H = as_channel(H)
    if method == "mimo":
        v = mimo_capacity(H, gamma)
        return v, np.ones(v.shape, dtype=bool)
    S = sigma_vector(H, gamma)
    if method in ("order0", "order2", "order4"):
        v = closed_form(S, int(method[-1]))
        return v, np.ones(v.shape, dtype=bool)
    S = S.reshape(-1, S.shape[-1])
    if method == "integral":
        return integral_batch(S, settings)
    if method == "mc":
        i1 = mutual_info_symbol(S)
        i2 = np.array([
            index_mi_montecarlo(s, mc_samples, _draw_seed(seed, block, i))[0] for i, s in enumerate(S)
        ])
        return i1 + i2, np.ones(i1.shape, dtype=bool)
    raise UnsupportedError(f"method must be one of {METHODS}, got {method!r}")


def _as_ensemble(generator, t=None, correlation=None):
    if hasattr(generator, "sample"):
        return generator
    if isinstance(generator, (Rayleigh, Rice, Nakagami)):
        if t is None:
            raise InvalidInputError("t is required for an i.i.d. fading spec")
        return IidEnsemble(generator, t, correlation)
    if isinstance(generator, EtuSpec):
        return EtuFmodEnsemble(generator)
    if isinstance(generator, DualPolSpec):
        return DualPolEnsemble(generator)
    raise InvalidInputError(f"cannot build an ensemble from {generator!r}")


@dataclass(frozen=True)
class PointResult:
    """Monte-Carlo average of one method at one SNR; ``n_flagged`` draws missed tolerance."""

    mean: float
    std_error: float
    n_flagged: int


def sweep_point(generator, gamma, methods, n_draws, seed, workers=1, t=None, correlation=None,
                settings=DEFAULT_SETTINGS, mc_samples=MC_SAMPLES):
    """Average several capacity methods over the same ``n_draws`` channel draws.

    Draws come in blocks of :data:`DRAW_BLOCK`; block ``b`` uses its own
    counter-based stream keyed by ``(seed, b)`` and sums are exact, so the
    result is the same for any ``workers``.

    Returns
    -------
    dict
        ``method -> PointResult``.
    """
    ens = _as_ensemble(generator, t, correlation)
    n_draws = int(n_draws)
    if n_draws < 1:
        raise DomainError("n_draws must be positive")
    for m in methods:
        if m not in METHODS:
            raise UnsupportedError(f"method must be one of {METHODS}, got {m!r}")
    n_blocks = -(-n_draws // DRAW_BLOCK)

    def block(b):
        size = min(DRAW_BLOCK, n_draws - b * DRAW_BLOCK)
        H = ens.sample(mc_generator(seed, b), size)
        return {m: capacity_draws(H, gamma, m, settings, mc_samples, seed, b) for m in methods}

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, range(n_blocks)))
    else:
        parts = [block(b) for b in range(n_blocks)]
    out = {}
    for m in methods:
        values = np.concatenate([p[m][0] for p in parts])
        ok = np.concatenate([p[m][1] for p in parts])
        mean = math.fsum(values) / n_draws
        if n_draws > 1:
            se = math.sqrt(math.fsum((values - mean) ** 2) / (n_draws - 1) / n_draws)
        else:
            se = math.nan
        out[m] = PointResult(mean, se, int((~ok).sum()))
    return out


_TAGS = {"mc": "montecarlo", "integral": "quadrature"}


def ergodic_mc(generator, gamma, method="order2", n_draws=10000, seed=0, workers=1,
               t=None, correlation=None, settings=DEFAULT_SETTINGS):
    """Monte-Carlo average of an instantaneous capacity over channel draws.

    Parameters
    ----------
    generator : ensemble or spec
        An object with ``sample(rng, n)``, or a fading / ETU / dual-pol spec
        (i.i.d. specs also need ``t``; ``correlation`` names a level).
    gamma : float
        Linear SNR.
    method : str
        ``order0``, ``order2``, ``order4``, ``integral``, ``mc`` or ``mimo``.

    Returns
    -------
    (CapacityEstimate, float)
        Mean with its standard error attached, and the standard error.

    Raises
    ------
    AccuracyError
        If any integral evaluation misses its tolerance.
    """
    if int(n_draws) < 100:
        raise DomainError("ergodic_mc needs at least 100 draws")
    res = sweep_point(generator, gamma, (method,), n_draws, seed, workers, t, correlation, settings)[method]
    if res.n_flagged:
        raise AccuracyError(
            f"{res.n_flagged} of {n_draws} integral evaluations missed tolerance",
            estimate=res.mean,
        )
    est = CapacityEstimate(res.mean, _TAGS.get(method, method), res.std_error)
    return est, res.std_error


def error_analysis(generator, gamma, orders=(0, 2, 4), n_draws=2000, seed=0, workers=1, t=None,
                   correlation=None, settings=DEFAULT_SETTINGS):
    """Per-draw errors of the closed forms against the integral at one SNR.

    Returns
    -------
    reference : float
        Mean integral capacity.
    stats : dict
        ``order -> (normalized_error, mse, mean_abs_error)`` over the draws,
        where the normalized error sums signed differences before squaring.
    n_flagged : int
        Integral evaluations that missed tolerance.
    """
    ens = _as_ensemble(generator, t, correlation)
    n_blocks = -(-int(n_draws) // DRAW_BLOCK)
    methods = ["integral"] + [f"order{o}" for o in orders]

    def block(b):
        size = min(DRAW_BLOCK, int(n_draws) - b * DRAW_BLOCK)
        H = ens.sample(mc_generator(seed, b), size)
        return {m: capacity_draws(H, gamma, m, settings) for m in methods}

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, range(n_blocks)))
    else:
        parts = [block(b) for b in range(n_blocks)]
    ref = np.concatenate([p["integral"][0] for p in parts])
    n_flagged = int(sum((~p["integral"][1]).sum() for p in parts))
    stats = {}
    for o in orders:
        approx = np.concatenate([p[f"order{o}"][0] for p in parts])
        d = approx - ref
        stats[o] = (
            normalized_error_arrays(approx, ref),
            math.fsum(d * d) / d.size,
            math.fsum(np.abs(d)) / d.size,
        )
    return math.fsum(ref) / ref.size, stats, n_flagged
