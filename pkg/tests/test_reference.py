import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imcap import _backend
from imcap.core import sigma_vector
from imcap.errors import AccuracyError, DomainError, InvalidInputError
from imcap.instcap import closed_form, mutual_info_symbol
from imcap.reference import (
    CurvePair,
    QuadratureSettings,
    capacity_integral,
    index_mi_montecarlo,
    index_mi_quadrature,
    index_mi_quadrature_batch,
    integral_batch,
    mimo_capacity,
    normalized_error,
    normalized_error_arrays,
    per_point_mse,
)

from conftest import rayleigh


def mp_index_mi(sigma, dps=30):
    """I(y; l) from its definition -H(Y|L) + H(Y), written over rho = |y|^2.

    Uses the density of rho under the mixture directly (no substitution, no
    cutoff), so it shares nothing with the library's kernel.
    """
    with mp.workdps(dps):
        s = [mp.mpf(v) for v in sigma]
        t = len(s)
        q = lambda r: sum(mp.exp(-r / v) / v for v in s) / t
        h_y_given_l = sum(1 + mp.log(v) for v in s) / t  # entropy of Exp(v), nats
        h_y = -mp.quad(lambda r: q(r) * mp.log(q(r)), [0] + sorted(s) + [10 * max(s), mp.inf])
        return float((h_y - h_y_given_l) / mp.log(2))


def test_trivial_cases():
    assert index_mi_quadrature([3.0]) == 0.0
    assert index_mi_quadrature([2.5, 2.5, 2.5]) == 0.0
    assert index_mi_montecarlo([3.0], 1000, 1) == (0.0, 0.0)


@pytest.mark.parametrize("sigma", [[2.0, 4.0], [1.0, 1.5], [1.0, 100.0], [1.0, 1e6], [1.0, 2.0, 5.0, 40.0],
                                   [1.0 + 1e-6, 1.0], [3.0, 3.0, 3.0, 3.1]])
def test_quadrature_against_independent_oracle(sigma):
    assert index_mi_quadrature(sigma) == pytest.approx(mp_index_mi(sigma), rel=1e-7, abs=1e-14)


def test_quadrature_vs_montecarlo_sigma_2_4():
    q = index_mi_quadrature([2.0, 4.0])
    m, se = index_mi_montecarlo([2.0, 4.0], 10**6, seed=99)
    assert abs(q - m) < 3 * se


def test_bounds_and_clamp():
    rng = np.random.default_rng(5)
    for t in (2, 4, 8):
        S = 1 + rng.exponential(1e3, size=(30, t))
        v, ok = index_mi_quadrature_batch(S)
        assert ok.all()
        assert np.all(v >= 0) and np.all(v <= math.log2(t) * (1 + 1e-8))
    # widely separated hops approach log2 t
    assert index_mi_quadrature([1.0, 1e12]) == pytest.approx(1.0, abs=1e-4)


def test_batch_matches_scalar():
    S = 1 + np.random.default_rng(8).exponential(10.0, size=(20, 3))
    S[3] = 4.0
    v, ok = index_mi_quadrature_batch(S)
    assert ok.all()
    for i in range(20):
        assert v[i] == pytest.approx(index_mi_quadrature(S[i]), rel=1e-15, abs=0)


def test_accuracy_error_when_budget_too_small():
    tight = QuadratureSettings(rel_tol=1e-12, max_subdivisions=1)
    with pytest.raises(AccuracyError) as info:
        index_mi_quadrature([1.0, 3.0, 1e4], tight)
    assert math.isfinite(info.value.estimate)
    v, ok = index_mi_quadrature_batch(np.array([[1.0, 3.0, 1e4]]), tight)
    assert not ok[0] and np.isfinite(v[0])


def test_settings_validation():
    with pytest.raises(InvalidInputError):
        QuadratureSettings(rel_tol=0.1)
    with pytest.raises(InvalidInputError):
        QuadratureSettings(max_subdivisions=0)
    assert QuadratureSettings().u_max == 144.0


def test_montecarlo_determinism_and_workers():
    a = index_mi_montecarlo([1.0, 2.0, 9.0], 200_000, seed=3)
    b = index_mi_montecarlo([1.0, 2.0, 9.0], 200_000, seed=3)
    c = index_mi_montecarlo([1.0, 2.0, 9.0], 200_000, seed=3, workers=3)
    assert a == b == c
    d = index_mi_montecarlo([1.0, 2.0, 9.0], 200_000, seed=4)
    assert d != a
    with pytest.raises(DomainError):
        index_mi_montecarlo([1.0, 2.0], 999, 0)


def test_capacity_integral_examples():
    H = rayleigh(np.random.default_rng(1), (2, 3))
    assert capacity_integral(H, 0.0).value == 0.0
    Heq = np.repeat(H[:, :1], 3, axis=1)
    est = capacity_integral(Heq, 5.0)
    assert est.method == "quadrature"
    assert est.value == mutual_info_symbol(sigma_vector(Heq, 5.0))


def test_higher_order_tracks_integral_better_at_10db():
    rng = np.random.default_rng(11)
    S = sigma_vector(rayleigh(rng, (1000, 2, 2)), 10.0)
    ref, ok = integral_batch(S)
    assert ok.all()
    med = [np.median(np.abs(closed_form(S, o) - ref)) for o in (0, 2, 4)]
    assert med[2] < med[1] < med[0]


def test_capacity_integral_nondecreasing_in_gamma():
    H = rayleigh(np.random.default_rng(4), (2, 2))
    vals = [capacity_integral(H, g).value for g in np.geomspace(1e-3, 1e5, 25)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_mimo_capacity():
    assert mimo_capacity(np.eye(2), 2.0) == pytest.approx(2.0)
    h = np.array([[1.0], [2.0]])
    H = h @ np.array([[1.0, -1.0j]])
    lam = np.sum(np.abs(H) ** 2)
    assert mimo_capacity(H, 3.0) == pytest.approx(math.log2(1 + 3.0 * lam / 2), rel=1e-12)
    rng = np.random.default_rng(2)
    H = rayleigh(rng, (4, 4))
    direct = np.log2(np.linalg.det(np.eye(4) + 5.0 / 4 * H.conj().T @ H).real)
    assert mimo_capacity(H, 5.0) == pytest.approx(direct, abs=1e-9)


def test_mimo_high_snr_slope():
    rng = np.random.default_rng(9)
    for _ in range(5):
        H = rayleigh(rng, (2, 2))
        slope = (mimo_capacity(H, 1e6) - mimo_capacity(H, 1e4)) / (math.log2(1e6) - math.log2(1e4))
        assert 0.95 * 2 <= slope <= 1.05 * 2


def test_normalized_error():
    grid = [0.0, 5.0, 10.0]
    ref = np.array([1.0, 2.0, 3.0])
    assert normalized_error(CurvePair(grid, ref, ref)) == 0.0
    assert normalized_error(CurvePair([0.0], [4.0], [2.0])) == 1.0
    # signed differences cancel before squaring
    assert normalized_error(CurvePair(grid, ref + [1, -1, 0], ref)) == 0.0
    with pytest.raises(DomainError):
        normalized_error(CurvePair([0.0, 1.0], [1.0, 1.0], [1.0, -1.0]))
    with pytest.raises(InvalidInputError):
        CurvePair([1.0, 0.0], ref[:2], ref[:2])
    with pytest.raises(InvalidInputError):
        normalized_error_arrays([1.0], [1.0, 2.0])
    assert per_point_mse(CurvePair(grid, ref + [1, -1, 0], ref)) == pytest.approx(2 / 3)


@pytest.mark.parametrize("t", [2, 4, 8])
def test_quadrature_montecarlo_agreement(t):
    rng = np.random.default_rng(t)
    for i in range(10):
        s = 1 + rng.exponential(20.0, size=t)
        m, se = index_mi_montecarlo(s, 100_000, seed=i)
        assert abs(index_mi_quadrature(s) - m) < 3 * se


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1.0, 1e8), min_size=2, max_size=6))
def test_quadrature_range_property(s):
    v = index_mi_quadrature(s)
    assert 0.0 <= v <= math.log2(len(s)) * (1 + 1e-8) + 1e-12
