"""Acceptance criteria, one check per criterion.

Run under pytest (one test per criterion) or directly with
``python3 tests/test_acceptance.py``; either way each criterion prints a
single ``PASS``/``FAIL`` line with the measured numbers.
"""
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from imcap import cli
from imcap.channels import EtuSmodEnsemble, IidEnsemble, error_analysis, sweep_point
from imcap.core import db_to_linear, sigma_vector
from imcap.ergodic import Nakagami, Rayleigh, Rice, ergodic_capacity
from imcap.instcap import closed_form, mutual_info_symbol
from imcap.reference import (
    DEFAULT_SETTINGS,
    CurvePair,
    index_mi_montecarlo,
    index_mi_quadrature,
    mc_generator,
    mimo_capacity,
    per_point_mse,
)

SEED = cli.DEFAULT_SEED
UNIT = math.sqrt(0.5)  # varrho giving E|h|^2 = 1

CRITERIA = {}


def criterion(n, title):
    def wrap(fn):
        CRITERIA[n] = (title, fn)
        return fn
    return wrap


def _preset_mean(name, snr_db, n_draws=None, method="order2", **ensemble):
    cfg = cli.load_config(name)
    if ensemble:
        ens = dict(cfg.ensemble)
        ens.update({k: str(v) for k, v in ensemble.items()})
        cfg = cli.replace(cfg, ensemble=ens, lines={})
    res = sweep_point(cli.build_ensemble(cfg), float(db_to_linear(snr_db)), (method,),
                      n_draws or cfg.n_draws, cfg.seed)[method]
    return res.mean


@criterion(1, "degenerate exactness")
def c1():
    t0 = time.perf_counter()
    rng = mc_generator(SEED, 1)
    worst_c, worst_i2 = 0.0, 0.0
    for i in range(100):
        t = (2, 4, 8)[i % 3]
        r = int(rng.integers(1, 5))
        h = (rng.standard_normal((r, 1)) + 1j * rng.standard_normal((r, 1))) * UNIT
        gamma = 10 ** rng.uniform(-2, 6)
        s = sigma_vector(np.repeat(h, t, axis=1), gamma)
        worst_c = max(worst_c, abs(float(closed_form(s, 2)) - float(mutual_info_symbol(s))))
        worst_i2 = max(worst_i2, index_mi_quadrature(s))
    dt = time.perf_counter() - t0
    ok = worst_c < 1e-12 and worst_i2 < 1e-6 and dt < 10
    return ok, f"max|C2 - I1| = {worst_c:.1e}, max I2 = {worst_i2:.1e}, {dt:.1f} s"


@criterion(2, "order hierarchy (per-point MSE of averaged curves)")
def c2():
    t0 = time.perf_counter()
    cfg = cli.load_config("fig1-orders")
    ens = cli.build_ensemble(cfg)
    grid = np.arange(-10.0, 31.0, 5.0)
    curves = {m: [] for m in ("order0", "order2", "order4", "integral")}
    for snr in grid:
        res = sweep_point(ens, float(db_to_linear(snr)), tuple(curves), 2000, SEED)
        for m in curves:
            curves[m].append(res[m].mean)
    mse = {o: per_point_mse(CurvePair(grid, curves[f"order{o}"], curves["integral"])) for o in (0, 2, 4)}
    dt = time.perf_counter() - t0
    r1, r2 = mse[0] / mse[2], mse[2] / mse[4]
    ok = mse[4] < mse[2] < mse[0] and r1 > 3 and r2 > 3 and dt < 300
    return ok, (f"MSE order0/2/4 = {mse[0]:.3g}/{mse[2]:.3g}/{mse[4]:.3g}, "
                f"ratios {r1:.1f}x, {r2:.1f}x, {dt:.1f} s")


@criterion(3, "order-2 error shrinks at low SNR and plateaus at high SNR")
def c3():
    ens = IidEnsemble(Rayleigh(UNIT, 2), 2)
    mae = {}
    for snr in (20, 0, -10, -20, 40, 60):
        _, stats, flagged = error_analysis(ens, float(db_to_linear(snr)), (2,), 2000, SEED)
        mae[snr] = stats[2][2]
    low = [mae[s] for s in (20, 0, -10, -20)]
    mono = all(b <= a for a, b in zip(low, low[1:]))
    plateau = abs(mae[60] - mae[40]) / mae[40]
    ok = mono and plateau < 0.10
    return ok, ("mean|C2 - C| at 20/0/-10/-20 dB = " + "/".join(f"{v:.3g}" for v in low)
                + f"; 40 dB {mae[40]:.4f}, 60 dB {mae[60]:.4f} ({100 * plateau:.1f}% apart)")


@criterion(4, "ergodic closed forms vs Monte-Carlo")
def c4():
    t0 = time.perf_counter()
    specs = [Rayleigh(UNIT, r) for r in (1, 2, 4)]
    specs += [Nakagami(m, 1.0, 2) for m in (2.0, 4.0)]
    specs += [Rice.from_k_factor(k, 2) for k in (1.0, 5.0)]
    worst, where = 0.0, ""
    for i, spec in enumerate(specs):
        ens = IidEnsemble(spec, 2)
        for gamma in (1.0, 10.0, 100.0):
            mc = sweep_point(ens, gamma, ("order2",), 10**5, SEED + i)["order2"].mean
            rel = abs(ergodic_capacity(spec, gamma).value - mc) / mc
            if rel > worst:
                worst, where = rel, f"{type(spec).__name__} r={spec.r} gamma={gamma:g}"
    dt = time.perf_counter() - t0
    return worst < 0.02 and dt < 120, f"worst relative gap {100 * worst:.3f}% ({where}), 21 cases, {dt:.1f} s"


@criterion(5, "distribution identities")
def c5():
    d_nak, d_rice = 0.0, 0.0
    for varrho in (0.3, UNIT, 2.0):
        for r in (1, 2, 4):
            for gamma in np.geomspace(1e-2, 1e4, 7):
                ray = ergodic_capacity(Rayleigh(varrho, r), gamma).value
                nak = ergodic_capacity(Nakagami(1.0, 2 * varrho**2, r), gamma).value
                rice = ergodic_capacity(Rice(1e-4, varrho, r), gamma, series_tol=1e-8).value
                d_nak = max(d_nak, abs(nak - ray))
                d_rice = max(d_rice, abs(rice - ray))
    return d_nak < 1e-10 and d_rice < 1e-4, f"max|Nakagami(1) - Rayleigh| = {d_nak:.1e}, max|Rice - Rayleigh| = {d_rice:.1e}"


@criterion(6, "high-SNR slopes")
def c6():
    rng = mc_generator(SEED, 6)
    g_db = np.linspace(40, 60, 11)
    x = np.log2(db_to_linear(g_db))
    s2, sm = [], []
    while len(s2) < 20:
        H = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) * UNIT
        if np.linalg.cond(H) > 1e3:
            continue
        c2 = [float(closed_form(sigma_vector(H, g), 2)) for g in db_to_linear(g_db)]
        cm = [float(mimo_capacity(H, g)) for g in db_to_linear(g_db)]
        s2.append(np.polyfit(x, c2, 1)[0])
        sm.append(np.polyfit(x, cm, 1)[0])
    ok = all(0.9 <= v <= 1.1 for v in s2) and all(1.9 <= v <= 2.1 for v in sm)
    return ok, f"order-2 slopes [{min(s2):.4f}, {max(s2):.4f}], MIMO slopes [{min(sm):.4f}, {max(sm):.4f}]"


@criterion(7, "quadrature vs Monte-Carlo index information")
def c7():
    rng = mc_generator(SEED, 7)
    worst, fails = 0.0, 0
    for i in range(100):
        t = (2, 4, 8)[i % 3]
        gamma = 10 ** rng.uniform(-1, 4)
        s = 1 + gamma * rng.exponential(1.0, t)
        n = 10**6 if i < 10 else 10**5
        q = index_mi_quadrature(s)
        m, se = index_mi_montecarlo(s, n, seed=SEED + i)
        z = abs(q - m) / math.hypot(se, DEFAULT_SETTINGS.rel_tol * q)
        worst = max(worst, z)
        fails += z > 3
    return fails == 0, f"largest deviation {worst:.2f} combined standard errors, {fails} of 100 outside 3"


@criterion(8, "SMod ordering and correlation penalty at 20 dB")
def c8():
    gamma = float(db_to_linear(20))
    vals = {}
    for t, r in ((4, 4), (2, 2), (1, 2)):
        for corr in (None, "high"):
            ens = EtuSmodEnsemble(r, t, corr)
            vals[(t, r, corr)] = sweep_point(ens, gamma, ("order2",), 10**4, SEED)["order2"].mean
    free = [vals[(4, 4, None)], vals[(2, 2, None)], vals[(1, 2, None)]]
    ok = free[0] > free[1] > free[2] and all(vals[(t, r, "high")] < vals[(t, r, None)] for t, r in ((4, 4), (2, 2), (1, 2)))
    return ok, ("no corr 4x4/2x2/1x2 = " + "/".join(f"{v:.3f}" for v in free) + "; high corr "
                + "/".join(f"{vals[(t, r, 'high')]:.3f}" for t, r in ((4, 4), (2, 2), (1, 2))))


@criterion(9, "PMod specular gain at 25 dB")
def c9():
    spec = _preset_mean("pmod-maritime", 25, 10**4)
    diff = _preset_mean("pmod-diffuse", 25, 10**4)
    gap = spec - diff
    return abs(gap - 1.0) <= 0.3, f"maritime {spec:.3f} - diffuse {diff:.3f} = {gap:.3f} bpcu"


@criterion(10, "FMod separation behaviour")
def c10():
    low = {s: _preset_mean("fmod", -10, 10**4, separation_rb=s) for s in (1, 2, 5)}
    high = {s: _preset_mean("fmod", 20, 10**4, separation_rb=s) for s in (1, 2, 5, 10, 25)}
    spread = max(low.values()) - min(low.values())
    lowest = min(high, key=high.get)
    strict = all(high[1] < v for s, v in high.items() if s != 1)
    ok = spread < 0.05 and lowest == 1 and strict
    return ok, (f"-10 dB spread {spread:.4f}; 20 dB by RB "
                + ", ".join(f"{s}: {v:.3f}" for s, v in high.items()))


INVOCATIONS = [
    ["run", "--config", "fig1-orders", "--draws", "300", "--methods", "order0,order2,order4,integral,mc"],
    ["error-analysis", "--snr", "-10:20:30", "--draws", "300"],
    ["smod", "--antennas", "4x4", "--correlation", "medium", "--snr", "0,20", "--draws", "500"],
    ["pmod", "--scenario", "urban", "--snr", "25", "--draws", "500", "--format", "json"],
    ["fmod", "--separation", "2", "--snr", "-10,20", "--draws", "500", "--methods", "order2,integral"],
    ["ergodic-closed", "--fading", "rice", "--k-factor", "5", "--r", "2", "--snr", "0:10:20",
     "--methods", "closed,table,mc", "--draws", "2000"],
]


def _cli(args):
    res = subprocess.run([sys.executable, "-m", "imcap.cli", *args], capture_output=True, check=False,
                         env={**os.environ, "PYTHONHASHSEED": "random"})
    return res.returncode, res.stdout


@criterion(11, "CLI determinism across reruns and worker counts")
def c11():
    bad = []
    for args in INVOCATIONS:
        a = _cli(args)
        b = _cli(args)
        c = _cli([*args, "--workers", "4"])
        if a[0] != 0 or not a[1] or not a == b == c:
            bad.append(args[0])
    return not bad, f"{len(INVOCATIONS)} invocations x 3 runs" + (f"; differs: {', '.join(bad)}" if bad else ", all byte-identical")


def _line(n, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {n:2d} {CRITERIA[n][0]}: {detail}"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    ok, detail = CRITERIA[n][1]()
    with capsys.disabled():
        print("\n" + _line(n, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n][1]()
        failed += not ok
        print(_line(n, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
