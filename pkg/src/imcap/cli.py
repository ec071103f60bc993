"""Command-line front end: ``imcap <subcommand> ...``.

Every subcommand writes one table (CSV or JSON) with a header and numbers
rounded to 9 significant digits. Output depends only on the arguments and
the seed, never on ``--workers``.

Exit status: 0 when every cell was produced (rows whose integral missed
tolerance are reported on stderr but still count), 2 for usage and parse
errors, 3 when a required cell could not be computed.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import re
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import channels, ergodic
from .core import db_to_linear, sigma_vector
from .errors import IMCapError
from .instcap import closed_form, mutual_info_symbol
from .reference import DEFAULT_SETTINGS, QuadratureSettings, capacity_integral, index_mi_montecarlo, mimo_capacity

DEFAULT_SEED = 20190611
SWEEP_METHODS = ("order0", "order2", "order4", "integral", "mc")
STOCHASTIC = ("mc",)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ACCURACY = 3


class UsageError(Exception):
    """Bad arguments, config or input file; exits with status 2."""


# ---------------------------------------------------------------------------
# formatting and output


def format_number(x):
    """9 significant digits, shortest round-trip spelling (``1.0``, ``4.86202795``, ``nan``)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(f"{x:.9g}"))


def render(columns, rows, fmt):
    if fmt == "csv":
        lines = [",".join(columns)]
        lines += [",".join(format_number(v) for v in row) for row in rows]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        obj = {}
        for j, name in enumerate(columns):
            obj[name] = [None if math.isnan(row[j]) else float(format_number(row[j])) for row in rows]
        return json.dumps(obj, indent=2) + "\n"
    raise UsageError(f"unknown format {fmt!r}")


def write_output(text, output):
    if output in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        try:
            Path(output).write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write {output}: {exc}") from None


# ---------------------------------------------------------------------------
# sweep configuration


def parse_grid(text):
    """``START:STEP:STOP`` (inclusive) or a comma list of dB values; must ascend."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, step, stop = parts
            if not step > 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            grid = [round(start + i * step, 12) for i in range(n)]
        else:
            grid = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"invalid SNR grid {text!r} (expected START:STEP:STOP with STEP > 0)") from None
    if not grid or any(not math.isfinite(g) for g in grid):
        raise UsageError(f"invalid SNR grid {text!r}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError(f"SNR grid {text!r} must be strictly ascending")
    return tuple(grid)


def parse_methods(text, allowed=SWEEP_METHODS):
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    if not methods:
        raise UsageError("method list is empty")
    for m in methods:
        if m not in allowed:
            raise UsageError(f"unknown method {m!r}; choose from {', '.join(allowed)}")
    if len(set(methods)) != len(methods):
        raise UsageError("method list has duplicates")
    return methods


@dataclass(frozen=True)
class SweepConfig:
    snr_db_grid: tuple
    ensemble: dict
    methods: tuple = ("order2",)
    n_draws: int = 1000
    seed: int = DEFAULT_SEED
    output: str = "-"
    format: str = "csv"
    tap_profile: str | None = None
    quadrature: QuadratureSettings = DEFAULT_SETTINGS
    source: str = "<flags>"
    lines: dict = field(default_factory=dict, compare=False)


def _preset_path(name):
    return resources.files("imcap") / "presets" / f"{name}.ini"


def list_presets():
    return sorted(p.name[:-4] for p in (resources.files("imcap") / "presets").iterdir() if p.name.endswith(".ini"))


def _key_lines(text):
    """Map ``(section, key)`` to its 1-based line number."""
    out = {}
    section = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
        elif section and s and s[0] not in "#;":
            key = re.split(r"[=:]", s, 1)[0].strip().lower()
            out[(section, key)] = n
    return out


def load_config(ref):
    """Read a sweep config from a path, or a packaged preset by name."""
    path = Path(ref)
    if path.is_file():
        text = path.read_text()
        source = str(path)
    else:
        preset = _preset_path(ref)
        if not preset.is_file():
            raise UsageError(f"config {ref!r} is neither a file nor a preset ({', '.join(list_presets())})")
        text = preset.read_text()
        source = f"preset:{ref}"
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise UsageError(f"{source}: {exc}") from None
    lines = _key_lines(text)
    for sec in ("sweep", "ensemble"):
        if not cp.has_section(sec):
            raise UsageError(f"{source}: missing [{sec}] section")
    for sec in cp.sections():
        if sec not in ("sweep", "ensemble", "quadrature"):
            raise UsageError(f"{source}: unknown section [{sec}]")

    def where(sec, key):
        n = lines.get((sec, key))
        return f"{source}:{n}: [{sec}] {key}" if n else f"{source}: [{sec}] {key}"

    sw = cp["sweep"]
    known = {"snr_db", "methods", "n_draws", "seed", "output", "format", "tap_profile"}
    for key in sw:
        if key not in known:
            raise UsageError(f"{where('sweep', key)}: unknown field")
    try:
        grid = parse_grid(sw.get("snr_db", ""))
    except UsageError as exc:
        raise UsageError(f"{where('sweep', 'snr_db')}: {exc}") from None
    try:
        methods = parse_methods(sw.get("methods", "order2"))
    except UsageError as exc:
        raise UsageError(f"{where('sweep', 'methods')}: {exc}") from None
    try:
        n_draws = int(sw.get("n_draws", "1000"))
        if n_draws < 1:
            raise ValueError
    except ValueError:
        raise UsageError(f"{where('sweep', 'n_draws')}: expected a positive integer") from None
    try:
        seed = int(sw.get("seed", str(DEFAULT_SEED)), 0)
        if not 0 <= seed < 2**64:
            raise ValueError
    except ValueError:
        raise UsageError(f"{where('sweep', 'seed')}: expected an unsigned 64-bit integer") from None
    fmt = sw.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise UsageError(f"{where('sweep', 'format')}: expected csv or json")
    quad = DEFAULT_SETTINGS
    if cp.has_section("quadrature"):
        q = cp["quadrature"]
        conv = {"rel_tol": float, "max_subdivisions": int, "radial_cutoff_sigmas": float}
        kw = {}
        for key in q:
            if key not in conv:
                raise UsageError(f"{where('quadrature', key)}: unknown field")
            try:
                kw[key] = conv[key](q[key])
            except ValueError:
                raise UsageError(f"{where('quadrature', key)}: expected a number") from None
        try:
            quad = QuadratureSettings(**kw)
        except IMCapError as exc:
            raise UsageError(f"{source}: [quadrature]: {exc}") from None
    ens = {k: v for k, v in cp["ensemble"].items()}
    cfg = SweepConfig(
        snr_db_grid=grid,
        ensemble=ens,
        methods=methods,
        n_draws=n_draws,
        seed=seed,
        output=sw.get("output", "-"),
        format=fmt,
        tap_profile=sw.get("tap_profile"),
        quadrature=quad,
        source=source,
        lines={k[1]: v for k, v in lines.items() if k[0] == "ensemble"},
    )
    build_ensemble(cfg)  # validate early
    return cfg


_ENSEMBLE_KEYS = {
    "rayleigh": {"varrho", "r", "t", "correlation"},
    "rice": {"nu", "varrho", "k_factor", "power", "r", "t", "correlation"},
    "nakagami": {"m", "omega", "r", "t", "correlation"},
    "etu-smod": {"r", "t", "correlation", "frequency"},
    "etu-fmod": {"n_subcarriers", "subcarrier_spacing", "separation_rb", "t", "r", "first"},
    "dualpol": {"k_v", "k_h", "xpd", "specular_gain", "diffuse_corr"},
}


def build_ensemble(cfg):
    """Ensemble object described by ``cfg.ensemble``."""
    e = dict(cfg.ensemble)
    src = cfg.source

    def where(key):
        n = cfg.lines.get(key)
        return f"{src}:{n}: [ensemble] {key}" if n else f"{src}: [ensemble] {key}"

    kind = e.pop("kind", None)
    if kind not in _ENSEMBLE_KEYS:
        raise UsageError(f"{where('kind')}: expected one of {', '.join(_ENSEMBLE_KEYS)}")
    for key in e:
        if key not in _ENSEMBLE_KEYS[kind]:
            raise UsageError(f"{where(key)}: unknown field for kind {kind}")

    def num(key, default, conv=float):
        try:
            return conv(e[key]) if key in e else default
        except ValueError:
            raise UsageError(f"{where(key)}: expected a number") from None

    profile = channels.ETU
    if cfg.tap_profile:
        try:
            profile = channels.load_tap_profile(cfg.tap_profile)
        except (OSError, IMCapError) as exc:
            raise UsageError(f"tap profile: {exc}") from None
    corr = e.get("correlation", "none")
    if corr not in channels.CORRELATION_LEVELS:
        raise UsageError(f"{where('correlation')}: expected none, medium or high")
    corr = None if corr == "none" else corr
    try:
        if kind == "rayleigh":
            spec = ergodic.Rayleigh(num("varrho", math.sqrt(0.5)), num("r", 1, int))
            return channels.IidEnsemble(spec, num("t", 2, int), corr)
        if kind == "rice":
            r = num("r", 1, int)
            if "k_factor" in e:
                spec = ergodic.Rice.from_k_factor(num("k_factor", 0.0), r, num("power", 1.0))
            else:
                spec = ergodic.Rice(num("nu", 0.0), num("varrho", math.sqrt(0.5)), r)
            return channels.IidEnsemble(spec, num("t", 2, int), corr)
        if kind == "nakagami":
            spec = ergodic.Nakagami(num("m", 1.0), num("omega", 1.0), num("r", 1, int))
            return channels.IidEnsemble(spec, num("t", 2, int), corr)
        if kind == "etu-smod":
            return channels.EtuSmodEnsemble(num("r", 1, int), num("t", 2, int), corr, profile, num("frequency", 0.0))
        if kind == "etu-fmod":
            spec = channels.EtuSpec(
                n_subcarriers=num("n_subcarriers", 1200, int),
                subcarrier_spacing=num("subcarrier_spacing", 15e3),
                separation_rb=num("separation_rb", 1, int),
                t=num("t", 2, int),
                r=num("r", 1, int),
                first=num("first", 0, int),
            )
            return channels.EtuFmodEnsemble(spec, profile)
        spec = channels.DualPolSpec(
            k_v=num("k_v", 0.0),
            k_h=num("k_h", 0.0),
            xpd=num("xpd", 10.0),
            specular_gain=num("specular_gain", 0.0),
            diffuse_corr=num("diffuse_corr", 0.0),
        )
        return channels.DualPolEnsemble(spec)
    except IMCapError as exc:
        raise UsageError(f"{src}: [ensemble]: {exc}") from None


def apply_overrides(cfg, args):
    """Command-line flags take precedence over config values."""
    upd = {}
    if getattr(args, "snr", None):
        upd["snr_db_grid"] = parse_grid(args.snr)
    if getattr(args, "methods", None):
        upd["methods"] = parse_methods(args.methods)
    if getattr(args, "draws", None) is not None:
        if args.draws < 1:
            raise UsageError("--draws must be positive")
        upd["n_draws"] = args.draws
    if getattr(args, "seed", None) is not None:
        upd["seed"] = args.seed
    if getattr(args, "format", None):
        upd["format"] = args.format
    if getattr(args, "output", None):
        upd["output"] = args.output
    if getattr(args, "tap_profile", None):
        upd["tap_profile"] = args.tap_profile
    return replace(cfg, **upd) if upd else cfg


class _Report:
    """Collects stderr diagnostics and the exit status."""

    def __init__(self):
        self.status = EXIT_OK

    def flag(self, msg):
        print(f"imcap: flagged: {msg}", file=sys.stderr)

    def fail(self, msg):
        print(f"imcap: error: {msg}", file=sys.stderr)
        self.status = EXIT_ACCURACY


def run_sweep(cfg, workers=1, report=None):
    """Evaluate a sweep; returns ``(columns, rows, status)``."""
    report = report or _Report()
    ens = build_ensemble(cfg)
    std_cols = [m for m in cfg.methods if m in STOCHASTIC]
    columns = ["snr_db", *cfg.methods, *(f"{m}_stderr" for m in std_cols)]
    rows = []
    for snr in cfg.snr_db_grid:
        gamma = float(db_to_linear(snr))
        try:
            res = channels.sweep_point(ens, gamma, cfg.methods, cfg.n_draws, cfg.seed, workers,
                                      settings=cfg.quadrature)
        except (IMCapError, OverflowError) as exc:
            report.fail(f"snr_db={format_number(snr)}: {exc}")
            rows.append([snr] + [math.nan] * (len(columns) - 1))
            continue
        for m, r in res.items():
            if r.n_flagged:
                report.flag(f"snr_db={format_number(snr)} {m}: {r.n_flagged} of {cfg.n_draws} draws missed tolerance")
        rows.append([snr, *(res[m].mean for m in cfg.methods), *(res[m].std_error for m in std_cols)])
    return columns, rows, report.status


# ---------------------------------------------------------------------------
# subcommands


def read_matrix(path):
    """Complex matrix from text: one row per line, entries like ``1``, ``-2i``, ``0.5+1.5i``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    rows = []
    for i, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        row = []
        for j, tok in enumerate(line.split(), 1):
            if not re.fullmatch(r"[0-9eE.+\-]*[ij]?", tok):
                raise UsageError(f"{path}: row {i}, column {j}: cannot parse {tok!r}")
            t = tok[:-1] + "j" if tok[-1] in "ij" else tok
            if t in ("j", "+j", "-j"):
                t = t.replace("j", "1j")
            try:
                row.append(complex(t))
            except ValueError:
                raise UsageError(f"{path}: row {i}, column {j}: cannot parse {tok!r}") from None
        rows.append(row)
    if not rows:
        raise UsageError(f"{path}: empty matrix")
    if any(len(r) != len(rows[0]) for r in rows):
        bad = next(i for i, r in enumerate(rows, 1) if len(r) != len(rows[0]))
        raise UsageError(f"{path}: row {bad} has {len(rows[bad - 1])} entries, expected {len(rows[0])}")
    H = np.array(rows, dtype=complex)
    if not np.all(np.isfinite(H)):
        raise UsageError(f"{path}: non-finite entry")
    return H


def _instcap_row(H, gamma, methods, seed, report):
    row, errs = [], []
    for m in methods:
        try:
            if m == "integral":
                v = capacity_integral(H, gamma).value
            elif m == "mc":
                s = sigma_vector(H, gamma)
                i2, se = index_mi_montecarlo(s, 10**5, seed)
                v = float(mutual_info_symbol(s)) + i2
                errs.append(se)
            elif m == "mimo":
                v = float(mimo_capacity(H, gamma))
            else:
                v = float(closed_form(sigma_vector(H, gamma), int(m[-1])))
        except (IMCapError, OverflowError) as exc:
            report.fail(f"{m}: {exc}")
            v = math.nan
            if m == "mc":
                errs.append(math.nan)
        row.append(v)
    return row + errs


def cmd_instcap(args):
    H = read_matrix(args.matrix)
    methods = parse_methods(args.methods or "order2", SWEEP_METHODS + ("mimo",))
    seed = DEFAULT_SEED if args.seed is None else args.seed
    report = _Report()
    std_cols = [f"{m}_stderr" for m in methods if m in STOCHASTIC]
    if args.gamma is not None:
        if not args.gamma >= 0:
            raise UsageError("--gamma must be nonnegative")
        columns = [*methods, *std_cols]
        rows = [_instcap_row(H, args.gamma, methods, seed, report)]
    else:
        grid = parse_grid(args.snr or "0")
        columns = ["snr_db", *methods, *std_cols]
        rows = [[snr] + _instcap_row(H, float(db_to_linear(snr)), methods, seed, report) for snr in grid]
    write_output(render(columns, rows, args.format or "csv"), args.output)
    return report.status


def _fading_spec(args):
    r = args.r
    try:
        if args.fading == "rayleigh":
            return ergodic.Rayleigh(args.varrho, r)
        if args.fading == "rice":
            if args.k_factor is not None:
                return ergodic.Rice.from_k_factor(args.k_factor, r, args.power)
            return ergodic.Rice(args.nu, args.varrho, r)
        return ergodic.Nakagami(args.m, args.omega, r)
    except IMCapError as exc:
        raise UsageError(str(exc)) from None


def cmd_ergodic_closed(args):
    spec = _fading_spec(args)
    methods = parse_methods(args.methods or "closed", ("closed", "table", "mc"))
    grid = parse_grid(args.snr or "-10:5:30")
    seed = DEFAULT_SEED if args.seed is None else args.seed
    n_draws = args.draws or 10**5
    report = _Report()
    columns = ["snr_db", *methods] + (["mc_stderr"] if "mc" in methods else [])
    rows = []
    for snr in grid:
        gamma = float(db_to_linear(snr))
        row, se = [snr], []
        for m in methods:
            try:
                if m == "closed":
                    v = ergodic.ergodic_capacity(spec, gamma, args.series_tol).value
                elif m == "table":
                    v = ergodic.table_one(spec, gamma, args.series_tol)
                else:
                    est, err = channels.ergodic_mc(spec, gamma, "order2", n_draws, seed, args.workers, t=2)
                    v = est.value
                    se.append(err)
            except (IMCapError, OverflowError) as exc:
                report.fail(f"snr_db={format_number(snr)} {m}: {exc}")
                v = math.nan
                if m == "mc":
                    se.append(math.nan)
            row.append(v)
        rows.append(row + se)
    write_output(render(columns, rows, args.format or "csv"), args.output)
    return report.status


def cmd_error_analysis(args):
    cfg = apply_overrides(load_config(args.config or "fig2-error"), args)
    orders = [int(m[-1]) for m in cfg.methods if m.startswith("order")]
    if not orders:
        raise UsageError("error-analysis needs at least one of order0, order2, order4")
    ens = build_ensemble(cfg)
    report = _Report()
    columns = ["snr_db", "integral"]
    for o in orders:
        columns += [f"nerr_order{o}", f"mse_order{o}", f"mae_order{o}"]
    rows = []
    for snr in cfg.snr_db_grid:
        gamma = float(db_to_linear(snr))
        try:
            ref, stats, n_flagged = channels.error_analysis(
                ens, gamma, orders, cfg.n_draws, cfg.seed, args.workers, settings=cfg.quadrature
            )
        except (IMCapError, OverflowError) as exc:
            report.fail(f"snr_db={format_number(snr)}: {exc}")
            rows.append([snr] + [math.nan] * (len(columns) - 1))
            continue
        if n_flagged:
            report.flag(f"snr_db={format_number(snr)} integral: {n_flagged} of {cfg.n_draws} draws missed tolerance")
        row = [snr, ref]
        for o in orders:
            row += list(stats[o])
        rows.append(row)
    write_output(render(columns, rows, cfg.format), cfg.output)
    return report.status


def _sweep_and_write(cfg, workers):
    columns, rows, status = run_sweep(cfg, workers)
    write_output(render(columns, rows, cfg.format), cfg.output)
    return status


def cmd_run(args):
    cfg = apply_overrides(load_config(args.config), args)
    return _sweep_and_write(cfg, args.workers)


def cmd_smod(args):
    cfg = load_config(args.config or "smod")
    ens = dict(cfg.ensemble)
    if args.antennas:
        m = re.fullmatch(r"(\d+)x(\d+)", args.antennas)
        if not m:
            raise UsageError("--antennas expects TxR, e.g. 2x2")
        ens["t"], ens["r"] = m.group(1), m.group(2)
    if args.correlation:
        ens["correlation"] = args.correlation
    cfg = apply_overrides(replace(cfg, ensemble=ens, lines={}), args)
    return _sweep_and_write(cfg, args.workers)


def cmd_pmod(args):
    cfg = apply_overrides(load_config(args.config or f"pmod-{args.scenario}"), args)
    return _sweep_and_write(cfg, args.workers)


def cmd_fmod(args):
    cfg = load_config(args.config or "fmod")
    ens = dict(cfg.ensemble)
    if args.separation is not None:
        ens["separation_rb"] = str(args.separation)
    if args.subcarriers is not None:
        ens["n_subcarriers"] = str(args.subcarriers)
    cfg = apply_overrides(replace(cfg, ensemble=ens, lines={}), args)
    return _sweep_and_write(cfg, args.workers)


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--snr", metavar="START:STEP:STOP", help="SNR grid in dB (inclusive) or a comma list")
    common.add_argument("--methods", metavar="LIST", help="comma-separated methods")
    common.add_argument("--draws", type=int, metavar="N", help="channel draws per SNR point")
    common.add_argument("--seed", type=_u64, metavar="U64", help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--output", metavar="PATH", help="output file, '-' for stdout")
    common.add_argument("--tap-profile", metavar="PATH", help="'delay_ns power_db' file replacing the ETU taps")
    common.add_argument("--workers", type=int, default=1, help="threads for Monte-Carlo blocks (output unchanged)")

    p = argparse.ArgumentParser(prog="imcap", description="Index-modulation capacity calculator.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", parents=[common], help="run a sweep config", aliases=["sweep"])
    s.add_argument("--config", required=True, metavar="PATH", help="config file or preset name")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("instcap", parents=[common], help="capacity of one channel matrix")
    s.add_argument("matrix", help="text file, one row per line, entries like 0.5+1.5i")
    s.add_argument("--gamma", type=float, help="linear SNR (overrides --snr)")
    s.set_defaults(func=cmd_instcap)

    s = sub.add_parser("ergodic-closed", parents=[common], help="closed-form ergodic capacity, t = 2")
    s.add_argument("--fading", choices=("rayleigh", "rice", "nakagami"), default="rayleigh")
    s.add_argument("--r", type=int, default=1, help="receive dimension")
    s.add_argument("--varrho", type=float, default=math.sqrt(0.5))
    s.add_argument("--nu", type=float, default=0.0)
    s.add_argument("--k-factor", type=float, help="Rice factor (with --power instead of --nu/--varrho)")
    s.add_argument("--power", type=float, default=1.0)
    s.add_argument("--m", type=float, default=1.0)
    s.add_argument("--omega", type=float, default=1.0)
    s.add_argument("--series-tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_ergodic_closed)

    s = sub.add_parser("error-analysis", parents=[common], help="closed-form errors against the integral")
    s.add_argument("--config", metavar="PATH", help="config file or preset (default fig2-error)")
    s.set_defaults(func=cmd_error_analysis)

    s = sub.add_parser("smod", parents=[common], help="spatial IM over ETU links")
    s.add_argument("--config", metavar="PATH")
    s.add_argument("--antennas", metavar="TxR", help="transmit x receive, e.g. 4x4")
    s.add_argument("--correlation", choices=tuple(channels.CORRELATION_LEVELS))
    s.set_defaults(func=cmd_smod)

    s = sub.add_parser("pmod", parents=[common], help="polarization IM scenarios")
    s.add_argument("--config", metavar="PATH")
    s.add_argument("--scenario", default="maritime",
                   choices=("diffuse", "open", "suburban", "urban", "rice-asym", "maritime"))
    s.set_defaults(func=cmd_pmod)

    s = sub.add_parser("fmod", parents=[common], help="frequency IM over ETU subcarriers")
    s.add_argument("--config", metavar="PATH")
    s.add_argument("--separation", type=int, metavar="RB", help="subcarrier separation in resource blocks")
    s.add_argument("--subcarriers", type=int, metavar="N", help="number of subcarriers in the band")
    s.set_defaults(func=cmd_fmod)
    return p


def _join_negative_values(argv):
    """``--snr -10:5:30`` -> ``--snr=-10:5:30``; argparse would read the value as an option."""
    out = []
    it = iter(argv)
    for a in it:
        if a in ("--snr", "--gamma"):
            v = next(it, None)
            if v is not None and v.startswith("-"):
                out.append(f"{a}={v}")
                continue
            out.append(a)
            if v is not None:
                out.append(v)
            continue
        out.append(a)
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_values(argv))
    if args.workers < 1:
        parser.error("--workers must be positive")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"imcap: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
