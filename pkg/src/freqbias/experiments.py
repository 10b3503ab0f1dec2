"""Declarative experiment runs: INI config -> CSVs, SVG figures, manifest.

A config is an INI file with the sections ``[experiment]``, ``[train]``,
``[distributions]``, ``[fem]`` and ``[analysis]``. Numeric values may be
arithmetic expressions such as ``300/(2*pi)`` or ``2/sqrt(4000)``. All
frequencies are in cycles per unit length.

The preset named in ``[experiment] preset`` supplies defaults; every key in
the file overrides them. The fully resolved config is written back as
``config.ini`` so a run can be repeated from its output directory alone.
"""
from __future__ import annotations

import ast
import configparser
import itertools
import logging
import math
import operator
import os
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from . import io as fio
from . import svgplot
from .analysis import (
    ComparisonReport,
    EnsembleResult,
    compare,
    ensemble_aggregate,
    rank_correlation,
)
from .fem import assemble, build_mesh, evolve, project_initial
from .network import TrainConfig, train
from .pde import build_coefficients, symmetrize_density
from .spectral import (
    Normal,
    RoundedSine,
    SampleGrid,
    SpectralSnapshot,
    Tabulated,
    Uniform,
    dft_forward,
    target_eval,
)

log = logging.getLogger(__name__)

PRESETS = ("kappa-sweep", "fem-vs-nn", "frozen-check", "multilayer", "robustness-m", "custom")
WORKERS_ENV = "FREQBIAS_WORKERS"


class ConfigError(ValueError):
    """Invalid config; the message names the offending ``[section] key``."""


class ExperimentFailure(RuntimeError):
    pass


# --------------------------------------------------------- value parsing

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi, "e": math.e}
_FUNCS = {"sqrt": math.sqrt, "log": math.log, "exp": math.exp}


def eval_number(text: str) -> float:
    """Evaluate a plain arithmetic expression (no names beyond pi, e, sqrt, log, exp)."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression element {ast.dump(node)}")

    try:
        return float(ev(ast.parse(text.strip(), mode="eval")))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
        raise ValueError(f"cannot evaluate {text!r}: {exc}") from None


def _as_int(text):
    v = eval_number(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def _as_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _as_list(text, conv):
    return [conv(p) for p in text.split(",") if p.strip()]


def parse_distribution(text: str):
    """``normal <sigma>``, ``uniform <R>`` or ``tabulated x:p x:p ...``."""
    parts = text.split()
    if not parts:
        raise ValueError("empty distribution")
    kind = parts[0].lower()
    if kind == "normal" and len(parts) == 2:
        return Normal(eval_number(parts[1]))
    if kind == "uniform" and len(parts) == 2:
        return Uniform(eval_number(parts[1]))
    if kind == "tabulated" and len(parts) >= 3:
        pairs = [p.split(":") for p in parts[1:]]
        if any(len(p) != 2 for p in pairs):
            raise ValueError("tabulated entries must look like node:density")
        return Tabulated([eval_number(p[0]) for p in pairs], [eval_number(p[1]) for p in pairs])
    raise ValueError(f"cannot parse distribution {text!r}")


def parse_target(text: str):
    parts = text.split()
    if parts and parts[0] == "rounded-sine" and len(parts) <= 2:
        return RoundedSine(eval_number(parts[1]) if len(parts) == 2 else 4.2)
    raise ValueError(f"unknown target {text!r}")


# ----------------------------------------------------------------- presets

_BASE = {
    "experiment": {
        "seeds": "100",
        "base_seed": "0",
        "ensemble_mode": "per-seed",
    },
    "train": {
        "m": "2000",
        "depth": "2",
        "hidden_width": "auto",
        "sigma_a": "2/sqrt(4000)",
        "step_size": "1e-5/240",
        "iterations": "10000",
        "snapshot_every": "100",
        "frozen_w": "false",
        "n_points": "240",
        "x_min": "-1",
        "x_max": "1",
        "target": "rounded-sine 4.2",
        "time_scale": "1",
    },
    "distributions": {},
    "fem": {"enabled": "false", "a": "-60", "b": "60", "h": "0.5", "dt": "0.1",
            "t_end": "500", "snapshot_every": "500", "sigma_a": "train", "u0": "target"},
    "analysis": {"window_fraction": "0.1", "amplitude_floor": "1e-8", "band": "none"},
}

_PRESET_OVERRIDES = {
    "kappa-sweep": {
        "distributions": {
            "normal_30": "normal 30/(2*pi)",
            "normal_90": "normal 90/(2*pi)",
            "normal_300": "normal 300/(2*pi)",
            "normal_600": "normal 600/(2*pi)",
        },
    },
    "fem-vs-nn": {
        "train": {"iterations": "40000", "snapshot_every": "4000"},
        "distributions": {"normal_30": "normal 30/(2*pi)"},
        "fem": {"enabled": "true"},
    },
    "frozen-check": {
        "train": {"frozen_w": "true"},
        "distributions": {"uniform_10": "uniform 10", "normal_300": "normal 300/(2*pi)"},
        "analysis": {"band": "0, 8"},
    },
    "multilayer": {
        "train": {"depth": "3, 4", "hidden_width": "4000"},
        "distributions": {"normal_300": "normal 300/(2*pi)"},
    },
    "robustness-m": {
        "train": {"m": "16, 64, 256", "depth": "2, 3, 4"},
        "distributions": {"normal_300": "normal 300/(2*pi)"},
    },
    "custom": {},
}

# unit notes written next to keys in the resolved config
_UNITS = {
    ("train", "step_size"): "gradient-descent step per iteration",
    ("train", "time_scale"): "model time per (iteration * step_size)",
    ("train", "hidden_width"): "'auto' = 2*m",
    ("fem", "a"): "cycles per unit",
    ("fem", "b"): "cycles per unit",
    ("fem", "h"): "cycles per unit",
    ("fem", "dt"): "model time units",
    ("fem", "t_end"): "model time units",
    ("fem", "snapshot_every"): "implicit steps",
    ("fem", "u0"): "target | gaussian <center> <width>",
    ("analysis", "band"): "|xi| range in cycles per unit, or none",
}


def preset_defaults(preset: str) -> dict:
    if preset not in PRESETS:
        raise ConfigError(f"[experiment] preset: unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    out = {sec: dict(vals) for sec, vals in _BASE.items()}
    for sec, vals in _PRESET_OVERRIDES[preset].items():
        if sec == "distributions":
            out[sec] = dict(vals)
        else:
            out[sec].update(vals)
    return out


# ------------------------------------------------------------ config types


@dataclass
class FemSettings:
    a: float = -60.0
    b: float = 60.0
    h: float = 0.5
    dt: float = 0.1
    t_end: float = 500.0
    snapshot_every: int = 500
    sigma_a: float | None = None        # None: same as training
    u0: str = "target"

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))


@dataclass
class Variant:
    name: str
    dist_name: str
    dist: object
    train: TrainConfig


@dataclass
class ExperimentConfig:
    preset: str
    output_dir: str
    train: TrainConfig
    dists: dict
    seeds: list
    m_values: list
    depths: list
    hidden_width: int | None            # None: 2*m
    fem: FemSettings | None = None
    ensemble_mode: str = "per-seed"
    window_fraction: float = 0.1
    amplitude_floor: float = 1e-8
    band: tuple | None = None
    raw: dict = field(default_factory=dict)

    def variants(self):
        multi = len(self.m_values) > 1 or len(self.depths) > 1
        out = []
        for (dname, dist), depth, m in itertools.product(self.dists.items(), self.depths, self.m_values):
            width = 2 * m if self.hidden_width is None else self.hidden_width
            name = f"{dname}_depth{depth}_m{m}" if multi else dname
            cfg = self.train.replace(dist_w=dist, m=m, depth=depth, hidden_width=width)
            out.append(Variant(name, dname, dist, cfg))
        return out

    def to_ini(self) -> str:
        """Resolved config with unit notes; loading it gives an equal config."""
        lines = ["; resolved experiment config, frequencies in cycles per unit", ""]
        for sec in ("experiment", "train", "distributions", "fem", "analysis"):
            lines.append(f"[{sec}]")
            for key, val in self.raw[sec].items():
                note = _UNITS.get((sec, key))
                if note:
                    lines.append(f"; {key}: {note}")
                lines.append(f"{key} = {val}")
            lines.append("")
        return "\n".join(lines)


def _read_ini(path):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parser


def load_config(path, output_dir=None) -> ExperimentConfig:
    parser = _read_ini(path)
    known = set(_BASE)
    for sec in parser.sections():
        if sec not in known:
            raise ConfigError(f"[{sec}]: unknown section")
    preset = parser.get("experiment", "preset", fallback="custom").strip()
    raw = preset_defaults(preset)
    raw["experiment"]["preset"] = preset
    for sec in parser.sections():
        if sec == "distributions":
            if parser[sec]:
                raw[sec] = {k: v.strip() for k, v in parser[sec].items()}
            continue
        for key, val in parser[sec].items():
            if key not in raw[sec] and not (sec == "experiment" and key in ("output_dir", "preset")):
                raise ConfigError(f"[{sec}] {key}: unknown key")
            raw[sec][key] = val.strip()
    if output_dir is not None:
        raw["experiment"]["output_dir"] = str(output_dir)
    if "output_dir" not in raw["experiment"]:
        base = os.path.splitext(os.path.basename(path))[0]
        raw["experiment"]["output_dir"] = os.path.join(os.path.dirname(os.path.abspath(path)), base + "_out")
    return config_from_raw(raw)


def config_from_raw(raw: dict) -> ExperimentConfig:
    def get(sec, key, conv):
        try:
            return conv(raw[sec][key])
        except KeyError:
            raise ConfigError(f"[{sec}] {key}: missing") from None
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{sec}] {key}: {exc}") from None

    ex = raw["experiment"]
    preset = ex.get("preset", "custom")
    if preset not in PRESETS:
        raise ConfigError(f"[experiment] preset: unknown preset {preset!r}")

    seeds_text = ex["seeds"]
    if "," in seeds_text:
        seeds = get("experiment", "seeds", lambda t: _as_list(t, _as_int))
        raw["experiment"].pop("base_seed", None)
    else:
        count = get("experiment", "seeds", _as_int)
        base = get("experiment", "base_seed", _as_int)
        if count < 1 or base < 0:
            raise ConfigError("[experiment] seeds: need count >= 1 and base_seed >= 0")
        seeds = [base + i for i in range(count)]
    if not seeds or len(set(seeds)) != len(seeds) or min(seeds) < 0:
        raise ConfigError("[experiment] seeds: need distinct non-negative seeds")
    mode = ex.get("ensemble_mode", "per-seed")
    if mode not in ("per-seed", "mean-spectrum"):
        raise ConfigError(f"[experiment] ensemble_mode: expected per-seed or mean-spectrum, got {mode!r}")

    if not raw["distributions"]:
        raise ConfigError("[distributions]: at least one distribution is required")
    dists = {}
    for name, text in raw["distributions"].items():
        try:
            dists[name] = parse_distribution(text)
        except ValueError as exc:
            raise ConfigError(f"[distributions] {name}: {exc}") from None

    m_values = get("train", "m", lambda t: _as_list(t, _as_int))
    depths = get("train", "depth", lambda t: _as_list(t, _as_int))
    hw_text = raw["train"]["hidden_width"].strip().lower()
    hidden_width = None if hw_text == "auto" else get("train", "hidden_width", _as_int)
    if not m_values or not depths:
        raise ConfigError("[train] m/depth: need at least one value")
    grid = SampleGrid(get("train", "n_points", _as_int), get("train", "x_min", eval_number),
                      get("train", "x_max", eval_number))
    try:
        base_train = TrainConfig(
            m=m_values[0],
            dist_w=next(iter(dists.values())),
            sigma_a=get("train", "sigma_a", eval_number),
            step_size=get("train", "step_size", eval_number),
            iterations=get("train", "iterations", _as_int),
            snapshot_every=get("train", "snapshot_every", _as_int),
            grid=grid,
            target=get("train", "target", parse_target),
            frozen_w=get("train", "frozen_w", _as_bool),
            depth=depths[0],
            hidden_width=hidden_width or 2 * m_values[0],
            time_scale=get("train", "time_scale", eval_number),
        )
        for m, d in itertools.product(m_values, depths):
            base_train.replace(m=m, depth=d, hidden_width=hidden_width or 2 * m)
    except ValueError as exc:
        raise ConfigError(f"[train]: {exc}") from None

    fem = None
    if get("fem", "enabled", _as_bool):
        sig = raw["fem"]["sigma_a"].strip().lower()
        fem = FemSettings(
            a=get("fem", "a", eval_number), b=get("fem", "b", eval_number),
            h=get("fem", "h", eval_number), dt=get("fem", "dt", eval_number),
            t_end=get("fem", "t_end", eval_number),
            snapshot_every=get("fem", "snapshot_every", _as_int),
            sigma_a=None if sig == "train" else get("fem", "sigma_a", eval_number),
            u0=raw["fem"]["u0"],
        )
        if not (fem.dt > 0 and fem.t_end > 0 and fem.snapshot_every >= 1):
            raise ConfigError("[fem]: need dt > 0, t_end > 0, snapshot_every >= 1")
        if abs(fem.t_end / fem.dt - fem.n_steps) > 1e-9 * fem.n_steps:
            raise ConfigError("[fem] t_end: must be a whole number of dt steps")
        try:
            build_mesh(fem.a, fem.b, fem.h)
            _fem_initial(fem.u0, base_train, build_mesh(fem.a, fem.b, fem.h))
        except ValueError as exc:
            raise ConfigError(f"[fem]: {exc}") from None

    band_text = raw["analysis"]["band"].strip().lower()
    band = None
    if band_text != "none":
        band = tuple(get("analysis", "band", lambda t: _as_list(t, eval_number)))
        if len(band) != 2 or not 0 <= band[0] < band[1]:
            raise ConfigError("[analysis] band: expected 'lo, hi' with 0 <= lo < hi")
    wf = get("analysis", "window_fraction", eval_number)
    floor = get("analysis", "amplitude_floor", eval_number)
    if not (0 < wf <= 1 and floor > 0):
        raise ConfigError("[analysis]: need 0 < window_fraction <= 1 and amplitude_floor > 0")

    return ExperimentConfig(
        preset=preset, output_dir=ex["output_dir"], train=base_train, dists=dists, seeds=seeds,
        m_values=m_values, depths=depths, hidden_width=hidden_width, fem=fem,
        ensemble_mode=mode, window_fraction=wf, amplitude_floor=floor, band=band, raw=raw,
    )


# ------------------------------------------------------------------ running


def default_workers():
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV}={env!r} is not an integer") from None
        if n < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


def _train_one(cfg):
    # single-threaded BLAS keeps every reduction order fixed
    with threadpool_limits(limits=1):
        return train(cfg)


def run_seeds(train_cfg: TrainConfig, seeds, workers=1):
    """Train one network per seed; results come back in ``seeds`` order."""
    cfgs = [train_cfg.replace(seed=s) for s in seeds]
    if workers <= 1:
        return [_train_one(c) for c in cfgs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_train_one, cfgs))


def _fem_initial(spec: str, train_cfg: TrainConfig, mesh):
    parts = spec.split()
    if parts == ["target"]:
        # expected initial residual: the network output has zero mean at init
        y = target_eval(train_cfg.target, train_cfg.grid.points)
        return project_initial(dft_forward(-y, train_cfg.grid), mesh)
    if len(parts) == 3 and parts[0] == "gaussian":
        c, w = eval_number(parts[1]), eval_number(parts[2])
        if not w > 0:
            raise ValueError("gaussian width must be positive")
        vals = np.exp(-0.5 * ((mesh.nodes - c) / w) ** 2) + np.exp(-0.5 * ((mesh.nodes + c) / w) ** 2)
        return project_initial(SpectralSnapshot(mesh.frequency_grid(), vals.astype(complex)), mesh)
    raise ValueError(f"unknown u0 {spec!r}")


def run_fem(settings: FemSettings, dist, train_cfg: TrainConfig, energies=None):
    mesh = build_mesh(settings.a, settings.b, settings.h)
    sigma = train_cfg.sigma_a if settings.sigma_a is None else settings.sigma_a
    system = assemble(mesh, build_coefficients(dist, sigma), settings.dt)
    state0 = _fem_initial(settings.u0, train_cfg, mesh)
    return evolve(system, state0, settings.n_steps, settings.snapshot_every, energies)


def density_report(profile, dist, band=None) -> dict:
    """Rank correlation and proportional fit of kappa against the density."""
    xi = profile.freqs
    mask = profile.valid.copy()
    if band is not None:
        mask &= (np.abs(xi) >= band[0]) & (np.abs(xi) <= band[1])
    if not np.any(mask):
        raise ValueError("no valid frequencies in the requested band")
    rho = symmetrize_density(dist)(xi[mask])
    k = profile.kappa[mask]
    corr = rank_correlation(xi, profile.kappa, mask, dist)
    denom = float(rho @ rho)
    scale = float(k @ rho) / denom if denom > 0 else float("nan")
    resid = k - scale * rho
    rel = float(np.linalg.norm(resid) / np.linalg.norm(k)) if np.any(k) else float("nan")
    return {
        "spearman": corr,
        "kappa_per_density": scale,
        "relative_misfit": rel,
        "band_min": float(np.min(np.abs(xi[mask]))),
        "band_max": float(np.max(np.abs(xi[mask]))),
        "n_frequencies": int(mask.sum()),
    }


def _write_kv(path, items: dict):
    with open(path, "w") as fh:
        for k, v in items.items():
            fh.write(f"{k} = {fio.fmt(v) if not isinstance(v, str) else v}\n")
    return path


def _variant_ini(v: Variant) -> str:
    t = v.train
    return (
        f"distribution = {v.dist.describe()}\n"
        f"dist_name = {v.dist_name}\n"
        f"m = {t.m}\n"
        f"depth = {t.depth}\n"
        f"hidden_width = {t.hidden_width}\n"
        f"frozen_w = {str(t.frozen_w).lower()}\n"
        f"step_size = {fio.fmt(t.step_size)}\n"
        f"time_scale = {fio.fmt(t.time_scale)}\n"
    )


def read_variant_ini(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            if "=" in line:
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    return out


def run_variant(cfg: ExperimentConfig, v: Variant, out_dir, workers=1):
    vdir = os.path.join(out_dir, "variants", v.name)
    os.makedirs(os.path.join(vdir, "seeds"), exist_ok=True)
    with open(os.path.join(vdir, "variant.ini"), "w") as fh:
        fh.write(_variant_ini(v))
    traces = run_seeds(v.train, cfg.seeds, workers)
    ens = ensemble_aggregate(traces, cfg.ensemble_mode, cfg.seeds,
                             amplitude_floor=cfg.amplitude_floor, window_fraction=cfg.window_fraction)
    fio.write_trace(os.path.join(vdir, "mean_trace.csv"), ens.mean_spectrum)
    fio.write_kappa(os.path.join(vdir, "kappa.csv"), ens.mean_kappa)
    for seed, prof, tr in zip(cfg.seeds, ens.per_seed_kappa, traces):
        fio.write_kappa(os.path.join(vdir, "seeds", f"seed{seed:05d}_kappa.csv"), prof)
    risk_rows = zip(cfg.seeds, [tr.initial_risk for tr in traces], [tr.final_risk for tr in traces])
    fio.write_rows(os.path.join(vdir, "risk.csv"), ["seed", "initial_risk", "final_risk"], risk_rows)
    _write_kv(os.path.join(vdir, "density_report.txt"), density_report(ens.mean_kappa, v.dist, cfg.band))
    if cfg.fem is not None:
        fem_trace = run_fem(cfg.fem, v.dist, v.train)
        fio.write_trace(os.path.join(vdir, "fem_trace.csv"), fem_trace)
        rep = compare(ens, fem_trace, v.dist, cfg.band)
        fio.write_comparison(os.path.join(vdir, "comparison.csv"), rep)
    return ens


def write_manifest(out_dir, started, finished, files):
    lines = [
        f"toolkit_version = {__version__}",
        "config = config.ini",
        f"wall_clock_seconds = {finished - started:.3f}",
    ]
    for rel in sorted(files):
        lines.append(f"sha256.{rel} = {fio.sha256(os.path.join(out_dir, rel))}")
    path = os.path.join(out_dir, "manifest.txt")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _artifact_files(out_dir):
    found = []
    for root, _, files in os.walk(out_dir):
        for name in files:
            if name in ("manifest.txt", "failure.txt"):
                continue
            found.append(os.path.relpath(os.path.join(root, name), out_dir).replace(os.sep, "/"))
    return found


def run_experiment(config, workers=None, output_dir=None) -> str:
    """Run every variant of ``config`` (a path or an :class:`ExperimentConfig`)."""
    cfg = load_config(config, output_dir) if isinstance(config, (str, os.PathLike)) else config
    workers = default_workers() if workers is None else workers
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    for stale in ("manifest.txt", "failure.txt"):
        if os.path.exists(os.path.join(out, stale)):
            os.remove(os.path.join(out, stale))
    started = time.time()
    with open(os.path.join(out, "config.ini"), "w") as fh:
        fh.write(cfg.to_ini())
    try:
        for v in cfg.variants():
            log.info("variant %s: %d seeds, %d workers", v.name, len(cfg.seeds), workers)
            run_variant(cfg, v, out, workers)
        make_plots(out)
    except Exception as exc:
        with open(os.path.join(out, "failure.txt"), "w") as fh:
            fh.write(f"error = {type(exc).__name__}: {exc}\n\n")
            fh.write(traceback.format_exc())
        raise ExperimentFailure(f"run failed, see {os.path.join(out, 'failure.txt')}: {exc}") from exc
    write_manifest(out, started, time.time(), _artifact_files(out))
    return out


# ------------------------------------------------------------------ figures


def _variant_dirs(out_dir):
    root = os.path.join(out_dir, "variants")
    if not os.path.isdir(root):
        return []
    return [os.path.join(root, d) for d in sorted(os.listdir(root))
            if os.path.exists(os.path.join(root, d, "kappa.csv"))]


def make_plots(out_dir):
    """(Re)draw every figure of a result directory from its CSVs."""
    cfg = load_config(os.path.join(out_dir, "config.ini"), output_dir=out_dir)
    vdirs = _variant_dirs(out_dir)
    if not vdirs:
        raise ValueError(f"{out_dir} holds no results to plot")
    fig_dir = os.path.join(out_dir, "figures")
    t = cfg.train
    y = target_eval(t.target, t.grid.points)
    svgplot.plot_target(os.path.join(fig_dir, "target.svg"), t.grid, y, dft_forward(y, t.grid))

    profiles, meta = {}, {}
    for vd in vdirs:
        name = os.path.basename(vd)
        profiles[name] = fio.read_kappa(os.path.join(vd, "kappa.csv"))
        meta[name] = read_variant_ini(os.path.join(vd, "variant.ini"))
    if len(cfg.depths) > 1 or len(cfg.m_values) > 1:
        groups = {}
        for name, prof in profiles.items():
            md = meta[name]
            key = f"depth {md['depth']}"
            groups.setdefault(key, {})[f"{md['dist_name']} m={md['m']}"] = prof
        svgplot.plot_kappa_panels(os.path.join(fig_dir, "kappa.svg"), groups)
    else:
        svgplot.plot_kappa_overlay(os.path.join(fig_dir, "kappa.svg"), profiles)
    for vd in vdirs:
        fem_path = os.path.join(vd, "fem_trace.csv")
        if os.path.exists(fem_path):
            rows = {"NN": fio.read_trace(os.path.join(vd, "mean_trace.csv")), "FEM": fio.read_trace(fem_path)}
            svgplot.plot_snapshot_grid(os.path.join(fig_dir, f"snapshots_{os.path.basename(vd)}.svg"), rows)
    return fig_dir


# ----------------------------------------------------------- standalone ops


def ensemble_from_dir(vdir) -> EnsembleResult:
    mean = fio.read_trace(os.path.join(vdir, "mean_trace.csv"))
    kappa = fio.read_kappa(os.path.join(vdir, "kappa.csv"))
    return EnsembleResult(mean, [], kappa, [])


def resolve_variant_dir(path):
    """Accept a variant directory or a run directory with exactly one variant."""
    if os.path.exists(os.path.join(path, "mean_trace.csv")):
        return path
    vdirs = _variant_dirs(path)
    if len(vdirs) != 1:
        raise ValueError(f"{path}: expected one variant, found {len(vdirs)}; pass a variant directory")
    return vdirs[0]


def find_fem_trace(path):
    """``fem_trace.csv`` in ``path``, its single variant, or its single ``fem/<name>``."""
    if os.path.isfile(path):
        return path
    direct = os.path.join(path, "fem_trace.csv")
    if os.path.exists(direct):
        return direct
    found = []
    for sub in ("fem", "variants"):
        root = os.path.join(path, sub)
        if os.path.isdir(root):
            found += [os.path.join(root, d, "fem_trace.csv") for d in sorted(os.listdir(root))
                      if os.path.exists(os.path.join(root, d, "fem_trace.csv"))]
    if len(found) != 1:
        raise ValueError(f"{path}: expected one FEM trace, found {len(found)}")
    return found[0]


def compare_dirs(nn_dir, fem_dir, band=None) -> ComparisonReport:
    nn_v = resolve_variant_dir(nn_dir)
    fem_path = find_fem_trace(fem_dir)
    dist = parse_distribution(read_variant_ini(os.path.join(nn_v, "variant.ini"))["distribution"])
    return compare(ensemble_from_dir(nn_v), fio.read_trace(fem_path), dist, band)


def run_fem_only(config, output_dir=None) -> str:
    """FEM evolution for each configured distribution, no training."""
    cfg = load_config(config, output_dir) if isinstance(config, (str, os.PathLike)) else config
    settings = cfg.fem or FemSettings()
    out = cfg.output_dir
    started = time.time()
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.ini"), "w") as fh:
        fh.write(cfg.to_ini())
    for name, dist in cfg.dists.items():
        energies = []
        trace = run_fem(settings, dist, cfg.train, energies)
        vdir = os.path.join(out, "fem", name)
        fio.write_trace(os.path.join(vdir, "fem_trace.csv"), trace)
        fio.write_rows(os.path.join(vdir, "energy.csv"), ["step", "energy"], enumerate(energies))
    write_manifest(out, started, time.time(), _artifact_files(out))
    return out
