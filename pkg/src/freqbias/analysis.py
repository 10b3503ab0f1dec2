"""Per-frequency learning rates, ensembles and model comparisons."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import spearmanr

from .pde import symmetrize_density
from .spectral import FrequencyGrid, SpectralTrace

DEFAULT_WINDOW_FRACTION = 0.1
DEFAULT_FLOOR = 1e-8


@dataclass(eq=False)
class KappaProfile:
    grid: FrequencyGrid
    kappa: np.ndarray           # nan where invalid
    fit_r2: np.ndarray
    valid: np.ndarray

    @property
    def freqs(self):
        return self.grid.freqs


@dataclass(eq=False)
class EnsembleResult:
    mean_spectrum: SpectralTrace
    per_seed_kappa: list
    mean_kappa: KappaProfile
    seeds: list = field(default_factory=list)


@dataclass(eq=False)
class ComparisonReport:
    snapshot_times: np.ndarray      # NN time of each compared snapshot
    model_times: np.ndarray         # matched model time (time_scale * NN time)
    distances: np.ndarray           # relative L2 distance of magnitude curves
    spearman: float
    time_scale: float
    band: tuple


def fit_window(times, window=None, fraction=DEFAULT_WINDOW_FRACTION):
    """Number of leading snapshots used for the slope fit."""
    times = np.asarray(times)
    if window is None:
        cutoff = times[0] + fraction * (times[-1] - times[0])
        window = int(np.sum(times <= cutoff * (1 + 1e-12)))
        window = max(window, 2)
    if window < 2 or window > times.size:
        raise ValueError(f"fit window of {window} snapshots not available in {times.size}")
    return window


def estimate_kappa(trace: SpectralTrace, window: int | None = None,
                   amplitude_floor: float = DEFAULT_FLOOR,
                   window_fraction: float = DEFAULT_WINDOW_FRACTION) -> KappaProfile:
    """Least-squares slope of ``-log|u(xi, t)|`` over the early snapshots."""
    if not amplitude_floor > 0:
        raise ValueError("amplitude_floor must be positive")
    n = fit_window(trace.times, window, window_fraction)
    t = trace.times[:n]
    mag = np.abs(trace.values[:n])
    valid = mag[0] >= amplitude_floor
    if not np.any(valid):
        raise ValueError("every frequency is below the amplitude floor; empty kappa profile")
    with np.errstate(divide="ignore", invalid="ignore"):
        # log of the ratio keeps tiny relative changes resolvable
        y = np.log(mag / mag[0])
    valid &= np.all(np.isfinite(y), axis=0)
    if not np.any(valid):
        raise ValueError("no frequency has a finite log-magnitude history")
    tc = t - t.mean()
    stt = float(tc @ tc)
    if stt == 0:
        raise ValueError("fit window has zero time extent")
    yv = np.where(valid, y, 0.0)
    yc = yv - yv.mean(axis=0)
    slope = tc @ yc / stt
    ss_res = np.sum((yc - np.outer(tc, slope)) ** 2, axis=0)
    ss_tot = np.sum(yc**2, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(ss_tot > 0, 1 - ss_res / ss_tot, 1.0)
    r2 = np.clip(r2, 0.0, 1.0)
    kappa = np.where(valid, -slope, np.nan)
    return KappaProfile(trace.grid, kappa, np.where(valid, r2, np.nan), valid)


def _check_consistent(traces):
    first = traces[0]
    for tr in traces[1:]:
        if not first.grid.matches(tr.grid):
            raise ValueError("traces live on different frequency grids")
        if tr.times.shape != first.times.shape or not np.array_equal(tr.times, first.times):
            raise ValueError("traces have different snapshot schedules")


def average_kappa(profiles) -> KappaProfile:
    valid = np.logical_and.reduce([p.valid for p in profiles])
    k = np.mean([np.where(valid, p.kappa, 0.0) for p in profiles], axis=0)
    r2 = np.mean([np.where(valid, p.fit_r2, 0.0) for p in profiles], axis=0)
    return KappaProfile(profiles[0].grid, np.where(valid, k, np.nan), np.where(valid, r2, np.nan), valid)


def ensemble_aggregate(traces, mode: str = "per-seed", seeds=None, window=None,
                       amplitude_floor=DEFAULT_FLOOR,
                       window_fraction=DEFAULT_WINDOW_FRACTION) -> EnsembleResult:
    """Complex mean spectrum plus mean learning rate over an ensemble.

    ``mode="per-seed"`` fits every trace and averages the rates;
    ``mode="mean-spectrum"`` fits the magnitude of the complex mean.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one trace")
    _check_consistent(traces)
    mean_vals = np.mean(np.stack([tr.values for tr in traces]), axis=0)
    mean_trace = SpectralTrace(traces[0].grid, traces[0].times.copy(), mean_vals)
    per_seed = [estimate_kappa(tr, window, amplitude_floor, window_fraction) for tr in traces]
    if mode == "per-seed":
        mean_k = average_kappa(per_seed)
    elif mode == "mean-spectrum":
        mean_k = estimate_kappa(mean_trace, window, amplitude_floor, window_fraction)
    else:
        raise ValueError(f"unknown ensemble mode {mode!r}")
    seeds = list(range(len(traces))) if seeds is None else list(seeds)
    return EnsembleResult(mean_trace, per_seed, mean_k, seeds)


def resample(trace: SpectralTrace, grid: FrequencyGrid) -> SpectralTrace:
    if trace.grid.matches(grid):
        return trace
    f = trace.grid.freqs
    if grid.freqs[0] < f[0] - 1e-9 or grid.freqs[-1] > f[-1] + 1e-9:
        raise ValueError("target frequency grid extends beyond the trace")
    vals = np.stack([
        np.interp(grid.freqs, f, v.real) + 1j * np.interp(grid.freqs, f, v.imag)
        for v in trace.values
    ])
    return SpectralTrace(grid, trace.times.copy(), vals)


def _log_mag_at(model: SpectralTrace, logm, t):
    """Linear interpolation of model log-magnitudes in time."""
    j = np.clip(np.searchsorted(model.times, t, side="right") - 1, 0, len(model) - 2)
    t0, t1 = model.times[j], model.times[j + 1]
    w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
    return (1 - w) * logm[j] + w * logm[j + 1]


def _safe_log(x):
    tiny = np.finfo(float).tiny
    return np.log(np.maximum(x, tiny))


def fit_time_scale(nn_trace: SpectralTrace, model: SpectralTrace, mask):
    """One global factor ``s`` with model time ``s * t_nn`` best matching log-magnitudes."""
    nn_log = _safe_log(np.abs(nn_trace.values[:, mask]))
    if len(model) == 1:
        return 1.0
    model_log = _safe_log(np.abs(model.values[:, mask]))
    t_nn = nn_trace.times - nn_trace.times[0]
    t_max = t_nn[-1]
    span = model.times[-1] - model.times[0]
    if t_max <= 0 or span <= 0:
        return 1.0

    def cost(s):
        return sum(
            float(np.sum((nn_log[j] - _log_mag_at(model, model_log, model.times[0] + s * t)) ** 2))
            for j, t in enumerate(t_nn)
        )

    s_hi = span / t_max
    # the cost is flat for tiny s, so bracket on a log grid before refining
    grid = np.linspace(np.log(s_hi) - 30.0, np.log(s_hi), 121)
    k = int(np.argmin([cost(np.exp(ls)) for ls in grid]))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = minimize_scalar(lambda ls: cost(np.exp(ls)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    candidates = [np.exp(res.x), np.exp(grid[k]), s_hi]
    if s_hi >= 1.0:
        candidates.append(1.0)
    costs = [cost(s) for s in candidates]
    return float(candidates[int(np.argmin(costs))])


def fold_rates(freqs, kappa, mask):
    """Average ``kappa`` over ``+xi`` and ``-xi``; returns ``|xi|`` and the folded rates.

    Real residuals have Hermitian spectra, so the two halves carry the same
    rate up to rounding. Keeping both would only add tied pairs.
    """
    freqs = np.asarray(freqs, dtype=float)
    out_xi, out_k = [], []
    for j in np.flatnonzero(mask & (freqs >= 0)):
        vals = [kappa[j]]
        if freqs[j] > 0:
            i = np.flatnonzero(np.isclose(freqs, -freqs[j], rtol=0, atol=1e-9 * max(1.0, freqs[j])))
            if i.size and mask[i[0]]:
                vals.append(kappa[i[0]])
        out_xi.append(freqs[j])
        out_k.append(np.mean(vals))
    for j in np.flatnonzero(mask & (freqs < 0)):
        # negative frequencies whose mirror is missing or masked
        if not np.any(np.isclose(freqs, -freqs[j], rtol=0, atol=1e-9 * max(1.0, -freqs[j])) & mask):
            out_xi.append(-freqs[j])
            out_k.append(kappa[j])
    order = np.argsort(out_xi, kind="stable")
    return np.asarray(out_xi)[order], np.asarray(out_k)[order]


def rank_correlation(freqs, kappa, mask, dist) -> float:
    """Spearman correlation of folded rates with the symmetrised density; nan if either is constant."""
    xi, k = fold_rates(freqs, kappa, mask)
    rho = symmetrize_density(dist)(xi)
    if xi.size < 2 or np.ptp(rho) == 0 or np.ptp(k) == 0:
        return float("nan")
    return float(spearmanr(k, rho)[0])


def compare(nn: EnsembleResult, model: SpectralTrace, dist, band=None) -> ComparisonReport:
    """Align ``model`` to the NN ensemble with one time factor and score the match.

    ``band`` restricts the rank correlation of mean kappa against the density
    to ``band[0] <= |xi| <= band[1]``.
    """
    nn_trace = nn.mean_spectrum
    model = resample(model, nn_trace.grid)
    xi = nn_trace.grid.freqs
    mask = nn.mean_kappa.valid.copy()
    if band is not None:
        mask &= (np.abs(xi) >= band[0]) & (np.abs(xi) <= band[1])
    if not np.any(mask):
        raise ValueError("empty valid band")
    scale = fit_time_scale(nn_trace, model, mask)
    t_nn = nn_trace.times - nn_trace.times[0]
    model_t = model.times[0] + scale * t_nn
    dists = []
    for j, t in enumerate(model_t):
        nn_mag = np.abs(nn_trace.values[j, mask])
        m_mag = np.exp(_log_mag_at(model, _safe_log(np.abs(model.values[:, mask])), t))
        denom = np.linalg.norm(m_mag)
        dists.append(np.linalg.norm(nn_mag - m_mag) / denom if denom > 0 else np.inf)
    corr = rank_correlation(xi, nn.mean_kappa.kappa, mask, dist)
    edges = (float(np.min(np.abs(xi[mask]))), float(np.max(np.abs(xi[mask]))))
    return ComparisonReport(t_nn, model_t, np.asarray(dists), corr, scale, edges)


def coefficient_of_variation(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.std(v) / abs(np.mean(v)))
