"""Densities, targets, sample grids and the scaled discrete Fourier transform.

Frequencies are in cycles per unit length throughout: a weight ``w`` enters
the network as ``cos(2*pi*w*x)`` and the transform kernel is
``exp(-2*pi*i*x*xi)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# Philox streams, one per kind of draw, so that e.g. the frequencies can be
# shared between runs while the output weights differ.
STREAM_W = 0
STREAM_A = 1
STREAM_B = 2
STREAM_HIDDEN = 3


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator (Philox 4x64) keyed by ``(seed, stream)``.

    Normal variates come from numpy's ziggurat transform on this bit stream.
    """
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


# ---------------------------------------------------------------- densities


@dataclass(frozen=True)
class Normal:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"Normal sigma must be positive, got {self.sigma}")

    @property
    def breakpoints(self):
        return ()

    def describe(self):
        return f"normal {self.sigma!r}"


@dataclass(frozen=True)
class Uniform:
    """Uniform density on the closed interval [-R, R]."""

    halfwidth: float

    def __post_init__(self):
        if not self.halfwidth > 0:
            raise ValueError(f"Uniform halfwidth must be positive, got {self.halfwidth}")

    @property
    def breakpoints(self):
        return (-self.halfwidth, self.halfwidth)

    def describe(self):
        return f"uniform {self.halfwidth!r}"


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Piecewise-linear density through ``(nodes, densities)``, zero outside."""

    nodes: np.ndarray
    densities: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        dens = np.asarray(self.densities, dtype=float)
        if nodes.ndim != 1 or nodes.shape != dens.shape or nodes.size < 2:
            raise ValueError("Tabulated needs matching 1-D nodes/densities with >= 2 entries")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("Tabulated nodes must be strictly increasing")
        if np.any(dens < 0):
            raise ValueError("Tabulated densities must be non-negative")
        total = np.trapezoid(dens, nodes)
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"Tabulated density integrates to {total}, expected 1")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "densities", dens)

    @property
    def breakpoints(self):
        return tuple(self.nodes)

    def describe(self):
        pairs = " ".join(f"{n!r}:{d!r}" for n, d in zip(self.nodes, self.densities))
        return f"tabulated {pairs}"


DistributionSpec = Normal | Uniform | Tabulated


def pdf_eval(dist: DistributionSpec, xi):
    """Density of ``dist`` at frequency ``xi`` (scalar or array)."""
    xi = np.asarray(xi, dtype=float)
    if isinstance(dist, Normal):
        s = dist.sigma
        out = np.exp(-0.5 * (xi / s) ** 2) / (s * np.sqrt(2 * np.pi))
    elif isinstance(dist, Uniform):
        out = np.where(np.abs(xi) <= dist.halfwidth, 1.0 / (2 * dist.halfwidth), 0.0)
    elif isinstance(dist, Tabulated):
        out = np.interp(xi, dist.nodes, dist.densities, left=0.0, right=0.0)
    else:
        raise TypeError(f"unknown distribution {dist!r}")
    return out if out.ndim else float(out)


def density_variance(dist: DistributionSpec) -> float:
    if isinstance(dist, Normal):
        return dist.sigma**2
    if isinstance(dist, Uniform):
        return dist.halfwidth**2 / 3
    # Simpson per segment is exact for (linear density) * (polynomial of degree <= 2)
    x, p = dist.nodes, dist.densities
    xm, pm, dx = 0.5 * (x[:-1] + x[1:]), 0.5 * (p[:-1] + p[1:]), np.diff(x)

    def moment(k):
        return float(np.sum(dx / 6 * (x[:-1] ** k * p[:-1] + 4 * xm**k * pm + x[1:] ** k * p[1:])))

    mean = moment(1) / moment(0)
    return moment(2) / moment(0) - mean**2


def _sample_tabulated(dist: Tabulated, u: np.ndarray) -> np.ndarray:
    # exact inverse CDF of a piecewise-linear density
    x, p = dist.nodes, dist.densities
    dx = np.diff(x)
    mass = 0.5 * (p[:-1] + p[1:]) * dx
    cdf = np.concatenate([[0.0], np.cumsum(mass)])
    u = u * cdf[-1]
    k = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, len(dx) - 1)
    r = u - cdf[k]
    p0 = p[k]
    slope = (p[k + 1] - p0) / dx[k]
    # solve p0*s + slope*s^2/2 = r for s in [0, dx]
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = np.sqrt(np.maximum(p0**2 + 2 * slope * r, 0.0))
        s = np.where(np.abs(slope) > 1e-300, 2 * r / (p0 + disc), r / p0)
    s = np.where(np.isfinite(s), s, 0.0)
    return x[k] + np.clip(s, 0.0, dx[k])


def sample_weights(dist: DistributionSpec, m: int, seed: int, stream: int = STREAM_W) -> np.ndarray:
    """Draw ``m`` i.i.d. frequencies from ``dist``; reproducible in ``(seed, stream)``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = make_rng(seed, stream)
    if isinstance(dist, Normal):
        return rng.normal(0.0, dist.sigma, m)
    if isinstance(dist, Uniform):
        return rng.uniform(-dist.halfwidth, dist.halfwidth, m)
    if isinstance(dist, Tabulated):
        return _sample_tabulated(dist, rng.random(m))
    raise TypeError(f"unknown distribution {dist!r}")


# ------------------------------------------------------------------ targets


@dataclass(frozen=True)
class RoundedSine:
    """``round(sin(freq_factor * pi * x))`` with halves rounded away from zero."""

    freq_factor: float = 4.2

    def describe(self):
        return f"rounded-sine {self.freq_factor!r}"


@dataclass(frozen=True)
class Custom:
    name: str

    def describe(self):
        return f"custom {self.name}"


TargetSpec = RoundedSine | Custom

TARGETS: dict[str, Callable[[np.ndarray], np.ndarray]] = {}


def register_target(name: str, fn: Callable[[np.ndarray], np.ndarray]) -> None:
    TARGETS[name] = fn


def round_half_away(v):
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


def target_eval(target: TargetSpec, x):
    x = np.asarray(x, dtype=float)
    if isinstance(target, RoundedSine):
        out = round_half_away(np.sin(target.freq_factor * np.pi * x))
    elif isinstance(target, Custom):
        try:
            fn = TARGETS[target.name]
        except KeyError:
            raise KeyError(f"no target registered under {target.name!r}") from None
        out = np.asarray(fn(x), dtype=float)
    else:
        raise TypeError(f"unknown target {target!r}")
    return out if out.ndim else float(out)


# -------------------------------------------------------------------- grids


@dataclass(frozen=True)
class SampleGrid:
    """``n`` equispaced points on [a, b), endpoint b excluded."""

    n: int = 240
    a: float = -1.0
    b: float = 1.0

    def __post_init__(self):
        if self.n < 1 or not self.b > self.a:
            raise ValueError(f"invalid sample grid n={self.n}, [{self.a}, {self.b})")

    @property
    def length(self):
        return self.b - self.a

    @property
    def spacing(self):
        return self.length / self.n

    @property
    def points(self):
        return self.a + np.arange(self.n) * self.spacing


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Symmetric frequency grid ``k / L`` for ``|k| <= n // 2``.

    For even ``n`` both ends sit on the Nyquist frequency, which is the same
    DFT bin seen from either side; they carry half weight in quadratures so
    that sums over the grid match sums over the ``n`` distinct bins.
    """

    freqs: np.ndarray
    spacing: float
    weights: np.ndarray

    @classmethod
    def for_samples(cls, grid: SampleGrid) -> "FrequencyGrid":
        half = grid.n // 2
        k = np.arange(-half, half + 1)
        weights = np.ones(k.size)
        if grid.n % 2 == 0:
            weights[0] = weights[-1] = 0.5
        return cls(k / grid.length, 1.0 / grid.length, weights)

    @property
    def nyquist(self):
        return float(self.freqs[-1])

    def matches(self, other: "FrequencyGrid") -> bool:
        return self.freqs.shape == other.freqs.shape and np.array_equal(self.freqs, other.freqs)


@dataclass(eq=False)
class SpectralSnapshot:
    grid: FrequencyGrid
    values: np.ndarray
    time: float = 0.0

    @property
    def freqs(self):
        return self.grid.freqs


@dataclass(eq=False)
class SpectralTrace:
    """Complex spectra ``values[j, k]`` at ``times[j]`` and ``grid.freqs[k]``."""

    grid: FrequencyGrid
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.times.size, self.grid.freqs.size):
            raise ValueError(
                f"trace values shape {self.values.shape} does not match "
                f"{self.times.size} times x {self.grid.freqs.size} frequencies"
            )

    @property
    def freqs(self):
        return self.grid.freqs

    def __len__(self):
        return self.times.size

    def snapshot(self, j: int) -> SpectralSnapshot:
        return SpectralSnapshot(self.grid, self.values[j].copy(), float(self.times[j]))

    def snapshots(self):
        return [self.snapshot(j) for j in range(len(self))]

    @classmethod
    def from_snapshots(cls, snaps) -> "SpectralTrace":
        snaps = list(snaps)
        if not snaps:
            raise ValueError("empty snapshot list")
        grid = snaps[0].grid
        for s in snaps[1:]:
            if not grid.matches(s.grid):
                raise ValueError("snapshots live on different frequency grids")
        return cls(grid, [s.time for s in snaps], np.stack([s.values for s in snaps]))


# ---------------------------------------------------------------------- DFT


def dft_forward(signal, grid: SampleGrid, time: float = 0.0) -> SpectralSnapshot:
    """Riemann-sum approximation of the continuous Fourier transform.

    ``values[k] = dx * sum_j h(x_j) exp(-2 pi i x_j xi_k)`` evaluated exactly on
    the symmetric grid. Real input yields exactly Hermitian output.
    """
    h = np.asarray(signal)
    if h.shape != (grid.n,):
        raise ValueError(f"signal length {h.shape} does not match grid n={grid.n}")
    fgrid = FrequencyGrid.for_samples(grid)
    half = grid.n // 2
    if np.isrealobj(h):
        pos = np.fft.rfft(h)[: half + 1]
        raw = np.concatenate([np.conj(pos[:0:-1]), pos])
    else:
        full = np.fft.fft(h)
        raw = full[np.arange(-half, half + 1) % grid.n]
    # conj() of the positive-side phase keeps the Hermitian pairing exact
    phase_pos = np.exp(-2j * np.pi * grid.a * fgrid.freqs[half:])
    phase = np.concatenate([np.conj(phase_pos[:0:-1]), phase_pos])
    return SpectralSnapshot(fgrid, grid.spacing * phase * raw, time)


def dft_inverse(snap: SpectralSnapshot, grid: SampleGrid, real: bool = True) -> np.ndarray:
    """Inverse of :func:`dft_forward` on the same sample grid."""
    fgrid = FrequencyGrid.for_samples(grid)
    if not fgrid.matches(snap.grid):
        raise ValueError("snapshot grid does not belong to this sample grid")
    half = grid.n // 2
    ks = np.arange(-half, half + 1)
    vals = snap.values * np.exp(2j * np.pi * grid.a * fgrid.freqs) / grid.spacing
    raw = np.zeros(grid.n, dtype=complex)
    # for even n the last entry duplicates the first bin
    raw[ks[: grid.n] % grid.n] = vals[: grid.n]
    h = np.fft.ifft(raw)
    return h.real if real else h


def parseval_sums(signal, snap: SpectralSnapshot, grid: SampleGrid):
    """Return ``(sum |h|^2 dx, sum w |H|^2 dxi)``."""
    h = np.asarray(signal)
    lhs = float(np.sum(np.abs(h) ** 2) * grid.spacing)
    rhs = float(np.sum(snap.grid.weights * np.abs(snap.values) ** 2) * snap.grid.spacing)
    return lhs, rhs


def hermitian_defect(values) -> float:
    """max |v(-xi) - conj v(xi)| / max |v| for values on a symmetric grid."""
    v = np.asarray(values)
    scale = np.max(np.abs(v))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(v[..., ::-1] - np.conj(v))) / scale)
