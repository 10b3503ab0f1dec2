"""Fourier-features networks trained by full-batch gradient descent.

Two-layer model::

    f(x) = 1/sqrt(2m) * sum_k a_k cos(2 pi w_k x) + b_k sin(2 pi w_k x)

Deeper variants feed the ``2m`` normalised features ``[cos, sin] / sqrt(2m)``
through bias-free ReLU layers in NTK parameterisation (standard normal
weights, ``1/sqrt(fan_in)`` in the forward pass) and a linear head.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    STREAM_A,
    STREAM_B,
    STREAM_HIDDEN,
    DistributionSpec,
    Normal,
    RoundedSine,
    SampleGrid,
    SpectralTrace,
    TargetSpec,
    dft_forward,
    make_rng,
    sample_weights,
    target_eval,
)

log = logging.getLogger(__name__)

TWO_PI = 2 * np.pi
DEFAULT_SIGMA_A = 2 / np.sqrt(4000)
DEFAULT_STEP = 1e-5 / 240


@dataclass(eq=False)
class NetworkParams:
    a: np.ndarray
    b: np.ndarray
    w: np.ndarray
    frozen_w: bool = False

    @property
    def m(self):
        return self.w.size

    def arrays(self):
        return {"a": self.a, "b": self.b, "w": self.w}


@dataclass(eq=False)
class MultilayerParams:
    w: np.ndarray                       # (m,) first-layer frequencies
    hidden: list                        # [(H1, 2m), (H2, H1), ...]
    v: np.ndarray                       # (H_last,) linear head
    frozen_w: bool = False

    @property
    def m(self):
        return self.w.size

    @property
    def widths(self):
        return [h.shape[0] for h in self.hidden]

    @property
    def depth(self):
        return len(self.hidden) + 2

    def arrays(self):
        out = {"w": self.w, "v": self.v}
        for i, h in enumerate(self.hidden):
            out[f"hidden{i}"] = h
        return out


@dataclass
class TrainConfig:
    m: int = 2000
    dist_w: DistributionSpec = field(default_factory=lambda: Normal(300 / (2 * np.pi)))
    sigma_a: float = DEFAULT_SIGMA_A
    step_size: float = DEFAULT_STEP
    iterations: int = 10_000
    snapshot_every: int = 100
    seed: int = 0
    grid: SampleGrid = field(default_factory=SampleGrid)
    target: TargetSpec = field(default_factory=RoundedSine)
    frozen_w: bool = False
    depth: int = 2
    hidden_width: int = 4000
    time_scale: float = 1.0
    w_seed: int | None = None           # None: frequencies follow ``seed``

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.snapshot_every < 1 or self.iterations % self.snapshot_every:
            raise ValueError(
                f"snapshot_every={self.snapshot_every} must divide iterations={self.iterations}"
            )
        if not self.sigma_a > 0:
            raise ValueError("sigma_a must be positive")
        if self.m < 1 or self.depth < 2 or self.hidden_width < 1:
            raise ValueError("m, hidden_width must be >= 1 and depth >= 2")
        if self.step_size < 0:
            raise ValueError("step_size must be non-negative")

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)


@dataclass(eq=False)
class ResidualTrace(SpectralTrace):
    """Residual spectra over training plus the bookkeeping of the run."""

    iterations: np.ndarray = None
    risks: np.ndarray = None            # risk at every iteration, 0..n

    @property
    def final_risk(self):
        return float(self.risks[-1])

    @property
    def initial_risk(self):
        return float(self.risks[0])


def init_network(cfg: TrainConfig):
    w_seed = cfg.seed if cfg.w_seed is None else cfg.w_seed
    w = sample_weights(cfg.dist_w, cfg.m, w_seed)
    if cfg.depth == 2:
        a = make_rng(cfg.seed, STREAM_A).normal(0.0, cfg.sigma_a, cfg.m)
        b = make_rng(cfg.seed, STREAM_B).normal(0.0, cfg.sigma_a, cfg.m)
        return NetworkParams(a, b, w, cfg.frozen_w)
    rng = make_rng(cfg.seed, STREAM_HIDDEN)
    hidden = []
    fan_in = 2 * cfg.m
    for _ in range(cfg.depth - 2):
        hidden.append(rng.standard_normal((cfg.hidden_width, fan_in)))
        fan_in = cfg.hidden_width
    v = make_rng(cfg.seed, STREAM_A).normal(0.0, cfg.sigma_a, fan_in)
    return MultilayerParams(w, hidden, v, cfg.frozen_w)


def _phases(w, x):
    return TWO_PI * np.outer(x, w)


def _features(w, x):
    p = _phases(w, x)
    return np.cos(p), np.sin(p)


def forward(params, x):
    """Network output at ``x`` (scalar or array)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    c, s = _features(params.w, xs)
    if isinstance(params, NetworkParams):
        out = (c @ params.a + s @ params.b) / np.sqrt(2 * params.m)
    else:
        out = _ml_forward(params, c, s)[0]
    return out if np.ndim(x) else float(out[0])


def _ml_forward(params: MultilayerParams, c, s):
    h = np.hstack([c, s]) / np.sqrt(2 * params.m)
    acts, pres = [h], []
    for W in params.hidden:
        pre = h @ W.T / np.sqrt(W.shape[1])
        h = np.maximum(pre, 0.0)
        pres.append(pre)
        acts.append(h)
    out = h @ params.v / np.sqrt(params.v.size)
    return out, acts, pres


def _ff_loss_grad(params: NetworkParams, x, y, feats=None):
    c, s = feats if feats is not None else _features(params.w, x)
    n = x.size
    scale = 1.0 / np.sqrt(2 * params.m)
    r = (c @ params.a + s @ params.b) * scale - y
    risk = 0.5 * float(r @ r) / n
    g = r * (scale / n)
    ga = c.T @ g
    gb = s.T @ g
    if params.frozen_w:
        gw = np.zeros_like(params.w)
    else:
        gx = g * (TWO_PI * x)
        gw = params.b * (c.T @ gx) - params.a * (s.T @ gx)
    return risk, NetworkParams(ga, gb, gw, params.frozen_w), r


def _ml_loss_grad(params: MultilayerParams, x, y):
    c, s = _features(params.w, x)
    out, acts, pres = _ml_forward(params, c, s)
    n = x.size
    r = out - y
    risk = 0.5 * float(r @ r) / n
    dout = r / n
    hv = np.sqrt(params.v.size)
    gv = acts[-1].T @ dout / hv
    dh = np.outer(dout, params.v) / hv
    ghidden = [None] * len(params.hidden)
    for i in range(len(params.hidden) - 1, -1, -1):
        W = params.hidden[i]
        sq = np.sqrt(W.shape[1])
        dpre = dh * (pres[i] > 0)
        ghidden[i] = dpre.T @ acts[i] / sq
        dh = dpre @ W / sq
    if params.frozen_w:
        gw = np.zeros_like(params.w)
    else:
        m = params.m
        dz = dh / np.sqrt(2 * m)
        tx = TWO_PI * x[:, None]
        gw = np.sum(tx * (dz[:, m:] * c - dz[:, :m] * s), axis=0)
    return risk, MultilayerParams(gw, ghidden, gv, params.frozen_w), r


def loss_and_grad(params, grid: SampleGrid, target: TargetSpec):
    """Empirical risk ``1/(2N) sum (f(x_i) - target(x_i))^2`` and its gradient.

    The gradient comes back as a parameter object of the same type.
    """
    x = grid.points
    y = target_eval(target, x)
    if isinstance(params, NetworkParams):
        risk, grad, _ = _ff_loss_grad(params, x, y)
    else:
        risk, grad, _ = _ml_loss_grad(params, x, y)
    return risk, grad


def _descend(params, grad, eta):
    if isinstance(params, NetworkParams):
        params.a -= eta * grad.a
        params.b -= eta * grad.b
        if not params.frozen_w:
            params.w -= eta * grad.w
    else:
        params.v -= eta * grad.v
        for W, g in zip(params.hidden, grad.hidden):
            W -= eta * g
        if not params.frozen_w:
            params.w -= eta * grad.w


def train(cfg: TrainConfig, params=None) -> ResidualTrace:
    """Full-batch gradient descent, recording the residual spectrum.

    Snapshots are taken every ``cfg.snapshot_every`` iterations (iteration 0
    included); gradient-flow time is ``iteration * step_size * time_scale``.
    """
    if params is None:
        params = init_network(cfg)
    x = cfg.grid.points
    y = target_eval(cfg.target, x)
    two_layer = isinstance(params, NetworkParams)
    feats = _features(params.w, x) if two_layer and params.frozen_w else None

    risks = np.empty(cfg.iterations + 1)
    snaps, stamps = [], []
    eta = cfg.step_size
    for it in range(cfg.iterations + 1):
        if two_layer:
            risk, grad, r = _ff_loss_grad(params, x, y, feats)
        else:
            risk, grad, r = _ml_loss_grad(params, x, y)
        if not np.isfinite(risk):
            raise FloatingPointError(f"non-finite risk at iteration {it} (seed {cfg.seed})")
        risks[it] = risk
        if it % cfg.snapshot_every == 0:
            snaps.append(dft_forward(r, cfg.grid).values)
            stamps.append(it)
        if it < cfg.iterations:
            _descend(params, grad, eta)

    stamps = np.asarray(stamps)
    fgrid = dft_forward(np.zeros(cfg.grid.n), cfg.grid).grid
    log.debug("seed %d: risk %.6g -> %.6g", cfg.seed, risks[0], risks[-1])
    return ResidualTrace(
        fgrid,
        stamps * eta * cfg.time_scale,
        np.stack(snaps),
        iterations=stamps,
        risks=risks,
    )
