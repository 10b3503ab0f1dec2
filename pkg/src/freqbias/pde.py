"""Coefficients of the damped heat equation for the residual spectrum.

    d/dt u(xi, t) = div(D(xi) grad u) - Lambda(xi) u

For activations ``cos(c x), sin(c x)`` in ``d`` input dimensions

    Lambda(xi) = (2 pi / c)^d * rho_sym(2 pi xi / c)
    D(xi)      = sigma_a^2 * c^2 / (4 pi^2) * Lambda(xi)

where ``rho_sym`` is the even part of the frequency density. With the
default ``c = 2 pi`` this is ``D = sigma_a^2 rho``, ``Lambda = rho``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spectral import DistributionSpec, SpectralSnapshot, SpectralTrace, pdf_eval

TWO_PI = 2 * np.pi


def symmetrize_density(dist: DistributionSpec) -> Callable:
    """``xi -> (rho(xi) + rho(-xi)) / 2``."""

    def rho_sym(xi):
        xi = np.asarray(xi, dtype=float)
        return 0.5 * (pdf_eval(dist, xi) + pdf_eval(dist, -xi))

    return rho_sym


@dataclass(frozen=True, eq=False)
class CoefficientField:
    density: Callable                  # even density in the frequency variable of the weights
    sigma_a: float
    c: float = TWO_PI
    d: int = 1
    density_breakpoints: tuple = ()    # jumps / kinks of ``density``

    @property
    def _stretch(self):
        return TWO_PI / self.c

    def damping(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self._stretch**self.d * self.density(self._stretch * xi)

    def stiffness_weight(self, xi):
        """Diffusion coefficient without the ``sigma_a^2`` factor."""
        return self.c**2 / (4 * np.pi**2) * self.damping(xi)

    def diffusion(self, xi):
        return self.sigma_a**2 * self.stiffness_weight(xi)

    @property
    def breakpoints(self):
        """Breakpoints in the PDE variable ``xi`` (sorted, symmetric)."""
        pts = np.asarray(self.density_breakpoints, dtype=float) / self._stretch
        return tuple(np.unique(np.concatenate([pts, -pts])))

    @classmethod
    def from_function(cls, density, sigma_a, breakpoints=()) -> "CoefficientField":
        return cls(density, float(sigma_a), density_breakpoints=tuple(breakpoints))


def build_coefficients(dist: DistributionSpec, sigma_a: float, c: float = TWO_PI, d: int = 1) -> CoefficientField:
    if sigma_a < 0 or c <= 0 or d < 1:
        raise ValueError(f"need sigma_a >= 0, c > 0, d >= 1 (got {sigma_a}, {c}, {d})")
    return CoefficientField(symmetrize_density(dist), float(sigma_a), float(c), int(d), tuple(dist.breakpoints))


def frozen_solution(u0: SpectralSnapshot, dist: DistributionSpec, t: float) -> SpectralSnapshot:
    """Closed-form solution without diffusion: ``u0(xi) * exp(-rho(xi) t)``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    rate = symmetrize_density(dist)(u0.grid.freqs)
    return SpectralSnapshot(u0.grid, u0.values * np.exp(-rate * t), u0.time + t)


def frozen_trace(u0: SpectralSnapshot, dist: DistributionSpec, times) -> SpectralTrace:
    times = np.asarray(times, dtype=float)
    rate = symmetrize_density(dist)(u0.grid.freqs)
    values = u0.values[None, :] * np.exp(-np.outer(times, rate))
    return SpectralTrace(u0.grid, u0.time + times, values)
