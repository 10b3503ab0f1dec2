"""P1 finite elements in frequency for the damped heat equation.

Homogeneous Neumann conditions are natural, so nothing is assembled at the
boundary. Backward Euler in time::

    (L + dt sigma_a^2 M + dt N) c_{k+1} = L c_k

with ``L`` the mass matrix, ``M`` the density-weighted stiffness matrix and
``N`` the density-weighted mass matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from .pde import CoefficientField
from .spectral import FrequencyGrid, SpectralSnapshot, SpectralTrace

GAUSS_POINTS = 4
_GL_T, _GL_W = np.polynomial.legendre.leggauss(GAUSS_POINTS)


@dataclass(frozen=True, eq=False)
class FemMesh:
    a: float
    b: float
    h: float
    nodes: np.ndarray

    @property
    def size(self):
        return self.nodes.size

    def frequency_grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.nodes, self.h, np.ones(self.size))


def build_mesh(a: float = -60.0, b: float = 60.0, h: float = 0.5) -> FemMesh:
    if not (b > a and h > 0):
        raise ValueError(f"invalid mesh parameters a={a}, b={b}, h={h}")
    ratio = (b - a) / h
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"(b - a) / h = {ratio} is not an integer")
    nodes = a + h * np.arange(n + 1)
    nodes[-1] = b
    return FemMesh(float(a), float(b), float(h), nodes)


@dataclass(frozen=True, eq=False)
class Tridiagonal:
    """Symmetric tridiagonal matrix: ``diag`` (n,) and ``off`` (n-1,)."""

    diag: np.ndarray
    off: np.ndarray

    def matvec(self, v):
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out

    def toarray(self):
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def __add__(self, other):
        return Tridiagonal(self.diag + other.diag, self.off + other.off)

    def scale(self, s):
        return Tridiagonal(s * self.diag, s * self.off)


@dataclass(frozen=True, eq=False)
class FemSystem:
    mesh: FemMesh
    coeffs: CoefficientField
    L: Tridiagonal
    M: Tridiagonal
    N: Tridiagonal
    dt: float
    factor: np.ndarray          # upper banded Cholesky factor of A

    @property
    def A(self) -> Tridiagonal:
        return self.L + self.M.scale(self.dt * self.coeffs.sigma_a**2) + self.N.scale(self.dt)


@dataclass(frozen=True, eq=False)
class FemState:
    c_re: np.ndarray
    c_im: np.ndarray
    time: float = 0.0

    @property
    def values(self):
        return self.c_re + 1j * self.c_im


def _subintervals(nodes, breakpoints):
    """Element index and [lo, hi] pieces, elements split at interior breakpoints."""
    elem = np.arange(nodes.size - 1)
    lo = nodes[:-1].copy()
    hi = nodes[1:].copy()
    bps = np.asarray(breakpoints, dtype=float)
    bps = bps[(bps > nodes[0]) & (bps < nodes[-1])]
    if bps.size == 0:
        return elem, lo, hi
    pieces_e, pieces_lo, pieces_hi = [], [], []
    inside = {}
    k = np.searchsorted(nodes, bps, side="right") - 1
    for e, bp in zip(k, bps):
        if nodes[e] < bp < nodes[e + 1]:
            inside.setdefault(int(e), []).append(bp)
    split = np.zeros(elem.size, dtype=bool)
    for e, pts in inside.items():
        split[e] = True
        edges = np.concatenate([[nodes[e]], np.sort(pts), [nodes[e + 1]]])
        pieces_e.extend([e] * (edges.size - 1))
        pieces_lo.extend(edges[:-1])
        pieces_hi.extend(edges[1:])
    keep = ~split
    return (
        np.concatenate([elem[keep], np.asarray(pieces_e, dtype=int)]),
        np.concatenate([lo[keep], pieces_lo]),
        np.concatenate([hi[keep], pieces_hi]),
    )


def _weighted_matrices(mesh: FemMesh, weight_mass, weight_stiff, breakpoints):
    nodes = mesh.nodes
    elem, lo, hi = _subintervals(nodes, breakpoints)
    x0 = nodes[elem][:, None]
    x1 = nodes[elem + 1][:, None]
    he = x1 - x0
    mid = 0.5 * (lo + hi)[:, None]
    half = 0.5 * (hi - lo)[:, None]
    q = mid + half * _GL_T[None, :]
    qw = half * _GL_W[None, :]
    phi_l = (x1 - q) / he
    phi_r = (q - x0) / he
    rho_m = weight_mass(q) * qw
    rho_s = weight_stiff(q) * qw
    n_ll = np.sum(rho_m * phi_l * phi_l, axis=1)
    n_rr = np.sum(rho_m * phi_r * phi_r, axis=1)
    n_lr = np.sum(rho_m * phi_l * phi_r, axis=1)
    s = np.sum(rho_s, axis=1) / he[:, 0] ** 2

    n_el = nodes.size - 1
    nd = np.zeros(nodes.size)
    no = np.zeros(n_el)
    md = np.zeros(nodes.size)
    mo = np.zeros(n_el)
    np.add.at(nd, elem, n_ll)
    np.add.at(nd, elem + 1, n_rr)
    np.add.at(no, elem, n_lr)
    np.add.at(md, elem, s)
    np.add.at(md, elem + 1, s)
    np.add.at(mo, elem, -s)
    return Tridiagonal(md, mo), Tridiagonal(nd, no)


def mass_matrix(mesh: FemMesh) -> Tridiagonal:
    h = np.diff(mesh.nodes)
    diag = np.zeros(mesh.size)
    diag[:-1] += h / 3
    diag[1:] += h / 3
    return Tridiagonal(diag, h / 6)


def assemble(mesh: FemMesh, coeffs: CoefficientField, dt: float) -> FemSystem:
    """Assemble L (exact), M and N (Gauss-Legendre) and factor the step operator."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    L = mass_matrix(mesh)
    M, N = _weighted_matrices(mesh, coeffs.damping, coeffs.stiffness_weight, coeffs.breakpoints)
    A = L + M.scale(dt * coeffs.sigma_a**2) + N.scale(dt)
    banded = np.zeros((2, mesh.size))
    banded[0, 1:] = A.off
    banded[1] = A.diag
    try:
        factor = cholesky_banded(banded, lower=False)
    except LinAlgError as exc:
        raise LinAlgError(f"implicit step operator is not positive definite: {exc}") from exc
    return FemSystem(mesh, coeffs, L, M, N, float(dt), factor)


def project_initial(u0: SpectralSnapshot, mesh: FemMesh) -> FemState:
    """Nodal interpolation of ``u0`` onto the mesh."""
    f = u0.grid.freqs
    tol = 1e-9 * max(1.0, np.max(np.abs(f)))
    if mesh.nodes[0] < f[0] - tol or mesh.nodes[-1] > f[-1] + tol:
        raise ValueError(
            f"mesh [{mesh.a}, {mesh.b}] extends beyond the spectrum range [{f[0]}, {f[-1]}]"
        )
    if f.size == mesh.size and np.allclose(f, mesh.nodes, rtol=0, atol=tol):
        vals = u0.values
        return FemState(vals.real.copy(), vals.imag.copy(), u0.time)
    re = np.interp(mesh.nodes, f, u0.values.real)
    im = np.interp(mesh.nodes, f, u0.values.imag)
    return FemState(re, im, u0.time)


def step(system: FemSystem, state: FemState, dt: float | None = None) -> FemState:
    if dt is not None and not np.isclose(dt, system.dt, rtol=1e-12, atol=0):
        raise ValueError(f"dt={dt} differs from the factored dt={system.dt}")
    # A c1 = L c0 solved for the decrement: A (c0 - c1) = (A - L) c0. Rounding
    # then scales with the change, and nodes where rho vanishes stay put exactly.
    damp = system.M.scale(system.dt * system.coeffs.sigma_a**2) + system.N.scale(system.dt)
    rhs = np.column_stack([damp.matvec(state.c_re), damp.matvec(state.c_im)])
    delta = cho_solve_banded((system.factor, False), rhs, check_finite=False)
    if not np.all(np.isfinite(delta)):
        raise FloatingPointError(f"non-finite FEM state at t={state.time + system.dt}")
    return FemState(state.c_re - delta[:, 0], state.c_im - delta[:, 1], state.time + system.dt)


def energy(system: FemSystem, state: FemState) -> float:
    """Discrete L-norm squared, ``c^H L c``."""
    L = system.L
    return float(state.c_re @ L.matvec(state.c_re) + state.c_im @ L.matvec(state.c_im))


def evolve(system: FemSystem, state0: FemState, n_steps: int, snapshot_every: int = 1,
           energies: list | None = None) -> SpectralTrace:
    """Run ``n_steps`` implicit steps; snapshot the initial state, every
    ``snapshot_every`` steps, and the final state."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")
    grid = system.mesh.frequency_grid()
    state = state0
    times, values = [state.time], [state.values]
    if energies is not None:
        energies.append(energy(system, state))
    for k in range(1, n_steps + 1):
        state = step(system, state)
        state = FemState(state.c_re, state.c_im, state0.time + k * system.dt)
        if energies is not None:
            energies.append(energy(system, state))
        if k % snapshot_every == 0 or k == n_steps:
            times.append(state.time)
            values.append(state.values)
    return SpectralTrace(grid, times, np.stack(values))
