"""Periodic LBGK solver used to check the linear analysis empirically.

Populations are stored structure-of-arrays: ``f[i]`` is a contiguous plane
of shape ``extents`` for velocity index ``i``.  One time unit is
collide-then-stream:

    f*  = f + 2 beta (f_eq(rho, u) - f)          at every node
    f_i(x + c_i) = f*_i(x)                       periodic shift of plane i

Instability is not an exception: ``step`` returns a status that records
the first step at which a population went non-finite or a node left the
velocity box |u_a| <= 1, and the grid is left untouched in that case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import EquilibriumModel
from .lattice import Lattice, build_lattice

GROWTH_SKIP_FRACTION = 0.25
MIN_SERIES_LENGTH = 32


@dataclass
class SimulationGrid:
    lattice: Lattice
    f: np.ndarray
    step_count: int = 0

    def __post_init__(self):
        self.f = np.ascontiguousarray(self.f, dtype=float)
        if self.f.ndim != self.lattice.dim + 1 or self.f.shape[0] != self.lattice.q:
            raise ValueError(f"populations must have shape (Q, extents...), got {self.f.shape}")
        if self.step_count < 0:
            raise ValueError("step counter must be non-negative")

    @property
    def dim(self) -> int:
        return self.lattice.dim

    @property
    def extents(self) -> tuple[int, ...]:
        return self.f.shape[1:]

    def density(self) -> np.ndarray:
        return self.f.sum(axis=0)

    def momentum(self) -> np.ndarray:
        """Momentum density field, shape (D, extents...)."""
        c = self.lattice.velocities.astype(float)
        return np.tensordot(c.T, self.f, axes=1)

    def velocity(self) -> np.ndarray:
        return self.momentum() / self.density()

    def total_mass(self) -> float:
        return float(self.f.sum())

    def total_momentum(self) -> np.ndarray:
        return self.momentum().reshape(self.dim, -1).sum(axis=1)

    def copy(self) -> "SimulationGrid":
        return SimulationGrid(self.lattice, self.f.copy(), self.step_count)


@dataclass(frozen=True)
class StepStatus:
    ok: bool
    step: int
    reason: str = ""


def _check_beta(beta):
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")


def collide(grid: SimulationGrid, beta: float, model: EquilibriumModel) -> StepStatus:
    """Relax every node towards equilibrium in place, unless the state is invalid."""
    _check_beta(beta)
    f = grid.f
    if not np.all(np.isfinite(f)):
        return StepStatus(False, grid.step_count, "non-finite population")
    rho = grid.density()
    if np.any(rho <= 0.0):
        return StepStatus(False, grid.step_count, "non-positive density")
    u = grid.momentum() / rho
    if np.any(np.abs(u) > 1.0):
        return StepStatus(False, grid.step_count, "velocity outside |u| <= 1")
    feq = model.populations(grid.lattice, rho, u)
    f += 2.0 * beta * (feq - f)
    return StepStatus(True, grid.step_count)


def stream(grid: SimulationGrid) -> None:
    """Periodic shift of each population plane along its link."""
    axes = tuple(range(grid.dim))
    for i, c in enumerate(grid.lattice.velocities):
        if np.any(c):
            grid.f[i] = np.roll(grid.f[i], tuple(int(x) for x in c), axis=axes)


def step(grid: SimulationGrid, beta: float, model: EquilibriumModel) -> StepStatus:
    """Advance ``grid`` one time unit in place (collide, then stream)."""
    status = collide(grid, beta, model)
    if not status.ok:
        return status
    stream(grid)
    grid.step_count += 1
    if not np.all(np.isfinite(grid.f)):
        return StepStatus(False, grid.step_count, "non-finite population")
    return StepStatus(True, grid.step_count)


@dataclass
class RunResult:
    grid: SimulationGrid
    status: StepStatus
    samples: list = field(default_factory=list)


def run(grid: SimulationGrid, beta: float, model: EquilibriumModel, steps: int, observe=None) -> RunResult:
    """Step up to ``steps`` times; ``observe(grid)`` is sampled before the first and after every step."""
    samples = [] if observe is None else [observe(grid)]
    status = StepStatus(True, grid.step_count)
    for _ in range(steps):
        status = step(grid, beta, model)
        if not status.ok:
            break
        if observe is not None:
            samples.append(observe(grid))
    return RunResult(grid, status, samples)


# -- initial conditions -------------------------------------------------------


def _extents(n) -> tuple[int, ...]:
    ext = (int(n),) if np.isscalar(n) else tuple(int(x) for x in n)
    if not ext or any(x < 1 for x in ext):
        raise ValueError(f"grid extents must be positive integers, got {n}")
    return ext


def _check_velocity(u0, dim):
    u = np.atleast_1d(np.asarray(u0, dtype=float))
    if u.shape != (dim,):
        raise ValueError(f"expected {dim} velocity components, got {u0}")
    if np.any(~np.isfinite(u)) or np.any(np.abs(u) > 1.0):
        raise ValueError(f"velocity {u0} outside |u_a| <= 1")
    return u


def init_uniform_perturbed(
    model: EquilibriumModel, extents, rho0: float = 1.0, u0=0.0, eps: float = 1e-6, mode: int = 1
) -> SimulationGrid:
    """Equilibrium at density rho0 + eps cos(2 pi m x / N_x) and uniform velocity u0.

    ``extents`` is N (D1Q3) or (Nx, Ny) (D2Q9); the cosine runs along x.
    """
    ext = _extents(extents)
    lat = build_lattice(len(ext))
    u = _check_velocity(u0, lat.dim)
    nx = ext[0]
    if not 1 <= mode < nx:
        raise ValueError(f"mode index must satisfy 1 <= m < {nx}, got {mode}")
    if rho0 <= 0 or not 0 <= eps < rho0:
        raise ValueError(f"need rho0 > 0 and 0 <= eps < rho0, got rho0={rho0}, eps={eps}")
    x = np.arange(nx)
    profile = rho0 + eps * np.cos(2.0 * math.pi * mode * x / nx)
    rho = np.broadcast_to(profile.reshape((nx,) + (1,) * (len(ext) - 1)), ext).copy()
    vel = np.broadcast_to(u.reshape((lat.dim,) + (1,) * len(ext)), (lat.dim,) + ext)
    return SimulationGrid(lat, model.populations(lat, rho, vel))


def init_shear_wave(
    model: EquilibriumModel, nx: int, ny: int, u0: float = 0.0, eps: float = 1e-3, mode: int = 1, rho0: float = 1.0
) -> SimulationGrid:
    """D2Q9 equilibrium with u = (u0, eps sin(2 pi m x / Nx)) and uniform density."""
    ext = _extents((nx, ny))
    if not 0 <= eps <= 0.01:
        raise ValueError(f"shear amplitude must lie in [0, 0.01], got {eps}")
    if not 1 <= mode < nx:
        raise ValueError(f"mode index must satisfy 1 <= m < {nx}, got {mode}")
    if rho0 <= 0:
        raise ValueError("rho0 must be positive")
    _check_velocity((u0, eps), 2)
    lat = build_lattice(2)
    x = np.arange(nx)[:, None]
    uy = np.broadcast_to(eps * np.sin(2.0 * math.pi * mode * x / nx), ext)
    ux = np.full(ext, float(u0))
    return SimulationGrid(lat, model.populations(lat, np.full(ext, float(rho0)), np.stack([ux, uy])))


# -- observables --------------------------------------------------------------


def fourier_populations(grid: SimulationGrid, mode: int) -> np.ndarray:
    """F_i = sum_x f_i(x) exp(-2 pi i m x / Nx), summed over any y extent.

    With this sign convention one step maps F to L(k) F, k = (2 pi m / Nx, 0).
    """
    nx = grid.extents[0]
    phase = np.exp(-2j * math.pi * mode * np.arange(nx) / nx)
    planes = grid.f.reshape(grid.lattice.q, nx, -1).sum(axis=2)
    return planes @ phase


def density_mode_amplitude(grid: SimulationGrid, mode: int) -> float:
    return float(abs(fourier_populations(grid, mode).sum()))


def shear_mode_amplitude(grid: SimulationGrid, mode: int) -> float:
    """|Fourier coefficient| of the y-momentum at mode m along x."""
    cy = grid.lattice.velocities[:, 1].astype(float)
    return float(abs(cy @ fourier_populations(grid, mode)))


def projected_mode_amplitude(grid: SimulationGrid, mode: int, left_vector) -> float:
    """|w^H F| for a left eigenvector w of L(k); isolates one linear mode."""
    return float(abs(np.vdot(left_vector, fourier_populations(grid, mode))))


def measure_growth_rate(series, skip_fraction: float = GROWTH_SKIP_FRACTION) -> float:
    """Least-squares slope of ln(amplitude) against step, after dropping a transient.

    The first ``skip_fraction`` of the series (25 % by default) is ignored.
    """
    a = np.asarray(series, dtype=float)
    if a.ndim != 1 or a.size < MIN_SERIES_LENGTH:
        raise ValueError(f"need at least {MIN_SERIES_LENGTH} samples, got {a.size}")
    start = int(math.floor(skip_fraction * a.size))
    tail = a[start:]
    if not np.all(np.isfinite(tail)) or np.any(tail <= 0.0):
        raise ValueError("amplitudes must be finite and positive after the transient skip")
    t = np.arange(start, a.size, dtype=float)
    slope, _ = np.polyfit(t, np.log(tail), 1)
    return float(slope)


@dataclass(frozen=True)
class SeededGrowth:
    sigma: float
    predicted: float
    steps: int
    status: StepStatus

    @property
    def relative_error(self) -> float:
        return abs(self.sigma / self.predicted - 1.0)


def seeded_growth(
    model: EquilibriumModel,
    extents,
    u0,
    beta: float,
    mode: int,
    eps: float = 1e-6,
    max_steps: int = 2000,
    growth_cap: float = 1e4,
) -> SeededGrowth:
    """Measured per-step log growth of a seeded density mode against ln|lambda_max|.

    The amplitude is the projection of the population Fourier coefficient
    on the left eigenvector of the least stable eigenvalue of L(k), which
    removes the other modes sharing that wave number.  Unstable runs stop
    once the amplitude has grown by ``growth_cap`` to stay linear.
    """
    from .stability import least_stable_mode

    grid = init_uniform_perturbed(model, extents, 1.0, u0, eps, mode)
    k = np.zeros(grid.dim)
    k[0] = 2.0 * math.pi * mode / grid.extents[0]
    target = least_stable_mode(grid.lattice, model, np.atleast_1d(u0), beta, k)
    series = [projected_mode_amplitude(grid, mode, target.left_vector)]
    status = StepStatus(True, 0)
    for _ in range(max_steps):
        status = step(grid, beta, model)
        if not status.ok:
            break
        series.append(projected_mode_amplitude(grid, mode, target.left_vector))
        if series[-1] > growth_cap * series[0]:
            break
    return SeededGrowth(measure_growth_rate(series), math.log(abs(target.eigenvalue)), len(series) - 1, status)
