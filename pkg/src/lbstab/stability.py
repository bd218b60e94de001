"""Von Neumann stability of the linearised LBGK update.

A Fourier perturbation ``f_i ~ exp(i k.x)`` of a uniform state evolves
under ``L(k) = diag(exp(-i k.c_i)) [(1 - 2 beta) I + 2 beta J]`` with
``J`` the equilibrium Jacobian: collision, then exact streaming.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from lbstab.equilibrium import EquilibriumModel, equilibrium_jacobian
from lbstab.lattice import CS, FlowState, Lattice, build_lattice
from lbstab.modes import beta_from_viscosity, viscosity_from_beta
from lbstab.spectral import (
    STABILITY_TOL,
    StabilityReport,
    eigenvalues,
    polynomial_roots,
    spectral_radii,
    spectral_radius,
)

SCHUR_TOL = 1e-12
DEFAULT_K_POINTS = 64
CRITICAL_ISOTROPIC_VELOCITY = 1.0 - 1.0 / math.sqrt(3.0)


@dataclass(frozen=True)
class LinearizedOperator:
    matrix: np.ndarray = field(repr=False)
    lattice: Lattice
    model: EquilibriumModel
    rho: float
    u: tuple[float, ...]
    beta: float
    k: tuple[float, ...]

    def report(self, tol: float = STABILITY_TOL) -> StabilityReport:
        return spectral_radius(self.matrix, tol=tol)


def _check_beta(beta: float):
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"relaxation parameter beta must lie in (0, 1], got {beta}")


def collision_matrix(lat: Lattice, model: EquilibriumModel, rho: float, u, beta: float) -> np.ndarray:
    _check_beta(beta)
    jac = equilibrium_jacobian(model, lat, FlowState(rho, u))
    return (1.0 - 2.0 * beta) * np.eye(lat.q) + 2.0 * beta * jac


def streaming_phases(lat: Lattice, ks) -> np.ndarray:
    """exp(-i k.c_i) for a stack of wave vectors, shape (K, Q)."""
    ks = np.atleast_2d(np.asarray(ks, dtype=float))
    if ks.shape[-1] != lat.dim:
        ks = ks.reshape(-1, lat.dim)
    return np.exp(-1j * ks @ lat.velocities.T.astype(float))


def operator_stack(lat: Lattice, model: EquilibriumModel, rho: float, u, beta: float, ks) -> np.ndarray:
    """L(k) for every wave vector in ``ks``; shape (K, Q, Q)."""
    coll = collision_matrix(lat, model, rho, u, beta)
    return streaming_phases(lat, ks)[:, :, None] * coll[None, :, :]


def linearized_operator(lat: Lattice, model: EquilibriumModel, rho: float, u, beta: float, k) -> LinearizedOperator:
    u = tuple(float(x) for x in np.atleast_1d(u))
    k = tuple(float(x) for x in np.atleast_1d(k))
    if len(k) != lat.dim:
        raise ValueError(f"wave vector needs {lat.dim} components, got {len(k)}")
    mat = operator_stack(lat, model, rho, u, beta, [k])[0]
    return LinearizedOperator(mat, lat, model, float(rho), u, float(beta), k)


# -- D1Q3 characteristic cubic and the Schur-Cohn test ------------------------


def char_poly_d1q3(op) -> np.ndarray:
    """Monic cubic [1, a2, a1, a0] of a 3x3 operator (or a stack of them)."""
    m = op.matrix if isinstance(op, LinearizedOperator) else np.asarray(op, dtype=complex)
    if m.shape[-2:] != (3, 3):
        raise ValueError("char_poly_d1q3 needs a D1Q3 (3x3) operator")
    tr = np.trace(m, axis1=-2, axis2=-1)
    tr2 = np.trace(m @ m, axis1=-2, axis2=-1)
    det = np.linalg.det(m)
    out = np.empty(m.shape[:-2] + (4,), dtype=complex)
    out[..., 0] = 1.0
    out[..., 1] = -tr
    out[..., 2] = 0.5 * (tr * tr - tr2)
    out[..., 3] = -det
    return out


def schur_cohn(coeffs, tol: float = SCHUR_TOL):
    """True where every root lies in the closed disk |z| <= 1 + tol.

    Coefficients are highest degree first, any leading batch shape.  The
    polynomial is rescaled to p((1 + tol) z) and the strict Schur-Cohn
    reduction q = (conj(a_n) p - a_0 p*) / z is applied until degree 0;
    each stage requires |a_0| < |a_n|.
    """
    c = np.asarray(coeffs, dtype=complex)
    n = c.shape[-1] - 1
    # c[..., j] multiplies z**(n - j)
    c = c * (1.0 + tol) ** np.arange(n, -1, -1)
    ok = np.ones(c.shape[:-1], dtype=bool)
    for _ in range(n):
        lead = c[..., 0]
        const = c[..., -1]
        ok &= np.abs(const) < np.abs(lead)
        rev = np.conj(c[..., ::-1])
        red = np.conj(lead)[..., None] * c - const[..., None] * rev
        c = red[..., :-1]
        # normalise to keep magnitudes O(1) through the recursion
        scale = np.max(np.abs(c), axis=-1, keepdims=True)
        c = c / np.where(scale > 0, scale, 1.0)
    return bool(ok) if ok.ndim == 0 else ok


def schur_cohn_cubic(coeffs, tol: float = SCHUR_TOL):
    """Closed unit-disk test for a monic cubic; accepts [1, a2, a1, a0] or [a2, a1, a0]."""
    c = np.asarray(coeffs, dtype=complex)
    if c.shape[-1] == 3:
        c = np.concatenate([np.ones(c.shape[:-1] + (1,), dtype=complex), c], axis=-1)
    if c.shape[-1] != 4:
        raise ValueError("cubic coefficients expected")
    return schur_cohn(c, tol=tol)


# -- root locus and wave-number sweeps --------------------------------------


def k_grid(points: int = DEFAULT_K_POINTS, include_zero: bool = True) -> np.ndarray:
    """Uniform grid on [0, 2 pi); cell midpoints when ``include_zero`` is False."""
    offset = 0.0 if include_zero else 0.5
    return 2 * np.pi * (np.arange(points) + offset) / points


def root_locus(model: EquilibriumModel, u: float, beta: float, ks, rho: float = 1.0):
    """[(k, roots)] of the D1Q3 characteristic cubic along ``ks``."""
    lat = build_lattice(1)
    ks = np.asarray(ks, dtype=float)
    cubic = char_poly_d1q3(operator_stack(lat, model, rho, [u], beta, ks[:, None]))
    roots = polynomial_roots(cubic)
    return [(float(k), r) for k, r in zip(ks, roots)]


def wave_vectors(ks, dim: int, angle: float = 0.0) -> np.ndarray:
    """Wave vectors of magnitude ``ks`` along ``angle`` (radians from x)."""
    ks = np.asarray(ks, dtype=float)
    if dim == 1:
        return ks[:, None]
    return np.stack([ks * math.cos(angle), ks * math.sin(angle)], axis=-1)


def max_radius(lat, model, u, beta, kvecs, rho: float = 1.0) -> np.ndarray:
    return spectral_radii(operator_stack(lat, model, rho, u, beta, kvecs))


@dataclass(frozen=True)
class LeastStableMode:
    eigenvalue: complex
    left_vector: np.ndarray
    operator: np.ndarray


def least_stable_mode(lat, model, u, beta, k, rho: float = 1.0) -> LeastStableMode:
    """Eigenvalue of largest modulus of L(k) with its left eigenvector w (w^H L = lam w^H)."""
    mat = operator_stack(lat, model, rho, np.atleast_1d(u), beta, [np.atleast_1d(k)])[0]
    lam = eigenvalues(mat)
    top = complex(lam[np.argmax(np.abs(lam))])
    # left null vector of (L - lam I): last right singular vector of its adjoint
    _, _, vh = np.linalg.svd((mat - top * np.eye(lat.q)).conj().T)
    w = vh[-1].conj()
    return LeastStableMode(top, w / np.linalg.norm(w), mat)


@dataclass
class StabilityProbe:
    """Outcome of one velocity probe over a k grid (kept for audit)."""

    u: float
    stable: bool
    worst_radius: float
    refined: int = 0


def probe_velocity(
    lat, model, speed, beta, k_points=DEFAULT_K_POINTS, velocity_angle=0.0, k_angle=0.0, tol=STABILITY_TOL
) -> StabilityProbe:
    """Stability at flow speed ``speed`` over the default k grid.

    When the verdict flips between neighbouring k points, the midpoints of
    those intervals are added (one refinement pass) so the unstable band
    edges are resolved to half a grid cell.
    """
    u = [speed] if lat.dim == 1 else [speed * math.cos(velocity_angle), speed * math.sin(velocity_angle)]
    ks = k_grid(k_points)
    radii = max_radius(lat, model, u, beta, wave_vectors(ks, lat.dim, k_angle))
    stable = radii <= 1.0 + tol
    flips = np.nonzero(stable != np.roll(stable, -1))[0]
    worst = float(radii.max())
    if flips.size:
        mids = ks[flips] + np.pi / k_points
        extra = max_radius(lat, model, u, beta, wave_vectors(mids, lat.dim, k_angle))
        worst = max(worst, float(extra.max()))
    return StabilityProbe(u=speed, stable=worst <= 1.0 + tol, worst_radius=worst, refined=int(flips.size))


@dataclass
class VelocitySearch:
    u_max: float
    bracket: tuple[float, float]
    probes: list[StabilityProbe]


def search_max_velocity(
    model: EquilibriumModel,
    nu: float,
    dim: int = 2,
    k_points: int = DEFAULT_K_POINTS,
    tol: float = 1e-3,
    velocity_angle: float = 0.0,
    k_angle: float = 0.0,
) -> VelocitySearch:
    lat = build_lattice(dim)
    beta = float(beta_from_viscosity(nu))
    probe = lambda s: probe_velocity(lat, model, s, beta, k_points, velocity_angle, k_angle)
    probes = [probe(1.0)]
    if probes[-1].stable:
        return VelocitySearch(1.0, (1.0, 1.0), probes)
    probes.append(probe(0.0))
    if not probes[-1].stable:
        if nu > 0:
            raise RuntimeError(f"{model.label} unstable at rest for nu={nu}; operator construction is broken")
        return VelocitySearch(0.0, (0.0, 0.0), probes)
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        probes.append(probe(mid))
        if probes[-1].stable:
            lo = mid
        else:
            hi = mid
    return VelocitySearch(lo, (lo, hi), probes)


def max_stable_velocity(model: EquilibriumModel, nu: float, k_grid_points: int = DEFAULT_K_POINTS, tol: float = 1e-3, **kw) -> float:
    """Largest stable flow speed in [0, 1] (bisection, last stable point)."""
    return search_max_velocity(model, nu, k_points=k_grid_points, tol=tol, **kw).u_max


@dataclass
class StabilityDomain:
    rows: list[tuple[str, float, float, float, float]]
    k_points: int
    tol: float

    def u_max(self, label: str) -> np.ndarray:
        return np.array([r[2] for r in self.rows if r[0] == label])

    def nus(self, label: str) -> np.ndarray:
        return np.array([r[1] for r in self.rows if r[0] == label])


def stability_domain(models, nus, dim=2, k_points=DEFAULT_K_POINTS, tol=1e-3, **kw) -> StabilityDomain:
    rows = []
    for model in models:
        for nu in nus:
            res = search_max_velocity(model, float(nu), dim=dim, k_points=k_points, tol=tol, **kw)
            rows.append((model.label, float(nu), res.u_max, res.bracket[0], res.bracket[1]))
    return StabilityDomain(rows=rows, k_points=k_points, tol=tol)


# -- dispersion / dissipation of the acoustic pair --------------------------


@dataclass(frozen=True)
class DispersionFit:
    c_plus: float
    c_minus: float
    nuR_plus: float
    nuR_minus: float
    ks: np.ndarray
    omegas: np.ndarray


class BranchMatchingError(RuntimeError):
    pass


def acoustic_frequencies(model, u, beta, ks, rho: float = 1.0) -> np.ndarray:
    """Frequencies (omega+, omega-) of the two hydrodynamic modes at each k.

    Convention: perturbations ~ exp(i(omega t - k x)), so one step
    multiplies the mode by exp(i omega); these are eigenvalues of L(-k).
    Then Re omega = c k + O(k^3) and Im omega = nu R k^2 + O(k^4).
    """
    lat = build_lattice(1)
    ks = np.asarray(ks, dtype=float)
    out = np.empty((len(ks), 2), dtype=complex)
    for n, k in enumerate(ks):
        lam = eigenvalues(operator_stack(lat, model, rho, [u], beta, [[-k]])[0])
        # the acoustic pair tends to 1 as k -> 0, the kinetic mode to 1 - 2 beta
        dist = np.abs(lam - 1.0)
        order = np.argsort(dist)
        if dist[order[2]] < 2.0 * dist[order[1]]:
            raise BranchMatchingError(f"acoustic pair not separated from the kinetic mode at k={k}")
        omega = -1j * np.log(lam[order[:2]])
        omega = omega[np.argsort(-omega.real)]
        if omega[0].real - omega[1].real < 0.1 * k * CS:
            raise BranchMatchingError(f"acoustic modes cross at k={k}")
        out[n] = omega
    return out


def dispersion_fit(model, u, beta, k_small_list=(0.01, 0.02, 0.03, 0.04, 0.05), rho: float = 1.0) -> DispersionFit:
    """Least-squares fit Re w = c k + d k^3, Im w = nuR k^2 + e k^4 per branch."""
    ks = np.asarray(k_small_list, dtype=float)
    if np.any(ks <= 0) or np.any(ks > 0.05):
        raise ValueError("dispersion fit uses wave numbers in (0, 0.05]")
    omegas = acoustic_frequencies(model, u, beta, ks, rho)
    odd = np.stack([ks, ks**3], axis=1)
    even = np.stack([ks**2, ks**4], axis=1)
    fits = []
    for branch in range(2):
        c = np.linalg.lstsq(odd, omegas[:, branch].real, rcond=None)[0][0]
        d = np.linalg.lstsq(even, omegas[:, branch].imag, rcond=None)[0][0]
        fits.append((c, d))
    return DispersionFit(
        c_plus=float(fits[0][0]),
        c_minus=float(fits[1][0]),
        nuR_plus=float(fits[0][1]),
        nuR_minus=float(fits[1][1]),
        ks=ks,
        omegas=omegas,
    )


def d1q3_verdict_grid(model, us, betas, ks, method: str = "schur", tol: float = STABILITY_TOL):
    """Stable/unstable verdict for every (u, beta, k); shape (len(us), len(betas), len(ks)).

    Both methods use the operator stability tolerance: the Schur-Cohn test
    runs on the disk |z| <= 1 + tol, the same disk the spectral radius is
    compared against.
    """
    if method not in ("schur", "radius"):
        raise ValueError(f"unknown method {method!r}")
    lat = build_lattice(1)
    ks = np.asarray(ks, dtype=float)
    out = np.empty((len(us), len(betas), len(ks)), dtype=bool)
    for i, u in enumerate(us):
        for j, beta in enumerate(betas):
            ops = operator_stack(lat, model, 1.0, [u], beta, ks[:, None])
            if method == "schur":
                out[i, j] = schur_cohn_cubic(char_poly_d1q3(ops), tol=tol)
            else:
                out[i, j] = spectral_radii(ops) <= 1.0 + tol
    return out
