"""Hydrodynamic-limit analytics of the D1Q3 LBGK closure.

Given a pressure closure pi*(u) this module evaluates the normal-mode
speeds, their attenuation rates, the viscosity factor ``A`` and the
compressibility error ``B`` of the non-equilibrium momentum flux, the
renormalised relaxation parameter and the D2Q9 viscosity matrix.
Everything is in lattice units with cs^2 = 1/3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lbstab.equilibrium import PressureModel
from lbstab.lattice import CS2


class HyperbolicityError(ValueError):
    pass


class DegenerateModesError(ValueError):
    pass


class RenormalizationError(ValueError):
    pass


def viscosity_from_beta(beta):
    beta = np.asarray(beta, dtype=float)
    if np.any((beta <= 0.0) | (beta > 1.0)):
        raise ValueError("relaxation parameter beta must lie in (0, 1]")
    return CS2 * (0.5 / beta - 0.5)


def beta_from_viscosity(nu):
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0.0):
        raise ValueError("viscosity must be non-negative")
    return CS2 / (2.0 * nu + CS2)


def eigen_modes(pm: PressureModel, u):
    """Characteristic speeds (c+, c-) of the first-order hydrodynamic system."""
    pi, dpi = pm(u)
    disc = 0.25 * dpi * dpi + pi
    if np.any(disc < 0.0):
        raise HyperbolicityError(f"negative discriminant at u={u}: loss of hyperbolicity")
    root = np.sqrt(disc)
    centre = np.asarray(u, dtype=float) + 0.5 * dpi
    return centre + root, centre - root


def attenuation_rates(c_plus, c_minus):
    """Coefficients R+- of the k^2 damping term of the two acoustic modes."""
    c_plus = np.asarray(c_plus, dtype=float)
    c_minus = np.asarray(c_minus, dtype=float)
    gap = c_plus - c_minus
    if np.any(gap == 0.0):
        raise DegenerateModesError("c+ == c-: attenuation rates undefined")
    r_plus = c_plus * (3 * CS2 - c_plus**2) / (CS2 * gap)
    r_minus = -c_minus * (3 * CS2 - c_minus**2) / (CS2 * gap)
    return r_plus, r_minus


def viscosity_factor(pm: PressureModel, u):
    pi, dpi = pm(u)
    u = np.asarray(u, dtype=float)
    return (3 * CS2 - 3 * u * u - pi - dpi * (3 * u + dpi)) / (2 * CS2)


def viscosity_factor_from_modes(c_plus, c_minus):
    """Same quantity as :func:`viscosity_factor`, written through the mode speeds."""
    c_plus = np.asarray(c_plus, dtype=float)
    c_minus = np.asarray(c_minus, dtype=float)
    return (3 * CS2 - c_plus**2 - c_minus**2 - c_plus * c_minus) / (2 * CS2)


def compressibility_error(pm: PressureModel, u):
    pi, dpi = pm(u)
    u = np.asarray(u, dtype=float)
    return -(3 * u + dpi) * pi + 3 * u * CS2 - u**3


def renormalized_beta(a: float, nu: float) -> float:
    """Relaxation parameter that absorbs the viscosity factor into nu."""
    if not a > 0.0:
        raise RenormalizationError(f"viscosity factor must be positive, got {a}")
    if nu < 0.0:
        raise ValueError("viscosity must be non-negative")
    return CS2 * a / (2.0 * nu + CS2 * a)


def necessary_condition(c_plus, c_minus):
    """Long-wave stability box 0 <= c+ <= 1, -1 <= c- <= 0."""
    c_plus = np.asarray(c_plus)
    c_minus = np.asarray(c_minus)
    ok = (0.0 <= c_plus) & (c_plus <= 1.0) & (-1.0 <= c_minus) & (c_minus <= 0.0)
    return bool(ok) if ok.ndim == 0 else ok


def sound_speeds(pm: PressureModel, u):
    """(cs+, cs-) = (c+ - u, c- - u)."""
    c_plus, c_minus = eigen_modes(pm, u)
    u = np.asarray(u, dtype=float)
    return c_plus - u, c_minus - u


def d2q9_viscosity_matrix(pm: PressureModel, u) -> np.ndarray:
    """2x2 matrix scaling the rate of strain in the D2Q9 non-equilibrium stress.

    Entry (a, b) multiplies d_a u_b.  Diagonal: A(u_x), A(u_y).  The
    off-diagonal (x, y) slot carries pi*(u_x)/cs^2 and (y, x) carries
    pi*(u_y)/cs^2: the shear stress from d_x u_y is set by the pressure of
    the axis along which the gradient is taken.
    """
    ux, uy = (float(v) for v in u)
    return np.array(
        [
            [float(viscosity_factor(pm, ux)), float(pm.pi(ux)) / CS2],
            [float(pm.pi(uy)) / CS2, float(viscosity_factor(pm, uy))],
        ]
    )


@dataclass(frozen=True)
class ModeAnalysis:
    u: float
    pi_star: float
    dpi_star: float
    c_plus: float
    c_minus: float
    sigma_plus: float
    sigma_minus: float
    A: float
    B: float
    R_plus: float
    R_minus: float
    beta_star: float | None = None

    @property
    def stable_long_wave(self) -> bool:
        return necessary_condition(self.c_plus, self.c_minus)


def analyze(pm: PressureModel, u: float, nu: float | None = None) -> ModeAnalysis:
    """Bundle every coupling parameter at velocity ``u``.

    ``beta_star`` is filled in only when ``nu`` is given and A > 0.
    """
    pi, dpi = (float(x) for x in pm(u))
    c_plus, c_minus = (float(x) for x in eigen_modes(pm, u))
    r_plus, r_minus = (float(x) for x in attenuation_rates(c_plus, c_minus))
    a = float(viscosity_factor(pm, u))
    a_modes = float(viscosity_factor_from_modes(c_plus, c_minus))
    if not math.isclose(a, a_modes, rel_tol=0.0, abs_tol=1e-12):
        raise RuntimeError(f"viscosity factor paths disagree at u={u}: {a} vs {a_modes}")
    beta_star = None
    if nu is not None and a > 0.0:
        beta_star = renormalized_beta(a, nu)
    return ModeAnalysis(
        u=float(u),
        pi_star=pi,
        dpi_star=dpi,
        c_plus=c_plus,
        c_minus=c_minus,
        sigma_plus=c_plus - u,
        sigma_minus=c_minus - u,
        A=a,
        B=float(compressibility_error(pm, u)),
        R_plus=r_plus,
        R_minus=r_minus,
        beta_star=beta_star,
    )


def critical_velocity(pm: PressureModel, tol: float = 1e-12) -> float:
    """Smallest u >= 0 where the long-wave box is first violated (1.0 if never)."""
    ok = lambda v: necessary_condition(*(float(x) for x in eigen_modes(pm, v)))
    if ok(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return hi
