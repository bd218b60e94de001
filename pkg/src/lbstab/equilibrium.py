"""Pressure closures and equilibrium populations.

Two families of equilibria are supported:

* the product form ``f_i = rho * prod_a Psi_{c_ia}(u_a, P_aa)`` with
  ``P_aa = pi*(u_a) + u_a**2`` and a pluggable pressure closure ``pi*``;
* the classical second-order polynomial (quadratic Hermite) equilibrium.

All evaluators are vectorised: ``rho`` may be an array of node densities
with ``u`` of shape ``(D,) + rho.shape``; populations come back with the
velocity index leading, ``(Q,) + rho.shape``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from lbstab.lattice import CS2, FlowState, Lattice


class VelocityRangeError(ValueError):
    """A velocity component left the modelled box |u_a| <= 1."""


def _check_range(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if not np.all(np.abs(u) <= 1.0):
        bad = u[~(np.abs(u) <= 1.0)]
        raise VelocityRangeError(f"velocity component outside [-1, 1]: {bad.ravel()[:4]}")
    return u


def pressure_isotropic(u):
    """Constant closure pi* = cs^2; returns (pi*, d pi*/du)."""
    u = _check_range(u)
    return np.full_like(u, CS2), np.zeros_like(u)


def pressure_af(u):
    """Asymptotically free closure; returns (pi*, d pi*/du).

    pi* = cs^2 (2 sqrt(1 + (u/cs)^2) - 1 - (u/cs)^2), evaluated as
    cs^2 s (2 - s) with s = sqrt(1 + (u/cs)^2) so that pi*(+-1) = 0
    without cancellation.
    """
    u = _check_range(u)
    s = np.sqrt(1.0 + u * u / CS2)
    return CS2 * s * (2.0 - s), 2.0 * u / s - 2.0 * u


@dataclass(frozen=True)
class PressureModel:
    name: str
    evaluate: Callable

    def __call__(self, u):
        return self.evaluate(u)

    def pi(self, u):
        return self.evaluate(u)[0]

    def dpi(self, u):
        return self.evaluate(u)[1]


ISOTROPIC_PRESSURE = PressureModel("isotropic", pressure_isotropic)
AF_PRESSURE = PressureModel("asymptotically-free", pressure_af)


def psi_triplet(xi, p):
    """Per-axis factors (Psi_-1, Psi_0, Psi_+1) of the product-form equilibrium."""
    xi = np.asarray(xi, dtype=float)
    p = np.asarray(p, dtype=float)
    return 0.5 * (p - xi), 1.0 - p, 0.5 * (p + xi)


class EquilibriumModel:
    """Base class: ``populations`` and ``velocity_derivatives`` are vectorised."""

    name: str = "abstract"
    label: str = "abstract"

    def populations(self, lat: Lattice, rho, u) -> np.ndarray:
        raise NotImplementedError

    def velocity_derivatives(self, lat: Lattice, rho, u) -> np.ndarray:
        """d f_i / d u_a, shape (D, Q) + rho.shape."""
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.label}>"


def _broadcast_state(lat: Lattice, rho, u):
    rho = np.asarray(rho, dtype=float)
    u = _check_range(u)
    if u.shape[0] != lat.dim:
        raise ValueError(f"velocity has {u.shape[0]} components, lattice is {lat.name}")
    return rho, np.broadcast_to(u, (lat.dim,) + rho.shape)


class ProductForm(EquilibriumModel):
    def __init__(self, pressure: PressureModel, label: str):
        self.pressure = pressure
        self.name = f"product-{pressure.name}"
        self.label = label

    def _axis_factors(self, u_a):
        pi, dpi = self.pressure(u_a)
        psi = np.stack(psi_triplet(u_a, pi + u_a * u_a))
        dp = dpi + 2.0 * u_a
        dpsi = np.stack([0.5 * (dp - 1.0), -dp, 0.5 * (dp + 1.0)])
        return psi, dpsi

    def populations(self, lat, rho, u):
        rho, u = _broadcast_state(lat, rho, u)
        f = np.broadcast_to(rho, (lat.q,) + rho.shape).copy()
        for a in range(lat.dim):
            psi, _ = self._axis_factors(u[a])
            f *= psi[lat.velocities[:, a] + 1]
        return f

    def velocity_derivatives(self, lat, rho, u):
        rho, u = _broadcast_state(lat, rho, u)
        factors = [self._axis_factors(u[a]) for a in range(lat.dim)]
        out = np.empty((lat.dim, lat.q) + rho.shape)
        for a in range(lat.dim):
            d = np.broadcast_to(rho, (lat.q,) + rho.shape).copy()
            for b, (psi, dpsi) in enumerate(factors):
                table = dpsi if b == a else psi
                d *= table[lat.velocities[:, b] + 1]
            out[a] = d
        return out


class SecondOrderPolynomial(EquilibriumModel):
    name = "poly2"
    label = "poly2"

    @staticmethod
    def weights(lat: Lattice) -> np.ndarray:
        # tensor product of the D1Q3 rest weights {1/6, 2/3, 1/6}
        return np.prod(np.where(lat.velocities == 0, 2.0 / 3.0, 1.0 / 6.0), axis=1)

    def populations(self, lat, rho, u):
        rho, u = _broadcast_state(lat, rho, u)
        w = self.weights(lat).reshape((lat.q,) + (1,) * rho.ndim)
        c = lat.velocities.astype(float)
        cu = np.tensordot(c, u, axes=(1, 0))
        uu = np.sum(u * u, axis=0)
        return rho * w * (1.0 + cu / CS2 + cu * cu / (2 * CS2 * CS2) - uu / (2 * CS2))

    def velocity_derivatives(self, lat, rho, u):
        rho, u = _broadcast_state(lat, rho, u)
        w = self.weights(lat).reshape((lat.q,) + (1,) * rho.ndim)
        c = lat.velocities.astype(float)
        cu = np.tensordot(c, u, axes=(1, 0))
        out = np.empty((lat.dim, lat.q) + rho.shape)
        for a in range(lat.dim):
            ca = c[:, a].reshape((lat.q,) + (1,) * rho.ndim)
            out[a] = rho * w * (ca / CS2 + cu * ca / (CS2 * CS2) - u[a] / CS2)
        return out


ISOTROPIC = ProductForm(ISOTROPIC_PRESSURE, "product-iso")
ASYMPTOTICALLY_FREE = ProductForm(AF_PRESSURE, "product-af")
POLY2 = SecondOrderPolynomial()

MODELS = {m.label: m for m in (POLY2, ISOTROPIC, ASYMPTOTICALLY_FREE)}


def get_model(label: str) -> EquilibriumModel:
    try:
        return MODELS[label]
    except KeyError:
        raise ValueError(f"unknown equilibrium model {label!r}; choose from {sorted(MODELS)}") from None


def equilibrium_product(lat: Lattice, pm: PressureModel, state: FlowState) -> np.ndarray:
    return ProductForm(pm, pm.name).populations(lat, state.rho, np.array(state.u))


def equilibrium_poly2(lat: Lattice, state: FlowState) -> np.ndarray:
    return POLY2.populations(lat, state.rho, np.array(state.u))


def equilibrium_jacobian(model: EquilibriumModel, lat: Lattice, state: FlowState) -> np.ndarray:
    """Q x Q Jacobian of f -> f^eq(rho(f), u(f)) at the given state.

    Chain rule through the conserved moments: d rho/d f_j = 1 and
    d u_a/d f_j = (c_ja - u_a) / rho.
    """
    rho = state.rho
    u = np.array(state.u)
    f = model.populations(lat, rho, u)
    du = model.velocity_derivatives(lat, rho, u)
    c = lat.velocities.astype(float)
    jac = np.outer(f / rho, np.ones(lat.q))
    for a in range(lat.dim):
        jac += np.outer(du[a], (c[:, a] - u[a]) / rho)
    return jac
