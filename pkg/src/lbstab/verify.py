"""Invariant suite behind ``lbstab verify``: quick, deterministic self-checks.

Each check returns ``(name, passed, detail)``.  Tolerances follow the
module contracts; sample sizes are smaller than the acceptance tests so
the whole suite runs in seconds.
"""

from __future__ import annotations

import math

import numpy as np

from .equilibrium import AF_PRESSURE, ASYMPTOTICALLY_FREE, ISOTROPIC, ISOTROPIC_PRESSURE, MODELS
from .lattice import CS2, build_lattice
from .modes import compressibility_error, critical_velocity, viscosity_factor, viscosity_from_beta
from .simulator import init_shear_wave, init_uniform_perturbed, measure_growth_rate, run, seeded_growth, shear_mode_amplitude, step
from .spectral import eigenvalues, polynomial_roots
from .stability import CRITICAL_ISOTROPIC_VELOCITY, char_poly_d1q3, k_grid, max_radius, operator_stack, schur_cohn_cubic

SEED = 20240101


def check_asymptotic_freedom():
    pi, dpi = AF_PRESSURE(np.array([-1.0, 1.0]))
    err = max(abs(pi[0]), abs(pi[1]), abs(dpi[0] - 1.0), abs(dpi[1] + 1.0))
    return "asymptotic freedom", err <= 1e-12, f"max deviation {err:.2e}"


def check_renormalizability():
    u = np.linspace(-1.0, 1.0, 10_001)
    b = np.max(np.abs(compressibility_error(AF_PRESSURE, u)))
    a = np.min(viscosity_factor(AF_PRESSURE, u))
    return "compressibility error cancels", b < 1e-12 and a >= -1e-12, f"max|B| {b:.2e}, min A {a:.2e}"


def check_critical_velocity():
    uc = critical_velocity(ISOTROPIC_PRESSURE)
    err = abs(uc - CRITICAL_ISOTROPIC_VELOCITY)
    return "isotropic critical velocity", err <= 1e-6, f"u_c = {uc:.9f}"


def check_equilibrium_moments():
    worst = 0.0
    for dim in (1, 2):
        lat = build_lattice(dim)
        c = lat.velocities.astype(float)
        for model in MODELS.values():
            for u in ((0.0, 0.0), (0.3, -0.2), (0.7, 0.5)):
                u = np.array(u[:dim])
                f = model.populations(lat, 1.3, u)
                worst = max(worst, abs(f.sum() - 1.3), np.max(np.abs(c.T @ f - 1.3 * u)))
    return "equilibrium mass and momentum", worst <= 1e-13, f"max deviation {worst:.2e}"


def check_fig2():
    lat = build_lattice(1)
    ks = k_grid(256)
    af = max_radius(lat, ASYMPTOTICALLY_FREE, [1.0], 0.9994, ks[:, None]).max()
    iso = max_radius(lat, ISOTROPIC, [1.0], 0.9994, ks[:, None]).max()
    ok = af <= 1.0 + 1e-9 and iso > 1.0
    return "root locus at u=1", ok, f"AF {af:.12f}, iso {iso:.6f}"


def check_schur_cohn(n=2000):
    rng = np.random.default_rng(SEED)
    coeffs = rng.normal(size=(n, 3)) + 1j * rng.normal(size=(n, 3))
    coeffs *= rng.uniform(0.05, 1.2, size=(n, 1))
    verdict = schur_cohn_cubic(coeffs)
    roots = np.array([np.roots(np.concatenate([[1.0], c])) for c in coeffs])
    direct = np.max(np.abs(roots), axis=1) <= 1.0
    # the two routes may differ only for roots on the unit circle
    margin = np.abs(np.max(np.abs(roots), axis=1) - 1.0) > 1e-9
    bad = int(np.sum((verdict != direct) & margin))
    return "Schur-Cohn against root finding", bad == 0, f"{bad} disagreements in {n}"


def check_eigensolver(n=100):
    rng = np.random.default_rng(SEED)
    mats = rng.normal(size=(n, 9, 9)) + 1j * rng.normal(size=(n, 9, 9))
    ours = eigenvalues(mats)
    worst = 0.0
    for a, lam in zip(mats, ours):
        ref = np.linalg.eigvals(a)
        d = np.abs(lam[:, None] - ref[None, :])
        worst = max(worst, float(np.max(np.min(d, axis=1))), float(np.max(np.min(d, axis=0))))
    return "eigen-solver against LAPACK", worst <= 1e-8, f"max distance {worst:.2e}"


def check_d1q3_cubic():
    lat = build_lattice(1)
    ops = operator_stack(lat, ISOTROPIC, 1.0, [0.4], 0.9, k_grid(16)[:, None])
    r1 = np.sort_complex(polynomial_roots(char_poly_d1q3(ops)))
    r2 = np.sort_complex(eigenvalues(ops))
    err = float(np.max(np.abs(r1 - r2)))
    return "cubic roots match operator eigenvalues", err <= 1e-10, f"max difference {err:.2e}"


def check_conservation():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for model in MODELS.values():
        g = init_uniform_perturbed(model, (16, 8), 1.0, (0.2, 0.1), 0.0, 1)
        g.f *= 1.0 + 1e-3 * rng.uniform(-1, 1, size=g.f.shape)
        m0, p0 = g.total_mass(), g.total_momentum()
        res = run(g, 0.9, model, 200)
        if not res.status.ok:
            return "mass and momentum conservation", False, f"{model.label}: {res.status.reason}"
        worst = max(worst, abs(g.total_mass() - m0) / m0, float(np.max(np.abs(g.total_momentum() - p0))) / m0)
    return "mass and momentum conservation", worst <= 1e-10, f"max relative drift {worst:.2e}"


def check_fixed_point():
    worst = 0.0
    for model in MODELS.values():
        g = init_uniform_perturbed(model, (8, 4), 1.1, (0.6, -0.3), 0.0, 1)
        f0 = g.f.copy()
        step(g, 0.7, model)
        worst = max(worst, float(np.max(np.abs(g.f - f0))))
    return "uniform equilibrium is stationary", worst <= 1e-15, f"max change {worst:.2e}"


def check_shear_viscosity():
    beta, n = 0.8, 128
    g = init_shear_wave(ISOTROPIC, n, 1, 0.0, 1e-4, 1)
    res = run(g, beta, ISOTROPIC, 1000, lambda g: shear_mode_amplitude(g, 1))
    nu_eff = -measure_growth_rate(res.samples) / (2 * math.pi / n) ** 2
    err = abs(nu_eff / viscosity_from_beta(beta) - 1.0)
    return "shear-wave viscosity", err <= 0.01, f"relative error {err:.2e}"


def check_seeded_growth():
    res = seeded_growth(ISOTROPIC, 128, 0.43, 0.9, 35)
    return "seeded unstable mode growth", res.relative_error <= 0.02, f"relative error {res.relative_error:.2e}"


CHECKS = (
    check_asymptotic_freedom,
    check_renormalizability,
    check_critical_velocity,
    check_equilibrium_moments,
    check_fig2,
    check_schur_cohn,
    check_eigensolver,
    check_d1q3_cubic,
    check_conservation,
    check_fixed_point,
    check_shear_viscosity,
    check_seeded_growth,
)


def run_suite(checks=CHECKS):
    return [check() for check in checks]
