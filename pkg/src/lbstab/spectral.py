"""Dense eigenvalues of small matrices through the characteristic polynomial.

Pipeline for one matrix ``A`` (n <= 9):

1. centre on tr(A)/n and scale to unit infinity norm;
2. Faddeev-LeVerrier coefficients of the characteristic polynomial;
3. Aberth-Ehrlich simultaneous iteration, Newton polishing of isolated
   roots;
4. clusters that the polynomial cannot resolve (Weierstrass inclusion
   disks overlap) are checked on the matrix: a cluster recognised as an
   m-fold root (p, p', ..., p^(m-1) vanish at the root of p^(m-1)) and
   confirmed by an m-dimensional null space of (A - zeta I)^m is kept as
   that multiple root; any other cluster takes its values from a
   QR-algorithm eigen-solve (LAPACK), paired with the polished roots.

Step 4 matters for LBGK operators: conserved and ghost modes are exact
multiple eigenvalues at k = 0, and near |u| = 1 or beta = 1 the spectrum
carries near-degenerate clusters on the unit circle whose polynomial roots
are conditioned far worse than the eigenvalues themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

EPS = np.finfo(float).eps
STABILITY_TOL = 1e-9
RESIDUAL_TOL = 1e-10
MAX_ITER = 500
# Faddeev-LeVerrier coefficients carry errors well above one rounding unit;
# this multiplier on the Horner bound stands in for that coefficient noise
COEFF_SLACK = 1e4
# relative size of the m smallest singular values of (B - zeta I)^m that
# certifies an m-fold eigenvalue
NULLITY_TOL = 1e-13


class RootFindingError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


def faddeev_leverrier(a) -> np.ndarray:
    """Monic characteristic polynomial coefficients, highest degree first.

    ``a`` has shape (..., n, n); the result has shape (..., n + 1).
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[-1]
    if a.ndim < 2 or a.shape[-2] != n:
        raise ValueError(f"square matrix required, got shape {a.shape}")
    eye = np.eye(n, dtype=complex)
    coeffs = np.empty(a.shape[:-2] + (n + 1,), dtype=complex)
    coeffs[..., 0] = 1.0
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[..., k - 1, None, None] * eye
        coeffs[..., k] = -np.trace(a @ m, axis1=-2, axis2=-1) / k
    return coeffs


def horner(coeffs, z):
    """p(z), p'(z) and a running rounding-error bound for |p(z)|.

    ``coeffs`` (..., n + 1) broadcasts against ``z`` (..., r) when the
    ranks match, otherwise ``z`` is treated as a scalar per polynomial.
    """
    coeffs = np.asarray(coeffs)
    z = np.asarray(z)
    c = coeffs[..., None, :] if (z.ndim == coeffs.ndim and z.ndim > 0) else coeffs
    p = np.broadcast_to(c[..., 0], z.shape).astype(complex)
    dp = np.zeros_like(p)
    bound = np.abs(p)
    az = np.abs(z)
    for j in range(1, c.shape[-1]):
        dp = dp * z + p
        p = p * z + c[..., j]
        bound = bound * az + np.abs(p)
    n = c.shape[-1] - 1
    return p, dp, (4 * n + 2) * EPS * bound


def _initial_guesses(coeffs):
    n = coeffs.shape[-1] - 1
    # Fujiwara bound on the root moduli
    k = np.arange(1, n + 1)
    terms = np.abs(coeffs[..., 1:]) ** (1.0 / k)
    terms[..., -1] = (np.abs(coeffs[..., -1]) / 2.0) ** (1.0 / n)
    radius = 2.0 * np.max(terms, axis=-1)
    radius = np.where(radius > 0, radius, 1.0)
    centre = -coeffs[..., 1] / n
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    return centre[..., None] + 0.5 * radius[..., None] * np.exp(1j * angles)


def aberth(coeffs, max_iter: int = MAX_ITER):
    """Simultaneous Aberth-Ehrlich iteration on monic polynomials.

    Returns (roots, converged mask).  A root is frozen once |p(z)| reaches
    the rounding-error level of its evaluation.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    n = coeffs.shape[-1] - 1
    z = _initial_guesses(coeffs)
    active = np.ones(z.shape, dtype=bool)
    eye = np.eye(n, dtype=bool)
    for _ in range(max_iter):
        p, dp, bound = horner(coeffs, z)
        active &= np.abs(p) > bound
        if not active.any():
            break
        diff = z[..., :, None] - z[..., None, :]
        diff[..., eye] = np.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            corr = ratio / (1.0 - ratio * np.sum(1.0 / diff, axis=-1))
        corr = np.where(np.isfinite(corr), corr, 0.0)
        z = np.where(active, z - corr, z)
    p, _, bound = horner(coeffs, z)
    return z, np.abs(p) <= bound


def _newton(coeffs, z, steps=8):
    for _ in range(steps):
        p, dp, bound = horner(coeffs, np.asarray(z))
        if abs(p) <= bound or dp == 0:
            break
        z = z - p / dp
    return complex(z)


def _components(z, radius):
    """Connected components of overlapping disks D(z_i, radius_i)."""
    n = len(z)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) <= radius[i] + radius[j]:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _split(z, group):
    """Cut the longest edge of the group's minimum spanning tree (single linkage)."""
    pts = z[group]
    n = len(group)
    edges = []
    best = {j: (abs(pts[j] - pts[0]), 0) for j in range(1, n)}
    while best:
        j = min(best, key=lambda t: best[t][0])
        d, i = best.pop(j)
        edges.append((d, i, j))
        for t in best:
            dt = abs(pts[t] - pts[j])
            if dt < best[t][0]:
                best[t] = (dt, j)
    cut = max(range(len(edges)), key=lambda e: edges[e][0])
    side = {0}
    # Prim order: an edge's parent joins the tree before its child
    for e, (_, i, j) in enumerate(edges):
        if e != cut and i in side:
            side.add(j)
    return [group[t] for t in range(n) if t in side], [group[t] for t in range(n) if t not in side]


def _is_multiple_root(coeffs, zeta, m) -> bool:
    """p, p', ..., p^(m-1) all vanish at zeta up to coefficient noise."""
    c = coeffs
    for _ in range(m):
        p, _, bound = horner(c, np.asarray(zeta))
        if abs(p) > COEFF_SLACK * bound:
            return False
        c = np.polyder(c)
    return True


def _partition(coeffs, z, group, out, multiples):
    """Split a cluster into multiple roots (collapsed in ``out``) and simple roots."""
    if len(group) == 1:
        i = group[0]
        out[i] = _newton(coeffs, z[i])
        return
    m = len(group)
    centre = z[group].mean()
    spread = max(abs(z[i] - centre) for i in group)
    zeta = _newton(np.polyder(coeffs, m - 1), centre, steps=20)
    if abs(zeta - centre) > spread + 1e3 * EPS * (1 + abs(centre)):
        zeta = centre
    if _is_multiple_root(coeffs, zeta, m):
        out[group] = zeta
        multiples.append((group, zeta))
        return
    for part in _split(z, group):
        _partition(coeffs, z, part, out, multiples)


def _analyse_roots(coeffs, z):
    """Polish roots of one monic polynomial and find its unresolved clusters.

    Returns (roots, clusters, multiples): ``clusters`` are the index groups
    of overlapping inclusion disks, ``multiples`` the (indices, value) of
    clusters identified as a single multiple root.
    """
    n = len(z)
    p, _, bound = horner(coeffs, z)
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # Weierstrass inclusion disks: a connected union of m disks holds m roots
        radius = n * (np.abs(p) + COEFF_SLACK * bound) / np.abs(np.prod(diff, axis=1))
    radius = np.where(np.isfinite(radius), radius, np.inf)
    out = z.copy()
    clusters = _components(z, radius)
    multiples = []
    for group in clusters:
        _partition(coeffs, z, group, out, multiples)
    return out, clusters, multiples


def _relative_residuals(coeffs, roots):
    p, _, _ = horner(coeffs, roots)
    scale = horner(np.abs(coeffs), np.abs(roots))[0].real
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(p == 0, 0.0, np.abs(p) / scale)


def _check_residuals(coeffs, roots, max_iter):
    residual = _relative_residuals(coeffs, roots)
    if not np.all(residual <= RESIDUAL_TOL):
        raise RootFindingError(
            f"Aberth iteration did not converge within {max_iter} iterations "
            f"(worst relative residual {np.nanmax(residual):.3e})",
            residuals=residual,
        )


def polynomial_roots(coeffs, max_iter: int = MAX_ITER) -> np.ndarray:
    """Roots of polynomial(s), coefficients highest degree first."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape[-1] < 2:
        return np.empty(coeffs.shape[:-1] + (0,), dtype=complex)
    if np.any(coeffs[..., 0] == 0):
        raise ValueError("leading coefficient must be non-zero")
    coeffs = coeffs / coeffs[..., :1]
    z, _ = aberth(coeffs, max_iter=max_iter)
    _check_residuals(coeffs, z, max_iter)
    flat_c = coeffs.reshape(-1, coeffs.shape[-1])
    flat_z = z.reshape(-1, z.shape[-1])
    roots = np.array([_analyse_roots(c, r)[0] for c, r in zip(flat_c, flat_z)]).reshape(z.shape)
    _check_residuals(coeffs, roots, max_iter)
    return roots


# -- matrix layer -------------------------------------------------------------


def _centre_and_scale(a):
    n = a.shape[-1]
    centre = np.trace(a, axis1=-2, axis2=-1) / n
    b = a - centre[..., None, None] * np.eye(n)
    scale = np.max(np.sum(np.abs(b), axis=-1), axis=-1)
    scale = np.where(scale > 0, scale, 1.0)
    return centre, scale, b / scale[..., None, None]


def _generalized_eigenspace(b, zeta, m):
    """Basis of null((B - zeta I)^m) if it is m-dimensional, with a refined zeta.

    Returns (basis, zeta) or (None, zeta) when the matrix does not carry an
    m-fold eigenvalue at zeta.
    """
    n = b.shape[0]
    eye = np.eye(n)
    for _ in range(2):
        mat = np.linalg.matrix_power(b - zeta * eye, m)
        _, sv, vh = np.linalg.svd(mat)
        basis = vh[n - m :].conj().T
        # mean eigenvalue of the restricted block is well conditioned
        zeta = np.trace(basis.conj().T @ b @ basis) / m
    mat = np.linalg.matrix_power(b - zeta * eye, m)
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[n - m] <= NULLITY_TOL * max(1.0, sv[0]):
        return basis, complex(zeta)
    return None, complex(zeta)


def _refine_clusters(b, roots, polished, clusters, multiples):
    out = roots.copy()
    unresolved = []
    for group in clusters:
        if len(group) == 1:
            continue
        whole = [(idx, z) for idx, z in multiples if sorted(idx) == sorted(group)]
        if whole:
            basis, zeta = _generalized_eigenspace(b, whole[0][1], len(group))
            if basis is not None:
                out[group] = zeta
                continue
        unresolved.extend(group)
    if unresolved:
        # QR-algorithm values for the clusters, paired with the polished roots
        lam = np.linalg.eigvals(b)
        rows, cols = linear_sum_assignment(np.abs(polished[:, None] - lam[None, :]))
        matched = np.empty_like(polished)
        matched[rows] = lam[cols]
        out[unresolved] = matched[unresolved]
    return out


def _solve_scaled(b, coeffs, z, max_iter):
    roots, clusters, multiples = _analyse_roots(coeffs, z)
    _check_residuals(coeffs, roots, max_iter)
    polished = np.array([_newton(coeffs, zi) for zi in z])
    return _refine_clusters(b, roots, polished, clusters, multiples)


def eigenvalues(m, max_iter: int = MAX_ITER) -> np.ndarray:
    """Eigenvalues of a (stack of) small dense matrices.

    The first Aberth pass runs batched over the stack; cluster refinement
    is per matrix.
    """
    a = np.asarray(m, dtype=complex)
    n = a.shape[-1]
    if a.ndim < 2 or a.shape[-2] != n:
        raise ValueError(f"square matrix required, got shape {a.shape}")
    flat = a.reshape(-1, n, n)
    centre, scale, b = _centre_and_scale(flat)
    coeffs = faddeev_leverrier(b)
    z, _ = aberth(coeffs, max_iter=max_iter)
    _check_residuals(coeffs, z, max_iter)
    out = np.empty(z.shape, dtype=complex)
    for i in range(flat.shape[0]):
        out[i] = centre[i] + scale[i] * _solve_scaled(b[i], coeffs[i], z[i], max_iter)
    return out.reshape(a.shape[:-1])


@dataclass(frozen=True)
class StabilityReport:
    eigenvalues: np.ndarray
    spectral_radius: float
    stable: bool
    tol: float = STABILITY_TOL


def spectral_radius(m, tol: float = STABILITY_TOL) -> StabilityReport:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] > 9:
        raise ValueError(f"expected a square matrix of size <= 9, got shape {m.shape}")
    lam = eigenvalues(m)
    r = float(np.max(np.abs(lam)))
    return StabilityReport(eigenvalues=lam, spectral_radius=r, stable=r <= 1.0 + tol, tol=tol)


def spectral_radii(ms) -> np.ndarray:
    """Spectral radius of every matrix in a stack (..., n, n)."""
    return np.max(np.abs(eigenvalues(ms)), axis=-1)
