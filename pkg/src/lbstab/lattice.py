"""First-neighbour DdQ3^d velocity sets and moment extraction.

Velocities are the tensor product of {-1, 0, +1} enumerated in
lexicographic order of the per-axis index, so for D2Q9 population ``i``
has ``c_i = (i // 3 - 1, i % 3 - 1)``::

    i :   0   1   2   3   4   5   6   7   8
    cx:  -1  -1  -1   0   0   0  +1  +1  +1
    cy:  -1   0  +1  -1   0  +1  -1   0  +1

Lattice units throughout (dr = dt = 1).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

CS2 = 1.0 / 3.0
CS = math.sqrt(CS2)

SUPPORTED_DIMENSIONS = (1, 2)


@dataclass(frozen=True)
class Lattice:
    dim: int
    velocities: np.ndarray = field(repr=False)

    @property
    def q(self) -> int:
        return self.velocities.shape[0]

    @property
    def sound_speed(self) -> float:
        return CS

    @property
    def cs2(self) -> float:
        return CS2

    @property
    def name(self) -> str:
        return f"D{self.dim}Q{self.q}"

    @property
    def opposite(self) -> np.ndarray:
        """Index map i -> j with c_j = -c_i (lexicographic order makes it a reversal)."""
        return np.arange(self.q)[::-1]

    @property
    def rest_index(self) -> int:
        return self.q // 2


def build_lattice(dim: int) -> Lattice:
    if dim not in SUPPORTED_DIMENSIONS:
        raise ValueError(f"unsupported dimension {dim!r}; expected one of {SUPPORTED_DIMENSIONS}")
    c = np.array(list(itertools.product((-1, 0, 1), repeat=dim)), dtype=np.int64)
    c.setflags(write=False)
    return Lattice(dim=dim, velocities=c)


@dataclass(frozen=True)
class FlowState:
    """Density and velocity at a node; |u_a| <= 1 is the modelled box."""

    rho: float
    u: tuple[float, ...]

    def __post_init__(self):
        u = tuple(float(x) for x in np.atleast_1d(self.u))
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "rho", float(self.rho))
        if not self.rho > 0.0:
            raise ValueError(f"density must be positive, got {self.rho}")
        if any(not math.isfinite(x) or abs(x) > 1.0 for x in u):
            raise ValueError(f"velocity components must lie in [-1, 1], got {u}")

    @property
    def dim(self) -> int:
        return len(self.u)


def moments(lat: Lattice, f) -> tuple[float, np.ndarray]:
    """Return (rho, momentum) of a single-node population vector."""
    f = np.asarray(f, dtype=float)
    if f.shape != (lat.q,):
        raise ValueError(f"population vector must have length {lat.q}, got shape {f.shape}")
    rho = float(f.sum())
    return rho, lat.velocities.T.astype(float) @ f
