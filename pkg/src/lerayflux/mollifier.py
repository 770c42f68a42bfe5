"""Radial C-infinity bump mollifier and its discrete quadrature.

The bump ``exp(-1/(1 - |x/eps|^2))`` is sampled on a tensor grid of
nodes spanning ``[-eps, eps]^dim``; the normalising constant is fixed by
that quadrature so the discrete mass is exactly one.  The same node set
drives both mollification (via its Fourier transform) and the increment
form of the defect integrals (via the analytic gradient).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Grid

DEFAULT_POINTS = 17


def bump(r):
    """Unnormalised profile ``exp(-1/(1-r^2))`` for ``r < 1``, zero outside."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class Quadrature:
    nodes: np.ndarray  # (Q, dim) displacement vectors
    weights: np.ndarray  # (Q,) mollifier mass per node, sums to 1
    grad_weights: np.ndarray  # (Q, dim) gradient of the mollifier times node volume


@dataclass(frozen=True)
class MollifierSpec:
    """Mollifier of radius ``epsilon`` resolved by ``points`` nodes per axis."""

    epsilon: float
    points: int = DEFAULT_POINTS

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.epsilon >= np.pi:
            raise ValueError(f"epsilon must be below pi for the support to fit the torus, got {self.epsilon}")
        if self.points < 3 or self.points % 2 == 0:
            raise ValueError("points per axis must be odd and >= 3")

    def axis_nodes(self, spacing=None) -> np.ndarray:
        """1-D node positions; ``spacing`` overrides the default ``2 eps/(points-1)``."""
        if spacing is None:
            return np.linspace(-self.epsilon, self.epsilon, self.points)
        m = int(np.floor(self.epsilon / spacing))
        return np.arange(-m, m + 1) * spacing

    def quadrature(self, dim: int, spacing=None) -> Quadrature:
        return _quadrature(self, dim, spacing)

    def tensor_weights(self, dim: int) -> np.ndarray:
        """Normalised bump weights on the full ``points**dim`` tensor grid."""
        s = self.axis_nodes()
        r2 = sum(
            (s.reshape([-1 if a == b else 1 for b in range(dim)]) / self.epsilon) ** 2
            for a in range(dim)
        )
        w = bump(np.sqrt(r2))
        return w / w.sum()

    def multiplier(self, grid: Grid) -> np.ndarray:
        """Fourier symbol of the sampled bump on ``grid``'s half spectrum."""
        return _multiplier(self, grid)


@lru_cache(maxsize=64)
def _quadrature(spec: MollifierSpec, dim: int, spacing) -> Quadrature:
    s = spec.axis_nodes(spacing)
    mesh = np.meshgrid(*([s] * dim), indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    r = np.sqrt((nodes**2).sum(axis=1)) / spec.epsilon
    keep = r < 1.0
    nodes, r = nodes[keep], r[keep]
    b = bump(r)
    mass = b.sum()
    weights = b / mass
    # d/dxi exp(-1/(1-r^2)) = -2 exp(.) xi / (eps^2 (1-r^2)^2)
    grad = (-2.0 * b / (spec.epsilon**2 * (1.0 - r**2) ** 2))[:, None] * nodes / mass
    for a in (nodes, weights, grad):
        a.setflags(write=False)
    return Quadrature(nodes, weights, grad)


@lru_cache(maxsize=64)
def _multiplier(spec: MollifierSpec, grid: Grid) -> np.ndarray:
    s = spec.axis_nodes()
    w = spec.tensor_weights(grid.dim)
    factors = [np.exp(1j * np.ravel(ki)[:, None] * s[None, :]) for ki in grid.k]
    if grid.dim == 1:
        m = factors[0] @ w
    else:
        m = np.einsum("abc,ia,jb,kc->ijk", w, *factors, optimize=True)
    m = np.ascontiguousarray(m.real)
    m.setflags(write=False)
    return m
