"""Fourier-multiplier operators on the periodic torus.

All operators act on :class:`~lerayflux.grid.SpectralField` values and
return new fields.  Odd-order derivative symbols vanish on Nyquist modes
so real data stays real.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import ShapeError
from .grid import Grid, PhysicalField, SpectralField
from .mollifier import MollifierSpec

__all__ = [
    "transform",
    "inverse_transform",
    "multiplier_derivative",
    "leray_project",
    "helmholtz",
    "lowpass_sharp",
    "mollify",
    "shift",
    "dealias",
    "resample",
    "inner",
    "l2_norm",
    "mean",
]


# array-level kernels, shared with the time stepper -------------------------

def forward(a: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.rfftn(a, axes=tuple(range(-grid.dim, 0))) / grid.size


def backward(c: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.irfftn(c * grid.size, s=grid.shape, axes=tuple(range(-grid.dim, 0)))


@lru_cache(maxsize=32)
def k_odd(grid: Grid) -> tuple:
    """Wavenumbers for odd-order symbols: Nyquist entries set to zero.

    Using these in every first-derivative and projection symbol keeps the
    operators Hermitian-consistent and mutually exact (``div P f = 0``).
    """
    return tuple(np.where(np.abs(ki) == grid.n // 2, 0.0, ki) for ki in grid.k)


@lru_cache(maxsize=32)
def ik(grid: Grid) -> tuple:
    """``i k_a`` symbols with the Nyquist entries zeroed."""
    return tuple(1j * ki for ki in k_odd(grid))


def grad_array(c: np.ndarray, grid: Grid) -> np.ndarray:
    """Gradient of each component: result shape ``(C, dim) + spectral``."""
    symbols = ik(grid)
    return np.stack([c * s for s in symbols], axis=1)


def div_array(c: np.ndarray, grid: Grid) -> np.ndarray:
    symbols = ik(grid)
    return sum(c[a] * symbols[a] for a in range(grid.dim))


def leray_array(c: np.ndarray, grid: Grid) -> np.ndarray:
    k = [np.broadcast_to(ki, grid.spectral_shape) for ki in k_odd(grid)]
    k2 = sum(ki**2 for ki in k)
    k2 = np.where(k2 == 0, 1.0, k2)
    kdotf = sum(k[a] * c[a] for a in range(grid.dim))
    return np.stack([c[a] - k[a] * kdotf / k2 for a in range(grid.dim)])


# public operators ----------------------------------------------------------

def transform(field: PhysicalField) -> SpectralField:
    """Forward transform to Fourier-series coefficients."""
    if not np.all(np.isfinite(field.data)):
        raise ValueError("field contains non-finite samples")
    return SpectralField(field.grid, forward(field.data, field.grid))


def inverse_transform(field: SpectralField) -> PhysicalField:
    return PhysicalField(field.grid, backward(field.data, field.grid))


def multiplier_derivative(field: SpectralField, kind: str) -> SpectralField:
    """Apply ``grad`` (scalar in), ``divergence`` (vector in) or ``laplacian``."""
    g = field.grid
    if kind == "gradient":
        if field.components != 1:
            raise ShapeError("gradient expects a scalar field")
        return SpectralField(g, grad_array(field.data, g)[0])
    if kind == "divergence":
        if field.components != g.dim:
            raise ShapeError("divergence expects a vector field")
        return SpectralField(g, div_array(field.data, g)[None])
    if kind == "laplacian":
        return SpectralField(g, -g.k2 * field.data)
    raise ValueError(f"unknown derivative kind {kind!r}")


def leray_project(field: SpectralField) -> SpectralField:
    """Project onto divergence-free fields, ``(I - k k^T/|k|^2)`` per mode."""
    if field.components != field.grid.dim or field.grid.dim == 1:
        raise ShapeError("Leray projection expects a 3-D vector field")
    return SpectralField(field.grid, leray_array(field.data, field.grid))


def helmholtz(field: SpectralField, alpha: float, direction: str = "apply") -> SpectralField:
    """Multiply (``apply``) or divide (``invert``) by ``1 + alpha^2 |k|^2``."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    symbol = 1.0 + alpha**2 * field.grid.k2
    if direction == "apply":
        return SpectralField(field.grid, field.data * symbol)
    if direction == "invert":
        return SpectralField(field.grid, field.data / symbol)
    raise ValueError(f"direction must be 'apply' or 'invert', got {direction!r}")


def lowpass_sharp(field: SpectralField, kappa: float) -> SpectralField:
    """Zero every mode with ``|k| > kappa``; ``|k| == kappa`` is kept."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    return SpectralField(field.grid, np.where(field.grid.kmag <= kappa, field.data, 0))


def mollify(field: SpectralField, moll: MollifierSpec) -> SpectralField:
    return SpectralField(field.grid, field.data * moll.multiplier(field.grid))


def shift(field: SpectralField, xi) -> SpectralField:
    """Return ``f(. + xi)``; exact for fields without Nyquist content."""
    return SpectralField(field.grid, field.data * shift_symbol(field.grid, xi))


def shift_symbol(grid: Grid, xi) -> np.ndarray:
    xi = np.broadcast_to(np.asarray(xi, dtype=float), (grid.dim,))
    phase = sum(ki * x for ki, x in zip(grid.k, xi))
    return np.exp(1j * phase)


def dealias(field: SpectralField) -> SpectralField:
    return SpectralField(field.grid, np.where(field.grid.dealias_mask, field.data, 0))


def _index_map(n_from: int, n_to: int, last: bool):
    m = min(n_from, n_to) // 2
    if last:
        idx = np.arange(m)
        return idx, idx
    k = np.arange(-m + 1, m)
    return k % n_from, k % n_to


def resample_array(c: np.ndarray, src: Grid, dst: Grid) -> np.ndarray:
    """Zero-pad or truncate coefficients; Nyquist modes of the coarser grid are dropped."""
    out = np.zeros(c.shape[:1] + dst.spectral_shape, dtype=complex)
    maps = [_index_map(src.n, dst.n, a == src.dim - 1) for a in range(src.dim)]
    src_idx = np.ix_(*[m[0] for m in maps])
    dst_idx = np.ix_(*[m[1] for m in maps])
    for comp in range(c.shape[0]):
        out[comp][dst_idx] = c[comp][src_idx]
    return out


def resample(field: SpectralField, grid: Grid) -> SpectralField:
    if grid.dim != field.grid.dim:
        raise ShapeError("cannot resample across dimensions")
    return SpectralField(grid, resample_array(field.data, field.grid, grid))


def inner(a: SpectralField, b: SpectralField) -> float:
    """L2 inner product over the torus, via Parseval."""
    if a.grid != b.grid or a.components != b.components:
        raise ShapeError("inner product of mismatched fields")
    g = a.grid
    s = (g.hermitian_weight * (a.data * b.data.conj()).real).sum()
    return float(g.volume * s)


def l2_norm(a: SpectralField) -> float:
    return float(np.sqrt(max(inner(a, a), 0.0)))


def mean(a: SpectralField) -> np.ndarray:
    """Spatial mean of each component (the ``k = 0`` coefficient)."""
    return a.data[(slice(None),) + (0,) * a.grid.dim].real.copy()
