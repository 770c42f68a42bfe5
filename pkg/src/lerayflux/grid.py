"""Periodic torus grids and the physical/spectral field containers.

Spectral coefficients use the Fourier-series normalisation
``f(x) = sum_k c_k exp(i k.x)`` and are stored in the real-FFT half
layout: every axis but the last spans the full integer lattice in FFT
order, the last axis holds ``k = 0 .. n/2``.  Fields always carry a
leading component axis (length 1 for scalars).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ShapeError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the ``dim``-torus of period 2*pi per axis."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 3):
            raise ValueError(f"dim must be 1 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"n must be even and >= 8, got {self.n}")

    @property
    def length(self) -> float:
        return TWO_PI

    @property
    def dx(self) -> float:
        return TWO_PI / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def volume(self) -> float:
        return TWO_PI**self.dim

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def spectral_shape(self) -> tuple:
        return (self.n,) * (self.dim - 1) + (self.n // 2 + 1,)

    @property
    def axes(self) -> tuple:
        """Spatial axes of a component-stacked array."""
        return tuple(range(1, self.dim + 1))

    @cached_property
    def x(self) -> tuple:
        """Sparse coordinate arrays ``x_i = 2*pi*j/n``, broadcastable."""
        pts = np.arange(self.n) * self.dx
        out = []
        for a in range(self.dim):
            shp = [1] * self.dim
            shp[a] = self.n
            out.append(pts.reshape(shp))
        return tuple(out)

    @cached_property
    def k(self) -> tuple:
        """Sparse integer wavenumber arrays on the half-spectrum layout.

        The Nyquist index carries ``+n/2``.
        """
        full = np.fft.fftfreq(self.n, d=1.0 / self.n)
        full[self.n // 2] = self.n // 2
        half = np.arange(self.n // 2 + 1, dtype=float)
        out = []
        for a in range(self.dim):
            shp = [1] * self.dim
            vals = half if a == self.dim - 1 else full
            shp[a] = vals.size
            out.append(vals.reshape(shp))
        return tuple(out)

    @cached_property
    def k2(self) -> np.ndarray:
        return sum(np.broadcast_to(ki**2, self.spectral_shape) for ki in self.k)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def nyquist(self) -> np.ndarray:
        """Mask of modes with any component at the Nyquist wavenumber."""
        mask = np.zeros(self.spectral_shape, dtype=bool)
        for ki in self.k:
            mask |= np.broadcast_to(np.abs(ki) == self.n // 2, self.spectral_shape)
        return mask

    @cached_property
    def hermitian_weight(self) -> np.ndarray:
        """Multiplicity of each stored mode in the full lattice."""
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        shp = [1] * (self.dim - 1) + [w.size]
        return np.broadcast_to(w.reshape(shp), self.spectral_shape)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep modes with every ``|k_i| <= n/3``."""
        keep = np.ones(self.spectral_shape, dtype=bool)
        for ki in self.k:
            keep &= np.broadcast_to(3 * np.abs(ki) <= self.n, self.spectral_shape)
        return keep

    def padded(self, factor: int) -> "Grid":
        return Grid(self.dim, self.n * int(factor))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Real samples at grid points, shape ``(components,) + grid.shape``."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == self.grid.dim:
            data = data[None]
        if data.shape[1:] != self.grid.shape:
            raise ShapeError(f"sample shape {data.shape[1:]} does not match grid {self.grid.shape}")
        if data.shape[0] not in (1, self.grid.dim):
            raise ShapeError(f"{data.shape[0]} components on a {self.grid.dim}-D grid")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def components(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, i):
        return self.data[i]


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier-series coefficients on the half-spectrum layout."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim == self.grid.dim:
            data = data[None]
        if data.shape[1:] != self.grid.spectral_shape:
            raise ShapeError(
                f"coefficient shape {data.shape[1:]} does not match grid {self.grid.spectral_shape}"
            )
        if data.shape[0] not in (1, self.grid.dim):
            raise ShapeError(f"{data.shape[0]} components on a {self.grid.dim}-D grid")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def components(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, i):
        return self.data[i]

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same(self, other)
        return SpectralField(self.grid, self.data + other.data)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same(self, other)
        return SpectralField(self.grid, self.data - other.data)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.grid, self.data * scalar)

    __rmul__ = __mul__

    def full(self) -> np.ndarray:
        """Coefficients on the complete lattice, numpy FFT ordering."""
        g = self.grid
        phys = np.fft.irfftn(self.data * g.size, s=g.shape, axes=g.axes)
        return np.fft.fftn(phys, axes=g.axes) / g.size


def _check_same(a, b):
    if a.grid != b.grid:
        raise ShapeError(f"grid mismatch: {a.grid} vs {b.grid}")
    if a.components != b.components:
        raise ShapeError(f"component mismatch: {a.components} vs {b.components}")
