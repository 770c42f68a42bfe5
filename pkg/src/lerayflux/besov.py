"""Littlewood-Paley blocks, inhomogeneous Besov norms, paraproducts and
structure-function regularity estimates.

The dyadic template is a smoothed radial step ``chi`` equal to one on
``|k| <= 3/4`` and zero beyond ``4/3``; the annular profile is
``phi(k) = chi(k/2) - chi(k)``.  Partial sums telescope, so
``chi + sum_j phi(2^-j k) = 1`` holds to rounding on every lattice point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import stats

from . import spectral as sp
from .diagnostics import axis_directions, increment_shift
from .errors import ShapeError
from .grid import Grid, SpectralField

INNER = 0.75
OUTER = 4.0 / 3.0


def _edge(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)
    a, b = _edge(t), _edge(1.0 - t)
    return a / (a + b)


def chi_profile(r):
    """Low-frequency cutoff as a function of ``|k|``."""
    return 1.0 - smooth_step((np.asarray(r, dtype=float) - INNER) / (OUTER - INNER))


def phi_profile(r):
    r = np.asarray(r, dtype=float)
    return chi_profile(r / 2.0) - chi_profile(r)


@dataclass(frozen=True)
class DyadicPartition:
    """Block profiles ``j = -1 .. j_max`` on the half spectrum of ``grid``."""

    grid: Grid

    @cached_property
    def kmax(self) -> float:
        return float(self.grid.kmag.max())

    @cached_property
    def j_max(self) -> int:
        """Smallest ``J`` with ``chi(2^-(J+1) k) = 1`` on the whole lattice."""
        j = -1
        while self.kmax * 2.0 ** -(j + 1) > INNER:
            j += 1
        return j

    @property
    def indices(self) -> range:
        return range(-1, self.j_max + 1)

    @cached_property
    def _low(self) -> list:
        # S_{j+1} profiles chi(2^-(j+1) k) for j = -1 .. j_max
        return [chi_profile(self.grid.kmag * 2.0 ** -(j + 1)) for j in self.indices]

    def profile(self, j: int) -> np.ndarray:
        if j < -1:
            return np.zeros(self.grid.spectral_shape)
        if j > self.j_max:
            return np.zeros(self.grid.spectral_shape)
        low = self._low
        i = j + 1
        return low[0] if j == -1 else low[i] - low[i - 1]

    def low_profile(self, j: int) -> np.ndarray:
        """``S_j = sum_{k <= j-1} Delta_k``, i.e. ``chi(2^-j k)``."""
        if j <= -1:
            return np.zeros(self.grid.spectral_shape)
        if j > self.j_max + 1:
            return np.ones(self.grid.spectral_shape)
        return self._low[j]

    def resolved(self, j: int) -> bool:
        """True when the whole annulus of block ``j`` fits inside the grid's cube."""
        return (8.0 / 3.0) * 2.0**j < self.grid.n // 2

    def unity_residual(self) -> float:
        total = sum(self.profile(j) for j in self.indices)
        return float(np.abs(total - 1.0).max())


def _check_partition(u: SpectralField, partition: DyadicPartition):
    if partition.grid != u.grid:
        raise ShapeError("partition built for a different grid")


def lp_block(u: SpectralField, j: int, partition: DyadicPartition) -> SpectralField:
    """``Delta_j u``; ``j = -1`` is the low-frequency piece ``S_0 u``."""
    _check_partition(u, partition)
    return SpectralField(u.grid, u.data * partition.profile(j))


def lp_norm(f: np.ndarray, grid: Grid, p: float) -> float:
    """``L^p`` norm of samples (pointwise Euclidean over components)."""
    mag = np.sqrt((f**2).sum(axis=0)) if f.ndim > grid.dim else np.abs(f)
    if np.isinf(p):
        return float(mag.max())
    return float((np.sum(mag**p) * grid.cell_volume) ** (1.0 / p))


def _check_pq(p, q):
    for name, val in (("p", p), ("q", q)):
        if not val >= 1:
            raise ValueError(f"{name} must lie in [1, inf], got {val}")


def block_norms(u: SpectralField, p: float, partition: DyadicPartition, mapper=map) -> np.ndarray:
    """``||Delta_j u||_{L^p}`` for ``j = -1 .. j_max``."""
    _check_partition(u, partition)
    _check_pq(p, 1)

    def one(j):
        return lp_norm(sp.backward(u.data * partition.profile(j), u.grid), u.grid, p)

    return np.array(list(mapper(one, partition.indices)))


def besov_from_blocks(blocks, s: float, q: float) -> float:
    """Combine block norms (starting at ``j = -1``) into the Besov norm."""
    blocks = np.asarray(blocks, dtype=float)
    j = np.arange(-1, blocks.size - 1)
    terms = 2.0 ** (j * s) * blocks
    if np.isinf(q):
        return float(terms.max()) if terms.size else 0.0
    return float(np.sum(terms**q) ** (1.0 / q))


def besov_norm(u: SpectralField, s: float, p: float, q: float, partition: DyadicPartition | None = None) -> float:
    partition = partition or DyadicPartition(u.grid)
    _check_pq(p, q)
    return besov_from_blocks(block_norms(u, p, partition), s, q)


def paraproduct(u: SpectralField, v: SpectralField, partition: DyadicPartition | None = None, pad: int = 2):
    """Physical samples of ``(T_u v, T_v u, R(u, v))`` on the input grid.

    Block products are formed on a ``pad``-refined grid and sampled back, so
    the three parts add up to the pointwise product ``u v``.
    """
    if u.components != 1 or v.components != 1:
        raise ShapeError("paraproduct expects scalar fields")
    if u.grid != v.grid:
        raise ShapeError("paraproduct inputs live on different grids")
    g = u.grid
    partition = partition or DyadicPartition(g)
    _check_partition(u, partition)
    G = g.padded(pad)
    idx = list(partition.indices)

    def lift(c):
        return sp.backward(sp.resample_array(c, g, G), G)[0]

    du = [lift(u.data * partition.profile(j)) for j in idx]
    dv = [lift(v.data * partition.profile(j)) for j in idx]
    tuv = np.zeros(G.shape)
    tvu = np.zeros(G.shape)
    rem = np.zeros(G.shape)
    for a, j in enumerate(idx):
        su = sum(du[:max(a - 1, 0)], np.zeros(G.shape))  # S_{j-1}: blocks k <= j-2
        sv = sum(dv[:max(a - 1, 0)], np.zeros(G.shape))
        tuv += su * dv[a]
        tvu += sv * du[a]
        for b in range(max(a - 1, 0), min(a + 2, len(idx))):
            rem += du[a] * dv[b]
    sub = (slice(None, None, pad),) * g.dim
    return tuv[sub], tvu[sub], rem[sub]


# structure functions --------------------------------------------------------

@dataclass
class StructureCurve:
    p: float
    xi: np.ndarray
    values: np.ndarray

    def rows(self):
        return zip(self.xi, self.values)


def structure_function(u: SpectralField, p: float, xi_magnitudes, directions=None,
                       mode: str = "spectral") -> StructureCurve:
    """Direction-averaged ``||u(. + xi) - u||_{L^p}`` per ``|xi|``."""
    g = u.grid
    xi = np.asarray(xi_magnitudes, dtype=float)
    if np.any(xi <= 0) or np.any(xi >= np.pi):
        raise ValueError("increment magnitudes must lie in (0, pi)")
    dirs = axis_directions(g.dim) if directions is None else np.asarray(directions, dtype=float)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    base = sp.backward(u.data, g)
    vals = np.array([
        np.mean([lp_norm(increment_shift(u, r * e, mode, base), g, p) for e in dirs]) for r in xi
    ])
    return StructureCurve(p, xi, vals)


@dataclass(frozen=True)
class RegularityFit:
    exponent: float
    stderr: float
    n_points: int

    @property
    def interval(self) -> tuple:
        """Approximate 95% confidence interval."""
        half = stats.t.ppf(0.975, max(self.n_points - 2, 1)) * self.stderr
        return self.exponent - half, self.exponent + half


def _fit(x, y, need_decade: bool) -> RegularityFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 4:
        raise ValueError("regularity fit needs at least 4 points")
    if need_decade and x.max() / x.min() < 10.0 * (1 - 1e-9):
        raise ValueError("fit window must span at least one decade")
    if not np.all(y > 0):
        raise ValueError("degenerate curve: non-positive values cannot be fitted in log-log")
    res = stats.linregress(np.log(x), np.log(y))
    return RegularityFit(float(res.slope), float(res.stderr), int(x.size))


def regularity_fit(curve: StructureCurve, window: tuple | None = None) -> RegularityFit:
    """Slope of ``log S_p`` against ``log |xi|`` over ``window`` (inclusive)."""
    xi, vals = curve.xi, curve.values
    if window is not None:
        sel = (xi >= window[0]) & (xi <= window[1])
        xi, vals = xi[sel], vals[sel]
    return _fit(xi, vals, need_decade=True)


def block_regularity(blocks, j_range: tuple | None = None) -> RegularityFit:
    """Decay rate ``s`` in ``||Delta_j u|| ~ 2^(-j s)`` fitted over ``j_range``."""
    blocks = np.asarray(blocks, dtype=float)
    j = np.arange(-1, blocks.size - 1)
    if j_range is not None:
        sel = (j >= j_range[0]) & (j <= j_range[1])
        j, blocks = j[sel], blocks[sel]
    fit = _fit(2.0**j, blocks, need_decade=False)
    return RegularityFit(-fit.exponent, fit.stderr, fit.n_points)


@dataclass
class BesovReport:
    s: float
    p: float
    q: float
    blocks: np.ndarray
    norm: float
    curve: StructureCurve | None = None
    fit: RegularityFit | None = None
    extra: dict = field(default_factory=dict)

    def rows(self):
        return zip(range(-1, len(self.blocks) - 1), self.blocks)

    def check(self) -> bool:
        return self.norm == besov_from_blocks(self.blocks, self.s, self.q)


def besov_report(u: SpectralField, s: float, p: float, q: float, xi_list=None, fit_window=None,
                 mode: str = "spectral", mapper=map) -> BesovReport:
    partition = DyadicPartition(u.grid)
    _check_pq(p, q)
    blocks = block_norms(u, p, partition, mapper)
    report = BesovReport(s, p, q, blocks, besov_from_blocks(blocks, s, q))
    if xi_list is not None and len(xi_list):
        report.curve = structure_function(u, p, xi_list, mode=mode)
        report.fit = regularity_fit(report.curve, fit_window)
    return report


# synthetic fields -----------------------------------------------------------

def synthetic_holder_field(grid: Grid, h: float, seed: int = 0, kmin: float = 1.0,
                           kmax: float | None = None) -> SpectralField:
    """Random-phase scalar with per-mode amplitude ``|k|^-(h + dim/2)``.

    The shell-summed amplitude then scales as ``|k|^-(h + 1/2)``, the
    spectrum of a field with increment exponent ``h``.  Modes outside
    ``kmin <= |k| <= kmax`` (default: two-thirds band) are zero.
    """
    rng = np.random.default_rng(seed)
    noise = sp.forward(rng.standard_normal(grid.shape)[None], grid)
    mod = np.abs(noise)
    phase = np.divide(noise, mod, out=np.zeros_like(noise), where=mod > 0)
    kmag = grid.kmag
    kmax = grid.n / 3.0 if kmax is None else kmax
    band = (kmag >= kmin) & (kmag <= kmax) & ~grid.nyquist
    amp = np.where(band, np.where(kmag > 0, kmag, 1.0) ** -(h + grid.dim / 2.0), 0.0)
    return SpectralField(grid, phase * amp)
