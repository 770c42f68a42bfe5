"""One-dimensional shock study: dissipation, Besov norms and structure
functions of a stationary sawtooth.

The sawtooth ``u = sigma (pi - x) / (2 pi)`` jumps by ``sigma`` at ``x = 0``.
All increments use whole-cell shifts, so the discrete sums involve only
grid samples and no spectral ringing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import besov as bv
from .diagnostics import increment_curve, loglog_slope
from .errors import ResolutionError
from .grid import Grid, PhysicalField, SpectralField
from .model import ICSpec, ModelParams, initial_condition
from .mollifier import MollifierSpec
from . import spectral as sp

MIN_POINTS = 1024
EPS_LADDER = (0.4, 0.2, 0.1, 0.05)


def sawtooth(n: int, sigma: float = 1.0) -> SpectralField:
    grid = Grid(1, n)
    params = ModelParams(alpha=0.0, nu=0.0, diff_d=0.0, K=0.0)
    return initial_condition("burgers_shock", grid, params, ICSpec(amplitude=sigma)).u


def dissipation_density(u: SpectralField, moll: MollifierSpec) -> PhysicalField:
    """``1/12 int phi_eps'(xi) (u(x + xi) - u(x))^3 dxi`` at each grid point.

    Nodes sit on whole cells, so the increments are exact permutations of
    the samples.
    """
    g = u.grid
    if g.dim != 1:
        raise ValueError("dissipation_density is one-dimensional")
    quad = moll.quadrature(1, spacing=g.dx)
    if len(quad.nodes) < 5:
        raise ResolutionError(f"epsilon={moll.epsilon} spans fewer than 5 grid cells")
    base = sp.backward(u.data, g)[0]
    out = np.zeros(g.shape)
    steps = np.rint(quad.nodes[:, 0] / g.dx).astype(int)
    for s, w in zip(steps, quad.grad_weights[:, 0]):
        out += w * (np.roll(base, -s) - base) ** 3
    return PhysicalField(g, out / 12.0)


def total_dissipation(u: SpectralField, moll: MollifierSpec) -> float:
    d = dissipation_density(u, moll)
    return float(d.data.sum() * d.grid.cell_volume)


def observed_order(eps, values) -> float:
    """Convergence order from the three smallest ``eps`` of a halving ladder."""
    order = np.argsort(eps)
    v = np.asarray(values, dtype=float)[order]
    num, den = v[2] - v[1], v[1] - v[0]
    if den == 0 or num / den <= 0:
        raise ValueError("ladder values are not in the asymptotic regime")
    return float(np.log2(num / den))


def richardson(eps, values, first_order: float) -> np.ndarray:
    """Richardson table for a halving ladder; row ``m`` removes orders ``p .. p+m-1``.

    Returns the triangular table with ``nan`` padding; the extrapolated value
    is the last entry of the last row.
    """
    if not first_order > 0:
        raise ValueError("Richardson extrapolation needs a positive leading order")
    order = np.argsort(eps)[::-1]
    e = np.asarray(eps, dtype=float)[order]
    if not np.allclose(e[:-1] / e[1:], 2.0):
        raise ValueError("Richardson extrapolation expects an eps ladder of ratio 2")
    v = np.asarray(values, dtype=float)[order]
    m = v.size
    table = np.full((m, m), np.nan)
    table[0] = v
    for level in range(1, m):
        f = 2.0 ** (first_order + level - 1)
        for i in range(level, m):
            table[level, i] = (f * table[level - 1, i] - table[level - 1, i - 1]) / (f - 1.0)
    return table


@dataclass
class BurgersReport:
    sigma: float
    n: int
    eps: np.ndarray
    dissipation: np.ndarray  # signed integrals per eps
    order: float
    extrapolated: float
    besov: dict = field(default_factory=dict)  # (s, n) -> norm
    structure: bv.StructureCurve | None = None
    structure_fit: bv.RegularityFit | None = None
    increment_slope: float | None = None

    def rows(self):
        for e, d in zip(self.eps, self.dissipation):
            yield e, d, abs(d)

    def summary(self) -> dict:
        out = {
            "sigma": self.sigma,
            "n": self.n,
            "order": self.order,
            "dissipation_signed": self.extrapolated,
            "dissipation": abs(self.extrapolated),
            "dissipation_over_sigma3": abs(self.extrapolated) / self.sigma**3,
        }
        for (s, n), val in sorted(self.besov.items()):
            out[f"besov_s{s:.4g}_n{n}"] = val
        if self.structure_fit is not None:
            out["structure_exponent"] = self.structure_fit.exponent
            out["structure_stderr"] = self.structure_fit.stderr
        if self.increment_slope is not None:
            out["increment_slope"] = self.increment_slope
        return out


def default_xi(n: int) -> np.ndarray:
    """Whole-cell separations from 4 cells up to about 0.1 (at least a decade)."""
    dx = 2 * np.pi / n
    cells = np.unique(np.rint(np.geomspace(4, max(40.0, 0.1 / dx), 10)).astype(int))
    return cells * dx


def burgers_study(sigma: float = 1.0, n: int = 4096, eps_list=EPS_LADDER, points: int = 17,
                  s_values=(1.0 / 3.0, 0.5), xi=None, mapper=map) -> BurgersReport:
    if n < MIN_POINTS:
        raise ResolutionError(f"n={n} is below the minimum {MIN_POINTS} for the shock study")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    u = sawtooth(n, sigma)
    eps = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    diss = np.array(list(mapper(lambda e: total_dissipation(u, MollifierSpec(e, points)), eps)))
    order = observed_order(eps, diss)
    # a mollified jump converges at least linearly; coarse ladders can hide that
    table = richardson(eps, diss, max(1, round(order)))
    report = BurgersReport(sigma, n, eps, diss, order, float(table[-1, -1]))

    for m in (n // 2, n):
        um = u if m == n else sawtooth(m, sigma)
        part = bv.DyadicPartition(um.grid)
        blocks = bv.block_norms(um, 3, part)
        for s in s_values:
            report.besov[(float(s), m)] = bv.besov_from_blocks(blocks, s, np.inf)

    xi = default_xi(n) if xi is None else np.asarray(xi, dtype=float)
    report.structure = bv.structure_function(u, 3, xi, mode="grid")
    report.structure_fit = bv.regularity_fit(report.structure)
    curve = increment_curve(u, u, None, xi, mode="grid")
    report.increment_slope = loglog_slope(curve.xi, curve.I1)[0]
    return report
