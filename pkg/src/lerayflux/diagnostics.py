"""Energy, spectral flux, Duchon-Robert defects and the local balance residual.

Cubic quantities are formed on a grid zero-padded by ``pad`` (default 2),
which makes products of band-limited inputs exact at the original grid
points.  Integrals use the equal-weight rule on whichever grid holds the
integrand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft as sfft
from scipy import stats

from . import spectral as sp
from .errors import ShapeError
from .grid import Grid, PhysicalField, SpectralField
from .model import EnergySeries, ModelParams, ModelState, pressure_solve, simulate, step_rk4
from .mollifier import MollifierSpec, bump

DEFAULT_PAD = 2


def _on(field: SpectralField, grid: Grid) -> np.ndarray:
    """Physical samples of ``field`` on ``grid`` (padded or original)."""
    c = field.data if grid == field.grid else sp.resample_array(field.data, field.grid, grid)
    return sp.backward(c, grid)


def _integral(values: np.ndarray, grid: Grid) -> float:
    return float(values.sum() * grid.cell_volume)


# total energy ---------------------------------------------------------------

def total_energy(state: ModelState):
    """``(||u||^2, ||Z||^2, sum)`` by grid quadrature (no 1/2 factor)."""
    g = state.grid
    e_u = _integral(sp.inverse_transform(state.u).data ** 2, g)
    e_z = _integral(sp.inverse_transform(state.Z).data ** 2, g)
    return e_u, e_z, e_u + e_z


def energy_equality_check(series: EnergySeries, t1: float, t2: float, floor: float = 1e-300) -> float:
    """Relative change of total energy between two times (linear interpolation)."""
    t = np.asarray(series.t)
    e = np.asarray(series.E_total)
    for s in (t1, t2):
        if s < t[0] - 1e-12 or s > t[-1] + 1e-12:
            raise ValueError(f"time {s} outside series range [{t[0]}, {t[-1]}]")
    e1, e2 = np.interp([t1, t2], t, e)
    return float(abs(e1 - e2) / max(e1, floor))


# spectral flux --------------------------------------------------------------

def flux_density(u: SpectralField, kappa: float, pad: int = DEFAULT_PAD) -> PhysicalField:
    """Pointwise flux ``(P(u u) - Pu Pu) : grad Pu`` through ``|k| = kappa``.

    Returned on the ``pad``-times finer grid, where it is alias-free.
    """
    g = u.grid
    if u.components != g.dim:
        raise ShapeError("flux density needs a vector field")
    if pad < 2:
        raise ValueError("pad must be >= 2 for an exact cubic contraction")
    G = g.padded(pad)
    uk = sp.lowpass_sharp(u, kappa)
    U = _on(u, G)
    Uk = _on(uk, G)
    pairs = [(i, j) for i in range(g.dim) for j in range(i, g.dim)]
    uu = sp.forward(np.stack([U[i] * U[j] for i, j in pairs]), G)
    uu = sp.backward(np.where(G.kmag <= kappa, uu, 0), G)
    grad = sp.backward(sp.grad_array(sp.resample_array(uk.data, g, G), G), G)  # [i, j] = d_j Uk_i
    pi = np.zeros(G.shape)
    for n, (i, j) in enumerate(pairs):
        tau = uu[n] - Uk[i] * Uk[j]
        sym = grad[i, j] + grad[j, i] if i != j else grad[i, i]
        pi += tau * sym
    return PhysicalField(G, pi)


def flux_integral(u: SpectralField, kappa: float, pad: int = DEFAULT_PAD) -> float:
    pi = flux_density(u, kappa, pad)
    return _integral(pi.data[0], pi.grid)


@dataclass
class FluxReport:
    kappas: np.ndarray
    Pi: np.ndarray
    fields: list | None = None
    slope: float | None = None
    slope_range: tuple | None = None

    def rows(self):
        return zip(self.kappas, self.Pi)


def loglog_slope(x, y):
    """Least-squares slope of ``log|y|`` vs ``log x`` and its standard error."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        raise ValueError("need at least two positive samples for a log-log fit")
    fit = stats.linregress(np.log(x[ok]), np.log(y[ok]))
    return float(fit.slope), float(fit.stderr)


def flux_spectrum(u: SpectralField, kappas: Sequence[float], pad: int = DEFAULT_PAD,
                  fit_range: tuple | None = None, keep_fields: bool = False, mapper=map) -> FluxReport:
    kappas = np.asarray(kappas, dtype=float)
    if kappas.size == 0:
        raise ValueError("empty kappa list")
    if np.any(np.diff(kappas) <= 0):
        raise ValueError("kappa list must be strictly increasing")
    dens = list(mapper(lambda k: flux_density(u, k, pad), kappas))
    Pi = np.array([_integral(d.data[0], d.grid) for d in dens])
    report = FluxReport(kappas, Pi, dens if keep_fields else None)
    if fit_range is not None:
        lo, hi = fit_range
        sel = (kappas >= lo) & (kappas <= hi)
        report.slope, _ = loglog_slope(kappas[sel], Pi[sel])
        report.slope_range = (lo, hi)
    return report


# Duchon-Robert defects ------------------------------------------------------

def _shifted_batches(coeffs: np.ndarray, grid: Grid, nodes: np.ndarray, batch: int):
    """Yield ``(node indices, physical samples of coeffs shifted by each node)``.

    Shifts are applied one axis at a time: nodes sharing their leading
    coordinates reuse the partial inverse transform over those axes and
    only differ in the final real transform along the last axis.
    """
    d, n = grid.dim, grid.n
    k1d = [np.ravel(ki) for ki in grid.k]
    lead = coeffs.ndim - d

    def along(c, a, shift):
        shape = [1] * c.ndim
        shape[lead + a] = k1d[a].size
        return sfft.ifft(c * np.exp(1j * shift * k1d[a]).reshape(shape), axis=lead + a)

    groups = {}
    for i, row in enumerate(nodes):
        groups.setdefault(tuple(row[:-1]), []).append(i)
    cache = {}
    scaled = coeffs * grid.size
    for prefix in sorted(groups):
        cur = scaled
        for a in range(d - 1):
            key = prefix[:a + 1]
            if a not in cache or cache[a][0] != key:
                cache[a] = (key, along(cur, a, prefix[a]))
            cur = cache[a][1]
        members = np.asarray(groups[prefix])
        for start in range(0, members.size, batch):
            idx = members[start:start + batch]
            phase = np.exp(1j * nodes[idx, -1:] * k1d[-1][None, :])
            phase = phase.reshape((idx.size,) + (1,) * (cur.ndim - 1) + (k1d[-1].size,))
            yield idx, sfft.irfft(cur[None] * phase, n=n, axis=-1)


def defect_increment(a: SpectralField, b: SpectralField, moll: MollifierSpec, batch: int = 32) -> PhysicalField:
    """``1/2 int grad(phi_eps)(xi) . da(xi;x) |db(xi;x)|^2 dxi`` at the grid points.

    ``a`` is the transporting vector field, ``b`` the transported one (vector
    or scalar).  Increments come from exact spectral shifts.
    """
    g = a.grid
    if b.grid != g:
        raise ShapeError("defect inputs live on different grids")
    if a.components != g.dim:
        raise ShapeError("the transporting field must be a vector")
    quad = moll.quadrature(g.dim)
    same = a is b
    coeffs = a.data if same else np.concatenate([a.data, b.data])
    base = sp.backward(coeffs, g)
    na = a.components
    out = np.zeros(g.shape)
    for idx, phys in _shifted_batches(coeffs, g, quad.nodes, batch):
        delta = phys - base[None]
        da = delta[:, :na]
        db = da if same else delta[:, na:]
        gw = quad.grad_weights[idx]
        proj = np.einsum("qa,qa...->q...", gw, da)
        out += np.einsum("q...,q...->...", proj, (db**2).sum(axis=1))
    return PhysicalField(g, 0.5 * out)


def defect_algebraic(a: SpectralField, b: SpectralField, moll: MollifierSpec, pad: int = DEFAULT_PAD,
                     padded: bool = False) -> PhysicalField:
    """Commutator form of the same defect, evaluated at the grid points::

        -1/2 d_i (a_i |b|^2)^e + 1/2 a_i d_i (|b|^2)^e + b_j d_i (b_j a_i)^e - a_i b_j d_i b_j^e

    ``padded=True`` returns the values on the refined grid instead.
    """
    g = a.grid
    if b.grid != g:
        raise ShapeError("defect inputs live on different grids")
    if a.components != g.dim:
        raise ShapeError("the transporting field must be a vector")
    G = g.padded(pad)
    m = moll.multiplier(G)
    ik = sp.ik(G)
    A = _on(a, G)
    B = _on(b, G)
    Q = (B**2).sum(axis=0)
    d, c = g.dim, b.components
    # one forward transform for every mollified product
    prods = np.concatenate([A * Q[None], Q[None], (B[:, None] * A[None]).reshape(c * d, *G.shape)])
    pc = sp.forward(prods, G) * m
    cubic = sum(ik[i] * pc[i] for i in range(d))
    grad_q = np.stack([ik[i] * pc[d] for i in range(d)])
    ba = pc[d + 1:].reshape(c, d, *G.spectral_shape)
    div_ba = np.stack([sum(ik[i] * ba[j, i] for i in range(d)) for j in range(c)])
    bc = sp.resample_array(b.data, g, G) * m
    grad_b = np.stack([ik[i] * bc for i in range(d)], axis=1)  # [j, i]
    back = sp.backward(np.concatenate([cubic[None], grad_q, div_ba, grad_b.reshape(c * d, *G.spectral_shape)]), G)
    t1 = back[0]
    t2 = back[1:1 + d]
    t3 = back[1 + d:1 + d + c]
    t4 = back[1 + d + c:].reshape(c, d, *G.shape)
    D = (-0.5 * t1 + 0.5 * (A * t2).sum(axis=0) + (B * t3).sum(axis=0)
         - np.einsum("i...,j...,ji...->...", A, B, t4))
    if padded:
        return PhysicalField(G, D)
    sub = (slice(None, None, pad),) * g.dim
    return PhysicalField(g, D[sub])


@dataclass
class DefectEntry:
    epsilon: float
    which: str
    increment: PhysicalField | None = None
    algebraic: PhysicalField | None = None

    def _field(self, form):
        f = getattr(self, form)
        if f is None:
            raise ValueError(f"form {form!r} was not computed")
        return f

    def abs_integral(self, form: str) -> float:
        f = self._field(form)
        return _integral(np.abs(f.data[0]), f.grid)

    def signed_integral(self, form: str) -> float:
        f = self._field(form)
        return _integral(f.data[0], f.grid)

    @property
    def discrepancy(self) -> float | None:
        """Relative L1 distance between the two forms."""
        if self.increment is None or self.algebraic is None:
            return None
        g = self.increment.grid
        diff = _integral(np.abs(self.increment.data - self.algebraic.data)[0], g)
        return diff / max(self.abs_integral("algebraic"), 1e-300)


FORMS = ("increment", "algebraic", "both")


def defect(v: SpectralField, pair: SpectralField, moll: MollifierSpec, which: str = "D1",
           form: str = "both", pad: int = DEFAULT_PAD) -> DefectEntry:
    """``D1`` takes ``(v, u)``; ``D2`` takes ``(u, Z)``: the first argument transports."""
    if which not in ("D1", "D2"):
        raise ValueError("which must be 'D1' or 'D2'")
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    if which == "D2" and pair.components != 1:
        raise ShapeError("D2 expects a scalar second argument")
    if which == "D1" and pair.components != v.grid.dim:
        raise ShapeError("D1 expects a vector second argument")
    entry = DefectEntry(moll.epsilon, which)
    if form in ("increment", "both"):
        entry.increment = defect_increment(v, pair, moll)
    if form in ("algebraic", "both"):
        entry.algebraic = defect_algebraic(v, pair, moll, pad)
    return entry


@dataclass
class DefectReport:
    entries: list = field(default_factory=list)

    COLUMNS = ("eps", "form", "D1_abs", "D1_signed", "D2_abs", "D2_signed", "discrepancy")

    def get(self, eps, which) -> DefectEntry:
        for e in self.entries:
            if e.which == which and np.isclose(e.epsilon, eps):
                return e
        raise KeyError((eps, which))

    @property
    def eps_list(self):
        return sorted({e.epsilon for e in self.entries}, reverse=True)

    def rows(self):
        for eps in self.eps_list:
            d1, d2 = self.get(eps, "D1"), self.get(eps, "D2")
            for form in ("increment", "algebraic"):
                if getattr(d1, form) is None:
                    continue
                disc = max(x for x in (d1.discrepancy, d2.discrepancy, 0.0) if x is not None) \
                    if d1.discrepancy is not None else float("nan")
                yield (eps, form, d1.abs_integral(form), d1.signed_integral(form),
                       d2.abs_integral(form), d2.signed_integral(form), disc)

    def slope(self, which: str, form: str) -> float:
        eps = np.array(self.eps_list)
        vals = [self.get(e, which).abs_integral(form) for e in eps]
        return loglog_slope(eps, vals)[0]


def defect_report(v: SpectralField, u: SpectralField, Z: SpectralField, eps_list: Sequence[float],
                  form: str = "both", points: int = 17, pad: int = DEFAULT_PAD, mapper=map) -> DefectReport:
    def one(eps):
        moll = MollifierSpec(eps, points)
        return [defect(v, u, moll, "D1", form, pad), defect(u, Z, moll, "D2", form, pad)]

    report = DefectReport()
    for pair in mapper(one, list(eps_list)):
        report.entries.extend(pair)
    return report


# increment integrals --------------------------------------------------------

def axis_directions(dim: int) -> np.ndarray:
    eye = np.eye(dim)
    return np.concatenate([eye, -eye])


def increment_shift(f: SpectralField, xi, mode: str = "spectral", base: np.ndarray | None = None) -> np.ndarray:
    """Physical samples of ``f(. + xi) - f``.

    ``mode='grid'`` rounds ``xi`` to whole cells and permutes samples, which
    is exact for discontinuous data where a spectral shift would ring.
    ``base`` may carry precomputed samples of ``f``.
    """
    g = f.grid
    if base is None:
        base = sp.backward(f.data, g)
    if mode == "grid":
        steps = np.rint(np.asarray(xi, dtype=float) / g.dx).astype(int)
        steps = np.broadcast_to(steps, (g.dim,))
        moved = np.roll(base, shift=tuple(int(-s) for s in steps), axis=g.axes)
        return moved - base
    if mode != "spectral":
        raise ValueError("mode must be 'spectral' or 'grid'")
    return sp.backward(f.data * sp.shift_symbol(g, xi), g) - base


@dataclass
class IncrementCurve:
    xi: np.ndarray
    I1: np.ndarray
    I2: np.ndarray

    COLUMNS = ("xi", "I1", "I2", "sigma1", "sigma2")

    @staticmethod
    def _sigma(xi, vals):
        s = vals / xi
        ref = s[np.argmax(xi)]
        return s / ref if ref > 0 else np.zeros_like(s)

    @property
    def sigma1(self):
        return self._sigma(self.xi, self.I1)

    @property
    def sigma2(self):
        return self._sigma(self.xi, self.I2)

    def rows(self):
        return zip(self.xi, self.I1, self.I2, self.sigma1, self.sigma2)


def increment_curve(v: SpectralField, u: SpectralField, Z: SpectralField | None, xi_magnitudes,
                    directions=None, mode: str = "spectral") -> IncrementCurve:
    """Direction-averaged ``int |dv||du|^2`` and ``int |du||dZ|^2`` per ``|xi|``."""
    g = v.grid
    xi = np.asarray(xi_magnitudes, dtype=float)
    if np.any(xi <= 0) or np.any(xi >= np.pi):
        raise ValueError("increment magnitudes must lie in (0, pi)")
    dirs = axis_directions(g.dim) if directions is None else np.asarray(directions, dtype=float)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    I1 = np.zeros(xi.size)
    I2 = np.zeros(xi.size)
    bases = [None if f is None else sp.backward(f.data, g) for f in (v, u, Z)]
    for n, r in enumerate(xi):
        for e in dirs:
            s = r * e
            dv = np.sqrt((increment_shift(v, s, mode, bases[0]) ** 2).sum(axis=0))
            du2 = (increment_shift(u, s, mode, bases[1]) ** 2).sum(axis=0)
            I1[n] += _integral(dv * du2, g)
            if Z is not None:
                dz2 = increment_shift(Z, s, mode, bases[2])[0] ** 2
                I2[n] += _integral(np.sqrt(du2) * dz2, g)
    return IncrementCurve(xi, I1 / len(dirs), I2 / len(dirs))


# local energy balance -------------------------------------------------------

def _div(vec_phys: np.ndarray, G: Grid) -> np.ndarray:
    c = sp.forward(vec_phys, G)
    return sp.backward(sp.div_array(c, G), G)


def balance_residual(window: Sequence[ModelState], params: ModelParams, moll: MollifierSpec,
                     chi: np.ndarray | None = None, pressures: Sequence[SpectralField] | None = None,
                     variant: str = "inviscid", form: str = "algebraic", pad: int = DEFAULT_PAD,
                     rates: tuple | None = None) -> float:
    """Pair the mollified local energy balance with a spatial weight ``chi``.

    ``window`` holds three equally spaced states; the time derivative is the
    centred difference, every other term is taken at the middle state.
    ``chi`` is sampled on the ``pad``-refined grid (``None`` means 1).
    The pressure of the middle state is recomputed exactly unless given.
    ``rates = (du/dt, dZ/dt)`` at the middle state, if supplied, replaces
    the centred difference (any grid at least as fine as the state's).
    """
    if len(window) != 3:
        raise ValueError("balance residual needs a window of three states")
    t0, t1, t2 = (s.t for s in window)
    h1, h2 = t1 - t0, t2 - t1
    if h1 <= 0 or abs(h1 - h2) > 1e-9 * max(abs(h1), 1.0):
        raise ValueError("snapshots must be uniformly spaced in time")
    mid = window[1]
    g = mid.grid
    G = g.padded(pad)
    m = moll.multiplier(G)

    def moll_phys(f: SpectralField):
        return sp.backward(sp.resample_array(f.data, g, G) * m, G)

    def energy_density(s: ModelState):
        return ((_on(s.u, G) * moll_phys(s.u)).sum(axis=0)
                + (_on(s.Z, G) * moll_phys(s.Z)).sum(axis=0))

    if rates is None:
        dt_term = (energy_density(window[2]) - energy_density(window[0])) / (2 * h1)
    else:
        dt_term = 0.0
        for f, df in zip((mid.u, mid.Z), rates):
            dfc = sp.resample_array(df.data, df.grid, G)
            fc = sp.resample_array(f.data, g, G)
            dt_term = dt_term + (sp.backward(dfc, G) * sp.backward(fc * m, G)
                                 + sp.backward(fc, G) * sp.backward(dfc * m, G)).sum(axis=0)

    u, v, Z = _on(mid.u, G), _on(mid.v, G), _on(mid.Z, G)[0]
    ue, Ze = moll_phys(mid.u), moll_phys(mid.Z)[0]
    if pressures is not None:
        p_c = pressures[1] if len(pressures) == 3 else pressures[0]
        p_c = sp.resample(p_c, G) if p_c.grid != G else p_c
    else:
        p_c = pressure_solve(mid.u, mid.v, grid=G)
    p = sp.backward(p_c.data, G)[0]
    pe = sp.backward(p_c.data * m, G)[0]

    def mollified(x):
        return sp.backward(sp.forward(x, G) * m, G)

    q = (u**2).sum(axis=0)
    flux = (pe * u + p * ue
            + 0.5 * (mollified(q[None] * v) - mollified(q[None])[0] * v)
            + (u * ue).sum(axis=0) * v
            + 0.5 * (mollified((Z**2)[None] * u) - mollified((Z**2)[None])[0] * u)
            + Z * Ze * u)
    R = dt_term + _div(flux, G)

    if form == "algebraic":
        defects = (defect_algebraic(mid.v, mid.u, moll, pad, padded=True).data[0]
                   + defect_algebraic(mid.u, mid.Z, moll, pad, padded=True).data[0])
    elif form == "increment":
        # cubic defects are only representable on the refined grid
        uG, vG, zG = (sp.resample(f, G) for f in (mid.u, mid.v, mid.Z))
        defects = defect_increment(vG, uG, moll).data[0] + defect_increment(uG, zG, moll).data[0]
    else:
        raise ValueError("form must be 'algebraic' or 'increment'")
    R = R + defects

    rate = params.reaction_rate
    if rate:
        R = R + 2 * rate * Z * Ze
    if variant == "viscous":
        lap = lambda f: sp.backward(-G.k2 * sp.resample_array(f.data, g, G), G)
        lap_e = lambda f: sp.backward(-G.k2 * sp.resample_array(f.data, g, G) * m, G)
        R = R - params.nu * ((u * lap_e(mid.u)).sum(axis=0) + (ue * lap(mid.u)).sum(axis=0))
        R = R - params.diff_d * (Z * lap_e(mid.Z)[0] + Ze * lap(mid.Z)[0])
    weight = 1.0 if chi is None else chi
    return _integral(R * weight, G)


def spatial_weight(grid: Grid, center, radius: float) -> np.ndarray:
    """Smooth bump of ``radius`` around ``center`` (periodic distance) sampled on ``grid``."""
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.dim,))
    if not 0 < radius <= np.pi:
        raise ValueError("weight radius must lie in (0, pi]")
    r2 = 0.0
    for xa, ca in zip(grid.x, center):
        d = np.abs(xa - ca) % (2 * np.pi)
        r2 = r2 + np.minimum(d, 2 * np.pi - d) ** 2
    return bump(np.sqrt(r2) / radius)


def trajectory_window(state: ModelState, params: ModelParams, t_center: float, dt: float,
                      variant: str = "inviscid") -> list:
    """States at ``t_center - dt``, ``t_center``, ``t_center + dt`` from a fixed-step run."""
    steps = t_center / dt
    if abs(steps - round(steps)) > 1e-6 or round(steps) < 1:
        raise ValueError(f"t_center={t_center} is not a positive multiple of dt={dt}")
    if round(steps) == 1:
        first = state
    else:
        last = [state]
        simulate(state, params, t_center - dt, dt=dt, variant=variant, series_every=0,
                 on_step=lambda i, s: last.__setitem__(0, s))
        first = last[0]
    mid = step_rk4(first, params, dt, variant)
    return [first, mid, step_rk4(mid, params, dt, variant)]


def balance_table(state: ModelState, params: ModelParams, t_center: float, dts, eps_list,
                  chi_center=None, chi_radius: float = 2.0, variant: str = "inviscid",
                  form: str = "algebraic", pad: int = DEFAULT_PAD, points: int = 17):
    """Rows ``(eps, dt, residual)`` of the refinement table, ``dt`` outermost."""
    g = state.grid
    center = [np.pi] * g.dim if chi_center is None else chi_center
    chi = spatial_weight(g.padded(pad), center, chi_radius)
    rows = []
    for dt in dts:
        window = trajectory_window(state, params, t_center, dt, variant)
        for eps in eps_list:
            res = balance_residual(window, params, MollifierSpec(eps, points), chi,
                                   variant=variant, form=form, pad=pad)
            rows.append((float(eps), float(dt), res))
    return rows
