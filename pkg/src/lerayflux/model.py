"""Leray-alpha reactive flow on the 3-torus: right-hand side, RK4 stepping, initial data.

The evolved unknowns are the rough velocity ``u`` and the reactant
fraction ``Z``.  The advecting velocity ``v = (1 - alpha^2 Lap)^{-1} u``
is recomputed from ``u`` at every stage.  Pressure is eliminated with the
Leray projector; :func:`pressure_solve` rebuilds it for diagnostics.

Semi-discrete system (Galerkin, two-thirds dealiased)::

    du/dt = -P[ div(v (x) u) ] + nu Lap u
    dZ/dt = -div(Z u) - K phi(theta_bar) Z + d Lap Z
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from . import spectral as sp
from .errors import CFLError, ShapeError
from .grid import Grid, PhysicalField, SpectralField

VARIANTS = ("inviscid", "viscous")
IC_KINDS = ("taylor_green", "single_mode", "random_div_free", "burgers_shock")
VELOCITY_FLOOR = 1e-12


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 0.0
    nu: float = 0.0
    diff_d: float = 0.0
    K: float = 0.0
    A: float = 1.0
    theta_i: float = 1.0
    theta_bar: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "nu", "diff_d", "K", "theta_bar"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("A", "theta_i"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def reaction_rate(self) -> float:
        """``K * phi(theta_bar)``, the linear decay rate of ``Z``."""
        return self.K * arrhenius_phi(self.theta_bar, self)


def arrhenius_phi(theta, params: ModelParams):
    """Ignition-cutoff Arrhenius factor: 0 up to ``theta_i``, ``exp(-A/theta)`` above."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise ValueError("temperature must be non-negative")
    safe = np.where(theta > 0, theta, 1.0)
    out = np.where(theta > params.theta_i, np.exp(-params.A / safe), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class ModelState:
    u: SpectralField
    v: SpectralField
    Z: SpectralField
    t: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def from_u(cls, u: SpectralField, Z: SpectralField, alpha: float, t: float = 0.0) -> "ModelState":
        if u.grid != Z.grid:
            raise ShapeError("u and Z live on different grids")
        return cls(u, sp.helmholtz(u, alpha, "invert"), Z, t)

    def max_divergence(self) -> float:
        div = sp.multiplier_derivative(self.u, "divergence")
        return float(np.abs(sp.inverse_transform(div).data).max())

    def check(self, params: ModelParams, tol: float = 1e-10) -> None:
        """Raise ``AssertionError`` if a state invariant is violated."""
        if not (self.u.grid == self.v.grid == self.Z.grid):
            raise AssertionError("fields on different grids")
        filt = sp.helmholtz(self.v, params.alpha, "apply")
        scale = max(sp.l2_norm(self.u), 1.0)
        if sp.l2_norm(filt - self.u) > tol * scale:
            raise AssertionError("u != (1 - alpha^2 Lap) v")
        if self.grid.dim == 3 and self.max_divergence() > tol * scale:
            raise AssertionError("u is not divergence-free")


# right-hand side -------------------------------------------------------------

@lru_cache(maxsize=16)
def _symbols(grid: Grid, alpha: float):
    ik = sp.ik(grid)
    k = [np.broadcast_to(ki, grid.spectral_shape) for ki in sp.k_odd(grid)]
    k2 = sum(ki**2 for ki in k)
    k2 = np.where(k2 == 0, 1.0, k2)
    khat = np.stack([ki / k2 for ki in k])
    return ik, np.stack(k), khat, 1.0 / (1.0 + alpha**2 * grid.k2), grid.dealias_mask, grid.k2


def _rhs_arrays(uc, zc, grid, params, variant, advection=True):
    ik, k, khat, inv_filter, mask, k2 = _symbols(grid, params.alpha)
    if advection:
        phys = sp.backward(np.concatenate([uc, uc * inv_filter, zc]), grid)
        u, v, z = phys[:3], phys[3:6], phys[6]
        prods = np.empty((4, 3) + grid.shape)
        np.multiply(v[:, None], u[None, :], out=prods[:3])
        np.multiply(z[None], u, out=prods[3])
        pc = sp.forward(prods, grid)
        conv = ik[0] * pc[0] + ik[1] * pc[1] + ik[2] * pc[2]
        du = khat * (k * conv).sum(axis=0) - conv
        dz = -(ik[0] * pc[3, 0] + ik[1] * pc[3, 1] + ik[2] * pc[3, 2])[None]
    else:
        du = np.zeros_like(uc)
        dz = np.zeros_like(zc)
    if variant == "viscous":
        du -= params.nu * k2 * uc
        dz -= params.diff_d * k2 * zc
    rate = params.reaction_rate
    if rate:
        dz -= rate * zc
    du *= mask
    dz *= mask
    return du, dz


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")


def rhs(state: ModelState, params: ModelParams, variant: str = "inviscid", advection: bool = True):
    """Time derivatives ``(du/dt, dZ/dt)`` as spectral fields.

    ``advection=False`` drops the transport terms (linear-only test hook).
    """
    _check_variant(variant)
    g = state.grid
    if g.dim != 3:
        raise ShapeError("the dynamics are defined on the 3-torus only")
    if not (state.u.grid == state.v.grid == state.Z.grid):
        raise ShapeError("state fields live on different grids")
    du, dz = _rhs_arrays(state.u.data, state.Z.data, g, params, variant, advection)
    return SpectralField(g, du), SpectralField(g, dz)


def pressure_solve(u: SpectralField, v: SpectralField, grid: Grid | None = None) -> SpectralField:
    """Zero-mean solution of ``-Lap p = d_i d_j (v_i u_j)``.

    With ``grid=None`` the products are two-thirds dealiased on the input
    grid.  Passing a finer grid evaluates them there (exact when it is at
    least twice as fine) and returns ``p`` on that grid.
    """
    if u.grid != v.grid or u.components != 3 or v.components != 3:
        raise ShapeError("pressure_solve expects two 3-D vector fields on one grid")
    g = grid or u.grid
    uc = sp.resample_array(u.data, u.grid, g) if g != u.grid else u.data
    vc = sp.resample_array(v.data, v.grid, g) if g != v.grid else v.data
    phys_u, phys_v = sp.backward(uc, g), sp.backward(vc, g)
    kk = [np.broadcast_to(ki, g.spectral_shape) for ki in sp.k_odd(g)]
    rhs_c = np.zeros(g.spectral_shape, dtype=complex)
    for i in range(3):
        for j in range(3):
            rhs_c -= kk[i] * kk[j] * sp.forward(phys_v[i] * phys_u[j], g)
    k2 = np.where(g.k2 == 0, 1.0, g.k2)
    p = rhs_c / k2
    p[(0,) * g.dim] = 0.0
    if grid is None:
        p = np.where(g.dealias_mask, p, 0.0)
    return SpectralField(g, p)


# time stepping ----------------------------------------------------------------

def cfl_dt(state: ModelState, safety: float = 0.5) -> float:
    """``safety * dx / max|v|`` with a tiny velocity floor."""
    if not 0 < safety <= 1:
        raise ValueError("safety must lie in (0, 1]")
    v = sp.inverse_transform(state.v).data
    vmax = float(np.sqrt((v**2).sum(axis=0)).max())
    return safety * state.grid.dx / max(vmax, VELOCITY_FLOOR)


def _rk4_arrays(uc, zc, grid, params, dt, variant, advection):
    f = lambda a, b: _rhs_arrays(a, b, grid, params, variant, advection)
    k1u, k1z = f(uc, zc)
    k2u, k2z = f(uc + 0.5 * dt * k1u, zc + 0.5 * dt * k1z)
    k3u, k3z = f(uc + 0.5 * dt * k2u, zc + 0.5 * dt * k2z)
    k4u, k4z = f(uc + dt * k3u, zc + dt * k3z)
    un = uc + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
    zn = zc + dt / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z)
    return un, zn


def step_rk4(state: ModelState, params: ModelParams, dt: float, variant: str = "inviscid",
             advection: bool = True) -> ModelState:
    """One classical RK4 step; rejects ``dt`` above the unit-safety CFL limit."""
    _check_variant(variant)
    if not dt > 0:
        raise ValueError("dt must be positive")
    limit = cfl_dt(state, 1.0)
    if dt > limit:
        raise CFLError(dt, limit)
    g = state.grid
    un, zn = _rk4_arrays(state.u.data, state.Z.data, g, params, dt, variant, advection)
    u = SpectralField(g, un)
    return ModelState(u, sp.helmholtz(u, params.alpha, "invert"), SpectralField(g, zn), state.t + dt)


@dataclass
class EnergySeries:
    t: list = field(default_factory=list)
    E_u: list = field(default_factory=list)
    E_Z: list = field(default_factory=list)
    max_div: list = field(default_factory=list)

    COLUMNS = ("t", "E_u", "E_Z", "E_total", "max_div")

    @property
    def E_total(self) -> list:
        return [a + b for a, b in zip(self.E_u, self.E_Z)]

    def record(self, state: ModelState) -> None:
        self.t.append(state.t)
        self.E_u.append(sp.inner(state.u, state.u))
        self.E_Z.append(sp.inner(state.Z, state.Z))
        self.max_div.append(state.max_divergence())

    def rows(self):
        return zip(self.t, self.E_u, self.E_Z, self.E_total, self.max_div)

    def drift(self) -> float:
        """Largest relative deviation of ``E_total`` from its first sample."""
        e = np.asarray(self.E_total)
        return float(np.abs(e - e[0]).max() / max(e[0], 1e-300))


@dataclass
class Trajectory:
    snapshots: list
    series: EnergySeries
    dt: float


def n_steps(t_end: float, dt: float) -> int:
    return max(1, math.ceil(t_end / dt - 1e-9))


def simulate(state: ModelState, params: ModelParams, t_end: float, dt: float = 0.0,
             variant: str = "inviscid", cfl_safety: float = 0.5, series_every: int = 1,
             snapshot_every: int = 0, advection: bool = True,
             on_step: Callable[[int, ModelState], None] | None = None) -> Trajectory:
    """Integrate to ``t_end`` with a fixed step.

    ``dt = 0`` picks ``cfl_dt(initial state, cfl_safety)``.  The step is then
    shrunk so an integer number of steps lands on ``t_end``.  Snapshots and
    series samples are taken every ``snapshot_every`` / ``series_every`` steps
    (0 disables snapshots) and always at the first and last step.
    """
    _check_variant(variant)
    if dt <= 0:
        dt = cfl_dt(state, cfl_safety)
    steps = n_steps(t_end - state.t, dt)
    dt = (t_end - state.t) / steps
    limit = cfl_dt(state, 1.0)
    if dt > limit:
        raise CFLError(dt, limit)
    series = EnergySeries()
    series.record(state)
    snaps = [state] if snapshot_every else []
    g = state.grid
    t0 = state.t
    uc, zc = state.u.data, state.Z.data
    for i in range(1, steps + 1):
        uc, zc = _rk4_arrays(uc, zc, g, params, dt, variant, advection)
        last = i == steps
        want_series = last or (series_every and i % series_every == 0)
        want_snap = snapshot_every and (i % snapshot_every == 0 or last)
        if want_series or want_snap or on_step is not None:
            u = SpectralField(g, uc)
            cur = ModelState(u, sp.helmholtz(u, params.alpha, "invert"), SpectralField(g, zc), t0 + i * dt)
            if want_series:
                series.record(cur)
            if want_snap:
                snaps.append(cur)
            if on_step is not None:
                on_step(i, cur)
    return Trajectory(snaps, series, dt)


# initial conditions -----------------------------------------------------------

@dataclass(frozen=True)
class ICSpec:
    """Initial-condition knobs; ``slope`` is the energy-spectrum exponent of random data."""

    amplitude: float = 1.0
    z_amplitude: float = 0.5
    seed: int = 0
    slope: float = 5.0 / 3.0
    kmin: float = 1.0


def _vector(grid, comps):
    return sp.transform(PhysicalField(grid, np.stack([np.broadcast_to(c, grid.shape) for c in comps])))


def _scalar(grid, values):
    return sp.transform(PhysicalField(grid, np.broadcast_to(values, grid.shape)[None]))


def _random_band(grid, rng, components, slope, kmin):
    noise = rng.standard_normal((components,) + grid.shape)
    c = sp.forward(noise, grid)
    k = grid.kmag
    # per-mode amplitude giving a shell spectrum E(k) ~ k^-slope in 3-D
    amp = np.where(k >= kmin, np.maximum(k, 1.0) ** (-(slope + 2.0) / 2.0), 0.0)
    return c * amp * grid.dealias_mask


def _rms(c, grid):
    return math.sqrt((grid.hermitian_weight * np.abs(c) ** 2).sum())


def initial_condition(kind: str, grid: Grid, params: ModelParams, spec: ICSpec | None = None) -> ModelState:
    spec = spec or ICSpec()
    if kind not in IC_KINDS:
        raise ValueError(f"unknown initial condition {kind!r}; choose from {IC_KINDS}")
    if kind == "burgers_shock":
        if grid.dim != 1:
            raise ShapeError("burgers_shock requires a 1-D grid")
        x = grid.x[0]
        u = _scalar(grid, spec.amplitude * (np.pi - x) / (2 * np.pi))
        return ModelState.from_u(u, _scalar(grid, 0.0), params.alpha)
    if grid.dim != 3:
        raise ShapeError(f"{kind} requires a 3-D grid")
    x1, x2, x3 = grid.x
    A, B = spec.amplitude, spec.z_amplitude
    if kind == "taylor_green":
        u = _vector(grid, [A * np.sin(x1) * np.cos(x2) * np.cos(x3),
                           -A * np.cos(x1) * np.sin(x2) * np.cos(x3), 0.0])
        Z = _scalar(grid, B * np.cos(x1) * np.cos(x2) * np.cos(x3))
    elif kind == "single_mode":
        u = _vector(grid, [0.0, A * np.sin(x1), 0.0])
        Z = _scalar(grid, B * np.cos(x1))
    else:
        rng = np.random.default_rng(spec.seed)
        uc = sp.leray_array(_random_band(grid, rng, 3, spec.slope, spec.kmin), grid)
        zc = _random_band(grid, rng, 1, spec.slope, spec.kmin)
        uc *= A / max(_rms(uc, grid), 1e-300)
        zc *= B / max(_rms(zc, grid), 1e-300)
        u, Z = SpectralField(grid, uc), SpectralField(grid, zc)
    u, Z = sp.dealias(u), sp.dealias(Z)
    return ModelState.from_u(u, Z, params.alpha)


def with_time(state: ModelState, t: float) -> ModelState:
    return replace(state, t=t)
