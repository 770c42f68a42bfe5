import numpy as np
import pytest

from lerayflux.grid import Grid, PhysicalField
from lerayflux.model import ModelParams, initial_condition, simulate
from lerayflux import spectral as sp

REF_N = 32
REF_ALPHA = 0.25
REF_DT = 2e-3
REF_T_END = 2.0
BALANCE_T = 0.25


def random_physical(grid, components=1, seed=0):
    rng = np.random.default_rng(seed)
    return PhysicalField(grid, rng.standard_normal((components,) + grid.shape))


def band_limited(grid, components=1, seed=0, kmax=None):
    """Random real field with modes |k_i| <= kmax (default n/3)."""
    f = sp.transform(random_physical(grid, components, seed))
    kmax = grid.n // 3 if kmax is None else kmax
    keep = np.ones(grid.spectral_shape, dtype=bool)
    for ki in grid.k:
        keep &= np.broadcast_to(np.abs(ki) <= kmax, grid.spectral_shape)
    return sp.SpectralField(grid, np.where(keep, f.data, 0))


@pytest.fixture(scope="session")
def reference_run():
    """Inviscid Taylor-Green run on 32^3 with the states around t = 0.25 kept."""
    grid = Grid(3, REF_N)
    params = ModelParams(alpha=REF_ALPHA)
    state = initial_condition("taylor_green", grid, params)
    k = int(round(BALANCE_T / REF_DT))
    window = {}

    def keep(i, s):
        if k - 1 <= i <= k + 1:
            window[i] = s

    traj = simulate(state, params, REF_T_END, dt=REF_DT, series_every=10, on_step=keep)
    return {"grid": grid, "params": params, "initial": state, "trajectory": traj,
            "window": [window[k - 1], window[k], window[k + 1]]}


@pytest.fixture(scope="session")
def viscous_run():
    grid = Grid(3, REF_N)
    params = ModelParams(alpha=REF_ALPHA, nu=0.01, diff_d=0.01)
    state = initial_condition("taylor_green", grid, params)
    return simulate(state, params, REF_T_END, dt=REF_DT, variant="viscous", series_every=1)


ACCEPTANCE = {}


def record_criterion(number, title, ok, detail):
    """Store and print one acceptance line; the terminal summary repeats them."""
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
