import numpy as np
import pytest

from lerayflux import burgers as bg
from lerayflux import spectral as sp
from lerayflux.errors import ResolutionError
from lerayflux.grid import Grid, PhysicalField
from lerayflux.mollifier import MollifierSpec


def test_sawtooth_samples():
    u = bg.sawtooth(64, sigma=2.0)
    vals = sp.inverse_transform(u).data[0]
    x = u.grid.x[0]
    assert vals[0] == pytest.approx(1.0)  # one-sided value at the jump
    assert np.allclose(vals, 2.0 * (np.pi - x) / (2 * np.pi))
    assert abs(vals.mean() - 1.0 / 64) < 1e-12


def test_smooth_field_dissipation_vanishes():
    g = Grid(1, 2048)
    u = sp.transform(PhysicalField(g, np.sin(g.x[0])[None]))
    vals = [abs(bg.total_dissipation(u, MollifierSpec(e))) for e in (0.2, 0.1, 0.05)]
    assert vals[0] < 1e-2
    # cubic increments of a smooth field: O(eps^2)
    assert vals[1] / vals[2] == pytest.approx(4.0, rel=0.05)


def test_dissipation_cubic_in_jump():
    moll = MollifierSpec(0.1)
    d1 = bg.total_dissipation(bg.sawtooth(1024, 1.0), moll)
    d2 = bg.total_dissipation(bg.sawtooth(1024, 2.0), moll)
    assert d2 == pytest.approx(8 * d1, rel=1e-12)


def test_dissipation_sign_and_limit():
    u = bg.sawtooth(2048)
    d = bg.total_dissipation(u, MollifierSpec(0.05))
    assert d < 0
    assert d == pytest.approx(-1 / 12, rel=0.1)


def test_under_resolved_mollifier():
    u = bg.sawtooth(64)
    with pytest.raises(ResolutionError):
        bg.dissipation_density(u, MollifierSpec(0.1))
    with pytest.raises(ValueError):
        bg.dissipation_density(sp.transform(PhysicalField(Grid(3, 8), np.zeros((1, 8, 8, 8)))),
                               MollifierSpec(0.5))


def test_observed_order_and_richardson():
    eps = np.array([0.4, 0.2, 0.1, 0.05])
    vals = 3.0 + 2.0 * eps - 0.5 * eps**2 + 0.2 * eps**3
    assert bg.observed_order(eps, vals) == pytest.approx(1.0, abs=0.2)
    table = bg.richardson(eps, vals, 1)
    assert table[-1, -1] == pytest.approx(3.0, abs=1e-12)
    assert np.isnan(table[1, 0])
    with pytest.raises(ValueError):
        bg.richardson([0.4, 0.3, 0.1], vals[:3], 1)
    with pytest.raises(ValueError):
        bg.observed_order(eps, [1.0, 2.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        bg.richardson(eps, vals, 0)


def test_default_xi_grid_aligned():
    n = 4096
    xi = bg.default_xi(n)
    cells = xi / (2 * np.pi / n)
    assert np.allclose(cells, np.rint(cells))
    assert cells[0] == 4 and xi[-1] <= 0.1 + 1e-12
    assert bg.default_xi(1024)[-1] / bg.default_xi(1024)[0] >= 10


def test_study_small_grid():
    dx = 2 * np.pi / 2048
    rep = bg.burgers_study(n=2048, xi=dx * np.array([4, 8, 16, 32, 40]))
    summary = rep.summary()
    assert summary["dissipation_over_sigma3"] == pytest.approx(1 / 12, rel=5e-3)
    assert summary["dissipation_signed"] < 0
    assert rep.structure_fit.exponent == pytest.approx(1 / 3, abs=0.03)
    assert rep.increment_slope == pytest.approx(1.0, abs=0.05)
    assert len(list(rep.rows())) == 4
    assert set(rep.besov) == {(1 / 3, 1024), (1 / 3, 2048), (0.5, 1024), (0.5, 2048)}


def test_study_rejects_coarse_grid():
    with pytest.raises(ResolutionError):
        bg.burgers_study(n=512)
    with pytest.raises(ValueError):
        bg.burgers_study(sigma=0.0, n=1024)
