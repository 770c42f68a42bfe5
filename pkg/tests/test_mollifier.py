import numpy as np
import pytest

from lerayflux.grid import Grid
from lerayflux.mollifier import MollifierSpec, bump


def test_bump_support():
    assert bump(np.array([1.0, 1.5]))[0] == 0.0
    assert bump(np.array([0.0]))[0] == pytest.approx(np.exp(-1.0))


@pytest.mark.parametrize("dim", [1, 3])
def test_unit_mass_and_support(dim):
    m = MollifierSpec(0.3)
    q = m.quadrature(dim)
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(q.weights >= 0)
    assert np.all(np.linalg.norm(q.nodes, axis=1) < 0.3)


def test_radial_symmetry():
    q = MollifierSpec(0.4, 9).quadrature(3)
    r = np.round(np.linalg.norm(q.nodes, axis=1), 12)
    for val in np.unique(r):
        w = q.weights[r == val]
        assert np.ptp(w) < 1e-15


def test_gradient_weights_odd():
    q = MollifierSpec(0.2).quadrature(3)
    assert np.abs(q.grad_weights.sum(axis=0)).max() < 1e-12
    # integration by parts: sum grad(phi) * xi_a = -1 on the diagonal
    moment = q.grad_weights.T @ q.nodes
    assert np.allclose(moment, -np.eye(3), atol=5e-3)


def test_multiplier_basic():
    g = Grid(3, 16)
    m = MollifierSpec(0.3).multiplier(g)
    assert m[0, 0, 0] == pytest.approx(1.0, abs=1e-14)
    assert 0.99 < m[1, 0, 0] < 1.0
    assert m[1, 0, 0] == pytest.approx(m[0, 1, 0], abs=1e-15)


def test_validation():
    with pytest.raises(ValueError):
        MollifierSpec(0.0)
    with pytest.raises(ValueError):
        MollifierSpec(4.0)
    with pytest.raises(ValueError):
        MollifierSpec(0.3, points=8)


def test_grid_aligned_nodes():
    m = MollifierSpec(0.1)
    s = m.axis_nodes(spacing=0.03)
    assert np.allclose(s, np.arange(-3, 4) * 0.03)
