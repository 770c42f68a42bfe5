import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lerayflux import spectral as sp
from lerayflux.errors import ShapeError
from lerayflux.grid import Grid, PhysicalField, SpectralField
from lerayflux.mollifier import MollifierSpec

from conftest import band_limited, random_physical

G8 = Grid(3, 8)
G16 = Grid(3, 16)


def phys(grid, *comps):
    return PhysicalField(grid, np.stack([np.broadcast_to(c, grid.shape) for c in comps]))


# grid -----------------------------------------------------------------------

def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(2, 16)
    with pytest.raises(ValueError):
        Grid(3, 6)
    with pytest.raises(ValueError):
        Grid(3, 15)


def test_grid_cell_volume_and_nyquist():
    g = Grid(3, 16)
    assert g.cell_volume == pytest.approx((2 * np.pi / 16) ** 3, rel=1e-15)
    assert g.k[-1].max() == 8
    assert g.k[0].min() == -7 and g.k[0].max() == 8
    assert g.nyquist.sum() == 16 * 16 * 9 - 15 * 15 * 8


def test_field_shape_errors():
    with pytest.raises(ShapeError):
        PhysicalField(G8, np.zeros((2,) + G8.shape))
    with pytest.raises(ShapeError):
        SpectralField(G8, np.zeros((1, 8, 8, 8)))


# transforms -----------------------------------------------------------------

def test_cos_single_mode():
    x1 = G8.x[0]
    c = sp.transform(phys(G8, np.cos(x1)))
    full = c.full()[0]
    assert full[1, 0, 0] == pytest.approx(0.5, abs=1e-15)
    assert full[-1, 0, 0] == pytest.approx(0.5, abs=1e-15)
    full[1, 0, 0] = full[-1, 0, 0] = 0
    assert np.abs(full).max() < 1e-15


def test_constant_field():
    c = sp.transform(phys(G8, 1.0))
    assert c.data[0, 0, 0, 0] == pytest.approx(1.0, abs=1e-15)
    rest = c.data.copy()
    rest[0, 0, 0, 0] = 0
    assert np.abs(rest).max() < 1e-15


def test_round_trip_random():
    f = random_physical(G8, 3, seed=1)
    back = sp.inverse_transform(sp.transform(f))
    assert np.abs(back.data - f.data).max() <= 1e-12 * np.abs(f.data).max()


def test_nonfinite_rejected():
    data = np.zeros(G8.shape)
    data[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        sp.transform(PhysicalField(G8, data))


def test_parseval_matches_quadrature():
    f = random_physical(G16, 3, seed=2)
    quad = float((f.data**2).sum() * G16.cell_volume)
    c = sp.transform(f)
    assert sp.inner(c, c) == pytest.approx(quad, rel=1e-12)


def test_hermitian_symmetry_of_real_data():
    f = sp.transform(random_physical(G8, seed=3)).full()[0]
    idx = (-np.arange(8)) % 8
    assert np.abs(f - np.conj(f[np.ix_(idx, idx, idx)])).max() < 1e-15


# derivatives ------------------------------------------------------------------

def test_gradient_of_sine():
    x1 = G16.x[0]
    g = sp.inverse_transform(sp.multiplier_derivative(sp.transform(phys(G16, np.sin(x1))), "gradient"))
    expected = np.stack([np.broadcast_to(np.cos(x1), G16.shape), np.zeros(G16.shape), np.zeros(G16.shape)])
    assert np.abs(g.data - expected).max() < 1e-13


def test_divergence_of_taylor_green():
    x1, x2, x3 = G16.x
    u = phys(G16, np.sin(x1) * np.cos(x2) * np.cos(x3), -np.cos(x1) * np.sin(x2) * np.cos(x3), 0.0)
    d = sp.inverse_transform(sp.multiplier_derivative(sp.transform(u), "divergence"))
    assert np.abs(d.data).max() < 1e-13


def test_laplacian_of_cosine():
    x2 = G16.x[1]
    f = sp.transform(phys(G16, np.cos(2 * x2)))
    lap = sp.inverse_transform(sp.multiplier_derivative(f, "laplacian"))
    assert np.abs(lap.data[0] + 4 * np.cos(2 * x2)).max() < 1e-13


def test_derivative_component_errors():
    vec = sp.transform(random_physical(G8, 3))
    sca = sp.transform(random_physical(G8, 1))
    with pytest.raises(ShapeError):
        sp.multiplier_derivative(sca, "divergence")
    with pytest.raises(ShapeError):
        sp.multiplier_derivative(vec, "gradient")
    with pytest.raises(ValueError):
        sp.multiplier_derivative(sca, "curl")


# Leray projection -------------------------------------------------------------

def test_leray_kills_gradient():
    x1 = G16.x[0]
    out = sp.inverse_transform(sp.leray_project(sp.transform(phys(G16, np.sin(x1), 0.0, 0.0))))
    assert np.abs(out.data).max() < 1e-14


def test_leray_keeps_solenoidal():
    x2 = G16.x[1]
    f = sp.transform(phys(G16, np.sin(x2), 0.0, 0.0))
    assert np.abs(sp.leray_project(f).data - f.data).max() < 1e-15


def test_leray_per_mode_oracle():
    f = sp.transform(random_physical(G8, 3, seed=4))
    out = sp.leray_project(f).full()
    full = f.full()
    ks = np.fft.fftfreq(8, 1 / 8)
    ks[4] = 4
    for a, b, c in itertools.product(range(8), repeat=3):
        k = np.array([ks[a], ks[b], ks[c]])
        if not k.any():
            expect = full[:, a, b, c]
        else:
            expect = (np.eye(3) - np.outer(k, k) / (k @ k)) @ full[:, a, b, c]
        # the stored half spectrum fixes Nyquist-plane modes by their +n/2 image
        if np.any(np.abs(k) == 4):
            continue
        assert np.allclose(out[:, a, b, c], expect, atol=1e-14)


def test_leray_divergence_free_idempotent_self_adjoint():
    f = sp.transform(random_physical(G16, 3, seed=5))
    g = sp.transform(random_physical(G16, 3, seed=6))
    pf = sp.leray_project(f)
    div = sp.inverse_transform(sp.multiplier_derivative(pf, "divergence"))
    assert np.abs(div.data).max() < 1e-12
    assert np.abs(sp.leray_project(pf).data - pf.data).max() < 1e-14
    lhs, rhs = sp.inner(pf, g), sp.inner(f, sp.leray_project(g))
    assert abs(lhs - rhs) <= 1e-12 * sp.l2_norm(f) * sp.l2_norm(g)
    assert np.allclose(pf.data[:, 0, 0, 0], f.data[:, 0, 0, 0])


def test_leray_rejects_scalar():
    with pytest.raises(ShapeError):
        sp.leray_project(sp.transform(random_physical(G8, 1)))


# Helmholtz, low-pass, mollifier ----------------------------------------------

def test_helmholtz_examples():
    x1 = G16.x[0]
    f = sp.transform(phys(G16, 0.0, np.sin(x1), 0.0))
    assert np.array_equal(sp.helmholtz(f, 0.0).data, f.data)
    assert np.abs(sp.helmholtz(f, 0.5).data - 1.25 * f.data).max() < 1e-15
    r = sp.transform(random_physical(G16, 3, seed=7))
    back = sp.helmholtz(sp.helmholtz(r, 0.3, "apply"), 0.3, "invert")
    assert np.abs(back.data - r.data).max() < 1e-12 * np.abs(r.data).max()
    with pytest.raises(ValueError):
        sp.helmholtz(f, -1.0)


def test_lowpass_examples():
    x1, x2 = G16.x[:2]
    f = sp.transform(phys(G16, 1.0 + np.cos(x1) + np.cos(3 * x2)))
    assert np.array_equal(sp.lowpass_sharp(f, 8 * np.sqrt(3)).data, f.data)
    only_mean = sp.lowpass_sharp(f, 0.5).data.copy()
    assert only_mean[0, 0, 0, 0] == pytest.approx(1.0)
    only_mean[0, 0, 0, 0] = 0
    assert np.abs(only_mean).max() == 0
    low = sp.inverse_transform(sp.lowpass_sharp(f, 2.0)).data[0]
    assert np.abs(low - (1.0 + np.cos(x1) + 0 * x2)).max() < 1e-14
    # the shell |k| = kappa is kept
    kept = sp.lowpass_sharp(f, 3.0)
    assert np.abs(kept.data - f.data).max() < 1e-15


def test_mollify_constant_and_mean():
    m = MollifierSpec(0.4)
    c = sp.transform(phys(G16, 2.5))
    assert np.abs(sp.mollify(c, m).data - c.data).max() < 1e-14
    r = sp.transform(random_physical(G16, seed=8))
    assert sp.mean(sp.mollify(r, m))[0] == pytest.approx(sp.mean(r)[0], abs=1e-12)


def test_mollify_direct_convolution_oracle():
    """Convolution by the quadrature nodes, evaluated in physical space."""
    eps = 0.3
    m = MollifierSpec(eps)
    g = Grid(3, 16)
    x1 = g.x[0]
    f = sp.transform(phys(g, np.sin(x1)))
    out = sp.inverse_transform(sp.mollify(f, m)).data[0]
    quad = m.quadrature(3)
    # f(x - y) weighted by phi(y); for sin this is sin(x) * sum w cos(y1)
    direct = np.sin(x1) * np.sum(quad.weights * np.cos(quad.nodes[:, 0]))
    assert np.abs(out - direct).max() < 1e-14
    # the amplitude equals the symbol at k = 1
    assert np.abs(out).max() / np.abs(np.sin(x1)).max() == pytest.approx(m.multiplier(g)[1, 0, 0], rel=1e-12)


def test_mollify_converges():
    f = band_limited(G16, seed=9, kmax=3)
    errs = [sp.l2_norm(sp.mollify(f, MollifierSpec(e)) - f) for e in (0.4, 0.2, 0.1)]
    assert errs[0] > errs[1] > errs[2]


# shifts -----------------------------------------------------------------------

def test_shift_examples():
    x1 = G16.x[0]
    f = sp.transform(phys(G16, np.sin(x1)))
    assert np.array_equal(sp.shift(f, (0, 0, 0)).data, f.data)
    assert np.abs(sp.shift(f, (2 * np.pi, 0, 0)).data - f.data).max() < 1e-14
    moved = sp.inverse_transform(sp.shift(f, (np.pi / 2, 0, 0))).data[0]
    assert np.abs(moved - np.cos(x1)).max() < 1e-14


@settings(max_examples=25, deadline=None)
@given(st.tuples(*[st.floats(-10, 10, allow_nan=False)] * 3))
def test_shift_is_isometry(xi):
    f = band_limited(G8, 3, seed=10)
    assert sp.l2_norm(sp.shift(f, xi)) == pytest.approx(sp.l2_norm(f), rel=1e-12)


# dealiasing ---------------------------------------------------------------------

def test_dealias_examples():
    f = band_limited(G16, seed=11, kmax=5)
    assert np.array_equal(sp.dealias(f).data, f.data)
    x1 = G16.x[0]
    nyq = sp.transform(phys(G16, np.cos(8 * x1)))
    assert np.abs(sp.dealias(nyq).data).max() == 0


def test_dealiased_product_matches_convolution():
    a = sp.dealias(sp.transform(random_physical(G8, seed=12)))
    b = sp.dealias(sp.transform(random_physical(G8, seed=13)))
    prod = sp.transform(PhysicalField(G8, sp.inverse_transform(a).data * sp.inverse_transform(b).data))
    fa, fb = a.full()[0], b.full()[0]
    ks = np.fft.fftfreq(8, 1 / 8).astype(int)
    modes = [(i, j, k) for i in range(8) for j in range(8) for k in range(8) if abs(fa[i, j, k]) > 0]
    conv = {}
    for p in modes:
        for q in modes:
            key = tuple(int(ks[p[d]] + ks[q[d]]) for d in range(3))
            conv[key] = conv.get(key, 0) + fa[p] * fb[q]
    full = sp.dealias(prod).full()[0]
    checked = 0
    for key, val in conv.items():
        if max(abs(k) for k in key) * 3 <= 8:
            assert abs(full[tuple(k % 8 for k in key)] - val) < 1e-14
            checked += 1
    assert checked == 125


# multipliers commute ------------------------------------------------------------

def test_multipliers_commute():
    f = sp.transform(random_physical(G16, 3, seed=14))
    m = MollifierSpec(0.3)
    ops = [lambda x: sp.helmholtz(x, 0.4), lambda x: sp.lowpass_sharp(x, 4.0),
           lambda x: sp.mollify(x, m), sp.leray_project]
    for p, q in itertools.combinations(ops, 2):
        assert np.abs(p(q(f)).data - q(p(f)).data).max() < 1e-12


def test_resample_round_trip():
    f = band_limited(G8, 3, seed=15)
    up = sp.resample(f, Grid(3, 16))
    assert np.abs(sp.resample(up, G8).data - f.data).max() == 0
    assert sp.l2_norm(up) == pytest.approx(sp.l2_norm(f), rel=1e-13)
