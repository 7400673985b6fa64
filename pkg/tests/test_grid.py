import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kellersegel.errors import BadDimension, IncompatibleBackend, NonFiniteField, WrongBackend
from kellersegel.grid import (
    Field,
    VectorField,
    dealias,
    divergence,
    gradient,
    laplacian,
    make_grid,
)

from oracles import DenseOps

TWO_PI = 2 * np.pi


def spectral(n=32):
    return make_grid(n, n, TWO_PI, TWO_PI, "periodic", "spectral")


ALL_GRIDS = [
    ("periodic", "spectral"),
    ("periodic", "fd"),
    ("neumann", "fd"),
]


def test_make_grid_spacings():
    g = make_grid(64, 64, TWO_PI, TWO_PI, "periodic", "spectral")
    assert g.hx == g.hy == TWO_PI / 64
    g = make_grid(8, 16, 1.0, 2.0, "neumann", "fd")
    assert (g.hx, g.hy) == (0.125, 0.125)


@pytest.mark.parametrize("nx,ny", [(9, 8), (8, 9), (2, 8), (8, 0)])
def test_make_grid_bad_dimension(nx, ny):
    with pytest.raises(BadDimension):
        make_grid(nx, ny, TWO_PI, TWO_PI, "periodic", "spectral")


def test_make_grid_incompatible_backend():
    with pytest.raises(IncompatibleBackend):
        make_grid(16, 16, 1.0, 1.0, "neumann", "spectral")


def test_field_rejects_non_finite():
    g = spectral(8)
    vals = np.ones(g.shape)
    vals[2, 3] = np.nan
    with pytest.raises(NonFiniteField):
        Field(g, vals)
    with pytest.raises(NonFiniteField):
        VectorField(g, np.ones(g.shape), np.full(g.shape, np.inf))


def test_field_layout_is_x_fastest():
    g = make_grid(4, 6, 1.0, 1.0, "neumann", "fd")
    f = g.from_function(lambda X, Y: X + 10 * Y)
    flat = f.flat()
    assert flat[1] - flat[0] == pytest.approx(g.hx)
    assert flat[g.nx] - flat[0] == pytest.approx(10 * g.hy)


@pytest.mark.parametrize("bc,backend", ALL_GRIDS)
def test_constant_has_zero_derivatives(bc, backend):
    g = make_grid(16, 12, 3.0, 2.0, bc, backend)
    f = g.constant(3.7)
    v = gradient(f)
    assert np.abs(v.x_values).max() < 1e-12
    assert np.abs(v.y_values).max() < 1e-12
    assert np.abs(laplacian(f).values).max() < 1e-11
    one = VectorField(g, np.ones(g.shape), np.ones(g.shape))
    div = divergence(one).values
    if bc == "periodic":
        assert np.abs(div).max() < 1e-12
    else:
        # the walls carry no flux, so a uniform field piles up against them
        assert np.abs(div[1:-1, 1:-1]).max() < 1e-12
        assert abs(div.sum()) < 1e-12


def test_spectral_cos_derivatives():
    g = spectral(32)
    X, Y = g.mesh()
    f = g.from_function(lambda X, Y: np.cos(X))
    v = gradient(f)
    np.testing.assert_allclose(v.x_values, -np.sin(X), atol=1e-12)
    np.testing.assert_allclose(v.y_values, 0.0, atol=1e-12)
    np.testing.assert_allclose(laplacian(f).values, -np.cos(X), atol=1e-12)
    d = divergence(VectorField(g, np.sin(X), np.zeros(g.shape)))
    np.testing.assert_allclose(d.values, np.cos(X), atol=1e-12)


def test_spectral_exactness_on_resolved_modes():
    g = make_grid(32, 16, TWO_PI, 4.0, "periodic", "spectral")
    ky = 2 * np.pi / 4.0
    f = g.from_function(lambda X, Y: np.sin(3 * X) * np.cos(2 * ky * Y) + np.cos(5 * X))
    X, Y = g.mesh()
    v = gradient(f)
    np.testing.assert_allclose(v.x_values, 3 * np.cos(3 * X) * np.cos(2 * ky * Y) - 5 * np.sin(5 * X),
                               atol=1e-12)
    np.testing.assert_allclose(v.y_values, -2 * ky * np.sin(3 * X) * np.sin(2 * ky * Y), atol=1e-12)
    lap = -(9 + 4 * ky**2) * np.sin(3 * X) * np.cos(2 * ky * Y) - 25 * np.cos(5 * X)
    np.testing.assert_allclose(laplacian(f).values, lap, atol=1e-11)


@pytest.mark.parametrize("bc,backend", ALL_GRIDS)
def test_operators_match_dense_matrices(bc, backend):
    g = make_grid(16, 16, 2.0, 3.0, bc, backend)
    rng = np.random.default_rng(7)
    f = Field(g, rng.standard_normal(g.shape))
    ops = DenseOps(g)
    v = gradient(f)
    np.testing.assert_allclose(v.x_values.ravel(), ops.Gx @ f.flat(), atol=1e-11)
    np.testing.assert_allclose(v.y_values.ravel(), ops.Gy @ f.flat(), atol=1e-11)
    w = VectorField(g, rng.standard_normal(g.shape), rng.standard_normal(g.shape))
    np.testing.assert_allclose(divergence(w).flat(),
                               ops.Dx @ w.x_values.ravel() + ops.Dy @ w.y_values.ravel(), atol=1e-11)
    scale = np.abs(ops.Lap @ f.flat()).max()
    np.testing.assert_allclose(laplacian(f).flat(), ops.Lap @ f.flat(), atol=1e-12 * scale)


def test_neumann_laplacian_of_cosine_matches_dense():
    g = make_grid(16, 16, 1.5, 1.0, "neumann", "fd")
    f = g.from_function(lambda X, Y: np.cos(np.pi * X / g.Lx))
    ref = DenseOps(g).Lap @ f.flat()
    np.testing.assert_allclose(laplacian(f).flat(), ref, rtol=0, atol=1e-12 * np.abs(ref).max())


def test_neumann_laplacian_rows_sum_to_zero():
    g = make_grid(8, 8, 1.0, 1.0, "neumann", "fd")
    np.testing.assert_allclose(DenseOps(g).Lap.sum(axis=1), 0.0, atol=1e-10)


@pytest.mark.parametrize("bc", ["neumann", "periodic"])
def test_fd_laplacian_second_order(bc):
    k = np.pi if bc == "neumann" else 2 * np.pi
    errs, hs = [], []
    for n in (16, 32, 64, 128):
        g = make_grid(n, n, 1.0, 1.0, bc, "fd")
        f = g.from_function(lambda X, Y: np.cos(k * X))
        e = laplacian(f).values + k**2 * f.values
        errs.append(math.sqrt(np.mean(e**2)))
        hs.append(g.hx)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert 1.9 <= slope <= 2.1


def test_neumann_divergence_theorem():
    g = make_grid(12, 12, 1.0, 1.0, "neumann", "fd")
    rng = np.random.default_rng(3)
    v = VectorField(g, rng.standard_normal(g.shape), rng.standard_normal(g.shape))
    total = np.sum(divergence(v).values) * g.cell_area
    vnorm = math.sqrt(np.sum(v.norm_sq()) * g.cell_area)
    assert abs(total) <= 1e-12 * vnorm


def test_dealias_low_modes_pass_through():
    g = spectral(32)
    f = g.from_function(lambda X, Y: 1 + np.cos(8 * X) * np.sin(5 * Y) + np.sin(3 * X + 7 * Y))
    np.testing.assert_allclose(dealias(f).values, f.values, atol=1e-14)


def test_dealias_removes_top_mode():
    g = spectral(32)
    f = g.from_function(lambda X, Y: np.cos((g.nx // 2 - 1) * X))
    assert np.abs(dealias(f).values).max() < 1e-14


def test_dealias_cutoff_index():
    # 2/3 of the Nyquist index 16 is 10.67: mode 10 survives, mode 11 does not
    g = spectral(32)
    keep = g.from_function(lambda X, Y: np.cos(10 * Y))
    drop = g.from_function(lambda X, Y: np.cos(11 * Y))
    np.testing.assert_allclose(dealias(keep).values, keep.values, atol=1e-14)
    assert np.abs(dealias(drop).values).max() < 1e-14


def test_dealias_idempotent():
    g = spectral(32)
    f = Field(g, np.random.default_rng(0).standard_normal(g.shape))
    once = dealias(f)
    twice = dealias(once)
    assert np.array_equal(once.values, twice.values)
    # re-filtering the raw samples agrees to rounding
    again = dealias(Field(g, once.values))
    np.testing.assert_allclose(again.values, once.values, atol=1e-14)


def test_dealias_requires_spectral():
    g = make_grid(8, 8, 1.0, 1.0, "periodic", "fd")
    with pytest.raises(WrongBackend):
        dealias(g.constant(1.0))


seeds = st.integers(min_value=0, max_value=2**32 - 1)
grid_choice = st.sampled_from(ALL_GRIDS)
sizes = st.sampled_from([(8, 8), (12, 16), (16, 8)])


def _random(seed, bc, backend, shape):
    nx, ny = shape
    g = make_grid(nx, ny, 1.7, 2.3, bc, backend)
    rng = np.random.default_rng(seed)
    f = Field(g, rng.standard_normal(g.shape))
    v = VectorField(g, rng.standard_normal(g.shape), rng.standard_normal(g.shape))
    return g, f, v


@settings(max_examples=40, deadline=None)
@given(seed=seeds, which=grid_choice, shape=sizes)
def test_gradient_divergence_adjoint(seed, which, shape):
    g, f, v = _random(seed, *which, shape)
    gv = gradient(f)
    lhs = g.inner(gv.x_values, v.x_values) + g.inner(gv.y_values, v.y_values)
    rhs = -g.inner(f, divergence(v))
    scale = math.sqrt(g.inner(f, f)) * math.sqrt(np.sum(v.norm_sq()) * g.cell_area) / min(g.hx, g.hy)
    assert abs(lhs - rhs) <= 1e-12 * scale


@settings(max_examples=40, deadline=None)
@given(seed=seeds, which=grid_choice, shape=sizes)
def test_laplacian_is_divergence_of_gradient(seed, which, shape):
    g, f, _ = _random(seed, *which, shape)
    a = laplacian(f).values
    b = divergence(gradient(f)).values
    assert np.abs(a - b).max() <= 1e-12 * np.abs(b).max()


@settings(max_examples=40, deadline=None)
@given(seed=seeds, which=grid_choice, shape=sizes)
def test_divergence_is_mean_free(seed, which, shape):
    g, _, v = _random(seed, *which, shape)
    assert abs(divergence(v).mean()) <= 1e-13
