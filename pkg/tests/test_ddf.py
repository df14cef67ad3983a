import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from composite_ib.ddf import (
    DEFAULT_KERNEL, KERNELS, ClippedSupportError, eval_kernel, get_kernel, moment_residual,
    sample_ddf,
)
from composite_ib.grid import make_grid
from oracles import delta2

K = DEFAULT_KERNEL


def _roma(r):
    r = abs(r)
    if r <= 0.5:
        return (1 + np.sqrt(1 - 3 * r * r)) / 3
    if r <= 1.5:
        return (5 - 3 * r - np.sqrt(max(1 - 3 * (1 - r) ** 2, 0.0))) / 6
    return 0.0


@pytest.mark.parametrize("r", [0.0, 0.25, 0.5, 0.9, 1.0, 1.3, 1.75, 1.99])
def test_default_is_box_smoothed_three_point(r):
    # oracle: numerical convolution of the three-point kernel with a unit box
    ref, _ = quad(_roma, r - 0.5, r + 0.5, points=[-1.5, -0.5, 0.5, 1.5], epsabs=1e-14)
    assert eval_kernel(K, r) == pytest.approx(ref, abs=1e-12)


def test_frozen_values():
    assert eval_kernel(K, 0.0) == pytest.approx(0.6181999293593575, abs=1e-15)
    assert eval_kernel(K, 1.0) == pytest.approx(0.1909000353203213, abs=1e-15)


def test_support_and_evenness():
    assert eval_kernel(K, K.support_radius) == 0.0
    assert eval_kernel(K, -K.support_radius - 0.1) == 0.0
    r = np.linspace(0, 2.5, 101)
    np.testing.assert_array_equal(eval_kernel(K, r), eval_kernel(K, -r))


def test_continuously_differentiable():
    h = 1e-6
    for r0 in (0.5, 1.0, 2.0):
        left = (eval_kernel(K, r0 - h) - eval_kernel(K, r0 - 2 * h)) / h
        right = (eval_kernel(K, r0 + 2 * h) - eval_kernel(K, r0 + h)) / h
        assert abs(left - right) < 1e-4


def test_partition_of_unity_at_fixed_shift():
    total = sum(eval_kernel(K, 0.37 + i) for i in range(-4, 5))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_moments_at_random_shifts():
    r = np.random.default_rng(7).random(1000)
    i = np.arange(-4, 5)
    for m, target in ((0, 1.0), (1, 0.0)):
        sums = np.array([np.sum((s + i) ** m * K.phi(s + i)) for s in r])
        assert np.abs(sums - target).max() < 1e-12
        assert max(moment_residual(K, m, s) for s in r[:200]) < 1e-12


def test_second_moment_reported():
    # nonzero for this kernel; the value is a property, not a requirement
    assert moment_residual(K, 2, 0.3) > 0.1


def test_moment_order_checked():
    with pytest.raises(ValueError):
        moment_residual(K, 3, 0.0)


def test_kernel_registry():
    assert get_kernel("smoothed3") is K
    assert get_kernel(K) is K
    assert set(KERNELS) >= {"smoothed3", "roma3", "peskin4"}
    with pytest.raises(ValueError):
        get_kernel("gaussian")
    for k in KERNELS.values():
        assert moment_residual(k, 0, 0.21) < 1e-12


def test_sample_on_cell_center():
    # dyadic spacing keeps the centers exact, so the outer weights are exactly zero
    g = make_grid(16, 16, 0.125, 0.125)
    xc, yc = g.xc()[8], g.yc()[7]
    d = sample_ddf(K, g, "C", (xc, yc))
    assert np.count_nonzero(d.values) == 9
    assert g.dx * g.dy * d.values.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("space", ["C", "Fx", "Fy", "N"])
def test_sample_matches_full_tensor_product(space, rng):
    g = make_grid(14, 12, 0.2, 0.15, origin=(-1.0, -0.5))
    X = (0.3 + 0.1 * rng.random(), 0.4 + 0.1 * rng.random())
    d = sample_ddf(K, g, space, X).to_array(g)
    xs, ys = g.coords(space)
    np.testing.assert_allclose(d, delta2(K.phi, g.dx, g.dy, xs, ys, *X), atol=1e-12)


def test_sample_moments_at_random_points():
    g = make_grid(20, 20, 0.1, 0.1)
    r = np.random.default_rng(11)
    for _ in range(100):
        X = 0.5 + r.random(2)
        for space in ("C", "Fx", "Fy"):
            d = sample_ddf(K, g, space, X).to_array(g)
            xs, ys = g.coords(space)
            vol = g.dx * g.dy
            assert abs(vol * d.sum() - 1.0) < 1e-12
            assert abs(vol * np.sum((xs - X[0]) * d)) < 1e-12
            assert abs(vol * np.sum((ys - X[1]) * d)) < 1e-12


def test_sample_symmetric_point():
    g = make_grid(12, 12, 0.1, 0.1)
    d = sample_ddf(K, g, "C", (0.6, 0.6)).values
    np.testing.assert_allclose(d, d[::-1, :], atol=1e-12)
    np.testing.assert_allclose(d, d.T, atol=1e-12)


def test_clipped_support_is_an_error():
    g = make_grid(12, 12, 0.1, 0.1)
    with pytest.raises(ClippedSupportError):
        sample_ddf(K, g, "C", (0.15, 0.6))


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.sampled_from(["C", "Fx", "Fy", "N"]))
def test_partition_of_unity_property(fx, fy, space):
    g = make_grid(12, 12, 0.25, 0.25)
    X = (1.25 + fx * 0.5, 1.25 + fy * 0.5)
    d = sample_ddf(K, g, space, X).to_array(g)
    assert abs(g.dx * g.dy * d.sum() - 1.0) < 1e-12
