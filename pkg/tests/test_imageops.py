import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from ksmtgp import imageops as ops

rng = np.random.default_rng(1234)


def rand_img(h=10, w=11):
    return rng.random((h, w))


images = st.tuples(st.integers(8, 14), st.integers(8, 14)).flatmap(
    lambda s: arrays(np.float64, s, elements=st.floats(0, 1, allow_nan=False, width=32))
)

LINEAR_FILTERS = {
    "gau": lambda im: ops.gaussian_filter(im, 1.5),
    "gaud": lambda im: ops.gaussian_derivative(im, 1.0, 1, 2),
    "gabor": lambda im: ops.gabor(im, ops.THETA_GRID[3], 2),
    "lap": ops.laplacian,
    "log": lambda im: ops.log_filter(im, 1.0),
    "sobelx": lambda im: ops.sobel(im, "x"),
    "sobely": lambda im: ops.sobel(im, "y"),
    "mean": lambda im: ops.rank_mean_filter(im, "mean"),
}


# --- convolution -----------------------------------------------------------


def test_identity_kernel():
    img = rand_img()
    k = np.zeros((3, 3))
    k[1, 1] = 1
    np.testing.assert_array_equal(ops.convolve2d(img, k), img)


def test_constant_image_unit_sum_kernel():
    k = rng.random((5, 3))
    k /= k.sum()
    out = ops.convolve2d(np.full((9, 9), 0.3), k)
    np.testing.assert_allclose(out, 0.3, atol=1e-12)


def test_ramp_box_matches_naive():
    img = np.add.outer(np.arange(4.0), np.arange(4.0) * 2)
    k = np.ones((3, 3))
    np.testing.assert_allclose(ops.convolve2d(img, k), oracles.naive_convolve(img, k), atol=1e-9)


@pytest.mark.parametrize("shape", [(3, 3), (5, 3), (1, 7), (7, 7)])
def test_random_kernel_matches_naive(shape):
    for _ in range(5):
        img = rand_img(9, 8)
        k = rng.normal(size=shape)
        np.testing.assert_allclose(ops.convolve2d(img, k), oracles.naive_convolve(img, k), atol=1e-9)


def test_kernel_bigger_than_reflect_range():
    # half-width larger than the image: indices reflect more than once
    img = rand_img(8, 9)
    k = rng.normal(size=(15, 17))
    np.testing.assert_allclose(ops.convolve2d(img, k), oracles.naive_convolve(img, k), atol=1e-9)


def test_convolve_rejects_even_and_oversized():
    with pytest.raises(ValueError):
        ops.convolve2d(rand_img(), np.ones((2, 3)))
    with pytest.raises(ValueError):
        ops.convolve2d(rand_img(8, 8), np.ones((17, 3)))


def test_batched_equals_per_image():
    stack = rng.random((3, 9, 10))
    out = ops.convolve2d(stack, ops.SOBEL_X)
    for i in range(3):
        np.testing.assert_allclose(out[i], ops.convolve2d(stack[i], ops.SOBEL_X), atol=1e-12)


# --- Gaussian family -------------------------------------------------------


def test_gaussian_constant():
    np.testing.assert_allclose(ops.gaussian_filter(np.full((12, 12), 0.5), 2.0), 0.5, atol=1e-12)


def test_gaussian_impulse_symmetric_and_matches_taps():
    img = np.zeros((11, 11))
    img[5, 5] = 1
    out = ops.gaussian_filter(img, 1.0)
    np.testing.assert_allclose(out, out[::-1], atol=1e-15)
    np.testing.assert_allclose(out, out[:, ::-1], atol=1e-15)
    k = oracles.gaussian_kernel_2d(1.0)
    np.testing.assert_allclose(out[2:9, 2:9], k, atol=1e-12)


@pytest.mark.parametrize("sigma", [1.0, 1.7, 3.0])
def test_gaussian_matches_naive(sigma):
    img = rand_img(12, 13)
    np.testing.assert_allclose(
        ops.gaussian_filter(img, sigma), oracles.naive_convolve(img, oracles.gaussian_kernel_2d(sigma)), atol=1e-9
    )


def test_gaussian_derivative_zeroth_order_is_gaussian():
    img = rand_img()
    np.testing.assert_allclose(ops.gaussian_derivative(img, 1.3, 0, 0), ops.gaussian_filter(img, 1.3), atol=1e-12)


def test_gaussian_derivative_constant_is_zero():
    for o1, o2 in [(1, 0), (0, 1), (2, 0), (1, 1), (2, 2)]:
        np.testing.assert_allclose(ops.gaussian_derivative(np.full((12, 12), 0.7), 1.0, o1, o2), 0, atol=1e-12)


@pytest.mark.parametrize("sigma", [1.0, 2.0])
def test_gaussian_derivative_ramp_matches_finite_difference(sigma):
    slope = 0.03
    img = np.tile(np.arange(24.0) * slope, (20, 1))
    smooth = oracles.naive_convolve(img, oracles.gaussian_kernel_2d(sigma))
    r = math.ceil(3 * sigma) + 1
    fd = (smooth[:, r + 1 : -r + 1] - smooth[:, r - 1 : -r - 1]) / 2
    d = ops.gaussian_derivative(img, sigma, 1, 0)
    np.testing.assert_allclose(d[r:-r, r:-r], fd[r:-r], atol=1e-9)
    np.testing.assert_allclose(d[r:-r, r:-r], slope, atol=1e-9)


def test_gaussian_second_derivative_of_parabola():
    y = np.arange(20.0)[:, None]
    img = np.tile(0.01 * y**2, (1, 16))
    d = ops.gaussian_derivative(img, 1.0, 0, 2)
    np.testing.assert_allclose(d[4:-4, 4:-4], 0.02, atol=1e-9)


@pytest.mark.parametrize("o1,o2", [(1, 0), (0, 1), (2, 1), (0, 2)])
def test_gaussian_derivative_matches_naive(o1, o2):
    img = rand_img(12, 12)
    kern = np.outer(oracles.derivative_taps(1.0, o2), oracles.derivative_taps(1.0, o1))
    np.testing.assert_allclose(ops.gaussian_derivative(img, 1.0, o1, o2), oracles.naive_convolve(img, kern), atol=1e-9)


def test_gaussian_derivative_rejects_bad_order():
    with pytest.raises(ValueError):
        ops.gaussian_derivative(rand_img(), 1.0, 3, 0)


# --- Gabor -----------------------------------------------------------------


def test_gabor_frequency_values():
    assert ops.gabor_frequency(0) == pytest.approx(math.pi / 2)
    assert ops.gabor_frequency(2) == pytest.approx(math.pi / 4)


def test_gabor_constant_is_zero():
    for v in range(5):
        np.testing.assert_allclose(ops.gabor(np.full((16, 16), 0.8), ops.THETA_GRID[1], v), 0, atol=1e-12)


def test_gabor_kernel_rotation():
    np.testing.assert_array_equal(ops.gabor_kernel(0.0, 1), ops.gabor_kernel(math.pi / 2, 1).T)


@pytest.mark.parametrize("t,v", [(0, 0), (3, 1), (5, 4), (7, 2)])
def test_gabor_matches_naive(t, v):
    img = rand_img(10, 12)
    theta = ops.THETA_GRID[t]
    expected = oracles.naive_convolve(img, oracles.gabor_kernel(theta, v, 5))
    np.testing.assert_allclose(ops.gabor(img, theta, v), expected, atol=1e-9)


def test_gabor_prefers_matching_grating():
    v, theta = 1, math.pi / 4
    f = ops.gabor_frequency(v)
    y, x = np.mgrid[0:32, 0:32].astype(float)
    match = 0.5 + 0.4 * np.cos(f * (x * math.cos(theta) + y * math.sin(theta)))
    rotated = 0.5 + 0.4 * np.cos(f * (x * math.cos(theta + math.pi / 2) + y * math.sin(theta + math.pi / 2)))
    assert np.abs(ops.gabor(match, theta, v)).mean() > np.abs(ops.gabor(rotated, theta, v)).mean()


# --- fixed linear filters --------------------------------------------------


def test_laplacian_cases():
    np.testing.assert_allclose(ops.laplacian(np.full((8, 8), 0.4)), 0, atol=1e-12)
    ramp = np.add.outer(np.arange(10.0), 0.5 * np.arange(10.0))
    np.testing.assert_allclose(ops.laplacian(ramp)[1:-1, 1:-1], 0, atol=1e-12)
    img = np.zeros((9, 9))
    img[4, 4] = 1
    out = ops.laplacian(img)
    np.testing.assert_allclose(out[3:6, 3:6], ops.LAPLACIAN_KERNEL, atol=1e-12)
    assert np.count_nonzero(np.abs(out) > 1e-12) == 5


@pytest.mark.parametrize("sigma", [1.0, 2.0])
def test_log_kernel_and_impulse(sigma):
    k = ops.log_kernel(sigma)
    np.testing.assert_allclose(k, k[::-1], atol=1e-15)
    np.testing.assert_allclose(k, k[:, ::-1], atol=1e-15)
    r = math.ceil(3 * sigma)
    n = 4 * r + 1
    img = np.zeros((n, n))
    img[2 * r, 2 * r] = 1
    out = ops.log_filter(img, sigma)[r : 3 * r + 1, r : 3 * r + 1]
    np.testing.assert_allclose(out, oracles.log_kernel_2d(sigma), atol=1e-12)
    np.testing.assert_allclose(ops.log_filter(np.full((n, n), 0.9), sigma), 0, atol=1e-12)


def test_sobel_cases():
    for mode in ("x", "y", "magnitude"):
        np.testing.assert_allclose(ops.sobel(np.full((8, 8), 0.2), mode), 0, atol=1e-12)
    step = np.zeros((10, 10))
    step[:, 5:] = 1
    gx, gy = ops.sobel(step, "x"), ops.sobel(step, "y")
    assert np.all(gx[:, 4:6] > 0)
    np.testing.assert_allclose(gy[1:-1, 1:-1], 0, atol=1e-12)
    img = rand_img()
    np.testing.assert_allclose(ops.sobel(img, "magnitude"), np.hypot(ops.sobel(img, "x"), ops.sobel(img, "y")))


def test_sobel_matches_correlation_oracle():
    img = rand_img()
    sx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=float)
    # increasing intensity to the right gives a positive response
    expected = oracles.naive_convolve(img, sx[::-1, ::-1])
    np.testing.assert_allclose(ops.sobel(img, "x"), expected, atol=1e-12)


# --- window filters --------------------------------------------------------


@pytest.mark.parametrize("kind", ["median", "mean", "min", "max"])
def test_window_filters_match_bruteforce(kind):
    img = rng.random((5, 5))
    np.testing.assert_allclose(ops.rank_mean_filter(img, kind), oracles.window_filter(img, kind), atol=1e-12)
    np.testing.assert_allclose(ops.rank_mean_filter(np.full((8, 8), 0.6), kind), 0.6, atol=1e-12)


def test_window_order():
    img = rand_img()
    lo, med, hi = (ops.rank_mean_filter(img, k) for k in ("min", "median", "max"))
    assert np.all(lo <= med) and np.all(med <= hi)


# --- LBP -------------------------------------------------------------------


def test_lbp_map_constant_and_peak():
    np.testing.assert_array_equal(ops.lbp_code_map(np.full((8, 8), 0.3)), 1.0)
    img = np.zeros((8, 8))
    img[3, 4] = 1
    assert ops.lbp_code_map(img)[3, 4] == 0


def test_lbp_map_matches_bit_enumeration():
    for _ in range(10):
        img = rng.integers(0, 4, (4, 4)).astype(float)
        np.testing.assert_array_equal(ops.lbp_code_map(img), oracles.lbp_map(img))


def test_lbp_bit_order():
    img = np.zeros((8, 8))
    img[2, 2] = 0.5
    img[1, 1] = 1.0  # top-left neighbour -> bit 0 only
    assert ops.lbp_code_map(img)[2, 2] * 255 == pytest.approx(1)
    img[1, 1] = 0
    img[2, 1] = 1.0  # left neighbour -> bit 7
    assert ops.lbp_code_map(img)[2, 2] * 255 == pytest.approx(128)


def test_lbp_hist_cases():
    h = ops.lbp_hist(np.full((8, 8), 0.5))
    assert h.shape == (59,)
    assert h[ops.UNIFORM_LUT[255]] == 1.0
    for _ in range(10):
        img = rng.random((8, 8))
        np.testing.assert_allclose(ops.lbp_hist(img), oracles.lbp_histogram(img), atol=1e-12)
        assert ops.lbp_hist(img).sum() == pytest.approx(1, abs=1e-9)


def test_uniform_pattern_count():
    assert sum(oracles.is_uniform(c) for c in range(256)) == 58


# 8-bit grey levels, so the transforms below stay strictly increasing in floating point
grey_images = st.tuples(st.integers(8, 14), st.integers(8, 14)).flatmap(
    lambda s: arrays(np.int64, s, elements=st.integers(0, 255))
).map(lambda a: a / 255.0)


@settings(max_examples=40, deadline=None)
@given(grey_images, st.sampled_from(["square", "exp", "affine"]))
def test_lbp_monotone_invariance(img, kind):
    f = {"square": lambda x: x**3 + x, "exp": np.exp, "affine": lambda x: 3 * x + 7}[kind]
    np.testing.assert_array_equal(ops.lbp_code_map(img), ops.lbp_code_map(f(img)))
    np.testing.assert_array_equal(ops.lbp_hist(img), ops.lbp_hist(f(img)))


# --- gradients, pixelwise ops, pooling ------------------------------------


def test_grad_magnitude_map():
    np.testing.assert_array_equal(ops.grad_magnitude_map(np.full((8, 8), 0.1)), 0)
    img = rand_img()
    assert ops.grad_magnitude_map(img).max() == pytest.approx(1.0)
    ramp = np.tile(np.arange(10.0) * 0.1, (9, 1))
    gx, gy = oracles.gradients(ramp)
    raw = np.hypot(gx, gy)
    out = ops.grad_magnitude_map(ramp)
    np.testing.assert_allclose(out[:, 1:-1], raw[:, 1:-1] / raw.max(), atol=1e-12)
    np.testing.assert_allclose(raw[:, 1:-1], 0.1, atol=1e-12)


def test_weighted_combine():
    img = rand_img()
    np.testing.assert_array_equal(ops.weighted_combine(img, 0.5, img, 0.5, "sub"), 0)
    np.testing.assert_allclose(ops.weighted_combine(img, 0.999, np.zeros_like(img), 0.3, "add"), 0.999 * img)
    a, b = rng.random((6, 6)), rng.random((4, 5))
    out = ops.weighted_combine(a, 0.3, b, 0.6, "add")
    assert out.shape == (4, 5)
    np.testing.assert_allclose(out, 0.3 * a[:4, :5] + 0.6 * b, atol=1e-15)


def test_elementwise():
    img = rand_img()
    np.testing.assert_array_equal(ops.elementwise(img, "relu"), img)
    np.testing.assert_array_equal(ops.elementwise(-np.ones((8, 8)), "sqrt"), 1.0)
    x = rng.normal(size=(8, 8))
    np.testing.assert_allclose(ops.elementwise(-x, "relu") + ops.elementwise(x, "relu"), np.abs(x))


def test_max_pool():
    assert ops.max_pool(rng.random((32, 32)), 2, 2).shape == (16, 16)
    np.testing.assert_array_equal(ops.max_pool(np.full((32, 16), 0.4), 4, 2), np.full((8, 8), 0.4))
    # 5x5 -> 3x3 would be below 8: skipped
    img = rng.random((5, 5))
    np.testing.assert_array_equal(ops.max_pool(img, 2, 2), img)
    img = rng.random((17, 19))
    np.testing.assert_array_equal(ops.max_pool(img, 2, 2), oracles.pool(img, 2, 2))


def test_pool_oracle_on_small_window():
    img = rng.random((5, 5))
    assert oracles.pool(img, 2, 2).shape == (3, 3)


# --- descriptors -----------------------------------------------------------


@pytest.mark.parametrize("shape", [(8, 8), (32, 32), (13, 21)])
def test_descriptor_dims(shape):
    img = rng.random(shape)
    assert ops.sift_vec(img).shape == (128,)
    assert ops.hog_vec(img).shape == (64,)
    assert ops.lbp_hist(img).shape == (59,)


def test_descriptors_constant_image():
    img = np.full((16, 16), 0.5)
    np.testing.assert_array_equal(ops.sift_vec(img), 0)
    np.testing.assert_array_equal(ops.hog_vec(img), 0)


@pytest.mark.parametrize("fn,rows,cols", [(ops.sift_vec, 4, 4), (ops.hog_vec, 2, 4)])
def test_descriptors_match_oracle(fn, rows, cols):
    for shape in [(8, 8), (10, 13), (16, 9)]:
        img = rng.random(shape)
        v = fn(img)
        np.testing.assert_allclose(v, oracles.orientation_descriptor(img, rows, cols), atol=1e-12)
        assert np.linalg.norm(v) == pytest.approx(1, abs=1e-6)


def test_hog_ramp_single_bin():
    img = np.tile(np.arange(16.0) / 16, (16, 1))
    hist = ops._cell_histograms(img, 2, 4).reshape(8, 8)
    for cell in hist:
        assert np.count_nonzero(cell) == 1


def test_descriptors_reject_small():
    for fn in (ops.sift_vec, ops.hog_vec, ops.lbp_hist):
        with pytest.raises(ValueError):
            fn(rng.random((7, 9)))


# --- properties ------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(images, st.floats(-3, 3, allow_nan=False), st.sampled_from(sorted(LINEAR_FILTERS)))
def test_linear_filters_commute_with_scaling(img, c, name):
    f = LINEAR_FILTERS[name]
    np.testing.assert_allclose(f(c * img), c * f(img), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(images, images, st.sampled_from(sorted(LINEAR_FILTERS)))
def test_linear_filters_additive(a, b, name):
    h, w = min(a.shape[0], b.shape[0]), min(a.shape[1], b.shape[1])
    a, b = a[:h, :w], b[:h, :w]
    f = LINEAR_FILTERS[name]
    np.testing.assert_allclose(f(a + b), f(a) + f(b), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(images)
def test_filters_finite_and_shape_preserving(img):
    for f in LINEAR_FILTERS.values():
        out = f(img)
        assert out.shape == img.shape and np.all(np.isfinite(out))
    for fn in (ops.lbp_code_map, ops.grad_magnitude_map, lambda im: ops.sobel(im, "magnitude")):
        assert fn(img).shape == img.shape


@settings(max_examples=30, deadline=None)
@given(images)
def test_descriptor_dims_size_invariant(img):
    assert ops.sift_vec(img).shape == (128,)
    assert ops.hog_vec(img).shape == (64,)
    lbp = ops.lbp_hist(img)
    assert lbp.shape == (59,) and lbp.sum() == pytest.approx(1, abs=1e-9)
