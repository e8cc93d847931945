"""Image filters, pooling and descriptors used as GP primitives.

Every function accepts a single image of shape ``(H, W)`` or a stack of
equally-sized images of shape ``(N, H, W)`` and operates on the last two
axes. Borders are handled with reflect padding (the edge pixel is the
mirror axis and is not duplicated), as in ``numpy.pad(mode="reflect")``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from ._kernels import orientation_histograms

SIFT_DIM = 128
HOG_DIM = 64
LBP_DIM = 59

MIN_DESCRIPTOR_SIZE = 8
N_ORIENT = 8
CLIP = 0.2

THETA_GRID = tuple(k * math.pi / 8 for k in range(8))


def gabor_frequency(v: int) -> float:
    """Spatial frequency (radians/pixel) for Gabor frequency index ``v``."""
    return (math.pi / 2) / math.sqrt(2) ** v


def as_image(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ValueError(f"expected an image (H, W) or stack (N, H, W), got shape {arr.shape}")
    if arr.shape[-1] < 1 or arr.shape[-2] < 1:
        raise ValueError(f"empty image of shape {arr.shape}")
    return arr


def _check_descriptor_input(img: np.ndarray) -> None:
    h, w = img.shape[-2:]
    if h < MIN_DESCRIPTOR_SIZE or w < MIN_DESCRIPTOR_SIZE:
        raise ValueError(f"descriptor needs at least {MIN_DESCRIPTOR_SIZE}x{MIN_DESCRIPTOR_SIZE} pixels, got {h}x{w}")


def _reflect_index(p: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return np.zeros_like(p)
    period = 2 * n - 2
    p = np.mod(p, period)
    return np.where(p > n - 1, period - p, p)


@lru_cache(maxsize=512)
def _conv_matrix(taps: bytes, n: int) -> np.ndarray:
    """Matrix M such that ``M @ x`` is the reflect-padded 1-D convolution of x."""
    k = np.frombuffer(taps, dtype=np.float64)
    r = len(k) // 2
    m = np.zeros((n, n))
    rows = np.arange(n)
    for j, kv in enumerate(k):
        # out[i] += k[j] * x[reflect(i - (j - r))]
        cols = _reflect_index(rows - (j - r), n)
        np.add.at(m, (rows, cols), kv)
    return m


def _separable(img: np.ndarray, ky: np.ndarray, kx: np.ndarray) -> np.ndarray:
    h, w = img.shape[-2:]
    my = _conv_matrix(np.ascontiguousarray(ky, dtype=np.float64).tobytes(), h)
    mx = _conv_matrix(np.ascontiguousarray(kx, dtype=np.float64).tobytes(), w)
    return my @ img @ mx.T


@lru_cache(maxsize=256)
def _decompose(kernel_bytes: bytes, shape: tuple[int, int]):
    kernel = np.frombuffer(kernel_bytes, dtype=np.float64).reshape(shape)
    u, s, vt = np.linalg.svd(kernel)
    if s[0] == 0.0:
        return ()
    keep = s > s[0] * 1e-12
    return tuple((u[:, r] * s[r], vt[r]) for r in np.flatnonzero(keep))


def convolve2d(img, kernel) -> np.ndarray:
    """2-D convolution with reflect padding; output has the input's shape.

    The kernel is applied as a sum of separable rank-one passes (from its
    SVD), each pass a matrix product with the reflect padding folded in.
    """
    img = as_image(img)
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise ValueError(f"kernel must be 2-D with odd height and width, got {kernel.shape}")
    h, w = img.shape[-2:]
    if kernel.shape[0] > 2 * h or kernel.shape[1] > 2 * w:
        raise ValueError(f"kernel {kernel.shape} larger than twice the image extent {(h, w)}")
    out = np.zeros_like(img)
    for ky, kx in _decompose(np.ascontiguousarray(kernel).tobytes(), kernel.shape):
        out += _separable(img, ky, kx)
    return out


def _gauss_taps(sigma: float) -> tuple[np.ndarray, np.ndarray]:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r = math.ceil(3 * sigma)
    t = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(t**2) / (2 * sigma**2))
    return t, g / g.sum()


@lru_cache(maxsize=128)
def gaussian_derivative_taps(sigma: float, order: int) -> np.ndarray:
    """1-D Gaussian (derivative) kernel, moment-normalised.

    Order 0 sums to 1. Order 1 is scaled so a unit ramp maps to 1, order 2
    is zero-mean and scaled so ``x**2`` maps to 2, which makes the sampled
    derivatives exact on polynomials of matching degree.
    """
    t, g = _gauss_taps(sigma)
    if order == 0:
        k = g
    elif order == 1:
        k = -t * g
        k = k / -(t * k).sum()
    elif order == 2:
        k = (t**2 / sigma**4 - 1 / sigma**2) * g
        k = k - k.mean()
        k = 2 * k / (t**2 * k).sum()
    else:
        raise ValueError(f"derivative order must be 0, 1 or 2, got {order}")
    k.setflags(write=False)
    return k


def gaussian_kernel(sigma: float) -> np.ndarray:
    _, g = _gauss_taps(sigma)
    return np.outer(g, g)


def gaussian_filter(img, sigma: float) -> np.ndarray:
    img = as_image(img)
    g = gaussian_derivative_taps(float(sigma), 0)
    _check_kernel_fits(img, len(g))
    return _separable(img, g, g)


def gaussian_derivative(img, sigma: float, o1: int, o2: int) -> np.ndarray:
    """Gaussian derivative of order ``o1`` along x (columns) and ``o2`` along y (rows)."""
    img = as_image(img)
    kx = gaussian_derivative_taps(float(sigma), int(o1))
    ky = gaussian_derivative_taps(float(sigma), int(o2))
    _check_kernel_fits(img, len(kx))
    return _separable(img, ky, kx)


def _check_kernel_fits(img: np.ndarray, size: int) -> None:
    h, w = img.shape[-2:]
    if size > 2 * h or size > 2 * w:
        raise ValueError(f"kernel of size {size} larger than twice the image extent {(h, w)}")


def _snap(x: float) -> float:
    return 0.0 if abs(x) < 1e-12 else x


@lru_cache(maxsize=128)
def gabor_kernel(theta: float, v: int, max_half: int | None = None) -> np.ndarray:
    f = gabor_frequency(v)
    sigma = math.pi / f
    r = math.ceil(3 * sigma)
    if max_half is not None:
        r = min(r, max_half)
    t = np.arange(-r, r + 1, dtype=np.float64)
    y, x = np.meshgrid(t, t, indexing="ij")
    c, s = _snap(math.cos(theta)), _snap(math.sin(theta))
    env = np.exp(-(x**2 + y**2) / (2 * sigma**2))
    k = env * np.cos(f * (x * c + y * s)) / math.fsum(env.ravel())
    # fsum keeps the DC correction independent of summation order
    k = k - math.fsum(k.ravel()) / k.size
    k.setflags(write=False)
    return k


def gabor(img, theta: float, v: int) -> np.ndarray:
    img = as_image(img)
    h, w = img.shape[-2:]
    return convolve2d(img, gabor_kernel(float(theta), int(v), min(h, w) // 2))


LAPLACIAN_KERNEL = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


def laplacian(img) -> np.ndarray:
    return convolve2d(img, LAPLACIAN_KERNEL)


@lru_cache(maxsize=16)
def log_kernel(sigma: float) -> np.ndarray:
    r = math.ceil(3 * sigma)
    t = np.arange(-r, r + 1, dtype=np.float64)
    y, x = np.meshgrid(t, t, indexing="ij")
    q = (x**2 + y**2) / (2 * sigma**2)
    k = -(1.0 / (math.pi * sigma**4)) * (1 - q) * np.exp(-q)
    k = k - math.fsum(k.ravel()) / k.size
    k.setflags(write=False)
    return k


def log_filter(img, sigma: float) -> np.ndarray:
    return convolve2d(img, log_kernel(float(sigma)))


# Convolution kernels (already flipped) so that intensity increasing along
# +x / +y gives a positive response.
SOBEL_X = np.array([[1.0, 0.0, -1.0], [2.0, 0.0, -2.0], [1.0, 0.0, -1.0]])
SOBEL_Y = SOBEL_X.T.copy()


def sobel(img, mode: str = "magnitude") -> np.ndarray:
    if mode == "x":
        return convolve2d(img, SOBEL_X)
    if mode == "y":
        return convolve2d(img, SOBEL_Y)
    if mode == "magnitude":
        return np.hypot(convolve2d(img, SOBEL_X), convolve2d(img, SOBEL_Y))
    raise ValueError(f"unknown sobel mode {mode!r}")


def _windows3(img: np.ndarray) -> np.ndarray:
    pad = [(0, 0)] * (img.ndim - 2) + [(1, 1), (1, 1)]
    padded = np.pad(img, pad, mode="reflect")
    win = np.lib.stride_tricks.sliding_window_view(padded, (3, 3), axis=(-2, -1))
    return win.reshape(*img.shape, 9)


_RANK_REDUCERS = {
    "median": lambda w: np.partition(w, 4, axis=-1)[..., 4],
    "mean": lambda w: w.mean(axis=-1),
    "min": lambda w: w.min(axis=-1),
    "max": lambda w: w.max(axis=-1),
}


def rank_mean_filter(img, kind: str) -> np.ndarray:
    """3x3 sliding median / mean / min / max."""
    img = as_image(img)
    try:
        reduce = _RANK_REDUCERS[kind]
    except KeyError:
        raise ValueError(f"unknown window statistic {kind!r}") from None
    return reduce(_windows3(img))


# Neighbour offsets (dy, dx) clockwise from the top-left; neighbour i sets bit i.
LBP_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def _lbp_codes(center: np.ndarray, neighbour) -> np.ndarray:
    codes = np.zeros(center.shape, dtype=np.int64)
    for bit, (dy, dx) in enumerate(LBP_OFFSETS):
        codes |= (neighbour(dy, dx) >= center).astype(np.int64) << bit
    return codes


def lbp_code_map(img) -> np.ndarray:
    """Per-pixel 8-neighbour LBP code scaled into [0, 1]."""
    img = as_image(img)
    h, w = img.shape[-2:]
    pad = [(0, 0)] * (img.ndim - 2) + [(1, 1), (1, 1)]
    p = np.pad(img, pad, mode="reflect")
    codes = _lbp_codes(img, lambda dy, dx: p[..., 1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w])
    return codes / 255.0


def _transitions(code: int) -> int:
    bits = [(code >> i) & 1 for i in range(8)]
    return sum(bits[i] != bits[(i + 1) % 8] for i in range(8))


def _uniform_lut() -> np.ndarray:
    lut = np.full(256, LBP_DIM - 1, dtype=np.int64)
    uniform = [c for c in range(256) if _transitions(c) <= 2]
    assert len(uniform) == LBP_DIM - 1
    lut[uniform] = np.arange(len(uniform))
    return lut


UNIFORM_LUT = _uniform_lut()


def lbp_hist(img) -> np.ndarray:
    """59-bin uniform LBP histogram over interior pixels, summing to 1."""
    img = as_image(img)
    _check_descriptor_input(img)
    h, w = img.shape[-2:]
    center = img[..., 1 : h - 1, 1 : w - 1]
    codes = _lbp_codes(center, lambda dy, dx: img[..., 1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx])
    bins = UNIFORM_LUT[codes].reshape(*codes.shape[:-2], -1)
    flat = bins.reshape(-1, bins.shape[-1])
    offs = np.arange(flat.shape[0])[:, None] * LBP_DIM
    counts = np.bincount((flat + offs).ravel(), minlength=flat.shape[0] * LBP_DIM)
    hist = counts.reshape(flat.shape[0], LBP_DIM) / flat.shape[1]
    return hist.reshape(*bins.shape[:-1], LBP_DIM)


def central_gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradients (gx along columns, gy along rows), reflect padded."""
    pad = [(0, 0)] * (img.ndim - 2) + [(1, 1), (1, 1)]
    p = np.pad(img, pad, mode="reflect")
    gx = (p[..., 1:-1, 2:] - p[..., 1:-1, :-2]) / 2.0
    gy = (p[..., 2:, 1:-1] - p[..., :-2, 1:-1]) / 2.0
    return gx, gy


def grad_magnitude_map(img) -> np.ndarray:
    img = as_image(img)
    gx, gy = central_gradients(img)
    mag = np.hypot(gx, gy)
    peak = mag.max(axis=(-2, -1), keepdims=True)
    return np.divide(mag, peak, out=np.zeros_like(mag), where=peak > 0)


def weighted_combine(a, n1: float, b, n2: float, sign: str = "add") -> np.ndarray:
    """``n1*a +/- n2*b`` on the common top-left region of the two images."""
    a, b = as_image(a), as_image(b)
    h = min(a.shape[-2], b.shape[-2])
    w = min(a.shape[-1], b.shape[-1])
    a, b = a[..., :h, :w], b[..., :h, :w]
    if sign == "add":
        return n1 * a + n2 * b
    if sign == "sub":
        return n1 * a - n2 * b
    raise ValueError(f"unknown sign {sign!r}")


def elementwise(img, kind: str) -> np.ndarray:
    img = as_image(img)
    if kind == "relu":
        return np.maximum(img, 0.0)
    if kind == "sqrt":
        return np.sqrt(np.abs(img))
    raise ValueError(f"unknown elementwise op {kind!r}")


def max_pool(img, k1: int, k2: int) -> np.ndarray:
    """Non-overlapping max pooling with partial edge windows.

    Returns the input unchanged when the pooled image would be smaller than
    8 pixels along either axis.
    """
    img = as_image(img)
    h, w = img.shape[-2:]
    oh, ow = -(-h // k1), -(-w // k2)
    if oh < MIN_DESCRIPTOR_SIZE or ow < MIN_DESCRIPTOR_SIZE:
        return img
    pad = [(0, 0)] * (img.ndim - 2) + [(0, oh * k1 - h), (0, ow * k2 - w)]
    p = np.pad(img, pad, mode="constant", constant_values=-np.inf)
    p = p.reshape(*img.shape[:-2], oh, k1, ow, k2)
    return p.max(axis=(-3, -1))


def _cell_histograms(img: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Orientation histograms on a rows x cols cell grid -> (..., rows*cols*8)."""
    h, w = img.shape[-2:]
    row_cell = np.repeat(np.arange(rows), np.diff(np.append((np.arange(rows) * h) // rows, h)))
    col_cell = np.repeat(np.arange(cols), np.diff(np.append((np.arange(cols) * w) // cols, w)))
    stack = np.ascontiguousarray(img.reshape(-1, h, w))
    hist = orientation_histograms(stack, row_cell, col_cell, rows, cols, N_ORIENT)
    return hist.reshape(*img.shape[:-2], rows * cols * N_ORIENT)


def _clip_normalize(v: np.ndarray) -> np.ndarray:
    def l2(x):
        n = np.linalg.norm(x, axis=-1, keepdims=True)
        return np.divide(x, n, out=np.zeros_like(x), where=n > 0)

    return l2(np.minimum(l2(v), CLIP))


def sift_vec(img) -> np.ndarray:
    """Single dense SIFT-style descriptor: 4x4 cells x 8 orientations."""
    img = as_image(img)
    _check_descriptor_input(img)
    return _clip_normalize(_cell_histograms(img, 4, 4))


def hog_vec(img) -> np.ndarray:
    """HOG descriptor over a 2 (rows) x 4 (cols) cell grid with 8 orientations."""
    img = as_image(img)
    _check_descriptor_input(img)
    return _clip_normalize(_cell_histograms(img, 2, 4))
