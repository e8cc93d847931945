"""Compiled inner loops."""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def orientation_histograms(img, row_cell, col_cell, n_rows, n_cols, n_bins):
    """Magnitude-weighted unsigned orientation histograms per cell.

    ``img`` is (N, H, W); gradients are central differences with reflect
    padding. Returns (N, n_rows * n_cols * n_bins).
    """
    n, h, w = img.shape
    out = np.zeros((n, n_rows * n_cols * n_bins))
    width = math.pi / n_bins
    for k in range(n):
        for y in range(h):
            yu = y - 1 if y > 0 else 1
            yd = y + 1 if y < h - 1 else h - 2
            for x in range(w):
                xl = x - 1 if x > 0 else 1
                xr = x + 1 if x < w - 1 else w - 2
                gx = (img[k, y, xr] - img[k, y, xl]) / 2.0
                gy = (img[k, yd, x] - img[k, yu, x]) / 2.0
                mag = math.hypot(gx, gy)
                if mag == 0.0:
                    continue
                ang = math.atan2(gy, gx)
                if ang < 0.0:
                    ang += math.pi
                if ang >= math.pi:
                    ang -= math.pi
                b = int(ang / width)
                if b > n_bins - 1:
                    b = n_bins - 1
                cell = row_cell[y] * n_cols + col_cell[x]
                out[k, cell * n_bins + b] += mag
    return out


@njit(cache=True)
def dual_cd_hinge(G, y, C, order, max_iter, tol):
    """L2-regularised hinge-loss linear SVM by dual coordinate descent.

    Works on the Gram matrix ``G = X X^T`` so each coordinate step costs
    O(n) regardless of the feature count; the primal weights are
    ``X^T (alpha * y)``. ``y`` holds +1/-1 labels and examples are visited
    in the fixed ``order``. Stops once the duality gap falls below
    ``tol * max(1, primal)``. Returns (alpha, epochs, gap).
    """
    n = G.shape[0]
    alpha = np.zeros(n)
    f = np.zeros(n)  # f = G @ (alpha * y), the current margins before labels
    gap = np.inf
    epoch = 0
    while epoch < max_iter:
        epoch += 1
        for t in range(n):
            i = order[t]
            if G[i, i] == 0.0:
                continue
            grad = y[i] * f[i] - 1.0
            new = alpha[i] - grad / G[i, i]
            if new < 0.0:
                new = 0.0
            elif new > C:
                new = C
            delta = (new - alpha[i]) * y[i]
            if delta != 0.0:
                alpha[i] = new
                for j in range(n):
                    f[j] += delta * G[i, j]
        ww = 0.0
        hinge = 0.0
        asum = 0.0
        for i in range(n):
            ww += alpha[i] * y[i] * f[i]
            loss = 1.0 - y[i] * f[i]
            if loss > 0.0:
                hinge += loss
            asum += alpha[i]
        primal = 0.5 * ww + C * hinge
        gap = primal - (asum - 0.5 * ww)
        if gap <= tol * max(1.0, primal):
            break
    return alpha, epoch, gap
