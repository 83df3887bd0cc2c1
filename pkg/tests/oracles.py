"""Naive reference implementations used as independent test oracles.

Everything here is written with explicit Python loops over scalars so that
it shares no code (and no vectorisation tricks) with the package.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def matmul_loops(a, b):
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            s = 0.0
            for t in range(k):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


def conv2d_loops(x, weight, bias):
    """Same-padded 3x3 stride-1 cross-correlation: x (N, C, H, W), weight (O, C, 3, 3)."""
    n, c, h, w = x.shape
    o = weight.shape[0]
    out = np.zeros((n, o, h, w))
    for b in range(n):
        for f in range(o):
            for i in range(h):
                for j in range(w):
                    s = bias[f]
                    for ch in range(c):
                        for ky in range(3):
                            for kx in range(3):
                                yi, xj = i + ky - 1, j + kx - 1
                                if 0 <= yi < h and 0 <= xj < w:
                                    s += weight[f, ch, ky, kx] * x[b, ch, yi, xj]
                    out[b, f, i, j] = s
    return out


def conv2d_weight_grad_loops(x, grad):
    """dL/dW for a same-padded 3x3 correlation given the upstream gradient."""
    n, c, h, w = x.shape
    o = grad.shape[1]
    dw = np.zeros((o, c, 3, 3))
    for f in range(o):
        for ch in range(c):
            for ky in range(3):
                for kx in range(3):
                    s = 0.0
                    for b in range(n):
                        for i in range(h):
                            for j in range(w):
                                yi, xj = i + ky - 1, j + kx - 1
                                if 0 <= yi < h and 0 <= xj < w:
                                    s += grad[b, f, i, j] * x[b, ch, yi, xj]
                    dw[f, ch, ky, kx] = s
    return dw


def maxpool_loops(x):
    """Returns pooled output and the first-scanned argmax position of each window."""
    n, c, h, w = x.shape
    oh, ow = h // 2, w // 2
    out = np.zeros((n, c, oh, ow))
    where = {}
    for b in range(n):
        for ch in range(c):
            for i in range(oh):
                for j in range(ow):
                    best, pos = -math.inf, None
                    for dy in range(2):
                        for dx in range(2):
                            v = x[b, ch, 2 * i + dy, 2 * j + dx]
                            if v > best:
                                best, pos = v, (2 * i + dy, 2 * j + dx)
                    out[b, ch, i, j] = best
                    where[(b, ch, i, j)] = pos
    return out, where


def maxpool_backward_loops(x, grad):
    _, where = maxpool_loops(x)
    dx = np.zeros_like(x)
    for (b, ch, i, j), (yi, xj) in where.items():
        dx[b, ch, yi, xj] += grad[b, ch, i, j]
    return dx


def dense_loops(x, weight, bias):
    n, d = x.shape
    out = np.zeros((n, weight.shape[1]))
    for b in range(n):
        for j in range(weight.shape[1]):
            s = bias[j]
            for i in range(d):
                s += x[b, i] * weight[i, j]
            out[b, j] = s
    return out


def softmax_ce_loops(logits, labels):
    """Mean cross-entropy and probabilities via math.fsum over each row."""
    n, c = logits.shape
    probs = np.zeros((n, c))
    total = 0.0
    for b in range(n):
        m = max(logits[b])
        exps = [math.exp(v - m) for v in logits[b]]
        z = math.fsum(exps)
        for j in range(c):
            probs[b, j] = exps[j] / z
        total += -(logits[b, labels[b]] - m - math.log(z))
    return total / n, probs


def bilinear_pixel(x, oy, ox, out_h, out_w):
    """One output sample with half-pixel centres and edge clamping."""
    h, w = len(x), len(x[0])

    def src(o, n_in, n_out):
        s = (o + 0.5) * n_in / n_out - 0.5
        return min(max(s, 0.0), n_in - 1)

    sy, sx = src(oy, h, out_h), src(ox, w, out_w)
    y0, x0 = int(math.floor(sy)), int(math.floor(sx))
    y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
    fy, fx = sy - y0, sx - x0
    return ((1 - fy) * ((1 - fx) * x[y0][x0] + fx * x[y0][x1])
            + fy * ((1 - fx) * x[y1][x0] + fx * x[y1][x1]))


def weighted_prf_reference(counts):
    """Support-weighted precision, recall and F1 in exact rationals."""
    k = len(counts)
    total = sum(sum(r) for r in counts)
    p_sum = r_sum = f_sum = Fraction(0)
    for i in range(k):
        tp = counts[i][i]
        row = sum(counts[i])
        col = sum(counts[j][i] for j in range(k))
        p = Fraction(tp, col) if col else Fraction(0)
        r = Fraction(tp, row) if row else Fraction(0)
        f = 2 * p * r / (p + r) if p + r else Fraction(0)
        p_sum += row * p
        r_sum += row * r
        f_sum += row * f
    return p_sum / total, r_sum / total, f_sum / total
