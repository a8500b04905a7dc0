"""Compiled single-pass HATS kernel.

Memory units are materialised as one ring buffer of timestamps per
``(pixel, polarity)``; a cell's unit is the set of rings for the pixels it
covers. In faithful mode lookups stop at the cell border, in exact mode they
reach any pixel within ``rho`` (the dilated unit). Each ring is pruned of
entries older than ``delta_t`` when a new timestamp is appended to it.
"""

import numpy as np
from numba import njit

_INIT_CAP = 8


@njit(cache=True, nogil=True)
def _grow(buf, start, count):
    n, cap = buf.shape
    new = np.empty((n, cap * 2), dtype=buf.dtype)
    for r in range(n):
        s = start[r]
        for i in range(count[r]):
            new[r, i] = buf[r, (s + i) % cap]
        start[r] = 0
    return new


@njit(cache=True, nogil=True)
def hats_kernel(xs, ys, ts, ps, width, height, k, rho, tau, delta_t, exact):
    """Return ``(hist, count)``: unnormalised cell histograms and event counts.

    ``hist`` has shape ``(n_cells, 2*rho+1, 2*rho+1, 2)``.
    """
    cols = (width + k - 1) // k
    rows = (height + k - 1) // k
    side = 2 * rho + 1
    hist = np.zeros((rows * cols, side, side, 2))
    count = np.zeros(rows * cols, dtype=np.int64)

    n_rings = width * height * 2
    buf = np.empty((n_rings, _INIT_CAP), dtype=np.int64)
    start = np.zeros(n_rings, dtype=np.int64)
    fill = np.zeros(n_rings, dtype=np.int64)

    for i in range(len(ts)):
        x = xs[i]
        y = ys[i]
        t = ts[i]
        q = 1 if ps[i] > 0 else 0
        cx = x // k
        cy = y // k
        cell = cy * cols + cx
        if exact:
            x0 = max(x - rho, 0)
            x1 = min(x + rho, width - 1)
            y0 = max(y - rho, 0)
            y1 = min(y + rho, height - 1)
        else:
            x0 = max(x - rho, cx * k)
            x1 = min(x + rho, min(cx * k + k, width) - 1)
            y0 = max(y - rho, cy * k)
            y1 = min(y + rho, min(cy * k + k, height) - 1)

        cap = buf.shape[1]
        for ny in range(y0, y1 + 1):
            for nx in range(x0, x1 + 1):
                ring = (ny * width + nx) * 2 + q
                n = fill[ring]
                if n == 0:
                    continue
                s = start[ring]
                acc = 0.0
                # newest first; stop at the first entry outside the window
                for j in range(n - 1, -1, -1):
                    age = t - buf[ring, (s + j) % cap]
                    if age <= 0:
                        continue
                    if age > delta_t:
                        break
                    acc += np.exp(-age / tau)
                hist[cell, ny - y + rho, nx - x + rho, q] += acc

        ring = (y * width + x) * 2 + q
        s = start[ring]
        n = fill[ring]
        while n > 0 and t - buf[ring, s] > delta_t:
            s = (s + 1) % cap
            n -= 1
        start[ring] = s
        fill[ring] = n
        if n == cap:
            buf = _grow(buf, start, fill)
            cap = buf.shape[1]
        buf[ring, (start[ring] + n) % cap] = t
        fill[ring] = n + 1
        count[cell] += 1

    return hist, count


@njit(cache=True)
def pegasos_kernel(X, y, lam, perms):
    """Per-epoch averaged iterates of hinge-loss SGD, bias as last coordinate.

    ``perms[e]`` is the visiting order of epoch ``e``; returns ``(epochs, d+1)``.
    """
    n, d = X.shape
    epochs = perms.shape[0]
    w = np.zeros(d + 1)
    avgs = np.zeros((epochs, d + 1))
    step = 0
    for e in range(epochs):
        for i in perms[e]:
            step += 1
            eta = 1.0 / (lam * step)
            margin = w[d]
            for j in range(d):
                margin += X[i, j] * w[j]
            margin *= y[i]
            shrink = 1.0 - eta * lam
            for j in range(d + 1):
                w[j] *= shrink
            if margin < 1.0:
                g = eta * y[i]
                for j in range(d):
                    w[j] += g * X[i, j]
                w[d] += g
            for j in range(d + 1):
                avgs[e, j] += w[j]
        for j in range(d + 1):
            avgs[e, j] /= n
    return avgs


@njit(cache=True)
def memory_surfaces_kernel(xs, ys, ts, ps, width, height, rho, tau, delta_t):
    """Local memory surface of every event, ``(n, 2*rho+1, 2*rho+1, 2)``."""
    side = 2 * rho + 1
    out = np.zeros((len(ts), side, side, 2))
    n_rings = width * height * 2
    buf = np.empty((n_rings, _INIT_CAP), dtype=np.int64)
    start = np.zeros(n_rings, dtype=np.int64)
    fill = np.zeros(n_rings, dtype=np.int64)
    for i in range(len(ts)):
        x = xs[i]
        y = ys[i]
        t = ts[i]
        q = 1 if ps[i] > 0 else 0
        cap = buf.shape[1]
        for ny in range(max(y - rho, 0), min(y + rho, height - 1) + 1):
            for nx in range(max(x - rho, 0), min(x + rho, width - 1) + 1):
                ring = (ny * width + nx) * 2 + q
                s = start[ring]
                acc = 0.0
                for j in range(fill[ring] - 1, -1, -1):
                    age = t - buf[ring, (s + j) % cap]
                    if age <= 0:
                        continue
                    if age > delta_t:
                        break
                    acc += np.exp(-age / tau)
                out[i, ny - y + rho, nx - x + rho, q] = acc
        ring = (y * width + x) * 2 + q
        s = start[ring]
        n = fill[ring]
        while n > 0 and t - buf[ring, s] > delta_t:
            s = (s + 1) % cap
            n -= 1
        start[ring] = s
        if n == cap:
            buf = _grow(buf, start, fill)
            cap = buf.shape[1]
        buf[ring, (start[ring] + n) % cap] = t
        fill[ring] = n + 1
    return out


@njit(cache=True)
def last_surfaces_kernel(xs, ys, ts, ps, width, height, rho, tau):
    """Last-event surface of every event, ``(n, 2*rho+1, 2*rho+1, 2)``."""
    side = 2 * rho + 1
    out = np.zeros((len(ts), side, side, 2))
    last = np.full((height, width, 2), -1, dtype=np.int64)
    for i in range(len(ts)):
        x = xs[i]
        y = ys[i]
        t = ts[i]
        q = 1 if ps[i] > 0 else 0
        for ny in range(max(y - rho, 0), min(y + rho, height - 1) + 1):
            for nx in range(max(x - rho, 0), min(x + rho, width - 1) + 1):
                tl = last[ny, nx, q]
                if tl >= 0:
                    out[i, ny - y + rho, nx - x + rho, q] = np.exp(-(t - tl) / tau)
        last[y, x, q] = t
    return out
