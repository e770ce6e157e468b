"""Independent straight-line reference implementations used as test oracles.

Everything here is deliberately written with plain loops and shares no code
with the package: a line-rasterization projector, a loop-based splat
projector, and a loop-based end-to-end block-histogram descriptor.
"""

import math

import numpy as np


def raster_radon(window, angles_deg, step=0.1):
    """Brute-force projections: rasterize each detector line at ``step``-pixel
    intervals and sum bilinearly interpolated intensities (times step).

    The window is treated as a zero-padded continuous image: bilinear
    interpolation over pixel centers, falling off to zero one pixel beyond
    the border.
    """
    win = np.asarray(window, dtype=np.float64)
    h, w = win.shape
    L = math.ceil(math.hypot(w, h)) + 1
    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    padded = np.zeros((h + 2, w + 2))
    padded[1:h + 1, 1:w + 1] = win

    half = (L - 1) / 2.0
    reach = math.hypot(w, h) / 2.0 + 2.0
    s = np.arange(-reach, reach, step)
    out = np.zeros((L, len(angles_deg)))
    for j, ang in enumerate(angles_deg):
        ct = math.cos(math.radians(ang))
        st = math.sin(math.radians(ang))
        for i in range(L):
            rho = i - half
            xs = rho * ct - s * st + cx + 1.0
            ys = rho * st + s * ct + cy + 1.0
            x0 = np.floor(xs).astype(np.int64)
            y0 = np.floor(ys).astype(np.int64)
            fx = xs - x0
            fy = ys - y0
            inside = (x0 >= 0) & (x0 <= w) & (y0 >= 0) & (y0 <= h)
            x0 = np.clip(x0, 0, w)
            y0 = np.clip(y0, 0, h)
            vals = (padded[y0, x0] * (1 - fx) * (1 - fy)
                    + padded[y0, x0 + 1] * fx * (1 - fy)
                    + padded[y0 + 1, x0] * (1 - fx) * fy
                    + padded[y0 + 1, x0 + 1] * fx * fy)
            out[i, j] = np.where(inside, vals, 0.0).sum() * step
    return out


def splat_radon_loops(window, angles_deg):
    """Loop-based pixel splatting: each pixel's mass goes to the two detector
    bins nearest its center's signed distance, linearly weighted."""
    win = np.asarray(window, dtype=np.float64)
    h, w = win.shape
    L = math.ceil(math.hypot(w, h)) + 1
    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    out = np.zeros((L, len(angles_deg)))
    for j, ang in enumerate(angles_deg):
        ct = math.cos(math.radians(ang))
        st = math.sin(math.radians(ang))
        for r in range(h):
            for c in range(w):
                t = (c - cx) * ct + (r - cy) * st + (L - 1) / 2.0
                i0 = math.floor(t)
                frac = t - i0
                mass = win[r, c]
                out[i0, j] += mass * (1.0 - frac)
                out[i0 + 1, j] += mass * frac
    return out


def reference_blocks(h, w, n_rows, n_cols, overlap):
    """Row-major (x0, y0, x1, y1) block rectangles with remainder absorption."""
    base_h = h // n_rows
    base_w = w // n_cols
    exp_h = base_h if overlap == 0 else min(h, round(base_h / (1.0 - overlap)))
    exp_w = base_w if overlap == 0 else min(w, round(base_w / (1.0 - overlap)))
    rects = []
    for r in range(n_rows):
        y0 = r * base_h
        y1 = h if r == n_rows - 1 else min(y0 + exp_h, h)
        for c in range(n_cols):
            x0 = c * base_w
            x1 = w if c == n_cols - 1 else min(x0 + exp_w, w)
            rects.append((x0, y0, x1, y1))
    return rects


def reference_pairs(n, kind):
    """Angle-index pairs of the named scheme for n equidistant directions."""
    step = 180.0 / n
    degs = [j * step for j in range(n)]
    if kind == "orthogonal":
        return [(m, degs.index(degs[m] + 90.0)) for m in range(n // 2)]
    if kind == "characteristic":
        zero = degs.index(0.0)
        ninety = degs.index(90.0)
        pairs = [(zero, j) for j in range(n) if 0.0 < degs[j] < 90.0]
        pairs += [(ninety, j) for j in range(n) if degs[j] > 90.0]
        return pairs
    raise ValueError(kind)


def reference_lrd(image, n_rows, n_cols, overlap, n_angles, bins, pairing_kind,
                  normalize=True):
    """End-to-end loop reimplementation of the block-histogram descriptor.

    Per block: subtract the block mean (flat blocks contribute nothing),
    project by splatting, difference adjacent detector bins, and for every
    pair (a, b) of the scheme accumulate |d_a + d_b| into the histogram bin
    holding atan2(d_a, d_b) over [-pi, pi].
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape
    angles = [j * (180.0 / n_angles) for j in range(n_angles)]
    pairs = reference_pairs(n_angles, pairing_kind)
    out = []
    for (x0, y0, x1, y1) in reference_blocks(h, w, n_rows, n_cols, overlap):
        block = img[y0:y1, x0:x1]
        hist = [0.0] * bins
        if block.max() > block.min():
            centered = block - block.mean()
            proj = splat_radon_loops(centered, angles)
            L = proj.shape[0]
            for (a, b) in pairs:
                for i in range(L - 1):
                    da = proj[i + 1, a] - proj[i, a]
                    db = proj[i + 1, b] - proj[i, b]
                    angle = math.atan2(da, db)
                    idx = math.floor((angle + math.pi) * bins / (2.0 * math.pi))
                    idx = min(max(idx, 0), bins - 1)
                    hist[idx] += abs(da + db)
        total = sum(hist)
        if normalize and total > 0:
            hist = [v / total for v in hist]
        out.extend(hist)
    return np.array(out)


def reference_irma_error(truth, predicted, branching=10.0):
    """Hand-rolled hierarchical code error, kept separate from the package."""
    axes = (4, 3, 3, 3)
    t = truth.replace("-", "")
    p = predicted.replace("-", "")
    total = 0.0
    start = 0
    for length in axes:
        at, ap = t[start:start + length], p[start:start + length]
        start += length
        err = 0.0
        max_err = 0.0
        wrong = False
        for i in range(length):
            weight = 1.0 / (branching * (i + 1))
            max_err += weight
            if wrong:
                err += weight
            elif at[i] == ap[i]:
                pass
            elif at[i] == "*" or ap[i] == "*":
                err += 0.5 * weight
            else:
                err += weight
                wrong = True
        total += err / max_err
    return total / 4.0
