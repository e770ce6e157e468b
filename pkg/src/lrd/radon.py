"""Windowed and whole-image Radon projections on a shared zero-padded detector grid.

A projection at angle theta accumulates image mass along lines
``rho = x*cos(theta) + y*sin(theta)`` with coordinates taken relative to the
window center. All angles of one window share a single detector axis of
``L = ceil(sqrt(w^2 + h^2)) + 1`` unit-spaced bins centered on ``rho = 0``,
so projections of different directions are element-wise comparable and the
profile tails are zero padding.

Discretization is forward pixel splatting: each pixel's mass is split
between the two detector bins nearest to its center's signed distance, with
linear weights. This conserves total mass exactly (up to float rounding)
for every angle and is linear in the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

__all__ = [
    "AngleSet",
    "ProjectionSet",
    "BlockGrid",
    "as_image",
    "detector_length",
    "radon_project",
    "sinogram",
    "block_grid",
]


def as_image(pixels, name: str = "image", nonneg: bool = False) -> np.ndarray:
    """Validate a 2-D intensity array and return it as float64."""
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    if nonneg and (arr < 0).any():
        raise ValueError(f"{name} contains negative intensities")
    return arr


def detector_length(width: int, height: int) -> int:
    """Number of detector bins covering the window diagonal, plus padding."""
    return math.ceil(math.hypot(width, height)) + 1


@dataclass(frozen=True)
class AngleSet:
    """``n`` equidistant projection directions over [0, 180) degrees.

    Direction ``j`` is ``j * (180 / n)`` degrees. ``n`` must be even so that
    90 degrees is always a member, which the pairing schemes rely on.
    """

    n: int

    def __post_init__(self):
        if self.n < 2 or self.n % 2 != 0:
            raise ValueError(f"angle count must be even and >= 2, got {self.n}")

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(self.n) * (180.0 / self.n)

    @property
    def radians(self) -> np.ndarray:
        return np.deg2rad(self.degrees)


@dataclass(frozen=True)
class ProjectionSet:
    """Projections of one window at every angle of an :class:`AngleSet`.

    ``values`` has shape ``(L, n)``; column ``j`` is the detector profile of
    direction ``j``. ``window_shape`` is the ``(height, width)`` of the
    projected window.
    """

    values: np.ndarray
    angles: AngleSet
    window_shape: tuple[int, int]

    @property
    def detector_len(self) -> int:
        return self.values.shape[0]

    @property
    def window_size(self) -> int:
        h, w = self.window_shape
        if h != w:
            raise ValueError(f"window is not square: {h}x{w}")
        return w


@dataclass(frozen=True)
class BlockGrid:
    """Regular block tiling of an image, row-major.

    ``windows`` holds ``(x, y, w, h)`` rectangles. With ``overlap == 0`` the
    blocks partition the image except that last-row/last-column blocks absorb
    the division remainder. With ``overlap > 0`` each non-terminal block is
    widened to ``round(base / (1 - overlap))`` so adjacent blocks share that
    fraction of their extent.
    """

    n_rows: int
    n_cols: int
    overlap: float
    windows: tuple[tuple[int, int, int, int], ...]

    def __len__(self) -> int:
        return len(self.windows)


@dataclass(frozen=True)
class _SplatPlan:
    """Cached sparse splatting operator for one window shape and angle count."""

    matrix: sparse.csr_matrix
    detector_len: int
    n_angles: int


@lru_cache(maxsize=256)
def _splat_plan(height: int, width: int, n_angles: int) -> _SplatPlan:
    L = detector_length(width, height)
    thetas = AngleSet(n_angles).radians
    yy, xx = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    x = (xx - (width - 1) / 2.0).ravel()
    y = (yy - (height - 1) / 2.0).ravel()
    npix = height * width
    cols = np.arange(npix)

    rows_all = []
    cols_all = []
    data_all = []
    for j, th in enumerate(thetas):
        t = x * math.cos(th) + y * math.sin(th) + (L - 1) / 2.0
        i0 = np.floor(t).astype(np.int64)
        frac = t - i0
        base = j * L
        rows_all.extend((base + i0, base + i0 + 1))
        cols_all.extend((cols, cols))
        data_all.extend((1.0 - frac, frac))

    matrix = sparse.csr_matrix(
        (np.concatenate(data_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
        shape=(n_angles * L, npix),
    )
    return _SplatPlan(matrix=matrix, detector_len=L, n_angles=n_angles)


def _project_stack(windows_flat: np.ndarray, shape: tuple[int, int], angles: AngleSet) -> np.ndarray:
    """Project a ``(npix, k)`` stack of flattened windows; returns ``(L, n, k)``."""
    plan = _splat_plan(shape[0], shape[1], angles.n)
    out = plan.matrix @ windows_flat
    k = windows_flat.shape[1]
    return out.reshape(angles.n, plan.detector_len, k).transpose(1, 0, 2)


def _project_single(window: np.ndarray, angles: AngleSet) -> np.ndarray:
    """Splat one window without building the cached operator.

    Equivalent arithmetic to the stacked path but O(npix) transient memory,
    so whole-image projections (sinogram, global baseline) stay cheap even
    for large inputs and large angle counts.
    """
    h, w = window.shape
    L = detector_length(w, h)
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    x = (xx - (w - 1) / 2.0).ravel()
    y = (yy - (h - 1) / 2.0).ravel()
    mass = window.ravel()
    out = np.empty((L, angles.n))
    for j, th in enumerate(angles.radians):
        t = x * math.cos(th) + y * math.sin(th) + (L - 1) / 2.0
        i0 = np.floor(t).astype(np.int64)
        frac = t - i0
        out[:, j] = (np.bincount(i0, weights=mass * (1.0 - frac), minlength=L)
                     + np.bincount(i0 + 1, weights=mass * frac, minlength=L))
    return out


def _project(window: np.ndarray, angles: AngleSet) -> ProjectionSet:
    """Project one (possibly rectangular) window at all angles."""
    vals = _project_single(window, angles)
    return ProjectionSet(values=vals, angles=angles, window_shape=window.shape)


def radon_project(window, angles: AngleSet) -> ProjectionSet:
    """Compute the projections of a square window at every angle.

    Parameters
    ----------
    window : array-like, shape (w, w)
        Square intensity window. Values may be signed; the transform is
        linear, so callers may project residuals.
    angles : AngleSet
        Projection directions.

    Returns
    -------
    ProjectionSet
        ``L x n`` profile matrix on the common zero-padded detector grid.
        Every column sums to the window's total mass.
    """
    win = as_image(window, name="window")
    h, w = win.shape
    if h != w:
        raise ValueError(f"window must be square, got {h}x{w}")
    return _project(win, angles)


def sinogram(image) -> ProjectionSet:
    """Whole-image diagnostic sinogram: 180 projections at 1 degree spacing.

    Non-square images are first zero-padded to a centered square so all
    projections share one detector grid.
    """
    img = as_image(image)
    h, w = img.shape
    if h != w:
        side = max(h, w)
        padded = np.zeros((side, side))
        oy = (side - h) // 2
        ox = (side - w) // 2
        padded[oy:oy + h, ox:ox + w] = img
        img = padded
    return _project(img, AngleSet(180))


def block_grid(image, n_rows: int, n_cols: int, overlap: float = 0.0) -> BlockGrid:
    """Tile an image into ``n_rows x n_cols`` blocks with optional overlap.

    Block base size is ``floor(side / n)`` per axis; last-row/last-column
    blocks absorb the remainder (never more than ``n - 1`` pixels) so no
    pixel is dropped. ``overlap`` in [0, 0.9] is the fraction of a block's
    extent shared with its successor.
    """
    img = as_image(image)
    if n_rows < 1 or n_cols < 1:
        raise ValueError(f"grid must be at least 1x1, got {n_rows}x{n_cols}")
    if not 0.0 <= overlap <= 0.9:
        raise ValueError(f"overlap must be in [0, 0.9], got {overlap}")
    h, w = img.shape
    base_h = h // n_rows
    base_w = w // n_cols
    if base_h < 1 or base_w < 1:
        raise ValueError(
            f"grid {n_rows}x{n_cols} finer than 1 pixel per block for {h}x{w} image"
        )
    exp_h = base_h if overlap == 0 else min(h, round(base_h / (1.0 - overlap)))
    exp_w = base_w if overlap == 0 else min(w, round(base_w / (1.0 - overlap)))

    windows = []
    for r in range(n_rows):
        y0 = r * base_h
        y1 = h if r == n_rows - 1 else min(y0 + exp_h, h)
        for c in range(n_cols):
            x0 = c * base_w
            x1 = w if c == n_cols - 1 else min(x0 + exp_w, w)
            windows.append((x0, y0, x1 - x0, y1 - y0))
    return BlockGrid(n_rows=n_rows, n_cols=n_cols, overlap=overlap, windows=tuple(windows))
