"""Local Radon descriptor pipeline and the global-projection baseline.

Per image block: project at ``n`` angles, take first-order detector
derivatives, pair directions by a pairing scheme, map each derivative pair
element to an angle with ``atan2`` and accumulate its absolute derivative
sum into a ``b``-bin histogram over [-pi, pi]. Block histograms are
concatenated row-major, so the descriptor length is
``n_rows * n_cols * bins``.

Each block is intensity-centered (its mean is subtracted) before
projection. This cancels the profile a constant block would produce from
detector geometry alone, so flat blocks contribute exactly nothing and the
histograms respond to local structure rather than to exposure level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radon import AngleSet, ProjectionSet, as_image, block_grid, _project, _project_stack

__all__ = [
    "PairingScheme",
    "LrdParams",
    "Descriptor",
    "DerivativePair",
    "PRESETS",
    "pair_angles",
    "derivatives",
    "pair_histogram",
    "lrd_descriptor",
    "global_radon_descriptor",
]

_SCHEME_KINDS = ("orthogonal", "characteristic", "custom")


@dataclass(frozen=True)
class PairingScheme:
    """A rule selecting which two projection directions feed each histogram.

    ``pairs`` holds angle-index pairs ``(j, k)`` into an :class:`AngleSet`.
    """

    kind: str
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.kind not in _SCHEME_KINDS:
            raise ValueError(f"unknown pairing kind {self.kind!r}")
        if not self.pairs:
            raise ValueError("pairing scheme has no pairs")
        for j, k in self.pairs:
            if j == k:
                raise ValueError(f"pair ({j}, {k}) uses the same angle twice")
            if j < 0 or k < 0:
                raise ValueError(f"pair ({j}, {k}) has a negative index")


def pair_angles(angles, kind: str) -> PairingScheme:
    """Build the pair list of a named scheme for an angle set.

    ``angles`` may be an :class:`AngleSet` or a plain sequence of degrees.
    Orthogonal pairs each direction with the one 90 degrees away, giving
    ``n/2`` pairs. Characteristic pairs every direction strictly below 90
    with 0 degrees and every direction above 90 with 90 degrees, giving
    ``n - 2`` pairs; it requires 0 and 90 to be present.
    """
    if isinstance(angles, AngleSet):
        degs = [float(d) for d in angles.degrees]
    else:
        degs = [float(d) for d in angles]
    n = len(degs)
    if n < 2 or n % 2 != 0:
        raise ValueError(f"pairing needs an even number of angles >= 2, got {n}")

    def _index_of(target: float):
        for i, d in enumerate(degs):
            if abs(d - target) < 1e-9:
                return i
        return None

    if kind == "orthogonal":
        pairs = []
        for m in range(n // 2):
            partner = _index_of(degs[m] + 90.0)
            if partner is None:
                raise ValueError(f"no angle at {degs[m] + 90.0} deg to pair with {degs[m]} deg")
            pairs.append((m, partner))
        return PairingScheme(kind="orthogonal", pairs=tuple(pairs))

    if kind == "characteristic":
        i0 = _index_of(0.0)
        i90 = _index_of(90.0)
        if i0 is None or i90 is None:
            raise ValueError("characteristic pairing requires both 0 and 90 degree projections")
        low = tuple((i0, j) for j, d in enumerate(degs) if 0.0 < d < 90.0)
        high = tuple((i90, j) for j, d in enumerate(degs) if d > 90.0)
        pairs = low + high
        if not pairs:
            raise ValueError(f"characteristic pairing needs at least 4 angles, got {n}")
        return PairingScheme(kind="characteristic", pairs=pairs)

    raise ValueError(f"unknown pairing kind {kind!r}")


@dataclass(frozen=True)
class LrdParams:
    """Full configuration of the block-histogram descriptor."""

    n_rows: int = 5
    n_cols: int = 5
    overlap: float = 0.0
    n_angles: int = 18
    bins: int = 12
    pairing: str | PairingScheme = "characteristic"
    normalize: bool = True

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.n_rows}x{self.n_cols}")
        if not 0.0 <= self.overlap <= 0.9:
            raise ValueError(f"overlap must be in [0, 0.9], got {self.overlap}")
        if self.n_angles < 2 or self.n_angles % 2 != 0:
            raise ValueError(f"angle count must be even and >= 2, got {self.n_angles}")
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if isinstance(self.pairing, str) and self.pairing not in ("orthogonal", "characteristic"):
            raise ValueError(f"unknown pairing kind {self.pairing!r}")

    @property
    def length(self) -> int:
        return self.n_rows * self.n_cols * self.bins

    def scheme(self) -> PairingScheme:
        if isinstance(self.pairing, PairingScheme):
            return self.pairing
        return pair_angles(AngleSet(self.n_angles), self.pairing)

    def digest(self) -> str:
        if isinstance(self.pairing, PairingScheme):
            pairing = "custom:" + ",".join(f"{j}-{k}" for j, k in self.pairing.pairs)
        else:
            pairing = self.pairing
        return (
            f"lrd|grid={self.n_rows}x{self.n_cols}|overlap={self.overlap:g}"
            f"|angles={self.n_angles}|bins={self.bins}|pairing={pairing}"
            f"|norm={int(self.normalize)}"
        )


PRESETS: dict[str, LrdParams] = {
    "irma": LrdParams(n_rows=5, n_cols=5, overlap=0.0, n_angles=18, bins=12,
                      pairing="characteristic", normalize=True),
    "holidays": LrdParams(n_rows=3, n_cols=3, overlap=0.0, n_angles=18, bins=22,
                          pairing="characteristic", normalize=True),
}


@dataclass(frozen=True)
class Descriptor:
    """A flat non-negative feature vector plus provenance."""

    values: np.ndarray
    params_digest: str
    source_id: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError(f"descriptor values must be 1-D, got shape {vals.shape}")
        if not np.isfinite(vals).all():
            raise ValueError("descriptor contains non-finite values")
        if (vals < 0).any():
            raise ValueError("descriptor contains negative entries")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class DerivativePair:
    """Derivative profiles of two paired directions, equal length."""

    d_a: np.ndarray
    d_b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.d_a, dtype=np.float64)
        b = np.asarray(self.d_b, dtype=np.float64)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError(f"derivative vectors must be equal-length 1-D, got {a.shape} and {b.shape}")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValueError("derivative pair contains non-finite values")
        object.__setattr__(self, "d_a", a)
        object.__setattr__(self, "d_b", b)


def derivatives(proj: ProjectionSet) -> np.ndarray:
    """First-order detector derivatives of every projection, shape (L-1, n)."""
    if proj.values.shape[0] < 2:
        raise ValueError("projection too short to differentiate")
    return np.diff(proj.values, axis=0)


def _quantize_angles(ang: np.ndarray, bins: int) -> np.ndarray:
    # left-closed uniform bins over [-pi, pi]; +pi falls into the last bin
    idx = np.floor((ang + np.pi) * (bins / (2.0 * np.pi))).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


def pair_histogram(pair: DerivativePair, bins: int) -> np.ndarray:
    """Weighted angle histogram of one derivative pair.

    Element ``i`` lands in the bin containing ``atan2(d_a[i], d_b[i])`` with
    weight ``|d_a[i] + d_b[i]|``; zero/zero elements carry zero weight and
    need no special casing.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    ang = np.arctan2(pair.d_a, pair.d_b)
    weights = np.abs(pair.d_a + pair.d_b)
    idx = _quantize_angles(ang, bins)
    return np.bincount(idx, weights=weights, minlength=bins).astype(np.float64)


def _block_histograms(vals: np.ndarray, a_idx: np.ndarray, b_idx: np.ndarray,
                      bins: int, normalize: bool) -> list[np.ndarray]:
    """Histogram every window of a projected stack ``(L, n, k)``."""
    out = []
    deriv = np.diff(vals, axis=0)  # (L-1, n, k)
    for k in range(vals.shape[2]):
        d = deriv[:, :, k]
        da = d[:, a_idx]
        db = d[:, b_idx]
        ang = np.arctan2(da, db)
        weights = np.abs(da + db)
        idx = _quantize_angles(ang, bins)
        hist = np.bincount(idx.ravel(), weights=weights.ravel(), minlength=bins).astype(np.float64)
        mass = hist.sum()
        if normalize and mass > 0:
            hist /= mass
        out.append(hist)
    return out


def lrd_descriptor(image, params: LrdParams, source_id: str = "") -> Descriptor:
    """Extract the block-histogram descriptor of a grayscale image.

    The image is tiled by ``params``' block grid; every block is
    mean-centered, projected at ``params.n_angles`` directions, and reduced
    to one ``params.bins``-bin weighted angle histogram. Histograms are
    L1-normalized per block when ``params.normalize`` is set and
    concatenated row-major.
    """
    img = as_image(image, nonneg=True)
    grid = block_grid(img, params.n_rows, params.n_cols, params.overlap)
    angles = AngleSet(params.n_angles)
    scheme = params.scheme()
    for j, k in scheme.pairs:
        if j >= angles.n or k >= angles.n:
            raise ValueError(f"pair ({j}, {k}) out of range for {angles.n} angles")
    a_idx = np.array([p[0] for p in scheme.pairs])
    b_idx = np.array([p[1] for p in scheme.pairs])

    hists: list[np.ndarray | None] = [None] * len(grid)
    # group equal-shaped blocks so each group projects in one sparse matmul
    groups: dict[tuple[int, int], list[int]] = {}
    for pos, (x, y, w, h) in enumerate(grid.windows):
        block = img[y:y + h, x:x + w]
        if block.max() == block.min():
            # flat block: centered content is identically zero
            hists[pos] = np.zeros(params.bins)
        else:
            groups.setdefault((h, w), []).append(pos)

    for shape, positions in groups.items():
        flats = np.empty((shape[0] * shape[1], len(positions)))
        for col, pos in enumerate(positions):
            x, y, w, h = grid.windows[pos]
            block = img[y:y + h, x:x + w]
            flats[:, col] = (block - block.mean()).ravel()
        vals = _project_stack(flats, shape, angles)
        for col, hist in zip(positions, _block_histograms(vals, a_idx, b_idx,
                                                          params.bins, params.normalize)):
            hists[col] = hist

    return Descriptor(values=np.concatenate(hists), params_digest=params.digest(),
                      source_id=source_id)


def global_radon_descriptor(image, n_angles: int = 4, target_length: int | None = None,
                            source_id: str = "") -> Descriptor:
    """Whole-image projection baseline: raw concatenated profiles.

    Projects the entire image at ``n_angles`` equidistant directions and
    concatenates the profiles angle-major. ``target_length`` optionally
    resamples each profile so the total length matches; it must be a
    multiple of ``n_angles``.
    """
    img = as_image(image, nonneg=True)
    angles = AngleSet(n_angles)
    vals = _project(img, angles).values  # (L, n)
    L = vals.shape[0]
    if target_length is not None:
        if target_length % n_angles != 0:
            raise ValueError(f"target length {target_length} not divisible by {n_angles} angles")
        per = target_length // n_angles
        if per < 2:
            raise ValueError(f"target length {target_length} too short for {n_angles} angles")
        grid_new = np.linspace(0.0, L - 1.0, per)
        vals = np.stack([np.interp(grid_new, np.arange(L), vals[:, j])
                         for j in range(n_angles)], axis=1)
    digest = f"gr|angles={n_angles}|target={target_length or 0}"
    return Descriptor(values=vals.T.ravel(), params_digest=digest, source_id=source_id)
