"""Dataset ingestion, image standardization, and binary persistence.

Descriptor files carry a little-endian binary layout::

    magic "LRDF" | u16 version | u16 reserved | u32 count | u32 length
    u16 digest_len | digest utf-8 | u16 metric_len | metric utf-8
    payload: count * length float32, row-major
    trailer, per record: u16 id_len | id utf-8 | u16 label_len | label utf-8

The float32 payload round-trips bit-exactly. Manifests are plain CSV with
header ``path,id,label``.
"""

from __future__ import annotations

import csv
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .descriptor import (
    Descriptor,
    LrdParams,
    PRESETS,
    PairingScheme,
    global_radon_descriptor,
    lrd_descriptor,
)
from .evaluation import parse_irma_code
from .radon import as_image

__all__ = [
    "ManifestRecord",
    "DatasetManifest",
    "PipelineConfig",
    "load_image",
    "standardize",
    "save_descriptors",
    "load_descriptors",
    "read_manifest",
    "write_manifest",
    "manifest_from_holidays_dir",
    "manifest_from_irma_files",
    "extract_from_manifest",
    "worker_count",
]

_MAGIC = b"LRDF"
_VERSION = 1
_IMAGE_SUFFIXES = {".png", ".pgm", ".ppm", ".bmp", ".jpg", ".jpeg"}


def load_image(path) -> np.ndarray:
    """Decode an image file to grayscale float64 intensities in [0, 255].

    Color inputs are reduced by luma weighting; 16-bit inputs are rescaled
    to the 8-bit range.
    """
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("I", "I;16", "I;16L", "I;16B"):
                arr = np.asarray(im, dtype=np.float64) * (255.0 / 65535.0)
            elif im.mode == "F":
                arr = np.asarray(im, dtype=np.float64)
            else:
                if im.mode != "L":
                    im = im.convert("L")
                arr = np.asarray(im, dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot decode image {path}: {exc}") from None
    return as_image(arr, name=str(path), nonneg=True)


def standardize(image, side: int = 256, pad_only: bool = False) -> np.ndarray:
    """Bring an image to ``side x side`` with zero padding.

    Default behavior scales the image (bilinear, aspect preserved) so its
    longer side equals ``side``, then pads symmetrically with zeros.
    ``pad_only`` skips scaling: smaller images are only padded and larger
    ones are center-cropped.
    """
    if side < 16:
        raise ValueError(f"side must be >= 16, got {side}")
    img = as_image(image, nonneg=True)
    h, w = img.shape

    if pad_only:
        if h > side:
            top = (h - side) // 2
            img = img[top:top + side, :]
            h = side
        if w > side:
            left = (w - side) // 2
            img = img[:, left:left + side]
            w = side
    elif max(h, w) != side:
        if h >= w:
            new_h, new_w = side, max(1, round(w * side / h))
        else:
            new_h, new_w = max(1, round(h * side / w)), side
        resized = Image.fromarray(img.astype(np.float32), mode="F").resize(
            (new_w, new_h), Image.BILINEAR)
        img = np.asarray(resized, dtype=np.float64)
        h, w = new_h, new_w

    top = (side - h) // 2
    left = (side - w) // 2
    out = np.zeros((side, side))
    out[top:top + h, left:left + w] = img
    return np.maximum(out, 0.0)


def save_descriptors(path, descriptors, labels, metric: str = "l1") -> None:
    """Write descriptors and their labels to a binary descriptor file."""
    descriptors = list(descriptors)
    labels = [str(l) for l in labels]
    if not descriptors:
        raise ValueError("nothing to save")
    if len(descriptors) != len(labels):
        raise ValueError(f"{len(descriptors)} descriptors but {len(labels)} labels")
    length = len(descriptors[0])
    digest = descriptors[0].params_digest
    for d in descriptors:
        if len(d) != length or d.params_digest != digest:
            raise ValueError(
                f"descriptor {d.source_id!r} does not match the file's length/configuration")

    def packed(text: str) -> bytes:
        raw = text.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError(f"string too long for descriptor file: {text[:40]!r}...")
        return struct.pack("<H", len(raw)) + raw

    payload = np.stack([d.values for d in descriptors]).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HHII", _VERSION, 0, len(descriptors), length))
        fh.write(packed(digest))
        fh.write(packed(metric))
        fh.write(payload.tobytes())
        for d, label in zip(descriptors, labels):
            fh.write(packed(d.source_id))
            fh.write(packed(label))


def _read_exact(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise ValueError(f"descriptor file truncated while reading {what}")
    return data


def _read_string(fh, what: str) -> str:
    (n,) = struct.unpack("<H", _read_exact(fh, 2, what))
    return _read_exact(fh, n, what).decode("utf-8")


def load_descriptors(path):
    """Read a descriptor file; returns ``(descriptors, labels, metric)``."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != _MAGIC:
            raise ValueError(f"{path} is not a descriptor file (bad magic {magic!r})")
        version, _, count, length = struct.unpack("<HHII", _read_exact(fh, 12, "header"))
        if version != _VERSION:
            raise ValueError(f"unsupported descriptor file version {version}")
        digest = _read_string(fh, "configuration digest")
        metric = _read_string(fh, "metric")
        payload = np.frombuffer(
            _read_exact(fh, count * length * 4, "payload"), dtype="<f4"
        ).reshape(count, length)
        descriptors = []
        labels = []
        for _ in range(count):
            source_id = _read_string(fh, "record id")
            labels.append(_read_string(fh, "record label"))
            descriptors.append(Descriptor(
                values=payload[len(descriptors)].astype(np.float64),
                params_digest=digest,
                source_id=source_id,
            ))
    return descriptors, labels, metric


@dataclass(frozen=True)
class ManifestRecord:
    path: str
    id: str
    label: str


@dataclass(frozen=True)
class DatasetManifest:
    """An ordered list of (path, id, label) records with a dataset kind."""

    records: tuple[ManifestRecord, ...]
    kind: str = "generic"

    def __post_init__(self):
        if self.kind not in ("irma", "holidays", "generic"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        seen = set()
        for rec in self.records:
            if not rec.path:
                raise ValueError(f"record {rec.id!r} has an empty path")
            if rec.id in seen:
                raise ValueError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)
            if self.kind == "irma":
                parse_irma_code(rec.label)
            elif self.kind == "holidays" and not rec.label:
                raise ValueError(f"record {rec.id!r} has an empty category label")

    def __len__(self) -> int:
        return len(self.records)

    def holidays_split(self) -> tuple["DatasetManifest", "DatasetManifest"]:
        """First record of each category becomes a query, the rest the database."""
        seen: set[str] = set()
        queries = []
        db = []
        for rec in self.records:
            if rec.label in seen:
                db.append(rec)
            else:
                seen.add(rec.label)
                queries.append(rec)
        return (DatasetManifest(tuple(queries), self.kind),
                DatasetManifest(tuple(db), self.kind))


def write_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "id", "label"])
        for rec in manifest.records:
            writer.writerow([rec.path, rec.id, rec.label])


def read_manifest(path, kind: str = "generic") -> DatasetManifest:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["path", "id", "label"]:
            raise ValueError(f"{path}: expected header 'path,id,label', got {header}")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            records.append(ManifestRecord(path=row[0], id=row[1], label=row[2]))
    return DatasetManifest(records=tuple(records), kind=kind)


def manifest_from_holidays_dir(directory) -> DatasetManifest:
    """Build a manifest from the scene dataset's numeric filename convention.

    Files must have numeric stems; the category is ``number // 100`` and the
    lowest-numbered image of each category is its designated query (it sorts
    first, so ``holidays_split`` picks it up).
    """
    directory = Path(directory)
    entries = []
    for p in sorted(directory.iterdir()):
        if p.suffix.lower() not in _IMAGE_SUFFIXES or not p.is_file():
            continue
        if not p.stem.isdigit():
            raise ValueError(f"non-numeric image name {p.name!r}; cannot derive its category")
        entries.append((int(p.stem), p))
    if not entries:
        raise ValueError(f"no images found in {directory}")
    entries.sort()
    records = tuple(
        ManifestRecord(path=str(p), id=p.stem, label=str(num // 100)) for num, p in entries
    )
    return DatasetManifest(records=records, kind="holidays")


def manifest_from_irma_files(image_paths, codes) -> DatasetManifest:
    """Build an x-ray manifest from explicit image paths and an id-to-code map.

    ``codes`` is a mapping or a text file of ``id<sep>code`` lines where the
    separator may be ``;``, ``,``, tab, or whitespace. Image ids are file
    stems and every image must have a code.
    """
    if not isinstance(codes, dict):
        table = {}
        with open(codes, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                for sep in (";", ",", "\t"):
                    if sep in line:
                        key, _, value = line.partition(sep)
                        break
                else:
                    parts = line.split(None, 1)
                    if len(parts) != 2:
                        raise ValueError(f"{codes}:{lineno}: cannot split {line!r} into id and code")
                    key, value = parts
                table[key.strip()] = value.strip()
        codes = table

    records = []
    missing = []
    for p in image_paths:
        p = Path(p)
        code = codes.get(p.stem)
        if code is None:
            missing.append(p.stem)
        else:
            records.append(ManifestRecord(path=str(p), id=p.stem, label=code))
    if missing:
        raise ValueError(f"no code for image ids: {', '.join(sorted(missing)[:10])}")
    return DatasetManifest(records=tuple(records), kind="irma")


@dataclass(frozen=True)
class PipelineConfig:
    """End-to-end extraction configuration: descriptor plus standardization."""

    method: str = "lrd"  # "lrd" | "gr"
    params: LrdParams = PRESETS["irma"]
    gr_angles: int = 4
    gr_target_length: int | None = None
    side: int = 256
    pad_only: bool = False

    def __post_init__(self):
        if self.method not in ("lrd", "gr"):
            raise ValueError(f"unknown method {self.method!r}")

    def digest(self) -> str:
        if self.method == "lrd":
            core = self.params.digest()
        else:
            core = f"gr|angles={self.gr_angles}|target={self.gr_target_length or 0}"
        return f"{core}|side={self.side}|fit={'pad' if self.pad_only else 'scale'}"

    @classmethod
    def from_digest(cls, digest: str) -> "PipelineConfig":
        """Rebuild the extraction configuration a digest string describes."""
        parts = digest.split("|")
        method = parts[0]
        fields = {}
        for part in parts[1:]:
            key, sep, value = part.partition("=")
            if not sep:
                raise ValueError(f"malformed digest segment {part!r} in {digest!r}")
            fields[key] = value
        try:
            side = int(fields.get("side", 256))
            pad_only = fields.get("fit", "scale") == "pad"
            if method == "gr":
                target = int(fields["target"])
                return cls(method="gr", gr_angles=int(fields["angles"]),
                           gr_target_length=target or None, side=side, pad_only=pad_only)
            if method == "lrd":
                rows, cols = fields["grid"].split("x")
                pairing: str | PairingScheme = fields["pairing"]
                if isinstance(pairing, str) and pairing.startswith("custom:"):
                    pairs = tuple(
                        (int(a), int(b))
                        for a, b in (p.split("-") for p in pairing[len("custom:"):].split(","))
                    )
                    pairing = PairingScheme(kind="custom", pairs=pairs)
                params = LrdParams(
                    n_rows=int(rows), n_cols=int(cols), overlap=float(fields["overlap"]),
                    n_angles=int(fields["angles"]), bins=int(fields["bins"]),
                    pairing=pairing, normalize=bool(int(fields["norm"])),
                )
                return cls(method="lrd", params=params, side=side, pad_only=pad_only)
        except (KeyError, ValueError) as exc:
            raise ValueError(f"cannot parse configuration digest {digest!r}: {exc}") from None
        raise ValueError(f"unknown method {method!r} in digest {digest!r}")

    def describe_image(self, image, source_id: str = "") -> Descriptor:
        std = standardize(image, side=self.side, pad_only=self.pad_only)
        if self.method == "lrd":
            desc = lrd_descriptor(std, self.params, source_id=source_id)
        else:
            desc = global_radon_descriptor(std, n_angles=self.gr_angles,
                                           target_length=self.gr_target_length,
                                           source_id=source_id)
        # quantize to file precision so fresh descriptors compare bit-equal
        # against ones loaded back from descriptor files
        values = desc.values.astype(np.float32).astype(np.float64)
        return Descriptor(values=values, params_digest=self.digest(), source_id=source_id)

    def describe_path(self, path, source_id: str = "") -> Descriptor:
        return self.describe_image(load_image(path), source_id=source_id)


def worker_count() -> int:
    """Worker pool size; the LRD_THREADS environment variable caps it."""
    env = os.environ.get("LRD_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"LRD_THREADS must be an integer, got {env!r}") from None
        return max(1, n)
    return min(8, os.cpu_count() or 1)


def extract_from_manifest(manifest: DatasetManifest, config: PipelineConfig,
                          workers: int | None = None):
    """Describe every manifest record; returns ``(descriptors, labels)``.

    Work is spread over a bounded thread pool; results keep manifest order
    regardless of scheduling.
    """
    if workers is None:
        workers = worker_count()

    def run(rec: ManifestRecord) -> Descriptor:
        return config.describe_path(rec.path, source_id=rec.id)

    if workers <= 1 or len(manifest) <= 1:
        descriptors = [run(rec) for rec in manifest.records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            descriptors = list(pool.map(run, manifest.records))
    return descriptors, [rec.label for rec in manifest.records]
