"""Corpus manifests, image loading, tiling and perturbation generators.

A manifest is a CSV file with header ``path,label,split`` (an optional
``sha256`` column is verified when present). Relative paths are resolved
against the directory holding the manifest. A record's id is its path with
the file suffix removed; ids pair a clean corpus with its perturbed variant.
"""
from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path, PurePosixPath

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.ndimage import map_coordinates

from .errors import DatasetIOError, ImageFormatError, InvalidInputError

log = logging.getLogger(__name__)

__all__ = [
    "ManifestRecord",
    "Manifest",
    "PerturbationSpec",
    "PairedSplit",
    "ROTATION_ANGLES",
    "read_manifest",
    "write_manifest",
    "load_grayscale",
    "load_images",
    "save_png",
    "extract_subimages",
    "salt_pepper",
    "rotate",
    "build_variant",
    "split_protocol",
]

ROTATION_ANGLES = (0, 45, 90, 135, 180, 225, 270)
MANIFEST_FIELDS = ("path", "label", "split")


@dataclass(frozen=True)
class ManifestRecord:
    path: str
    label: str
    split: str = ""
    sha256: str = ""

    @property
    def id(self) -> str:
        return PurePosixPath(self.path).with_suffix("").as_posix()


@dataclass
class Manifest:
    records: list[ManifestRecord]
    root: Path = field(default_factory=Path)
    name: str = ""

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.records]

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def resolve(self, record: ManifestRecord) -> Path:
        p = Path(record.path)
        return p if p.is_absolute() else self.root / p

    def validate(self, min_classes: int = 0) -> None:
        """Raise ``InvalidInputError`` unless paths are unique and every record is labelled."""
        seen = set()
        for r in self.records:
            if not r.path:
                raise InvalidInputError("manifest record with empty path")
            if not r.label:
                raise InvalidInputError(f"record {r.path!r} has no label")
            if r.path in seen:
                raise InvalidInputError(f"duplicate manifest path {r.path!r}")
            seen.add(r.path)
        n_classes = len(set(self.labels))
        if n_classes < min_classes:
            raise InvalidInputError(f"manifest has {n_classes} class(es); at least {min_classes} required")


def read_manifest(path) -> Manifest:
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            fields = reader.fieldnames or []
            if "path" not in fields or "label" not in fields:
                raise InvalidInputError(f"{path}: manifest header must contain 'path' and 'label'")
            records = [
                ManifestRecord(
                    path=(row.get("path") or "").strip(),
                    label=(row.get("label") or "").strip(),
                    split=(row.get("split") or "").strip(),
                    sha256=(row.get("sha256") or "").strip().lower(),
                )
                for row in reader
            ]
    except OSError as exc:
        raise DatasetIOError(path, exc.strerror or str(exc)) from exc
    manifest = Manifest(records, root=path.parent, name=path.parent.name)
    manifest.validate()
    return manifest


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(manifest: Manifest, path) -> Path:
    """Write ``manifest`` as CSV, atomically. Paths are written as stored."""
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_FIELDS)
    for r in manifest.records:
        writer.writerow([r.path, r.label, r.split])
    atomic_write_bytes(path, buf.getvalue().encode("utf-8"))
    return path


# ---------------------------------------------------------------- images


def _luma(rgb: np.ndarray) -> np.ndarray:
    # 0.299 R + 0.587 G + 0.114 B, rounded half up, in integer arithmetic
    rgb = rgb.astype(np.int64)
    y = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return y.astype(np.uint8)


def load_grayscale(path) -> np.ndarray:
    """Read an image file as a ``uint8`` grayscale array.

    8-bit grayscale files are returned verbatim; RGB(A) and palette images are
    converted with luma weights 0.299/0.587/0.114, rounding half up. Alpha is
    ignored. Other pixel formats (16-bit, float) raise ``ImageFormatError``.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "1":
                im = im.convert("L")
            elif mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
            mode = im.mode
            if mode == "L":
                return np.array(im, dtype=np.uint8)
            if mode == "LA":
                return np.array(im, dtype=np.uint8)[..., 0].copy()
            if mode in ("RGB", "RGBA"):
                return _luma(np.array(im, dtype=np.uint8)[..., :3])
    except FileNotFoundError as exc:
        raise DatasetIOError(path, "no such file") from exc
    except UnidentifiedImageError as exc:
        raise DatasetIOError(path, "not a decodable image") from exc
    except OSError as exc:
        raise DatasetIOError(path, f"cannot read image ({exc})") from exc
    raise ImageFormatError(path, f"unsupported pixel format {mode!r}")


def _verified_load(manifest: Manifest, record: ManifestRecord) -> np.ndarray:
    path = manifest.resolve(record)
    if record.sha256:
        try:
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
        except OSError as exc:
            raise DatasetIOError(path, exc.strerror or str(exc)) from exc
        if digest != record.sha256:
            raise DatasetIOError(path, "checksum mismatch")
    return load_grayscale(path)


class LoadFailures(DatasetIOError):
    """One or more manifest images could not be loaded; ``failures`` lists (path, message)."""

    def __init__(self, failures: list[tuple[str, str]]):
        self.failures = failures
        detail = "; ".join(f"{p}: {m}" for p, m in failures[:5])
        more = f" (+{len(failures) - 5} more)" if len(failures) > 5 else ""
        super().__init__(failures[0][0], f"{len(failures)} image(s) failed to load: {detail}{more}")


def load_images(manifest: Manifest, threads: int = 1) -> list[np.ndarray]:
    """Load every record's image in manifest order, collecting all failures."""

    def one(record):
        try:
            return _verified_load(manifest, record), None
        except DatasetIOError as exc:
            return None, (exc.path, str(exc))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, manifest.records))
    else:
        results = [one(r) for r in manifest.records]
    failures = [err for _, err in results if err is not None]
    if failures:
        raise LoadFailures(failures)
    return [img for img, _ in results]


def png_bytes(img: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(img, dtype=np.uint8)).save(buf, format="PNG")
    return buf.getvalue()


def save_png(img: np.ndarray, path) -> Path:
    path = Path(path)
    atomic_write_bytes(path, png_bytes(img))
    return path


# ---------------------------------------------------------------- tiling


def extract_subimages(img, tile_h: int, tile_w: int, count: int | None = None) -> list[np.ndarray]:
    """Cut non-overlapping ``tile_h x tile_w`` tiles in row-major order from the top-left.

    With ``count`` unset all grid tiles are returned. A smaller ``count`` keeps
    the first ``count`` tiles. One more than the grid holds appends a tile
    centred in the image (e.g. ten 200x200 tiles from a 640x640 image: nine
    grid tiles plus the centre tile, which overlaps its neighbours).
    """
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2D image, got shape {arr.shape}")
    h, w = arr.shape
    if tile_h < 1 or tile_w < 1 or tile_h > h or tile_w > w:
        raise InvalidInputError(f"tile {tile_h}x{tile_w} does not fit image {h}x{w}")
    rows, cols = h // tile_h, w // tile_w
    tiles = [
        arr[r * tile_h : (r + 1) * tile_h, c * tile_w : (c + 1) * tile_w]
        for r in range(rows)
        for c in range(cols)
    ]
    if count is None:
        return tiles
    if count < 1 or count > len(tiles) + 1:
        raise InvalidInputError(f"cannot take {count} tiles; grid holds {len(tiles)} (+1 centred)")
    if count == len(tiles) + 1:
        top, left = (h - tile_h) // 2, (w - tile_w) // 2
        tiles.append(arr[top : top + tile_h, left : left + tile_w])
    return tiles[:count]


# ---------------------------------------------------------------- perturbations


def salt_pepper(img, l: float, seed) -> np.ndarray:
    """Replace each pixel with probability ``l`` by 0 or 255 (even odds).

    ``seed`` is anything ``numpy.random.default_rng`` accepts.
    """
    if not 0.0 <= l <= 1.0:
        raise InvalidInputError(f"noise intensity must lie in [0, 1], got {l}")
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2D image, got shape {arr.shape}")
    rng = np.random.default_rng(seed)
    hit = rng.random(arr.shape) < l
    salt = rng.random(arr.shape) < 0.5
    out = arr.astype(np.uint8, copy=True)
    out[hit] = np.where(salt[hit], 255, 0)
    return out


def _rotate45(arr: np.ndarray) -> np.ndarray:
    h, w = arr.shape
    side = int(math.floor(min(h, w) / math.sqrt(2.0)))
    off = np.arange(side, dtype=np.float64) - (side - 1) / 2.0
    dy, dx = np.meshgrid(off, off, indexing="ij")
    c = s = math.sqrt(0.5)
    rows = (h - 1) / 2.0 + dy * c + dx * s
    cols = (w - 1) / 2.0 - dy * s + dx * c
    out = map_coordinates(arr.astype(np.float64), [rows, cols], order=1, mode="nearest")
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def rotate(img, angle: int) -> np.ndarray:
    """Rotate counter-clockwise by a multiple of 45 degrees.

    Multiples of 90 degrees permute pixels exactly. Odd multiples of 45 rotate
    exactly by the preceding multiple of 90, then by 45 degrees with bilinear
    interpolation about the image centre, keeping the centred square of side
    ``floor(min(h, w) / sqrt(2))`` that lies fully inside the rotated image.
    """
    if angle not in ROTATION_ANGLES:
        raise InvalidInputError(f"angle must be one of {ROTATION_ANGLES}, got {angle!r}")
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidInputError(f"expected a non-empty 2D image, got shape {arr.shape}")
    out = np.rot90(arr, angle // 90).copy()
    if angle % 90:
        out = _rotate45(out)
    return out


@dataclass(frozen=True)
class PerturbationSpec:
    """Either salt-and-pepper noise at ``intensity`` or rotation by each of ``angles``."""

    kind: str
    intensity: float = 0.0
    angles: tuple[int, ...] = ROTATION_ANGLES
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("salt_pepper", "rotation"):
            raise InvalidInputError(f"unknown perturbation {self.kind!r}")
        if not 0.0 <= self.intensity <= 1.0:
            raise InvalidInputError(f"noise intensity must lie in [0, 1], got {self.intensity}")
        bad = [a for a in self.angles if a not in ROTATION_ANGLES]
        if bad or not self.angles:
            raise InvalidInputError(f"rotation angles must be drawn from {ROTATION_ANGLES}")


def _record_seed(seed: int, record_id: str) -> np.random.SeedSequence:
    # keyed on the id, so noise does not depend on manifest order
    key = int.from_bytes(hashlib.sha256(record_id.encode("utf-8")).digest()[:8], "little")
    return np.random.SeedSequence([int(seed), key])


class VariantBuildError(DatasetIOError):
    def __init__(self, failures: list[tuple[str, str]]):
        self.failures = failures
        super().__init__(failures[0][0], f"{len(failures)} file(s) failed: " + "; ".join(m for _, m in failures[:5]))


def build_variant(manifest: Manifest, spec: PerturbationSpec, out_dir, threads: int = 1) -> Manifest:
    """Write a perturbed copy of ``manifest`` under ``out_dir``.

    Images are stored as PNG at ``<id>.png`` (noise) or ``<id>_rot<angle>.png``
    (rotation, one record per angle, labels and split tags carried over). The
    new manifest is written to ``out_dir/manifest.csv`` last, after every image
    succeeded. Per-file failures are collected and raised together.
    """
    out_dir = Path(out_dir)
    manifest.validate()
    jobs: list[tuple[ManifestRecord, ManifestRecord, object]] = []
    for r in manifest.records:
        if spec.kind == "salt_pepper":
            jobs.append((r, replace(r, path=f"{r.id}.png", sha256=""), None))
        else:
            for a in spec.angles:
                jobs.append((r, replace(r, path=f"{r.id}_rot{a:03d}.png", sha256=""), a))
    targets = [out_dir / j[1].path for j in jobs]
    if len(set(targets)) != len(targets):
        raise InvalidInputError("variant output paths collide")

    cache: dict[str, np.ndarray] = {}

    def work(job):
        src, dst, angle = job
        try:
            img = cache.get(src.path)
            if img is None:
                img = _verified_load(manifest, src)
            if spec.kind == "salt_pepper":
                out = salt_pepper(img, spec.intensity, _record_seed(spec.seed, src.id))
            else:
                out = rotate(img, angle)
            save_png(out, out_dir / dst.path)
            return None
        except (DatasetIOError, OSError) as exc:
            return (str(manifest.resolve(src)), str(exc))

    if spec.kind == "rotation":
        # load each source once; the seven angles reuse it
        failures = []
        for r in manifest.records:
            try:
                cache[r.path] = _verified_load(manifest, r)
            except DatasetIOError as exc:
                failures.append((exc.path, str(exc)))
        if failures:
            raise VariantBuildError(failures)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            errors = list(pool.map(work, jobs))
    else:
        errors = [work(j) for j in jobs]
    failures = [e for e in errors if e is not None]
    if failures:
        raise VariantBuildError(failures)

    variant = Manifest([j[1] for j in jobs], root=out_dir, name=out_dir.name)
    variant.validate()
    write_manifest(variant, out_dir / "manifest.csv")
    log.info("wrote %d images to %s", len(jobs), out_dir)
    return variant


@dataclass
class PairedSplit:
    """Row-aligned manifests: folds are fitted on ``train`` rows, scored on ``test`` rows."""

    train: Manifest
    test: Manifest
    mode: str


def split_protocol(clean: Manifest, noisy: Manifest, mode: str) -> PairedSplit:
    """Pair a clean corpus with its noisy variant by record id.

    ``both_noisy`` trains and tests on the noisy corpus; ``train_clean_test_noisy``
    trains on clean images and tests on their noisy counterparts. Either way
    the rows of ``train`` and ``test`` follow the clean manifest's order, so a
    single fold assignment covers both sides.
    """
    if mode not in ("both_noisy", "train_clean_test_noisy"):
        raise InvalidInputError(f"unknown split mode {mode!r}")
    by_id = {r.id: r for r in noisy.records}
    if len(by_id) != len(noisy.records):
        raise InvalidInputError("noisy manifest has duplicate ids")
    missing = [r.id for r in clean.records if r.id not in by_id]
    if missing or len(clean.records) != len(noisy.records):
        raise InvalidInputError(
            f"manifests do not correspond record for record (unmatched ids: {missing[:5]})"
        )
    paired = []
    for r in clean.records:
        n = by_id[r.id]
        if n.label != r.label:
            raise InvalidInputError(f"label mismatch for {r.id!r}: {r.label!r} vs {n.label!r}")
        paired.append(n)
    test = Manifest(paired, root=noisy.root, name=noisy.name)
    train = test if mode == "both_noisy" else clean
    return PairedSplit(train=train, test=test, mode=mode)
