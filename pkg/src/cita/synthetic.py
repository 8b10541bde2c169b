"""Procedural texture corpus for desk-scale experiments.

Classes differ in spatial scale rather than orientation so that rotating a
sample never turns it into another class. Each sample draws its own phase,
offset, contrast jitter and a little additive noise from the seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .datasets import Manifest, ManifestRecord, save_png, write_manifest

__all__ = ["TEXTURE_CLASSES", "generate_sample", "generate_corpus", "write_corpus"]


@dataclass(frozen=True)
class TextureClass:
    name: str
    kind: str  # sinusoid | checker | smooth_noise
    scale: float  # period in pixels, square side, or smoothing sigma
    angle_deg: float = 0.0


TEXTURE_CLASSES = (
    TextureClass("sine_p24", "sinusoid", 24.0, 0.0),
    TextureClass("sine_p12", "sinusoid", 12.0, 30.0),
    TextureClass("sine_p7", "sinusoid", 7.0, 60.0),
    TextureClass("sine_p4", "sinusoid", 4.0, 15.0),
    TextureClass("checker_s2", "checker", 2),
    TextureClass("checker_s5", "checker", 5),
    TextureClass("checker_s11", "checker", 11),
    TextureClass("noise_sigma1", "smooth_noise", 1.0),
    TextureClass("noise_sigma2.5", "smooth_noise", 2.5),
    TextureClass("noise_sigma6", "smooth_noise", 6.0),
)


def _stretch(field: np.ndarray, lo: float, hi: float) -> np.ndarray:
    f = field - field.min()
    peak = f.max()
    if peak > 0:
        f = f / peak
    return lo + (hi - lo) * f


def generate_sample(cls: TextureClass, size: int, rng: np.random.Generator) -> np.ndarray:
    """One ``size x size`` uint8 sample of ``cls``."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    amplitude = 100.0 * rng.uniform(0.95, 1.05)
    mid = 128.0 + rng.uniform(-8.0, 8.0)
    if cls.kind == "sinusoid":
        th = np.deg2rad(cls.angle_deg)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        field = mid + amplitude * np.cos(2.0 * np.pi * (xx * np.cos(th) + yy * np.sin(th)) / cls.scale + phase)
    elif cls.kind == "checker":
        s = int(cls.scale)
        oy, ox = rng.integers(0, 2 * s, size=2)
        cells = ((yy + oy) // s + (xx + ox) // s) % 2
        field = mid + amplitude * (2.0 * cells - 1.0)
    elif cls.kind == "smooth_noise":
        raw = gaussian_filter(rng.standard_normal((size, size)), cls.scale, mode="wrap")
        field = _stretch(raw, mid - amplitude, mid + amplitude)
    else:
        raise ValueError(f"unknown texture kind {cls.kind!r}")
    field = field + rng.normal(0.0, 3.0, size=field.shape)
    return np.clip(np.rint(field), 0, 255).astype(np.uint8)


def generate_corpus(
    per_class: int = 10,
    size: int = 64,
    seed: int = 0,
    classes=TEXTURE_CLASSES,
) -> tuple[list[np.ndarray], list[str]]:
    """Images and labels, class-major."""
    root = np.random.SeedSequence(seed)
    images, labels = [], []
    for cls, ss in zip(classes, root.spawn(len(classes))):
        rng = np.random.default_rng(ss)
        for _ in range(per_class):
            images.append(generate_sample(cls, size, rng))
            labels.append(cls.name)
    return images, labels


def write_corpus(out_dir, per_class: int = 10, size: int = 64, seed: int = 0) -> Manifest:
    """Write the corpus as PNGs plus ``manifest.csv`` under ``out_dir``."""
    out_dir = Path(out_dir)
    images, labels = generate_corpus(per_class, size, seed)
    records = []
    counters: dict[str, int] = {}
    for img, label in zip(images, labels):
        n = counters.get(label, 0)
        counters[label] = n + 1
        rel = f"{label}/{label}_{n:03d}.png"
        save_png(img, out_dir / rel)
        records.append(ManifestRecord(path=rel, label=label))
    manifest = Manifest(records, root=out_dir, name=out_dir.name)
    write_manifest(manifest, out_dir / "manifest.csv")
    return manifest
