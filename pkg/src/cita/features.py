"""Method dispatch and the on-disk feature-matrix format.

A feature matrix is a CSV file, one row per image::

    id,label,v1,...,vN

with every value written as ``%.17g`` (round-trips bit-exactly), plus a JSON
sidecar next to it (same stem, ``.json``) recording the method and its
parameters.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import baselines, descriptor
from .ca import CitaParams
from .datasets import atomic_write_bytes
from .errors import DatasetIOError, InvalidInputError

METHOD_IDS = ("cita",) + tuple(baselines.METHODS)


def feature_length(method: str, params: CitaParams | None = None) -> int:
    if method == "cita":
        return (params or descriptor.default_params()).iterations
    return baselines.FEATURE_LENGTHS[method]


def compute_features(
    images: Sequence[np.ndarray],
    method: str = "cita",
    params: CitaParams | None = None,
    threads: int = 1,
) -> np.ndarray:
    """Feature matrix for ``images`` in input order, for any method id."""
    if method not in METHOD_IDS:
        raise InvalidInputError(f"unknown method {method!r}; choose from {', '.join(METHOD_IDS)}")
    if not images:
        raise InvalidInputError("no images to describe")
    if method == "cita":
        return descriptor.extract_many(images, params, threads)
    fn = baselines.METHODS[method]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(fn, images))
    else:
        rows = [fn(img) for img in images]
    return np.vstack(rows)


@dataclass
class FeatureMatrix:
    ids: list[str]
    labels: list[str]
    values: np.ndarray
    meta: dict = field(default_factory=dict)


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_feature_matrix(fm: FeatureMatrix, csv_path) -> tuple[Path, Path]:
    csv_path = Path(csv_path)
    n, dim = fm.values.shape
    if len(fm.ids) != n or len(fm.labels) != n:
        raise InvalidInputError("ids, labels and feature rows disagree in length")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "label"] + [f"v{i}" for i in range(1, dim + 1)])
    for rid, label, row in zip(fm.ids, fm.labels, fm.values):
        writer.writerow([rid, label] + [format(float(v), ".17g") for v in row])
    atomic_write_bytes(csv_path, buf.getvalue().encode("utf-8"))

    meta = dict(fm.meta)
    meta.update({"n_rows": n, "n_features": dim})
    side = sidecar_path(csv_path)
    atomic_write_bytes(side, (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    return csv_path, side


def read_feature_matrix(csv_path) -> FeatureMatrix:
    csv_path = Path(csv_path)
    try:
        text = csv_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetIOError(csv_path, exc.strerror or str(exc)) from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:2] != ["id", "label"]:
        raise InvalidInputError(f"{csv_path}: expected header 'id,label,v1,...'")
    body = rows[1:]
    if not body:
        raise InvalidInputError(f"{csv_path}: no feature rows")
    try:
        values = np.array([[float(v) for v in r[2:]] for r in body], dtype=np.float64)
    except ValueError as exc:
        raise InvalidInputError(f"{csv_path}: malformed feature value ({exc})") from exc
    meta = {}
    side = sidecar_path(csv_path)
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
    return FeatureMatrix([r[0] for r in body], [r[1] for r in body], values, meta)
