"""CITA feature vectors and (gamma, nu, iterations) parameter sweeps."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import ca
from .ca import CitaParams
from .errors import InvalidInputError

__all__ = [
    "FeatureVector",
    "SweepResult",
    "default_params",
    "extract",
    "extract_many",
    "sweep",
]


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    params: CitaParams | None = None
    source_id: str = ""


def default_params() -> CitaParams:
    """Parameters tuned on Usptex: nu=1, gamma=0.05, 158 iterations."""
    return CitaParams(nu=1, gamma=0.05, iterations=158)


def extract(img, params: CitaParams | None = None, source_id: str = "") -> FeatureVector:
    """Cumulative corroded mass per step, divided by the pixel count of ``img``."""
    params = default_params() if params is None else params
    grid = ca.init_from_image(img)
    series = ca.run(grid, params)
    values = series.cumulative_mass / float(grid.size)
    return FeatureVector(values=values, params=params, source_id=source_id)


def extract_many(images: Sequence, params: CitaParams | None = None, threads: int = 1) -> np.ndarray:
    """Feature matrix with one row per image, in input order."""
    params = default_params() if params is None else params
    return _map_rows(lambda img: extract(img, params).values, images, threads)


def _map_rows(fn, items, threads):
    if not items:
        raise InvalidInputError("no images given")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(fn, items))
    else:
        rows = [fn(item) for item in items]
    return np.vstack(rows)


@dataclass
class SweepResult:
    """Best success rate per (gamma, nu) cell and the prefix length achieving it.

    ``best_rate[i, j]`` and ``best_iteration[i, j]`` belong to ``gammas[i]``
    and ``nus[j]``. ``curves[i, j, m]`` holds the rate at ``iterations[m]``.
    """

    gammas: list[float]
    nus: list[int]
    budget: int
    iterations: list[int]
    best_rate: np.ndarray
    best_iteration: np.ndarray
    curves: np.ndarray = field(repr=False)

    def rows(self):
        for i, g in enumerate(self.gammas):
            for j, nu in enumerate(self.nus):
                yield g, nu, float(self.best_rate[i, j]), int(self.best_iteration[i, j])


def _default_evaluator(features, labels) -> float:
    from .classify import evaluate

    return evaluate(features, labels, k=10, seed=0).mean


def sweep(
    images: Sequence,
    labels: Sequence,
    gammas: Iterable[float],
    nus: Iterable[int],
    budget: int,
    evaluator: Callable[[np.ndarray, Sequence], float] | None = None,
    iterations: Iterable[int] | None = None,
    threads: int = 1,
) -> SweepResult:
    """Grid search over pitting power and surface roughness.

    For each (gamma, nu) the automaton runs once per image for ``budget``
    steps; shorter iteration counts are scored on prefixes of those vectors,
    which is exact because the mass series is cumulative. ``evaluator`` maps a
    feature matrix and labels to a success rate in percent (default: LDA with
    stratified 10-fold cross-validation, seed 0). ``iterations`` restricts the
    prefix lengths scanned; ties go to the shortest prefix.
    """
    images = list(images)
    labels = list(labels)
    gammas = [float(g) for g in gammas]
    nus = [int(n) for n in nus]
    if not images:
        raise InvalidInputError("sweep needs a non-empty dataset")
    if len(images) != len(labels):
        raise InvalidInputError(f"{len(images)} images but {len(labels)} labels")
    if not gammas or not nus:
        raise InvalidInputError("gamma and nu lists must be non-empty")
    if budget < 1:
        raise InvalidInputError(f"iteration budget must be >= 1, got {budget}")
    scan = sorted(set(range(1, budget + 1) if iterations is None else (int(t) for t in iterations)))
    if not scan or scan[0] < 1 or scan[-1] > budget:
        raise InvalidInputError(f"prefix lengths must lie in 1..{budget}")
    evaluator = evaluator or _default_evaluator

    curves = np.zeros((len(gammas), len(nus), len(scan)))
    best_rate = np.zeros((len(gammas), len(nus)))
    best_iter = np.zeros((len(gammas), len(nus)), dtype=int)
    for i, g in enumerate(gammas):
        for j, nu in enumerate(nus):
            full = extract_many(images, CitaParams(nu=nu, gamma=g, iterations=budget), threads)
            for m, t in enumerate(scan):
                curves[i, j, m] = evaluator(full[:, :t], labels)
            m = int(np.argmax(curves[i, j]))
            best_rate[i, j] = curves[i, j, m]
            best_iter[i, j] = scan[m]
    return SweepResult(gammas, nus, budget, scan, best_rate, best_iter, curves)
