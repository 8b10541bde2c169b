"""Pitting-corrosion cellular automaton over grayscale images.

Cell states are pit depths held in ``int64`` arrays. A state grid starts as
the gray levels of an image (0..255) and only ever deepens. At every step the
grid is padded with a reflecting ghost ring, each cell's depth is compared
with the shallowest cell of its 3x3 Moore neighbourhood (itself included), and
cells whose difference ``d`` satisfies ``nu <= d < 255`` deepen by
``floor((255 - d) * gamma)``. All cells are updated synchronously.

The mass removed at a step is the sum of all increments applied at that step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Integral, Real

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "CitaParams",
    "MassSeries",
    "init_from_image",
    "reflect_pad",
    "local_difference",
    "pit_growth",
    "step",
    "run",
]

MAX_LEVEL = 255
STATE_DTYPE = np.int64


@dataclass(frozen=True)
class CitaParams:
    """Automaton parameters.

    Attributes
    ----------
    nu : int
        Surface roughness. Differences below it never corrode.
    gamma : float
        Pitting power in [0, 1]; 0 is a fully resistant surface.
    iterations : int
        Number of synchronous steps to run.
    """

    nu: int
    gamma: float
    iterations: int

    def __post_init__(self):
        if isinstance(self.nu, bool) or not isinstance(self.nu, Integral) or self.nu < 0:
            raise InvalidInputError(f"nu must be a non-negative integer, got {self.nu!r}")
        if isinstance(self.gamma, bool) or not isinstance(self.gamma, Real) or not 0.0 <= self.gamma <= 1.0:
            raise InvalidInputError(f"gamma must lie in [0, 1], got {self.gamma!r}")
        if (
            isinstance(self.iterations, bool)
            or not isinstance(self.iterations, Integral)
            or self.iterations < 1
        ):
            raise InvalidInputError(f"iterations must be a positive integer, got {self.iterations!r}")
        object.__setattr__(self, "nu", int(self.nu))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "iterations", int(self.iterations))

    def as_dict(self) -> dict:
        return {"nu": self.nu, "gamma": self.gamma, "iterations": self.iterations}


@dataclass(frozen=True)
class MassSeries:
    """Corroded mass per step and its running total (both ``int64``, length T)."""

    per_iteration_mass: np.ndarray
    cumulative_mass: np.ndarray
    final_states: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __eq__(self, other):
        if not isinstance(other, MassSeries):
            return NotImplemented
        return np.array_equal(self.per_iteration_mass, other.per_iteration_mass) and np.array_equal(
            self.cumulative_mass, other.cumulative_mass
        )

    __hash__ = None


def init_from_image(img) -> np.ndarray:
    """Copy an 8-bit grayscale image into a fresh ``int64`` state grid."""
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidInputError(f"expected a non-empty 2D image, got shape {arr.shape}")
    if arr.dtype.kind not in "biuf":
        raise InvalidInputError(f"unsupported image dtype {arr.dtype}")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or not np.array_equal(arr, np.floor(arr)):
            raise InvalidInputError("image values must be integral gray levels")
    lo, hi = arr.min(), arr.max()
    if lo < 0 or hi > MAX_LEVEL:
        raise InvalidInputError(f"gray levels must lie in 0..255, found range {lo}..{hi}")
    return arr.astype(STATE_DTYPE, copy=True)


def reflect_pad(grid) -> np.ndarray:
    """Surround ``grid`` with a one-cell ghost ring copied from the adjacent edge.

    Corner ghosts take the value of the nearest interior corner cell.
    """
    grid = np.asarray(grid)
    if grid.ndim != 2 or grid.size == 0:
        raise InvalidInputError(f"expected a non-empty 2D grid, got shape {grid.shape}")
    padded = np.empty((grid.shape[0] + 2, grid.shape[1] + 2), dtype=grid.dtype)
    padded[1:-1, 1:-1] = grid
    _refresh_ghosts(padded)
    return padded


def _refresh_ghosts(padded: np.ndarray) -> None:
    # rows first, then full columns: corners pick up the interior corner value
    padded[0, 1:-1] = padded[1, 1:-1]
    padded[-1, 1:-1] = padded[-2, 1:-1]
    padded[:, 0] = padded[:, 1]
    padded[:, -1] = padded[:, -2]


def local_difference(padded, i: int, j: int) -> int:
    """Depth of interior cell ``(i, j)`` above the shallowest cell of its Moore block.

    ``i`` and ``j`` index the interior (unpadded) grid.
    """
    padded = np.asarray(padded)
    h, w = padded.shape[0] - 2, padded.shape[1] - 2
    if not (0 <= i < h and 0 <= j < w):
        raise IndexError(f"cell ({i}, {j}) outside interior of shape ({h}, {w})")
    block = padded[i : i + 3, j : j + 3]
    return int(padded[i + 1, j + 1] - block.min())


def _check_gamma(gamma) -> float:
    if not 0.0 <= gamma <= 1.0:
        raise InvalidInputError(f"gamma must lie in [0, 1], got {gamma!r}")
    return float(gamma)


@lru_cache(maxsize=256)
def _exact_gamma(gamma: float) -> Fraction:
    # the shortest decimal that round-trips to this float; 0.03 stays 3/100
    return Fraction(repr(gamma))


def pit_growth(d: int, gamma: float) -> int:
    """Integer pit growth ``floor((255 - d) * gamma)`` for ``0 <= d < 255``."""
    gamma = _check_gamma(gamma)
    if not 0 <= d < MAX_LEVEL:
        raise InvalidInputError(f"pit growth is only defined for 0 <= d < 255, got {d}")
    return math.floor((MAX_LEVEL - int(d)) * _exact_gamma(gamma))


@lru_cache(maxsize=256)
def _increment_table(nu: int, gamma: float) -> np.ndarray:
    # increment indexed by min(d, 255); zero outside nu <= d < 255
    table = np.zeros(MAX_LEVEL + 1, dtype=STATE_DTYPE)
    for d in range(min(nu, MAX_LEVEL), MAX_LEVEL):
        table[d] = pit_growth(d, gamma)
    table.flags.writeable = False
    return table


class _Automaton:
    """Owns a padded state buffer and advances it in place."""

    def __init__(self, grid: np.ndarray, params: CitaParams):
        self.padded = reflect_pad(np.asarray(grid, dtype=STATE_DTYPE))
        self.table = _increment_table(params.nu, params.gamma)
        h, w = grid.shape
        self.states = self.padded[1:-1, 1:-1]
        self._rowmin = np.empty((h + 2, w), dtype=STATE_DTYPE)
        self._min = np.empty((h, w), dtype=STATE_DTYPE)

    def advance(self) -> int:
        p, rm, mn = self.padded, self._rowmin, self._min
        # separable 3x3 minimum: along columns, then along rows
        np.minimum(p[:, :-2], p[:, 1:-1], out=rm)
        np.minimum(rm, p[:, 2:], out=rm)
        np.minimum(rm[:-2], rm[1:-1], out=mn)
        np.minimum(mn, rm[2:], out=mn)
        # mn becomes d, clipped so the table lookup covers d >= 255
        np.subtract(self.states, mn, out=mn)
        np.minimum(mn, MAX_LEVEL, out=mn)
        inc = self.table[mn]
        mass = int(inc.sum())
        if mass:
            self.states += inc
            _refresh_ghosts(p)
        return mass


def _validated_grid(grid) -> np.ndarray:
    grid = np.asarray(grid)
    if grid.ndim != 2 or grid.size == 0:
        raise InvalidInputError(f"expected a non-empty 2D grid, got shape {grid.shape}")
    if grid.dtype.kind not in "iu":
        raise InvalidInputError(f"state grid must hold integers, got {grid.dtype}")
    if grid.min() < 0:
        raise InvalidInputError("state grid holds negative depths")
    return grid


def step(grid, params: CitaParams) -> tuple[np.ndarray, int]:
    """Apply one synchronous update. Returns the new grid and the mass removed."""
    grid = _validated_grid(grid)
    ca = _Automaton(grid, params)
    mass = ca.advance()
    return ca.states.copy(), mass


def run(grid, params: CitaParams) -> MassSeries:
    """Run ``params.iterations`` steps from ``grid`` and record the corroded mass.

    Once a step removes no mass the grid is frozen, so the remaining entries
    are filled with zeros without further work.
    """
    grid = _validated_grid(grid)
    ca = _Automaton(grid, params)
    per_step = np.zeros(params.iterations, dtype=STATE_DTYPE)
    for t in range(params.iterations):
        mass = ca.advance()
        if mass == 0:
            break
        per_step[t] = mass
    return MassSeries(
        per_iteration_mass=per_step,
        cumulative_mass=np.cumsum(per_step),
        final_states=ca.states.copy(),
    )
