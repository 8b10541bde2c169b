"""Comparison texture descriptors: Fourier sectors, GLCM, GLDM, Gabor energy, LBPV.

Each function maps a 2D grayscale image (values 0..255) to a 1D ``float64``
vector whose length does not depend on the image size. Layouts:

- ``fourier_descriptors``: 64 = 8 radial bands x 8 wedges, band-major.
- ``glcm_haralick``: 32 = 4 properties x 2 distances x 4 angles.
- ``gldm``: 60 = 3 distances x 4 directions x 5 statistics.
- ``gabor_bank``: 64 = 8 scales x 8 orientations.
- ``lbpv``: 10 = rotation-invariant uniform codes 0..9.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from skimage.feature import graycoprops

from .errors import InvalidInputError

__all__ = [
    "BaselineSpec",
    "METHODS",
    "FEATURE_LENGTHS",
    "fourier_descriptors",
    "glcm_haralick",
    "gldm",
    "gabor_bank",
    "gabor_frequencies",
    "lbpv",
    "describe",
]

ANGLES_DEG = (0, 45, 90, 135)
# (row, col) unit steps; 45 degrees points up and to the right
_DIRECTIONS = {0: (0, 1), 45: (-1, 1), 90: (-1, 0), 135: (-1, -1)}


def _gray(img, min_side: int = 1) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2D grayscale image, got shape {arr.shape}")
    if min(arr.shape) < min_side:
        raise InvalidInputError(f"image {arr.shape} is smaller than {min_side}x{min_side}")
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise InvalidInputError("gray levels must lie in 0..255")
    return arr


# ---------------------------------------------------------------- Fourier


def _sector_index(h: int, w: int, bands: int, wedges: int) -> np.ndarray:
    fy = np.fft.fftshift(np.fft.fftfreq(h))[:, None]
    fx = np.fft.fftshift(np.fft.fftfreq(w))[None, :]
    # radius 1 is the Nyquist frequency along an axis; corners beyond fold into the outer band
    r = np.hypot(fy, fx) / 0.5
    band = np.clip(np.ceil(r * bands).astype(int) - 1, 0, bands - 1)
    theta = np.mod(np.arctan2(fy, fx), np.pi)
    wedge = np.clip(np.ceil(theta / (np.pi / wedges)).astype(int) - 1, 0, wedges - 1)
    return band * wedges + wedge


def fourier_descriptors(img, bands: int = 8, wedges: int = 8) -> np.ndarray:
    """Sum of DFT magnitudes over ring-by-wedge sectors of the centred spectrum.

    Bands are equal-width in radius up to Nyquist, wedges are equal-angle over
    [0, pi) (the magnitude spectrum of a real image is centrally symmetric).
    A frequency lying exactly on a boundary belongs to the lower bin; DC sits
    in band 0, wedge 0.
    """
    arr = _gray(img)
    if arr.shape[0] < 2 or arr.shape[1] < 2:
        raise InvalidInputError(f"image {arr.shape} too small for a spectrum")
    mag = np.abs(np.fft.fftshift(np.fft.fft2(arr.astype(np.float64))))
    index = _sector_index(*arr.shape, bands, wedges)
    return np.bincount(index.ravel(), weights=mag.ravel(), minlength=bands * wedges)


# ---------------------------------------------------------------- GLCM

GLCM_PROPERTIES = ("contrast", "correlation", "energy", "homogeneity")


def _glcm_correlation(P: np.ndarray) -> np.ndarray:
    # zero-variance matrices are defined to have correlation 0
    levels = P.shape[0]
    i = np.arange(levels, dtype=np.float64)[:, None, None, None]
    j = np.arange(levels, dtype=np.float64)[None, :, None, None]
    mu_i = np.sum(i * P, axis=(0, 1))
    mu_j = np.sum(j * P, axis=(0, 1))
    var_i = np.sum((i - mu_i) ** 2 * P, axis=(0, 1))
    var_j = np.sum((j - mu_j) ** 2 * P, axis=(0, 1))
    cov = np.sum((i - mu_i) * (j - mu_j) * P, axis=(0, 1))
    denom = np.sqrt(var_i * var_j)
    out = np.zeros_like(cov)
    ok = denom > 1e-15
    out[ok] = cov[ok] / denom[ok]
    return out


def cooccurrence(q: np.ndarray, dr: int, dc: int, levels: int) -> np.ndarray:
    """Symmetric, normalised co-occurrence matrix of quantised levels for offset ``(dr, dc)``.

    Diagonal offsets step ``d`` pixels along both axes, so distance 2 at 45
    degrees pairs ``(r, c)`` with ``(r - 2, c + 2)``.
    """
    h, w = q.shape
    r0, r1 = max(0, -dr), h - max(0, dr)
    c0, c1 = max(0, -dc), w - max(0, dc)
    a = q[r0:r1, c0:c1].ravel()
    b = q[r0 + dr : r1 + dr, c0 + dc : c1 + dc].ravel()
    counts = np.bincount(a * levels + b, minlength=levels * levels).reshape(levels, levels)
    counts = counts + counts.T
    return counts / counts.sum()


def glcm_haralick(img, levels: int = 64, distances=(1, 2), angles_deg=ANGLES_DEG) -> np.ndarray:
    """Haralick contrast, correlation, energy and homogeneity of symmetric GLCMs.

    Gray levels are binned uniformly: ``level = value * levels // 256``.
    Energy is the square root of the angular second moment.
    """
    arr = _gray(img)
    if min(arr.shape) <= max(distances):
        raise InvalidInputError(f"image {arr.shape} too small for offset {max(distances)}")
    q = arr.astype(np.int64) * levels // 256
    P = np.empty((levels, levels, len(distances), len(angles_deg)))
    for di, d in enumerate(distances):
        for ai, a in enumerate(angles_deg):
            ur, uc = _DIRECTIONS[a]
            P[:, :, di, ai] = cooccurrence(q, ur * d, uc * d, levels)
    props = []
    for name in GLCM_PROPERTIES:
        if name == "correlation":
            props.append(_glcm_correlation(P))
        else:
            props.append(graycoprops(P, name))
    return np.stack(props).ravel()


# ---------------------------------------------------------------- GLDM

GLDM_STATISTICS = ("contrast", "asm", "entropy", "mean", "idm")


def difference_density(arr: np.ndarray, dr: int, dc: int) -> np.ndarray:
    """Normalised histogram (256 bins) of ``|I(x) - I(x + (dr, dc))|`` over valid pairs."""
    a = np.asarray(arr, dtype=np.int64)
    h, w = a.shape
    r0, r1 = max(0, -dr), h - max(0, dr)
    c0, c1 = max(0, -dc), w - max(0, dc)
    if r1 <= r0 or c1 <= c0:
        raise InvalidInputError(f"image {a.shape} too small for displacement ({dr}, {dc})")
    diff = np.abs(a[r0:r1, c0:c1] - a[r0 + dr : r1 + dr, c0 + dc : c1 + dc])
    counts = np.bincount(diff.ravel(), minlength=256)
    return counts / counts.sum()


def _density_statistics(p: np.ndarray) -> list[float]:
    k = np.arange(p.size, dtype=np.float64)
    nz = p[p > 0]
    return [
        float(np.sum(k * k * p)),
        float(np.sum(p * p)),
        0.0 - float(np.sum(nz * np.log(nz))),
        float(np.sum(k * p)),
        float(np.sum(p / (k * k + 1.0))),
    ]


def gldm(img, distances=(1, 3, 5), angles_deg=ANGLES_DEG) -> np.ndarray:
    """Gray-level difference statistics: contrast, ASM, entropy (nats), mean, IDM."""
    arr = _gray(img)
    if min(arr.shape) <= max(distances):
        raise InvalidInputError(f"image {arr.shape} too small for distance {max(distances)}")
    out = []
    for h in distances:
        for a in angles_deg:
            ur, uc = _DIRECTIONS[a]
            out.extend(_density_statistics(difference_density(arr, ur * h, uc * h)))
    return np.asarray(out)


# ---------------------------------------------------------------- Gabor

GABOR_SCALES = 8
GABOR_ORIENTATIONS = 8
GABOR_FMIN = 0.01
GABOR_FMAX = 0.4


def gabor_frequencies(scales: int = GABOR_SCALES, fmin: float = GABOR_FMIN, fmax: float = GABOR_FMAX) -> np.ndarray:
    """Centre frequencies in cycles/pixel, geometrically spaced from ``fmin`` to ``fmax``."""
    return np.geomspace(fmin, fmax, scales)


def _gabor_transfer(h: int, w: int, freq: float, theta: float, ratio: float, orientations: int) -> np.ndarray:
    # Gaussian transfer function centred on (freq, theta). Half-magnitude
    # contours touch the neighbouring scale and orientation (Manjunath-Ma style).
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    u = fx * np.cos(theta) + fy * np.sin(theta)
    v = -fx * np.sin(theta) + fy * np.cos(theta)
    c = np.sqrt(2.0 * np.log(2.0))
    sigma_u = freq * (ratio - 1.0) / ((ratio + 1.0) * c)
    sigma_v = freq * np.tan(np.pi / (2 * orientations)) / c
    H = np.exp(-0.5 * (((u - freq) / sigma_u) ** 2 + (v / sigma_v) ** 2))
    H[0, 0] = 0.0  # zero-mean filter
    return H


def gabor_bank(
    img,
    scales: int = GABOR_SCALES,
    orientations: int = GABOR_ORIENTATIONS,
    fmin: float = GABOR_FMIN,
    fmax: float = GABOR_FMAX,
) -> np.ndarray:
    """Mean squared magnitude of the image filtered by each complex Gabor filter.

    Filters are applied in the frequency domain (circular convolution).
    Orientation ``k * pi / orientations`` is measured from the column-frequency
    axis towards the row-frequency axis. The response energy is computed
    through Parseval's identity.
    """
    arr = _gray(img).astype(np.float64)
    h, w = arr.shape
    spectrum_power = np.abs(np.fft.fft2(arr)) ** 2
    freqs = gabor_frequencies(scales, fmin, fmax)
    ratio = (fmax / fmin) ** (1.0 / (scales - 1)) if scales > 1 else 2.0
    n = float(h * w)
    out = np.empty(scales * orientations)
    for s, f in enumerate(freqs):
        for o in range(orientations):
            H = _gabor_transfer(h, w, f, o * np.pi / orientations, ratio, orientations)
            out[s * orientations + o] = np.sum(spectrum_power * H * H) / (n * n)
    return out


# ---------------------------------------------------------------- LBPV

# neighbours in circular order around the centre
_RING = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))
LBPV_BINS = len(_RING) + 2


def lbpv(img) -> np.ndarray:
    """Rotation-invariant uniform LBP histogram weighted by local variance (P=8, R=1).

    The eight neighbours are the pixels of the 3x3 block, sampled without
    interpolation; border pixels have no full ring and are skipped. Uniform
    patterns (at most two 0/1 transitions) map to their count of set bits,
    everything else to bin 9. Each pixel adds the variance of its eight
    neighbours to its bin. Variances are accumulated as exact integers
    (``64 * VAR``), so the result does not depend on pixel visiting order.
    A histogram with zero total mass is returned unnormalised (all zeros).
    """
    arr = _gray(img, min_side=3).astype(np.int64)
    h, w = arr.shape
    center = arr[1:-1, 1:-1]
    ring = np.stack([arr[1 + dr : h - 1 + dr, 1 + dc : w - 1 + dc] for dr, dc in _RING])
    bits = (ring >= center).astype(np.int64)
    ones = bits.sum(axis=0)
    transitions = np.sum(bits != np.roll(bits, 1, axis=0), axis=0)
    codes = np.where(transitions <= 2, ones, len(_RING) + 1)
    p = len(_RING)
    var64 = p * np.sum(ring * ring, axis=0) - ring.sum(axis=0) ** 2
    hist = np.zeros(LBPV_BINS, dtype=np.int64)
    np.add.at(hist, codes.ravel(), var64.ravel())
    total = hist.sum()
    if total == 0:
        return np.zeros(LBPV_BINS)
    return hist / float(total)


# ---------------------------------------------------------------- registry

METHODS = {
    "fourier": fourier_descriptors,
    "glcm": glcm_haralick,
    "gldm": gldm,
    "gabor": gabor_bank,
    "lbpv": lbpv,
}

FEATURE_LENGTHS = {"fourier": 64, "glcm": 32, "gldm": 60, "gabor": 64, "lbpv": LBPV_BINS}


@dataclass(frozen=True)
class BaselineSpec:
    """A baseline method id plus keyword overrides for its function."""

    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown baseline {self.method!r}; choose from {sorted(METHODS)}")


def describe(img, spec: BaselineSpec | str) -> np.ndarray:
    if isinstance(spec, str):
        spec = BaselineSpec(spec)
    return METHODS[spec.method](img, **spec.params)
