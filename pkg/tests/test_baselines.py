import numpy as np
import pytest

from cita import baselines
from cita.baselines import FEATURE_LENGTHS, METHODS, BaselineSpec, describe
from cita.errors import InvalidInputError
from oracles import glcm_contrast_brute, lbp_riu2_var_brute, pair_differences

CONST = np.full((32, 32), 117, dtype=np.uint8)


@pytest.mark.parametrize("method", sorted(METHODS))
@pytest.mark.parametrize("shape", [(16, 16), (40, 23), (64, 64)])
def test_lengths_fixed(method, shape, rng):
    v = describe(rng.integers(0, 256, shape), method)
    assert v.shape == (FEATURE_LENGTHS[method],)
    assert v.dtype == np.float64 and np.all(np.isfinite(v))


@pytest.mark.parametrize("method", sorted(METHODS))
def test_deterministic(method, rng):
    img = rng.integers(0, 256, (24, 24))
    assert np.array_equal(describe(img, method), describe(img.copy(), method))


def test_unknown_method():
    with pytest.raises(InvalidInputError):
        BaselineSpec("wavelet")


def test_spec_overrides(rng):
    img = rng.integers(0, 256, (20, 20))
    v = describe(img, BaselineSpec("glcm", {"distances": (1,)}))
    assert v.shape == (16,)


# ---------------------------------------------------------------- Fourier


def test_fourier_constant_single_sector():
    v = baselines.fourier_descriptors(CONST)
    assert np.count_nonzero(v) == 1
    assert v[0] == 117 * CONST.size


def test_fourier_half_turn_invariance(rng):
    img = rng.integers(0, 256, (31, 44))
    assert np.allclose(baselines.fourier_descriptors(img), baselines.fourier_descriptors(np.rot90(img, 2)))


def test_fourier_horizontal_sinusoid_closed_form():
    # 128 + 100 cos(2 pi 8 x / 64): DC magnitude 128 N, two lines of 50 N at (0, +-8)
    n = 64
    x = np.arange(n)
    img = np.tile(128 + 100 * np.cos(2 * np.pi * 8 * x / n), (n, 1))
    v = baselines.fourier_descriptors(img).reshape(8, 8)
    # radius 8/64 = 0.125 of 0.5 Nyquist -> 0.25 -> band ceil(2) - 1 = 1; angle 0 or pi -> wedge 0
    expected = np.zeros((8, 8))
    expected[0, 0] = 128 * n * n
    expected[1, 0] = 100 * n * n
    assert np.allclose(v, expected, atol=1e-6 * n * n)


def test_fourier_rejects_degenerate():
    with pytest.raises(InvalidInputError):
        baselines.fourier_descriptors(np.zeros((1, 1)))
    with pytest.raises(InvalidInputError):
        baselines.fourier_descriptors(np.zeros((4, 4, 3)))


# ---------------------------------------------------------------- GLCM


def _glcm(v):
    # props x distances x angles
    return v.reshape(4, 2, 4)


def test_glcm_constant_fixed_point():
    c, corr, e, hom = _glcm(baselines.glcm_haralick(CONST))
    assert np.all(c == 0) and np.all(e == 1) and np.all(hom == 1) and np.all(corr == 0)


def test_glcm_checkerboard_contrast():
    img = (np.indices((16, 16)).sum(axis=0) % 2) * 255
    c = _glcm(baselines.glcm_haralick(img))[0]
    q = img * 64 // 256
    assert c[0, 0] == pytest.approx(63**2)
    assert c[0, 0] == pytest.approx(glcm_contrast_brute(q.tolist(), 0, 1))
    # distance 2 along a row lands on the same colour
    assert c[1, 0] == 0


def test_glcm_contrast_matches_enumeration(rng):
    img = rng.integers(0, 256, (12, 15))
    q = (img * 64 // 256).tolist()
    c = _glcm(baselines.glcm_haralick(img))[0]
    offsets = {0: (0, 1), 45: (-1, 1), 90: (-1, 0), 135: (-1, -1)}
    for di, d in enumerate((1, 2)):
        for ai, a in enumerate((0, 45, 90, 135)):
            dr, dc = offsets[a]
            assert c[di, ai] == pytest.approx(glcm_contrast_brute(q, dr * d, dc * d))


def test_glcm_bounds(rng):
    for _ in range(5):
        _, corr, e, hom = _glcm(baselines.glcm_haralick(rng.integers(0, 256, (20, 20))))
        assert np.all((e > 0) & (e <= 1)) and np.all((hom > 0) & (hom <= 1))
        assert np.all(np.abs(corr) <= 1 + 1e-12)


def test_glcm_too_small():
    with pytest.raises(InvalidInputError):
        baselines.glcm_haralick(np.zeros((2, 10)))


# ---------------------------------------------------------------- GLDM


def _gldm(v):
    # distances x directions x statistics
    return v.reshape(3, 4, 5)


def test_gldm_constant_fixed_point():
    g = _gldm(baselines.gldm(CONST))
    assert np.all(g[..., 0] == 0)
    assert np.all(g[..., 1] == 1)
    assert np.all(g[..., 2] == 0) and not np.signbit(g[..., 2]).any()
    assert np.all(g[..., 3] == 0)
    assert np.all(g[..., 4] == 1)


def test_gldm_vertical_stripes():
    # stripes 0,0,255,0,0,255,...: along a row the pair is a jump in 2 of every 3 columns
    row = np.array([0, 0, 255] * 6)
    img = np.tile(row, (8, 1))
    diffs = pair_differences(img.tolist(), 0, 1)
    p255 = diffs.count(255) / len(diffs)
    assert p255 == pytest.approx(11 / 17)
    contrast, asm, ent, mean, idm = _gldm(baselines.gldm(img))[0, 0]
    assert contrast == pytest.approx(255**2 * p255)
    assert asm == pytest.approx(p255**2 + (1 - p255) ** 2)
    assert ent == pytest.approx(-(p255 * np.log(p255) + (1 - p255) * np.log(1 - p255)))
    assert mean == pytest.approx(255 * p255)
    assert idm == pytest.approx((1 - p255) + p255 / (255**2 + 1))
    # vertical pairs never cross a stripe
    assert np.all(_gldm(baselines.gldm(img))[:, 2, 0] == 0)


def test_gldm_density_matches_enumeration(rng):
    img = rng.integers(0, 256, (10, 13))
    for dr, dc in [(0, 3), (-3, 3), (-5, 0), (-1, -1)]:
        ref = np.bincount(pair_differences(img.tolist(), dr, dc), minlength=256)
        assert np.allclose(baselines.difference_density(img, dr, dc), ref / ref.sum())


def test_gldm_bounds(rng):
    g = _gldm(baselines.gldm(rng.integers(0, 256, (20, 20))))
    assert np.all(g[..., 2] >= 0)
    assert np.all((g[..., 1] > 0) & (g[..., 1] <= 1))


def test_gldm_too_small():
    with pytest.raises(InvalidInputError):
        baselines.gldm(np.zeros((5, 30)))


# ---------------------------------------------------------------- Gabor


def test_gabor_constant_near_zero():
    v = baselines.gabor_bank(CONST)
    assert np.all(v >= 0) and v.max() < 1e-20


def test_gabor_frequencies_span():
    f = baselines.gabor_frequencies()
    assert f[0] == pytest.approx(0.01) and f[-1] == pytest.approx(0.4)
    assert np.allclose(f[1:] / f[:-1], f[1] / f[0])


@pytest.mark.parametrize("scale", [3, 5, 6, 7])
@pytest.mark.parametrize("orientation", [0, 2, 3, 5])
def test_gabor_pure_tone_selects_matching_filter(scale, orientation):
    n = 128
    f = baselines.gabor_frequencies()[scale]
    theta = orientation * np.pi / 8
    y, x = np.mgrid[:n, :n]
    img = 128 + 100 * np.cos(2 * np.pi * f * (x * np.cos(theta) + y * np.sin(theta)))
    v = baselines.gabor_bank(img)
    assert int(np.argmax(v)) == scale * 8 + orientation


def test_gabor_non_negative(rng):
    assert np.all(baselines.gabor_bank(rng.integers(0, 256, (33, 20))) >= 0)


# ---------------------------------------------------------------- LBPV


def test_lbpv_matches_brute(rng):
    for shape in [(3, 3), (9, 12), (16, 16)]:
        img = rng.integers(0, 256, shape)
        assert np.allclose(baselines.lbpv(img), lbp_riu2_var_brute(img))


def test_lbpv_quarter_turn_invariance(rng):
    for _ in range(10):
        img = rng.integers(0, 256, (16, 16))
        ref = baselines.lbpv(img)
        for k in (1, 2, 3):
            assert np.array_equal(baselines.lbpv(np.rot90(img, k)), ref)


def test_lbpv_normalised(rng):
    v = baselines.lbpv(rng.integers(0, 256, (20, 20)))
    assert v.sum() == pytest.approx(1.0) and np.all(v >= 0)


def test_lbpv_constant_is_zero():
    v = baselines.lbpv(CONST)
    assert v.shape == (10,) and not v.any()


def test_lbpv_too_small():
    with pytest.raises(InvalidInputError):
        baselines.lbpv(np.zeros((2, 8)))


@pytest.mark.parametrize("bad", [[[300]], [[-2]], np.zeros(5)])
def test_rejects_bad_gray(bad):
    with pytest.raises(InvalidInputError):
        baselines.lbpv(bad)
