import math

import numpy as np
import pytest
from skimage.metrics import structural_similarity

from hires_diffuse.metrics import psnr, ssim


def reference_ssim(a, b):
    return structural_similarity(
        a, b, gaussian_weights=True, sigma=1.5, use_sample_covariance=False,
        data_range=1.0, channel_axis=-1,
    )


@pytest.fixture
def fixture_image():
    rng = np.random.default_rng(42)
    y, x = np.mgrid[0:32, 0:32] / 31.0
    base = 0.5 + 0.2 * np.sin(6 * x) * np.cos(4 * y)
    img = np.stack([base, base[::-1], 0.5 + 0.1 * (x - y)], axis=-1)
    return np.clip(img + 0.05 * rng.standard_normal(img.shape), 0, 1)


def test_psnr_identical_is_inf():
    a = np.random.default_rng(0).random((4, 4, 3))
    assert psnr(a, a) == math.inf


def test_psnr_uniform_offset():
    a = np.full((8, 8, 3), 0.3)
    assert psnr(a, a + 0.1) == pytest.approx(20.0, abs=1e-9)
    assert psnr(np.zeros((3, 3, 1)), np.ones((3, 3, 1)), peak=1.0) == 0.0


def test_psnr_symmetric_and_validated():
    rng = np.random.default_rng(1)
    a, b = rng.random((2, 6, 6, 3))
    assert psnr(a, b) == psnr(b, a)
    with pytest.raises(ValueError):
        psnr(a, b[:3])
    with pytest.raises(ValueError):
        psnr(a, b, peak=0)


def test_ssim_self_is_one(fixture_image):
    assert ssim(fixture_image, fixture_image) == pytest.approx(1.0, abs=1e-9)


def test_ssim_matches_reference(fixture_image):
    noisy = np.clip(fixture_image + 0.1 * np.random.default_rng(3).standard_normal(fixture_image.shape), 0, 1)
    assert ssim(fixture_image, noisy) == pytest.approx(reference_ssim(fixture_image, noisy), abs=1e-6)


def test_ssim_inverted_is_negative(fixture_image):
    inv = 1.0 - fixture_image
    value = ssim(fixture_image, inv)
    assert value < 0
    assert value == pytest.approx(reference_ssim(fixture_image, inv), abs=1e-6)


def test_ssim_constant_offset_closed_form():
    m1, m2 = 0.4, 0.45
    c1 = (0.01 * 1.0) ** 2
    expected = (2 * m1 * m2 + c1) / (m1**2 + m2**2 + c1)
    got = ssim(np.full((16, 16, 3), m1), np.full((16, 16, 3), m2))
    assert got == pytest.approx(expected, abs=1e-12)


def test_ssim_symmetric_and_bounded():
    rng = np.random.default_rng(7)
    for _ in range(10):
        a, b = rng.random((2, 20, 24, 3))
        s = ssim(a, b)
        assert abs(s - ssim(b, a)) < 1e-9
        assert -1.0 <= s <= 1.0
        assert s < 1.0


def test_ssim_rejects_small_or_mismatched():
    with pytest.raises(ValueError):
        ssim(np.zeros((10, 20, 3)), np.zeros((10, 20, 3)))
    with pytest.raises(ValueError):
        ssim(np.zeros((12, 12, 3)), np.zeros((12, 13, 3)))
