import numpy as np

from fpmdesign.fourier import cfft2, icfft2, disk_mask, radius_grid


def test_cfft2_is_unitary():
    rng = np.random.default_rng(3)
    for n in (8, 15, 32):
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        X = cfft2(x)
        assert abs(np.linalg.norm(X) - np.linalg.norm(x)) < 1e-12 * np.linalg.norm(x)


def test_round_trip():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((21, 21)) + 1j * rng.standard_normal((21, 21))
    assert np.abs(icfft2(cfft2(x)) - x).max() < 1e-12


def test_center_delta_maps_to_flat_spectrum():
    # DC lives at the array center in this convention
    for n in (16, 17):
        x = np.zeros((n, n), dtype=complex)
        x[n // 2, n // 2] = 1.0
        X = cfft2(x)
        assert np.abs(X - 1.0 / n).max() < 1e-13


def test_constant_maps_to_center_delta():
    n = 25
    X = cfft2(np.ones((n, n), dtype=complex))
    assert abs(X[n // 2, n // 2] - n) < 1e-10
    off = X.copy()
    off[n // 2, n // 2] = 0.0
    assert np.abs(off).max() < 1e-10


def test_radius_grid_center_and_symmetry():
    r = radius_grid(11)
    assert r[5, 5] == 0.0
    assert r[5, 6] == 1.0
    assert r[0, 5] == 5.0
    assert np.allclose(r, r[::-1, ::-1])


def test_disk_mask_strict_boundary():
    m = disk_mask(11, 3.0, strict=True)
    assert m[5, 5]
    assert m[5, 7]          # radius 2 in
    assert not m[5, 8]      # radius 3 excluded by the strict inequality
    loose = disk_mask(11, 3.0, strict=False)
    assert loose[5, 8]
    r = radius_grid(11)
    assert not m[r >= 3.0].any()
