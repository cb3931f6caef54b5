import numpy as np
import pytest

from fpmdesign import SystemConfig, build_led_geometry, make_pupil
from fpmdesign.fourier import disk_mask
from fpmdesign.optics import SubApertureOps


@pytest.fixture(scope="session")
def cfg_full():
    return SystemConfig()  # p = 35, q = 105


@pytest.fixture(scope="session")
def cfg_small():
    # same optics on a smaller patch; keeps unit tests fast
    return SystemConfig(patch_px=21)


@pytest.fixture(scope="session")
def cfg_tiny():
    return SystemConfig(patch_px=15)


@pytest.fixture(scope="session")
def geom_full(cfg_full):
    return build_led_geometry(cfg_full)


@pytest.fixture(scope="session")
def geom_small(cfg_small):
    return build_led_geometry(cfg_small)


@pytest.fixture(scope="session")
def geom_tiny(cfg_tiny):
    return build_led_geometry(cfg_tiny)


@pytest.fixture(scope="session")
def pupil_full(cfg_full):
    return make_pupil(cfg_full)


@pytest.fixture(scope="session")
def pupil_small(cfg_small):
    return make_pupil(cfg_small)


@pytest.fixture(scope="session")
def pupil_tiny(cfg_tiny):
    return make_pupil(cfg_tiny)


def make_toy_ops(q=48, p=16, shift=5, pupil_radius=4.0):
    """Small operator set detached from any physical geometry.

    Nine frequency windows on a 3 x 3 offset grid; used by the
    finite-difference oracles where an even patch size is convenient.
    """
    offsets = np.array([(r, c) for r in (-shift, 0, shift) for c in (-shift, 0, shift)])
    pupil = disk_mask(p, pupil_radius, strict=True).astype(float)
    return SubApertureOps(q, p, offsets, pupil)


def toy_scene(ops, seed=0, k_rows=2):
    """Random smooth-ish truth, its singles, and a feasible design."""
    rng = np.random.default_rng(seed)
    q = ops.q
    x = rng.standard_normal((q, q)) + 1j * rng.standard_normal((q, q))
    # mild smoothing keeps intensities well scaled
    from fpmdesign.fourier import cfft2, icfft2, radius_grid
    x = icfft2(cfft2(x) * (radius_grid(q) <= q / 3))
    x = 1.0 + 0.5 * x / np.abs(x).max()
    singles = np.abs(ops.forward(x)) ** 2
    C = rng.uniform(0.1, 1.0, size=(k_rows, ops.L))
    C /= C.sum(axis=1, keepdims=True)
    return x, singles, C
