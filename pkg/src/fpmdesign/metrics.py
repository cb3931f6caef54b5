"""Frequency-band PSNR: reconstruction quality split at the objective's
passband edge, so super-resolved content is scored separately from the
conventionally resolvable part."""

from __future__ import annotations

import numpy as np

from .config import SystemConfig
from .errors import MetricError
from .fourier import cfft2, icfft2, radius_grid

PSNR_CAP_DB = 300.0


def band_limits(cfg: SystemConfig) -> tuple[float, float]:
    """(NA split, NA max) for the low/high frequency bands."""
    return 2.0 * cfg.na_obj, cfg.na_recon


def band_filter(img: np.ndarray, na_lo: float, na_hi: float, cfg: SystemConfig) -> np.ndarray:
    """Keep Fourier content with na_lo/lambda < ||u|| <= na_hi/lambda.

    na_lo = 0 gives the full disk including DC.
    """
    if not 0 <= na_lo < na_hi:
        raise MetricError(f"bad band ({na_lo}, {na_hi})")
    img = np.asarray(img, dtype=float)
    rad = radius_grid(img.shape[0])
    lo = na_lo / cfg.wavelength_um / cfg.freq_step
    hi = na_hi / cfg.wavelength_um / cfg.freq_step
    mask = rad <= hi if na_lo == 0 else (rad > lo) & (rad <= hi)
    return icfft2(cfft2(img) * mask).real


def band_psnr(recon_q: np.ndarray, truth_q: np.ndarray, na_lo: float, na_hi: float,
              cfg: SystemConfig) -> float:
    """PSNR of the band-filtered quantity; peak is the filtered truth's range."""
    rec = band_filter(recon_q, na_lo, na_hi, cfg)
    tru = band_filter(truth_q, na_lo, na_hi, cfg)
    peak = float(tru.max() - tru.min())
    if peak <= 0:
        raise MetricError("band-filtered truth has zero dynamic range")
    mse = float(np.mean((rec - tru) ** 2))
    if mse == 0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(peak * peak / mse), PSNR_CAP_DB)


def lf_psnr(recon_q, truth_q, cfg: SystemConfig) -> float:
    split, _ = band_limits(cfg)
    return band_psnr(recon_q, truth_q, 0.0, split, cfg)


def hf_psnr(recon_q, truth_q, cfg: SystemConfig) -> float:
    split, top = band_limits(cfg)
    return band_psnr(recon_q, truth_q, split, top, cfg)


def context_quantity(x: np.ndarray, truth_field: np.ndarray, context: str) -> tuple:
    """(recon quantity, truth quantity) scored for the given context.

    Amplitude context compares |x|; phase context compares the globally
    aligned phase maps.
    """
    if context == "phase":
        theta = np.angle(np.sum(x * np.conj(truth_field)))
        return np.angle(x * np.exp(-1j * theta)), np.angle(truth_field)
    return np.abs(x), np.abs(truth_field)
