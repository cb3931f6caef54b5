"""LED array geometry: positions, illumination frequencies, bright/dark split."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import GeometryError

BRIGHT = "bright"
DARK = "dark"


@dataclass(frozen=True)
class Led:
    grid_index: tuple[int, int]        # (m, n) grid coordinates
    position_mm: tuple[float, float]   # (x, y) = (m, n) * pitch
    xi_cyc_per_um: tuple[float, float]  # illumination spatial frequency
    na_illum: float
    region: str


class LedGeometry:
    """All LEDs within the configured maximum illumination NA.

    Ordering is deterministic: row-major by grid index (m ascending, then n).
    """

    def __init__(self, leds: list[Led]):
        self.leds = leds
        self.bright_count = sum(1 for led in leds if led.region == BRIGHT)
        self.dark_count = len(leds) - self.bright_count
        # dense views used by the numerical code
        self.xi = np.array([led.xi_cyc_per_um for led in leds])
        self.grid = np.array([led.grid_index for led in leds], dtype=int)
        self.is_bright = np.array([led.region == BRIGHT for led in leds])

    def __len__(self):
        return len(self.leds)

    @property
    def L(self) -> int:
        return len(self.leds)

    def dump_text(self) -> str:
        """One LED per line: ``m n xi_x xi_y na region``."""
        lines = []
        for led in self.leds:
            m, n = led.grid_index
            xx, xy = led.xi_cyc_per_um
            lines.append(f"{m} {n} {xx:.17g} {xy:.17g} {led.na_illum:.17g} {led.region}")
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        """Short stable hash of the geometry, embedded in saved designs."""
        return hashlib.sha256(self.dump_text().encode()).hexdigest()[:16]


def illumination_na(r_mm: float, h_mm: float) -> float:
    return r_mm / math.hypot(r_mm, h_mm)


def build_led_geometry(cfg: SystemConfig) -> LedGeometry:
    """Enumerate grid LEDs with na_illum <= na_illum_max, row-major order."""
    h = cfg.led_height_mm
    pitch = cfg.led_pitch_mm
    na_max = cfg.na_illum_max
    # radius in grid units that could still satisfy the NA bound
    r_max_mm = h * na_max / math.sqrt(1.0 - na_max * na_max)
    reach = int(math.ceil(r_max_mm / pitch)) + 1
    leds = []
    for m in range(-reach, reach + 1):
        for n in range(-reach, reach + 1):
            x, y = m * pitch, n * pitch
            na = illumination_na(math.hypot(x, y), h)
            if na > na_max + 1e-12:
                continue
            slant = math.sqrt(x * x + y * y + h * h)
            # direction sines / wavelength -> spatial frequency in cycles/um
            xi = (x / slant / cfg.wavelength_um, y / slant / cfg.wavelength_um)
            region = BRIGHT if na < cfg.na_obj else DARK
            leds.append(Led((m, n), (x, y), xi, na, region))
    geom = LedGeometry(leds)
    if geom.bright_count == 0:
        raise GeometryError("configuration yields zero bright-field LEDs")
    return geom
