"""Ionospheric (Klobuchar) and tropospheric (Saastamoinen) delay models.

Both models are used twice: to correct pseudoranges in the estimators and
to synthesize measurements in the simulator, so the two stay consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import CLIGHT
from .errors import ElevationTooLow
from .gnsstime import GpsTime
from .types import GeodeticPosition


@dataclass(frozen=True)
class KlobucharParams:
    """Eight broadcast coefficients; all-zero degrades to the nighttime constant."""

    alpha: tuple = (0.0, 0.0, 0.0, 0.0)
    beta: tuple = (0.0, 0.0, 0.0, 0.0)

    @staticmethod
    def typical() -> "KlobucharParams":
        # representative mid-solar-cycle broadcast values
        return KlobucharParams(
            alpha=(0.1118e-7, -0.7451e-8, -0.5961e-7, 0.1192e-6),
            beta=(0.1167e6, -0.2294e6, -0.1311e6, 0.1049e7),
        )


@dataclass(frozen=True)
class TropoModel:
    """Saastamoinen with sea-level meteorological parameters."""

    pressure: float = 1013.25      # [hPa]
    temperature: float = 288.15    # [K]
    humidity: float = 0.5          # fraction [0, 1]

    def __post_init__(self):
        if not 500.0 <= self.pressure <= 1200.0:
            raise ValueError(f"pressure out of range: {self.pressure}")
        if not 180.0 <= self.temperature <= 340.0:
            raise ValueError(f"temperature out of range: {self.temperature}")


def klobuchar_delay(params: KlobucharParams, time: GpsTime,
                    user: GeodeticPosition, elevation: float,
                    azimuth: float) -> float:
    """L1 ionospheric group delay in meters (ICD-GPS-200 formulation)."""
    if elevation < 0.0:
        raise ValueError("elevation must be non-negative")
    el = elevation / np.pi          # semicircles
    lat = user.latitude / np.pi
    lon = user.longitude / np.pi

    psi = 0.0137 / (el + 0.11) - 0.022
    phi_i = lat + psi * np.cos(azimuth)
    phi_i = min(max(phi_i, -0.416), 0.416)
    lam_i = lon + psi * np.sin(azimuth) / np.cos(phi_i * np.pi)
    phi_m = phi_i + 0.064 * np.cos((lam_i - 1.617) * np.pi)
    t = 4.32e4 * lam_i + time.tow
    t -= np.floor(t / 86400.0) * 86400.0

    f = 1.0 + 16.0 * (0.53 - el) ** 3
    amp = sum(a * phi_m ** n for n, a in enumerate(params.alpha))
    per = sum(b * phi_m ** n for n, b in enumerate(params.beta))
    amp = max(amp, 0.0)
    per = max(per, 72000.0)
    x = 2.0 * np.pi * (t - 50400.0) / per
    if abs(x) < 1.57:
        delay = f * (5e-9 + amp * (1.0 - x ** 2 / 2.0 + x ** 4 / 24.0))
    else:
        delay = f * 5e-9
    return CLIGHT * delay


def saastamoinen_delay(model: TropoModel, user: GeodeticPosition,
                       elevation: float) -> float:
    """Tropospheric delay in meters with 1/cos(z) mapping.

    Pressure/temperature are scaled from the model's sea-level values to
    the user height with the standard-atmosphere profile.
    """
    if elevation <= np.radians(1.0):
        raise ElevationTooLow(f"elevation {np.degrees(elevation):.2f} deg below 1 deg")
    h = min(max(user.height, 0.0), 11000.0)
    pres = model.pressure * (1.0 - 2.2557e-5 * h) ** 5.2568
    temp = model.temperature - 6.5e-3 * h
    e = 6.108 * model.humidity * np.exp((17.15 * temp - 4684.0) / (temp - 38.45))

    z = np.pi / 2.0 - elevation
    dry = 0.0022768 * pres / (
        1.0 - 0.00266 * np.cos(2.0 * user.latitude) - 0.00028e-3 * h) / np.cos(z)
    wet = 0.002277 * (1255.0 / temp + 0.05) * e / np.cos(z)
    return float(dry + wet)
