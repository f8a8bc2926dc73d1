"""Epoch-wise point positioning and Doppler velocity estimation.

Both solutions seed the factor graph: the position fix initializes the
linearization and the clock biases, the velocity feeds the relative
constraints between consecutive nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .atmosphere import KlobucharParams, TropoModel, klobuchar_delay, saastamoinen_delay
from .constants import CLIGHT
from .coords import ecef_to_geodetic, elevation_azimuth, line_of_sight
from .errors import InsufficientSatellites, NoConvergence, SingularGeometry
from .types import (CONSTELLATIONS, Constellation, Epoch, SatelliteId,
                    SatelliteState)


@dataclass
class SolverConfig:
    """Tunables shared by the epoch-wise estimators."""

    elevation_mask: float = np.radians(15.0)
    sigma_a: float = 0.3           # pseudorange variance floor term [m]
    sigma_b: float = 0.3           # pseudorange elevation term [m]
    doppler_sigma: float = 0.05    # range-rate sigma at zenith [m/s]
    velocity_sigma_floor: float = 0.01  # per-axis floor on velocity sigma [m/s]
    max_iterations: int = 10
    convergence: float = 1e-4      # position update threshold [m]


@dataclass
class SppSolution:
    position: np.ndarray
    clock_biases: dict[Constellation, float]   # [m]
    covariance: np.ndarray                     # 7x7, position + 4 clock slots
    used_satellites: dict[Constellation, int]


@dataclass
class VelocitySolution:
    velocity: np.ndarray           # [m/s]
    clock_drift: float             # receiver clock drift [m/s]
    covariance: np.ndarray         # 3x3 [m^2/s^2]


def pseudorange_variance(elevation: float, snr: float = 0.0,
                         config: SolverConfig | None = None) -> float:
    """Elevation-dependent pseudorange variance a^2 + b^2/sin^2(el).

    SNR is recorded on observations but deliberately unused here.
    """
    config = config or SolverConfig()
    if not 0.0 < elevation <= np.pi / 2:
        raise ValueError(f"elevation out of range: {elevation}")
    s = np.sin(elevation)
    return config.sigma_a ** 2 + config.sigma_b ** 2 / (s * s)


def _usable(epoch: Epoch, sats: dict[SatelliteId, SatelliteState],
            position: np.ndarray, mask: float):
    """Observations above the elevation mask with a known satellite state."""
    geo = ecef_to_geodetic(position)
    usable = []
    for obs in epoch.observations:
        state = sats.get(obs.sat)
        if state is None:
            continue
        el, az = elevation_azimuth(geo, state.position)
        if el >= mask:
            usable.append((obs, state, el, az))
    return geo, usable


def solve_spp(epoch: Epoch, sats: dict[SatelliteId, SatelliteState],
              iono: KlobucharParams | None = None,
              tropo: TropoModel | None = None,
              config: SolverConfig | None = None,
              initial_position: np.ndarray | None = None) -> SppSolution:
    """Iterated weighted least-squares single point positioning.

    Unknowns are the 3D position plus one clock bias per constellation
    observed in this epoch (GPS slot always first). Atmospheric delays
    are corrected with the supplied models when given.
    """
    config = config or SolverConfig()
    position = (np.array(initial_position, dtype=float)
                if initial_position is not None
                else _bootstrap_position(epoch, sats))

    delta = None
    for _ in range(config.max_iterations + 1):
        geo, usable = _usable(epoch, sats, position, config.elevation_mask)
        systems = sorted({obs.sat.constellation for obs, *_ in usable},
                         key=lambda c: CONSTELLATION_SLOT[c])
        if len(usable) < 3 + len(systems) or Constellation.GPS not in systems:
            raise InsufficientSatellites(
                f"{len(usable)} usable satellites, systems {systems}")
        sys_col = {c: 3 + k for k, c in enumerate(systems)}
        a = np.zeros((len(usable), 3 + len(systems)))
        resid = np.zeros(len(usable))
        weights = np.zeros(len(usable))
        counts: dict[Constellation, int] = {}
        for row, (obs, state, el, az) in enumerate(usable):
            unit, rng = line_of_sight(position, state)
            delay_i = klobuchar_delay(iono, epoch.time, geo, el, az) if iono else 0.0
            delay_t = saastamoinen_delay(tropo, geo, el) if tropo else 0.0
            a[row, :3] = -unit
            a[row, sys_col[obs.sat.constellation]] = 1.0
            # the clock biases stay inside the residual, so the joint solve
            # returns them as absolute values at the current linearization
            resid[row] = (obs.pseudorange - rng + CLIGHT * state.clock_bias
                          - delay_i - delay_t)
            weights[row] = 1.0 / pseudorange_variance(el, obs.snr, config)
            c = obs.sat.constellation
            counts[c] = counts.get(c, 0) + 1

        aw = a * weights[:, None]
        normal = a.T @ aw
        if np.linalg.cond(normal) > 1e12:
            raise SingularGeometry("normal matrix condition number > 1e12")
        delta = np.linalg.solve(normal, aw.T @ resid)
        if np.linalg.norm(delta[:3]) < config.convergence:
            position = position + delta[:3]
            break
        position = position + delta[:3]
    else:
        raise NoConvergence("SPP did not converge within iteration budget")

    clock_biases = {c: float(delta[col]) for c, col in sys_col.items()}
    cov_small = np.linalg.inv(normal)
    cov = np.zeros((7, 7))
    slots = [0, 1, 2] + [3 + CONSTELLATION_SLOT[c] for c in sys_col]
    cols = [0, 1, 2] + list(sys_col.values())
    cov[np.ix_(slots, slots)] = cov_small[np.ix_(cols, cols)]
    return SppSolution(position, clock_biases, cov, counts)


CONSTELLATION_SLOT = {c: i for i, c in enumerate(CONSTELLATIONS)}


def _bootstrap_position(epoch: Epoch,
                        sats: dict[SatelliteId, SatelliteState]) -> np.ndarray:
    """Coarse unweighted fix from scratch, no elevation mask, GPS only if present."""
    usable = [(obs, sats[obs.sat]) for obs in epoch.observations if obs.sat in sats]
    if len(usable) < 4:
        raise InsufficientSatellites(f"{len(usable)} satellites with known state")
    position = np.zeros(3)
    bias = 0.0
    for _ in range(12):
        n = len(usable)
        a = np.zeros((n, 4))
        resid = np.zeros(n)
        for row, (obs, state) in enumerate(usable):
            delta = state.position - position
            rng = np.linalg.norm(delta)
            a[row, :3] = -delta / rng
            a[row, 3] = 1.0
            resid[row] = obs.pseudorange - rng + CLIGHT * state.clock_bias - bias
        try:
            step, *_ = np.linalg.lstsq(a, resid, rcond=None)
        except np.linalg.LinAlgError as exc:
            raise SingularGeometry("bootstrap geometry singular") from exc
        position = position + step[:3]
        bias += step[3]
        if np.linalg.norm(step[:3]) < 1.0:
            break
    return position


def solve_doppler_velocity(epoch: Epoch, sats: dict[SatelliteId, SatelliteState],
                           position: np.ndarray,
                           config: SolverConfig | None = None) -> VelocitySolution:
    """Least squares velocity from Doppler range rates.

    Measured range rate is -wavelength * doppler; the model is
    (v_sat - v_user) . u + drift_rcv_m - c * drift_sat.
    """
    config = config or SolverConfig()
    _, usable = _usable(epoch, sats, position, config.elevation_mask)
    if len(usable) < 4:
        raise InsufficientSatellites(f"{len(usable)} usable satellites for velocity")

    n = len(usable)
    a = np.zeros((n, 4))
    y = np.zeros(n)
    weights = np.zeros(n)
    for row, (obs, state, el, _) in enumerate(usable):
        unit, _ = line_of_sight(position, state)
        measured = -obs.wavelength * obs.doppler
        a[row, :3] = -unit
        a[row, 3] = 1.0
        y[row] = measured - state.velocity @ unit + CLIGHT * state.clock_drift
        sigma = config.doppler_sigma / np.sin(el)
        weights[row] = 1.0 / (sigma * sigma)

    aw = a * weights[:, None]
    normal = a.T @ aw
    if np.linalg.cond(normal) > 1e12:
        raise SingularGeometry("velocity geometry singular")
    sol = np.linalg.solve(normal, aw.T @ y)
    cov = np.linalg.inv(normal)[:3, :3]
    floor = config.velocity_sigma_floor ** 2
    for i in range(3):
        if cov[i, i] < floor:
            cov[i, i] = floor
    return VelocitySolution(sol[:3], float(sol[3]), cov)
