import numpy as np
import pytest

from gnssgraph.constants import GM_EARTH, OMGE
from gnssgraph.coords import ecef_to_geodetic, elevation_azimuth
from gnssgraph.errors import InvalidWaypoints
from gnssgraph.sim import (MeasurementSimulator, NoiseConfig, ReceiverClockConfig,
                           ScenarioConfig, TrajectoryConfig, generate_constellation,
                           generate_trajectory, propagate_satellite, run_scenario)
from gnssgraph.types import Constellation, SatelliteId


def noise_free_config(**overrides):
    base = dict(
        duration=30.0,
        noise=NoiseConfig(0.0, 0.0, 0.0),
        satellite_clock_bias_sigma=0.0,
        satellite_clock_drift_sigma=0.0,
        trajectory=TrajectoryConfig(kind="static"),
        seed=4,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


class TestConstellation:
    def test_counts_and_radius(self):
        elements = generate_constellation(1, {Constellation.GPS: 31})
        assert len(elements) == 31
        for e in elements.values():
            assert abs(e.semi_major - 26560e3) < 1.0

    def test_deterministic(self):
        a = generate_constellation(9, {Constellation.GPS: 8, Constellation.GAL: 4})
        b = generate_constellation(9, {Constellation.GPS: 8, Constellation.GAL: 4})
        assert a == b

    def test_speed_matches_orbit_rate(self):
        elements = generate_constellation(2, {Constellation.GPS: 4})
        e = next(iter(elements.values()))
        state = propagate_satellite(e, 100.0)
        # inertial speed sqrt(mu/a), earth-rotation contribution removed
        v_inertial = state.velocity + np.cross([0, 0, OMGE], state.position)
        assert abs(np.linalg.norm(v_inertial) - np.sqrt(GM_EARTH / e.semi_major)) < 1e-3


class TestPropagation:
    def test_zero_dt_is_initial_state(self):
        e = next(iter(generate_constellation(3, {Constellation.GAL: 2}).values()))
        s0 = propagate_satellite(e, 0.0)
        assert abs(np.linalg.norm(s0.position) - e.semi_major) < 1e-3

    def test_radius_constant(self):
        e = next(iter(generate_constellation(3, {Constellation.GPS: 2}).values()))
        radii = [np.linalg.norm(propagate_satellite(e, t).position)
                 for t in (0.0, 500.0, 5000.0)]
        assert max(radii) - min(radii) < 1e-3

    def test_velocity_matches_finite_difference(self):
        e = next(iter(generate_constellation(5, {Constellation.BDS: 3}).values()))
        h = 0.05
        for t in (0.0, 900.0, 7200.0):
            p_plus = propagate_satellite(e, t + h).position
            p_minus = propagate_satellite(e, t - h).position
            v_fd = (p_plus - p_minus) / (2 * h)
            v = propagate_satellite(e, t).velocity
            assert np.linalg.norm(v - v_fd) < 1e-4


class TestTrajectory:
    def test_static(self):
        records = generate_trajectory(noise_free_config(duration=10.0))
        p0 = records[0].position
        for r in records:
            assert np.allclose(r.position, p0)
            assert np.allclose(r.velocity, 0.0)

    def test_line_length(self):
        cfg = noise_free_config(
            duration=80.0,
            trajectory=TrajectoryConfig(kind="line", speed=2.5))
        records = generate_trajectory(cfg)
        dist = np.linalg.norm(records[-1].position - records[0].position)
        assert abs(dist - 200.0) < 1e-6

    def test_circle_angular_rate(self):
        cfg = noise_free_config(
            duration=60.0,
            trajectory=TrajectoryConfig(kind="circle", speed=2.0, radius=40.0))
        records = generate_trajectory(cfg)
        speeds = [np.linalg.norm(r.velocity) for r in records]
        assert np.allclose(speeds, 2.0, atol=1e-9)
        # angular rate from chord length: |p1 - p0| = 2 r sin(w dt / 2)
        chord = np.linalg.norm(records[1].position - records[0].position)
        w = 2.0 * np.arcsin(chord / (2 * 40.0))
        assert abs(w - 2.0 / 40.0) < 1e-6

    def test_waypoints_velocity_consistent_with_position(self):
        # at 10 Hz the midpoint-rule error of the oracle is O(dt^2) ~ mm
        cfg = noise_free_config(
            duration=120.0, rate=10.0,
            trajectory=TrajectoryConfig(kind="waypoints", speed=1.0,
                                        waypoints=[[0, 0, 0], [30, 0, 0],
                                                   [30, 30, 0], [0, 30, 0]]))
        records = generate_trajectory(cfg)
        for a, b in zip(records[:-1], records[1:]):
            mid_v = 0.5 * (a.velocity + b.velocity)
            step = b.position - a.position
            assert np.linalg.norm(step - mid_v * 0.1) < 0.01

    def test_waypoints_speed_bound(self):
        cfg = noise_free_config(
            duration=120.0,
            trajectory=TrajectoryConfig(kind="waypoints", speed=2.5,
                                        waypoints=[[0, 0, 0], [50, 0, 0],
                                                   [50, 50, 0]]))
        for r in generate_trajectory(cfg):
            assert np.linalg.norm(r.velocity) < 2.5 + 1e-9

    def test_invalid_waypoints(self):
        with pytest.raises(InvalidWaypoints):
            generate_trajectory(noise_free_config(
                trajectory=TrajectoryConfig(kind="waypoints", waypoints=[[0, 0, 0]])))


class TestSynthesis:
    def test_zero_noise_reduction(self):
        cfg = noise_free_config(
            receiver_clock=ReceiverClockConfig(bias0=0.0, drift=0.0),
            iono=None, tropo=None)
        sim = MeasurementSimulator(cfg)
        truth, epochs, states = run_scenario(cfg)
        epoch = epochs[0]
        assert len(epoch.observations) >= 8
        from gnssgraph.coords import line_of_sight
        biases = {}
        for k in (0, 5, 10):
            for obs in epochs[k].observations:
                _, rng_m = line_of_sight(truth[k].position, states[k][obs.sat])
                assert abs(obs.pseudorange - rng_m) < 1e-6
                bias = obs.wavelength * obs.carrier_phase - rng_m
                cycles = bias / obs.wavelength
                assert abs(cycles - round(cycles)) < 1e-6
                if obs.sat in biases:
                    assert abs(biases[obs.sat] - bias) < 1e-6
                else:
                    biases[obs.sat] = bias

    def test_determinism(self):
        cfg = ScenarioConfig(duration=5.0, seed=12)
        _, e1, _ = run_scenario(cfg)
        cfg2 = ScenarioConfig(duration=5.0, seed=12)
        _, e2, _ = run_scenario(cfg2)
        for a, b in zip(e1, e2):
            assert a.time == b.time
            for oa, ob in zip(a.observations, b.observations):
                assert oa == ob

    def test_visibility_band(self):
        cfg = ScenarioConfig(duration=600.0, counts={Constellation.GPS: 31},
                             seed=3)
        sim = MeasurementSimulator(cfg)
        for record in generate_trajectory(cfg)[::60]:
            epoch = sim.synthesize_epoch(record)
            assert 6 <= len(epoch.observations) <= 13

    def test_phase_rate_consistent_with_doppler(self):
        cfg = noise_free_config(duration=10.0, iono=None, tropo=None,
                                receiver_clock=ReceiverClockConfig(0.0, 0.0))
        _, epochs, _ = run_scenario(cfg)
        for e0, e1, e2 in zip(epochs[:-2], epochs[1:-1], epochs[2:]):
            for obs in e1.observations:
                a, b = e0.get(obs.sat), e2.get(obs.sat)
                if a is None or b is None or a.lock_count > b.lock_count:
                    continue
                phase_rate = obs.wavelength * (b.carrier_phase - a.carrier_phase) / 2.0
                assert abs(phase_rate - (-obs.wavelength * obs.doppler)) < 0.05

    def test_cycle_slip_schedule(self):
        sat = SatelliteId(Constellation.GPS, 7)
        cfg = noise_free_config(duration=100.0, iono=None, tropo=None,
                                receiver_clock=ReceiverClockConfig(0.0, 0.0),
                                cycle_slips=[(sat, 50.0)])
        truth, epochs, states = run_scenario(cfg)
        from gnssgraph.coords import line_of_sight

        def lock_and_bias(k):
            obs = epochs[k].get(sat)
            if obs is None:
                return None, None
            _, rng_m = line_of_sight(truth[k].position, states[k][sat])
            return obs.lock_count, obs.wavelength * obs.carrier_phase - rng_m

        l49, b49 = lock_and_bias(49)
        l50, b50 = lock_and_bias(50)
        l51, b51 = lock_and_bias(51)
        assert l49 is not None and l50 == 0 and l51 == 1
        jump = (b50 - b49) / epochs[50].get(sat).wavelength
        assert abs(jump - round(jump)) < 1e-6 and abs(jump) > 0.5
        assert abs(b51 - b50) < 1e-6

    def test_empty_schedule_constant_bias(self):
        cfg = noise_free_config(duration=40.0, iono=None, tropo=None,
                                receiver_clock=ReceiverClockConfig(0.0, 0.0))
        truth, epochs, states = run_scenario(cfg)
        from gnssgraph.coords import line_of_sight
        biases = {}
        for k, epoch in enumerate(epochs):
            for obs in epoch.observations:
                _, rng_m = line_of_sight(truth[k].position, states[k][obs.sat])
                bias = obs.wavelength * obs.carrier_phase - rng_m
                if obs.sat in biases:
                    assert abs(bias - biases[obs.sat]) < 1e-6
                biases[obs.sat] = bias
