import numpy as np
import pytest

from gnssgraph.errors import (InsufficientSatellites, MissingSatellite,
                              WindowExceeded)
from gnssgraph.pointpos import SolverConfig, solve_spp
from gnssgraph.sim import (NoiseConfig, ReceiverClockConfig, ScenarioConfig,
                           TrajectoryConfig, run_scenario)
from gnssgraph.trrtk import (BaselineStatus, TrRtkConfig, detect_cycle_slips,
                             estimate_baseline, form_double_differences,
                             solve_float_baseline, time_single_difference)
from gnssgraph.types import Constellation, SatelliteId


ZERO_NOISE = NoiseConfig(0.0, 0.0, 0.0)


def quiet_scenario(**kwargs):
    defaults = dict(
        duration=60.0,
        trajectory=TrajectoryConfig(kind="line", speed=2.0),
        noise=ZERO_NOISE,
        satellite_clock_drift_sigma=0.0,
        seed=3,
    )
    defaults.update(kwargs)
    return ScenarioConfig(**defaults)


def spp_positions(cfg, epochs, states):
    out = []
    for epoch, st in zip(epochs, states):
        out.append(solve_spp(epoch, st, iono=cfg.iono, tropo=cfg.tropo).position)
    return out


def tr_config(cfg: ScenarioConfig, **kwargs):
    return TrRtkConfig(iono=cfg.iono, tropo=cfg.tropo,
                       interval=1.0 / cfg.rate, **kwargs)


class TestCycleSlipDetection:
    def test_identical_epochs_all_returned(self):
        cfg = quiet_scenario(duration=5.0)
        _, epochs, _ = run_scenario(cfg)
        sats = detect_cycle_slips(epochs[0], epochs[0])
        assert sats == epochs[0].sat_ids

    def test_continuous_lock_returned(self):
        cfg = quiet_scenario(duration=30.0)
        _, epochs, _ = run_scenario(cfg)
        sats = detect_cycle_slips(epochs[5], epochs[25])
        assert sats == epochs[5].sat_ids & epochs[25].sat_ids

    def test_injected_slip_excluded(self):
        slipped = SatelliteId(Constellation.GPS, 7)
        cfg = quiet_scenario(duration=60.0, cycle_slips=[(slipped, 30.0)])
        _, epochs, _ = run_scenario(cfg)
        if slipped not in epochs[20].sat_ids or slipped not in epochs[40].sat_ids:
            pytest.skip("PRN 7 not visible in this geometry")
        straddling = detect_cycle_slips(epochs[20], epochs[40])
        assert slipped not in straddling
        after = detect_cycle_slips(epochs[35], epochs[45])
        assert slipped in after

    def test_disjoint_epochs_empty(self):
        cfg = quiet_scenario(duration=5.0)
        _, epochs, _ = run_scenario(cfg)
        assert detect_cycle_slips(epochs[0], epochs[3]) <= epochs[0].sat_ids


class TestTimeSingleDifference:
    def test_identical_epochs_zero(self):
        cfg = quiet_scenario(duration=5.0)
        _, epochs, _ = run_scenario(cfg)
        sd = time_single_difference(epochs[0], epochs[0], epochs[0].sat_ids)
        assert all(abs(v) < 1e-12 for v in sd.values())

    def test_one_cycle_is_one_wavelength(self):
        cfg = quiet_scenario(duration=5.0)
        _, epochs, _ = run_scenario(cfg)
        sat = sorted(epochs[0].sat_ids, key=lambda s: s.sort_key())[0]
        obs = epochs[0].get(sat)
        sd = time_single_difference(epochs[0], epochs[0], {sat})
        assert abs(sd[sat]) < 1e-12
        # GPS L1: one cycle is 0.1903 m
        if sat.constellation is Constellation.GPS:
            assert abs(obs.wavelength - 0.1903) < 1e-4

    def test_static_zero_drift_matches_range_change(self):
        cfg = quiet_scenario(
            duration=20.0,
            trajectory=TrajectoryConfig(kind="static"),
            receiver_clock=ReceiverClockConfig(0.0, 0.0),
            iono=None, tropo=None,
        )
        truth, epochs, states = run_scenario(cfg)
        sats = detect_cycle_slips(epochs[0], epochs[15])
        sd = time_single_difference(epochs[0], epochs[15], sats)
        from gnssgraph.coords import line_of_sight
        for sat, value in sd.items():
            _, r0 = line_of_sight(truth[0].position, states[0][sat])
            _, r1 = line_of_sight(truth[15].position, states[15][sat])
            assert abs(value - (r1 - r0)) < 1e-4

    def test_missing_satellite_raises(self):
        cfg = quiet_scenario(duration=5.0)
        _, epochs, _ = run_scenario(cfg)
        ghost = SatelliteId(Constellation.BDS, 63)
        with pytest.raises(MissingSatellite):
            time_single_difference(epochs[0], epochs[1], {ghost})


class TestDoubleDifferences:
    def _build(self, cfg, i, j):
        truth, epochs, states = run_scenario(cfg)
        sats = detect_cycle_slips(epochs[i], epochs[j], 1.0 / cfg.rate)
        sd_phase = time_single_difference(epochs[i], epochs[j], sats)
        dd = form_double_differences(sd_phase, epochs[i], epochs[j],
                                     states[i], states[j],
                                     truth[i].position, truth[j].position,
                                     tr_config(cfg))
        return truth, states, dd

    def test_reference_is_highest_elevation(self):
        cfg = quiet_scenario(duration=10.0)
        truth, states, dd = self._build(cfg, 0, 5)
        from gnssgraph.coords import ecef_to_geodetic, elevation_azimuth
        geo = ecef_to_geodetic(truth[5].position)
        for const, ref in dd.reference.items():
            same = [e.sat for e in dd.entries
                    if e.sat.constellation is const] + [ref]
            els = {s: elevation_azimuth(geo, states[5][s].position)[0]
                   for s in same}
            assert els[ref] == max(els.values())

    def test_same_constellation_pairs_only(self):
        cfg = quiet_scenario(duration=10.0)
        _, _, dd = self._build(cfg, 0, 5)
        for e in dd.entries:
            assert e.sat.constellation is e.reference.constellation
            assert e.sat != e.reference

    def test_common_bias_cancels_exactly(self):
        cfg = quiet_scenario(duration=10.0)
        truth, epochs, states = run_scenario(cfg)
        sats = detect_cycle_slips(epochs[0], epochs[5])
        sd_phase = time_single_difference(epochs[0], epochs[5], sats)
        conf = tr_config(cfg)
        dd = form_double_differences(sd_phase, epochs[0], epochs[5],
                                     states[0], states[5], truth[0].position,
                                     truth[5].position, conf)
        shifted = {s: v + 123.456 for s, v in sd_phase.items()}
        dd2 = form_double_differences(shifted, epochs[0], epochs[5],
                                      states[0], states[5], truth[0].position,
                                      truth[5].position, conf)
        for a, b in zip(dd.entries, dd2.entries):
            assert abs(a.dd_phase - b.dd_phase) < 1e-9

    def test_noise_free_dd_matches_baseline_projection(self):
        cfg = quiet_scenario(duration=30.0)
        truth, states, dd = self._build(cfg, 0, 20)
        baseline = truth[20].position - truth[0].position
        from gnssgraph.trrtk import _model_and_jacobian
        g_past, g_cur, _, _ = _model_and_jacobian(dd, baseline)
        g = g_cur - g_past
        for i, e in enumerate(dd.entries):
            # zero noise, continuous lock: DD phase minus DD geometric range
            # change is the (zero) DD ambiguity
            assert abs(e.dd_phase - g[i]) < 1e-4

    def test_insufficient_raises(self):
        cfg = quiet_scenario(duration=5.0, counts={Constellation.GPS: 31})
        truth, epochs, states = run_scenario(cfg)
        sats = sorted(detect_cycle_slips(epochs[0], epochs[2]),
                      key=lambda s: s.sort_key())[:3]
        sd_phase = time_single_difference(epochs[0], epochs[2], sats)
        with pytest.raises(InsufficientSatellites):
            form_double_differences(sd_phase, epochs[0], epochs[2],
                                    states[0], states[2], truth[0].position,
                                    truth[2].position, tr_config(cfg))


class TestFloatBaseline:
    def test_zero_baseline_static_pair(self):
        cfg = quiet_scenario(duration=10.0,
                             trajectory=TrajectoryConfig(kind="static"))
        truth, epochs, states = run_scenario(cfg)
        sats = detect_cycle_slips(epochs[0], epochs[5])
        sd_phase = time_single_difference(epochs[0], epochs[5], sats)
        dd = form_double_differences(sd_phase, epochs[0], epochs[5],
                                     states[0], states[5], truth[0].position,
                                     truth[5].position, tr_config(cfg))
        baseline, problem, _ = solve_float_baseline(dd)
        assert np.linalg.norm(baseline) < 1e-6
        assert np.max(np.abs(problem.float_values
                             - np.round(problem.float_values))) < 1e-6

    def test_moving_pair_recovers_truth(self):
        cfg = quiet_scenario(duration=40.0)
        truth, epochs, states = run_scenario(cfg)
        i, j = 5, 35
        sats = detect_cycle_slips(epochs[i], epochs[j])
        sd_phase = time_single_difference(epochs[i], epochs[j], sats)
        dd = form_double_differences(sd_phase, epochs[i], epochs[j],
                                     states[i], states[j], truth[i].position,
                                     truth[j].position, tr_config(cfg))
        baseline, _, _ = solve_float_baseline(dd)
        expected = truth[j].position - truth[i].position
        assert np.linalg.norm(baseline - expected) < 1e-6

    def test_joint_covariance_spd(self):
        rng = np.random.default_rng(11)
        for seed in rng.integers(0, 10_000, size=20):
            cfg = quiet_scenario(duration=12.0, seed=int(seed),
                                 noise=NoiseConfig(0.3, 0.003, 0.02))
            truth, epochs, states = run_scenario(cfg)
            sats = detect_cycle_slips(epochs[0], epochs[10])
            sd_phase = time_single_difference(epochs[0], epochs[10], sats)
            dd = form_double_differences(sd_phase, epochs[0],
                                         epochs[10], states[0], states[10],
                                         truth[0].position, truth[10].position,
                                         tr_config(cfg))
            _, _, joint = solve_float_baseline(dd)
            np.linalg.cholesky(joint)


class TestEstimateBaseline:
    def test_zero_noise_fixed_exact(self):
        cfg = quiet_scenario(duration=60.0)
        truth, epochs, states = run_scenario(cfg)
        pos = spp_positions(cfg, epochs, states)
        for i, j in [(0, 40), (10, 50), (20, 60)]:
            result = estimate_baseline(epochs[i], epochs[j], states[i],
                                       states[j], pos[i], pos[j],
                                       tr_config(cfg))
            assert result.status is BaselineStatus.FIXED
            expected = truth[j].position - truth[i].position
            assert np.linalg.norm(result.baseline - expected) < 1e-6
            assert all(isinstance(n, int) for n in result.dd_ambiguities)

    def test_realistic_noise_fixed_centimeter(self):
        cfg = quiet_scenario(duration=60.0, seed=9,
                             noise=NoiseConfig(0.5, 0.003, 0.02),
                             satellite_clock_drift_sigma=1e-13)
        truth, epochs, states = run_scenario(cfg)
        pos = spp_positions(cfg, epochs, states)
        fixed = 0
        for i, j in [(0, 30), (5, 45), (10, 60), (15, 55)]:
            result = estimate_baseline(epochs[i], epochs[j], states[i],
                                       states[j], pos[i], pos[j],
                                       tr_config(cfg))
            if result.status is BaselineStatus.FIXED:
                fixed += 1
                expected = truth[j].position - truth[i].position
                assert np.linalg.norm(result.baseline - expected) < 0.02
        assert fixed >= 3

    def test_window_exceeded(self):
        cfg = quiet_scenario(duration=160.0)
        truth, epochs, states = run_scenario(cfg)
        pos0 = solve_spp(epochs[0], states[0], iono=cfg.iono, tropo=cfg.tropo).position
        pos1 = solve_spp(epochs[150], states[150], iono=cfg.iono, tropo=cfg.tropo).position
        with pytest.raises(WindowExceeded):
            estimate_baseline(epochs[0], epochs[150], states[0], states[150],
                              pos0, pos1, tr_config(cfg))

    def test_swap_negates_baseline(self):
        cfg = quiet_scenario(duration=40.0, seed=5,
                             noise=NoiseConfig(0.3, 0.003, 0.02))
        truth, epochs, states = run_scenario(cfg)
        pos = spp_positions(cfg, epochs, states)
        i, j = 3, 33
        fwd = estimate_baseline(epochs[i], epochs[j], states[i], states[j],
                                pos[i], pos[j], tr_config(cfg))
        back = estimate_baseline(epochs[j], epochs[i], states[j], states[i],
                                 pos[j], pos[i], tr_config(cfg))
        if (fwd.status is BaselineStatus.FIXED
                and back.status is BaselineStatus.FIXED):
            sigma = np.sqrt(np.trace(fwd.covariance + back.covariance))
            assert np.linalg.norm(fwd.baseline + back.baseline) < max(5 * sigma,
                                                                      0.02)

    def test_few_satellites_raise(self):
        cfg = quiet_scenario(duration=10.0)
        truth, epochs, states = run_scenario(cfg)
        keep = sorted(epochs[0].sat_ids, key=lambda s: s.sort_key())[:3]
        from gnssgraph.types import Epoch
        thin_past = Epoch(epochs[0].time,
                          [epochs[0].get(s) for s in keep])
        thin_cur = Epoch(epochs[5].time,
                         [epochs[5].get(s) for s in keep if epochs[5].get(s)])
        with pytest.raises(InsufficientSatellites):
            estimate_baseline(thin_past, thin_cur, states[0], states[5],
                              truth[0].position, truth[5].position,
                              tr_config(cfg))

    def test_high_noise_rejected_no_integers(self):
        cfg = quiet_scenario(duration=40.0, seed=2,
                             noise=NoiseConfig(5.0, 0.5, 0.02))
        truth, epochs, states = run_scenario(cfg)
        pos = spp_positions(cfg, epochs, states)
        result = estimate_baseline(epochs[0], epochs[30], states[0],
                                   states[30], pos[0], pos[30],
                                   tr_config(cfg))
        if result.status is BaselineStatus.REJECTED:
            assert result.dd_ambiguities == ()
            assert result.ratio < 3.0
