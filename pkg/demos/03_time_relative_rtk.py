"""Time-relative RTK: carrier-phase baselines between past and current
epochs of a single receiver.

Double-differencing the time-differenced carrier phase cancels clocks
and (mostly) atmosphere, leaving integer ambiguities that the LAMBDA
search can fix — yielding centimeter-accurate displacement over windows
of up to 100 s with no base station.
"""

import numpy as np

from gnssgraph import (ScenarioConfig, TrajectoryConfig, TrRtkConfig,
                       estimate_baseline, run_scenario, solve_spp)

config = ScenarioConfig(
    duration=120.0,
    trajectory=TrajectoryConfig(kind="line", speed=2.0),
    seed=12,
)
truth, epochs, sat_states = run_scenario(config)
positions = [solve_spp(e, s, iono=config.iono, tropo=config.tropo).position
             for e, s in zip(epochs, sat_states)]

tr_config = TrRtkConfig(iono=config.iono, tropo=config.tropo)
print(f"{'dt s':>6s}{'status':>10s}{'ratio':>8s}{'baseline error m':>18s}")
for dt in (5, 20, 50, 80, 100):
    i, j = 0, dt
    result = estimate_baseline(epochs[i], epochs[j], sat_states[i],
                               sat_states[j], positions[i], positions[j],
                               tr_config)
    true_baseline = truth[j].position - truth[i].position
    error = np.linalg.norm(result.baseline - true_baseline)
    print(f"{dt:>6d}{result.status.name:>10s}{result.ratio:>8.1f}"
          f"{error:>18.4f}")

print("\nthe anchor positions above are meter-level SPP fixes, yet the")
print("fixed baselines are centimeter-accurate: the integer ambiguity")
print("search absorbs what the float solution cannot.")
