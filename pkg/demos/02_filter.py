"""
What the ensemble filter learns from repeated observations.

We hover over the hottest cell and feed the 16 noisy readings to the
filter one at a time, watching the flux ensemble shrink around the truth.
Then we do the same over a cell the plume misses, where the readings carry
no information and the prior survives.
"""
import numpy as np

from hotspot import HotspotEnv, ScenarioConfig
from hotspot.environment import Action, max_concentration_cell
from hotspot.prior import ensemble_stats

scenario = ScenarioConfig()
rng = np.random.default_rng(42)


def hover(cell, label):
    env = HotspotEnv(scenario)
    env.reset(rng, true_flux=250.0, start=cell)
    print(f"\n{label}: hovering at {cell}, true flux 250")
    print(" t   reading   mean  median     sd   reward")
    mean, median, sd = ensemble_stats(env.ensemble)
    print(f"{0:2d} {env.record.observations[0][0]:8.1f} {mean:7.1f} {median:7.1f} {sd:6.1f}        -")
    for t in range(1, scenario.episode_length):
        _, r, _ = env.step(Action.STAY)
        mean, median, sd = ensemble_stats(env.ensemble)
        print(f"{t:2d} {env.record.observations[t][0]:8.1f} {mean:7.1f} {median:7.1f} {sd:6.1f} {r:8.2f}")
    print(f"final CRPS {env.record.final_crps:.2f}")


hover(max_concentration_cell(scenario), "informative")
hover((9, 9), "uninformative")
