"""
Training a sampling policy with tabular Q-learning.

The default below is a short run so the script finishes in a few minutes;
the greedy policy it yields is already decent. Pass a larger episode count
(e.g. ``python 03_training.py 200000``) for policies like the ones checked
in the acceptance tests.
"""
import sys

import numpy as np

from hotspot import ScenarioConfig
from hotspot.environment import max_concentration_cell
from hotspot.harness import canonical_start_cells, postprocess_curve
from hotspot.qlearning import GreedyPolicy, TrainConfig, greedy_rollout, train

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 50_000
kind = sys.argv[2] if len(sys.argv) > 2 else "neg-crps"
scenario = ScenarioConfig()

q, curve = train(TrainConfig(episodes=episodes, reward_kind=kind, seed=0))
q.save(f"qtable_{kind}.npz")

window = min(1000, episodes // 10)
_, smooth = postprocess_curve(curve, window)
print(f"{kind}: mean reward first {window} episodes {curve[:window].mean():.2f}, "
      f"last {window} {curve[-window:].mean():.2f}")
print("normalised learning curve (10 checkpoints):", np.round(smooth[:: max(1, smooth.size // 10)], 2))

# where does the greedy policy fly?
target = max_concentration_cell(scenario)
for name, start in canonical_start_cells(scenario).items():
    rec = greedy_rollout(GreedyPolicy(q), scenario, np.random.default_rng(0), true_flux=250.0, start=start)
    cells = [(cx, cy) for cx, cy, _ in rec.path]
    print(f"{name:>9s} {start}: {cells.count(target):2d} samples at {target}, final CRPS {rec.final_crps:.2f}")
    print("          ", " ".join(f"{c[0]}{c[1]}" for c in cells))
