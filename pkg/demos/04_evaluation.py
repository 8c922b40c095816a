"""
Comparing a trained policy with the fixed serpentine grid path.

Uses the Q-table written by ``03_training.py`` if present. Each flight has
its own random stream, so the numbers do not change with ``workers``.
"""
import sys
from pathlib import Path

from hotspot.harness import EvalConfig, evaluate
from hotspot.qlearning import default_grid_path

n = int(sys.argv[1]) if len(sys.argv) > 1 else 500
table = Path(sys.argv[2] if len(sys.argv) > 2 else "qtable_neg-crps.npz")

reports = {"grid path": evaluate(EvalConfig(default_grid_path(), n_flights=n, seed=0))}
if table.exists():
    reports[table.stem] = evaluate(EvalConfig(str(table), n_flights=n, seed=0, workers=2))
else:
    print(f"{table} not found; run 03_training.py first to include a trained policy")

print(f"final CRPS over {n} flights at flux 250 (mean +/- population sd)")
for label, report in reports.items():
    for group, g in report.groups.items():
        print(f"  {label:>20s} {group:>10s}: {g['mean']:6.2f} +/- {g['sd']:5.2f}")
