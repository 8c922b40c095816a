"""
The concentration field the drone flies through.

A single ground-level point source at (150, 850) m emits into a 320 degree
wind. Cell-centre concentrations at 10 m are printed as a text map, with
the ppm excess over the 400 ppm background, for a true flux of 250.
"""
import numpy as np

from hotspot import ScenarioConfig
from hotspot.environment import max_concentration_cell
from hotspot.harness import canonical_start_cells, concentration_field

scenario = ScenarioConfig()
field = concentration_field(scenario, 250.0) - scenario.plume.background_ppm

# rows from north (cy = 9) to south so the map reads like a chart
print("excess ppm at 10 m, flux 250 mg m^-2 s^-1")
print("cy\\cx " + "".join(f"{cx:>7d}" for cx in range(scenario.grid_nx)))
for cy in reversed(range(scenario.grid_ny)):
    print(f"{cy:>5d} " + "".join(f"{field[cx, cy]:7.1f}" for cx in range(scenario.grid_nx)))

cell = max_concentration_cell(scenario)
print(f"\nhottest cell {cell}: +{field[cell]:.1f} ppm")
print(f"observation noise sd: {scenario.noise_sd:.2f} ppm")
print(f"cells above the noise level: {int(np.sum(field > scenario.noise_sd))} of {field.size}")

# the three start cells used for evaluation lie where the plume axis (or a
# line perpendicular to it) meets the domain edge
for name, c in canonical_start_cells(scenario).items():
    print(f"{name:>9s} start {c}: +{field[c]:.2f} ppm")
