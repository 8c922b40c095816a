"""
Steady-state Gaussian plume forward model.

Maps a surface flux (mg CO2 m^-2 s^-1) emitted from one grid cell to the
CO2 mole fraction (ppm) at any receptor. The emitting cell is treated as a
point source of strength ``Q = flux * cell_size**2`` located at the source
coordinates, and the ground reflects the plume.

Dispersion coefficients are the Briggs (1973) open-country curves for the
Pasquill classes A-F, with stability class 1 <-> A ... 6 <-> F::

    class  sigma_y                      sigma_z
    A      0.22 x (1 + 1e-4 x)^-1/2     0.20 x
    B      0.16 x (1 + 1e-4 x)^-1/2     0.12 x
    C      0.11 x (1 + 1e-4 x)^-1/2     0.08 x (1 + 2e-4 x)^-1/2
    D      0.08 x (1 + 1e-4 x)^-1/2     0.06 x (1 + 1.5e-3 x)^-1/2
    E      0.06 x (1 + 1e-4 x)^-1/2     0.03 x (1 + 3e-4 x)^-1
    F      0.04 x (1 + 1e-4 x)^-1/2     0.016 x (1 + 3e-4 x)^-1

with ``x`` the downwind distance in metres.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from hotspot.errors import DomainError

GAS_CONSTANT = 8.314462618  # J mol^-1 K^-1
CO2_MOLAR_MASS = 44.01  # g mol^-1

# (a, b, p) for sigma = a * x * (1 + b * x) ** p
BRIGGS_RURAL_SIGMA_Y = {
    1: (0.22, 1e-4, -0.5),
    2: (0.16, 1e-4, -0.5),
    3: (0.11, 1e-4, -0.5),
    4: (0.08, 1e-4, -0.5),
    5: (0.06, 1e-4, -0.5),
    6: (0.04, 1e-4, -0.5),
}
BRIGGS_RURAL_SIGMA_Z = {
    1: (0.20, 0.0, 1.0),
    2: (0.12, 0.0, 1.0),
    3: (0.08, 2e-4, -0.5),
    4: (0.06, 1.5e-3, -0.5),
    5: (0.03, 3e-4, -1.0),
    6: (0.016, 3e-4, -1.0),
}
PASQUILL_LETTERS = "ABCDEF"


@dataclass(frozen=True)
class PlumeConfig:
    """Known parameters of the dispersion problem.

    ``wind_direction`` is the meteorological bearing the wind blows FROM,
    in degrees clockwise from north (+y). The world frame has +x east,
    +y north and its origin at the south-west grid corner.
    """

    wind_speed: float = 4.0
    wind_direction: float = 320.0
    stability_class: int = 2
    source_x: float = 150.0
    source_y: float = 850.0
    source_z: float = 0.0
    cell_size: float = 100.0
    background_ppm: float = 400.0
    air_temperature_K: float = 288.15
    pressure_kPa: float = 101.325
    molar_mass: float = CO2_MOLAR_MASS

    def __post_init__(self):
        if not self.wind_speed > 0:
            raise DomainError(f"wind_speed must be > 0, got {self.wind_speed}")
        if not 0 <= self.wind_direction < 360:
            raise DomainError(f"wind_direction must be in [0, 360), got {self.wind_direction}")
        if self.stability_class not in BRIGGS_RURAL_SIGMA_Y:
            raise DomainError(f"stability_class must be 1..6, got {self.stability_class}")
        if not self.cell_size > 0:
            raise DomainError(f"cell_size must be > 0, got {self.cell_size}")
        if not self.background_ppm >= 0:
            raise DomainError(f"background_ppm must be >= 0, got {self.background_ppm}")
        if not (self.air_temperature_K > 0 and self.pressure_kPa > 0 and self.molar_mass > 0):
            raise DomainError("temperature, pressure and molar mass must be positive")

    @property
    def ppm_per_mg_m3(self):
        """Ideal-gas conversion factor from mass concentration to ppm."""
        return GAS_CONSTANT * self.air_temperature_K / (self.pressure_kPa * self.molar_mass)

    @property
    def downwind_unit(self):
        """Unit vector (east, north) of the direction the wind blows toward."""
        theta = np.deg2rad(self.wind_direction)
        return -np.sin(theta), -np.cos(theta)


class Point3(NamedTuple):
    x: float
    y: float
    z: float


class DispersionCoefficients(NamedTuple):
    sigma_y: float
    sigma_z: float


def downwind_frame(p, cfg):
    """Express a receptor in the source-centred wind frame.

    Parameters
    ----------
    p : Point3 or array_like
        Receptor(s); the trailing axis holds (x, y[, z]).
    cfg : PlumeConfig

    Returns
    -------
    downwind_x, crosswind_y : float or ndarray
        Distance along the wind (positive downwind of the source) and the
        signed distance to the left of the plume axis.
    """
    p = np.asarray(p, dtype=float)
    dx = p[..., 0] - cfg.source_x
    dy = p[..., 1] - cfg.source_y
    ux, uy = cfg.downwind_unit
    return dx * ux + dy * uy, -dx * uy + dy * ux


def _briggs(x, coeffs):
    a, b, p = coeffs
    return a * x * (1.0 + b * x) ** p


def dispersion(downwind_x, stability_class):
    """Briggs open-country plume spreads at a downwind distance.

    Raises
    ------
    DomainError
        If ``downwind_x`` is not strictly positive or the class is unknown.
    """
    x = np.asarray(downwind_x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("dispersion is only defined for downwind_x > 0")
    if stability_class not in BRIGGS_RURAL_SIGMA_Y:
        raise DomainError(f"stability_class must be 1..6, got {stability_class}")
    sy = _briggs(x, BRIGGS_RURAL_SIGMA_Y[stability_class])
    sz = _briggs(x, BRIGGS_RURAL_SIGMA_Z[stability_class])
    if sy.ndim == 0:
        return DispersionCoefficients(float(sy), float(sz))
    return DispersionCoefficients(sy, sz)


def excess_concentration(phi, p, cfg):
    """Plume contribution above background, in ppm.

    Vectorised over receptors: ``p`` may be a ``Point3`` or an array whose
    trailing axis is (x, y, z). Receptors at or upwind of the source plane
    receive zero.
    """
    if np.any(np.asarray(phi) < 0):
        raise DomainError("flux must be non-negative")
    p = np.asarray(p, dtype=float)
    xd, yc = downwind_frame(p, cfg)
    z = p[..., 2]
    xd = np.asarray(xd, dtype=float)
    downwind = xd > 0
    xs = np.where(downwind, xd, 1.0)
    sy, sz = dispersion(xs, cfg.stability_class)
    q = np.asarray(phi, dtype=float) * cfg.cell_size**2  # mg s^-1
    zs = cfg.source_z
    vertical = np.exp(-((z - zs) ** 2) / (2 * sz**2)) + np.exp(-((z + zs) ** 2) / (2 * sz**2))
    c = q / (2 * np.pi * cfg.wind_speed * sy * sz) * np.exp(-(yc**2) / (2 * sy**2)) * vertical
    out = np.where(downwind, c * cfg.ppm_per_mg_m3, 0.0)
    return float(out) if out.ndim == 0 else out


def concentration(phi, p, cfg):
    """CO2 mole fraction (ppm) at receptor(s) ``p`` for surface flux ``phi``."""
    return cfg.background_ppm + excess_concentration(phi, p, cfg)


def cell_center(cx, cy, cell_size, z):
    return Point3((cx + 0.5) * cell_size, (cy + 0.5) * cell_size, z)


def cell_gains(nx, ny, z, cfg):
    """Excess ppm per unit flux at every cell centre, shape ``(nx, ny)``.

    The plume is linear in flux, so ``background + gain * phi`` reproduces
    :func:`concentration` at the cell centres.
    """
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    pts = np.stack(
        [(ix + 0.5) * cfg.cell_size, (iy + 0.5) * cfg.cell_size, np.full(ix.shape, float(z))], axis=-1
    )
    return excess_concentration(1.0, pts, cfg)
