"""
Episodic sampling environment.

A drone moves on a ``grid_nx x grid_ny`` grid. Every time step it takes one
time-averaged CO2 observation at the centre of its current cell, the flux
ensemble assimilates it, and a reward is computed from the updated
posterior. The first observation is taken at reset; each of the following
``episode_length - 1`` actions yields one observation and one reward.
"""
import enum
import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from hotspot.enkf import EnkfConfig, LinearForward, Observation, assimilate
from hotspot.errors import ConfigError, ContractViolation, DomainError
from hotspot.plume import PlumeConfig, cell_center, cell_gains
from hotspot.prior import DEFAULT_PRIOR, LognormalParams, ensemble_stats, sample_prior
from hotspot.scoring import RewardKind, _fit_clamped, crps_ensemble, step_reward


class Action(enum.IntEnum):
    PLUS_X = 0
    MINUS_X = 1
    PLUS_Y = 2
    MINUS_Y = 3
    STAY = 4


ACTION_DELTAS = ((1, 0), (-1, 0), (0, 1), (0, -1), (0, 0))


class AgentState(NamedTuple):
    cx: int
    cy: int
    t: int


@dataclass(frozen=True)
class ScenarioConfig:
    """World geometry, sensor model, prior and filter settings.

    ``episode_length`` must equal the number of averaged observations the
    battery allows: ``battery_minutes * 60 * sampling_hz / samples_per_location``.
    """

    grid_nx: int = 10
    grid_ny: int = 10
    measurement_z: float = 10.0
    plume: PlumeConfig = field(default_factory=PlumeConfig)
    prior: LognormalParams = DEFAULT_PRIOR
    enkf: EnkfConfig = field(default_factory=EnkfConfig)
    ensemble_size: int = 100
    noise_sd: float = 30.0 / np.sqrt(12.0)
    episode_length: int = 16
    flux_range: tuple = (200.0, 300.0)
    samples_per_location: int = 12
    battery_minutes: float = 32.0
    sampling_hz: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "flux_range", tuple(float(f) for f in self.flux_range))
        budget = self.battery_minutes * 60 * self.sampling_hz / self.samples_per_location
        if abs(budget - self.episode_length) > 1e-9:
            raise ConfigError(
                f"episode_length {self.episode_length} does not match the sampling budget {budget:g}"
            )
        if self.episode_length < 2:
            raise ConfigError("episode_length must be >= 2")
        lo, hi = self.flux_range
        if not 0 < lo < hi:
            raise ConfigError(f"flux_range must satisfy 0 < min < max, got {self.flux_range}")
        if self.grid_nx < 1 or self.grid_ny < 1:
            raise ConfigError("grid must have at least one cell")
        if not self.measurement_z > 0:
            raise ConfigError("measurement height must be above ground")
        if not self.noise_sd > 0:
            raise ConfigError("noise_sd must be positive")
        if self.ensemble_size < 2:
            raise ConfigError("ensemble_size must be >= 2")

    @property
    def cell_size(self):
        return self.plume.cell_size

    @property
    def terminal_t(self):
        return self.episode_length - 1

    def to_dict(self):
        d = asdict(self)
        d["flux_range"] = list(self.flux_range)
        d["enkf"]["inflation"] = list(self.enkf.inflation)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "plume" in d:
            d["plume"] = PlumeConfig(**d["plume"])
        if "prior" in d:
            p = d["prior"]
            if "median" in p:
                d["prior"] = LognormalParams.from_median_mode(p["median"], p["mode"])
            else:
                d["prior"] = LognormalParams(**p)
        if "enkf" in d:
            e = dict(d["enkf"])
            if e.get("inflation") is not None:
                e["inflation"] = tuple(e["inflation"])
            d["enkf"] = EnkfConfig(**e)
        return cls(**d)


def in_grid(cx, cy, cfg):
    return 0 <= cx < cfg.grid_nx and 0 <= cy < cfg.grid_ny


def edge_cells(cfg):
    """All cells on the grid boundary, in row-major order."""
    return [
        (cx, cy)
        for cx in range(cfg.grid_nx)
        for cy in range(cfg.grid_ny)
        if cx in (0, cfg.grid_nx - 1) or cy in (0, cfg.grid_ny - 1)
    ]


def legal_actions(s, cfg):
    """Actions that keep the drone on the grid (``STAY`` is always legal)."""
    if s.t >= cfg.terminal_t:
        raise ContractViolation(f"no actions from terminal state {s}")
    return {
        a for a, (dx, dy) in zip(Action, ACTION_DELTAS) if in_grid(s.cx + dx, s.cy + dy, cfg)
    }


def legal_action_mask(cfg):
    """Boolean array ``[nx, ny, 5]`` of in-grid moves."""
    mask = np.zeros((cfg.grid_nx, cfg.grid_ny, len(Action)), dtype=bool)
    for cx in range(cfg.grid_nx):
        for cy in range(cfg.grid_ny):
            for a, (dx, dy) in enumerate(ACTION_DELTAS):
                mask[cx, cy, a] = in_grid(cx + dx, cy + dy, cfg)
    return mask


def max_concentration_cell(cfg):
    """Cell whose centre receives the largest plume excess."""
    gains = cell_gains(cfg.grid_nx, cfg.grid_ny, cfg.measurement_z, cfg.plume)
    cx, cy = np.unravel_index(int(np.argmax(gains)), gains.shape)
    return int(cx), int(cy)


def observe(cell, t, true_flux, cfg, rng, gains=None):
    """Noisy time-averaged observation at a cell centre.

    ``gains`` (from :func:`hotspot.plume.cell_gains`) may be passed to skip
    re-evaluating the plume.
    """
    cx, cy = cell
    if not in_grid(cx, cy, cfg):
        raise DomainError(f"cell {cell} is off the grid")
    if gains is None:
        gains = cell_gains(cfg.grid_nx, cfg.grid_ny, cfg.measurement_z, cfg.plume)
    mean = cfg.plume.background_ppm + gains[cx, cy] * true_flux
    value = float(mean + rng.normal(0.0, cfg.noise_sd))
    return Observation(value, float(cfg.noise_sd), cell_center(cx, cy, cfg.cell_size, cfg.measurement_z), int(t))


@dataclass
class EpisodeRecord:
    """Trace of one flight.

    Serialised as one JSON line with the fields in declaration order.
    ``filter_seed`` seeds the stream that drew the prior ensemble and all
    filter perturbations, so the posterior can be replayed offline.
    """

    true_flux: float
    start_cell: tuple
    reward_kind: str
    filter_seed: int
    path: list = field(default_factory=list)
    observations: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    final_posterior: Optional[LognormalParams] = None
    final_stats: Optional[tuple] = None
    final_crps: Optional[float] = None

    def to_json(self):
        d = {
            "true_flux": self.true_flux,
            "start_cell": list(self.start_cell),
            "reward_kind": self.reward_kind,
            "filter_seed": self.filter_seed,
            "path": [list(p) for p in self.path],
            "observations": [
                [o.value, o.noise_sd, o.location[0], o.location[1], o.location[2], o.time_step]
                for o in self.observations
            ],
            "rewards": list(self.rewards),
            "final_posterior": (
                None if self.final_posterior is None
                else {"mu": self.final_posterior.mu, "sigma": self.final_posterior.sigma}
            ),
            "final_stats": (
                None if self.final_stats is None
                else dict(zip(("mean", "median", "sd"), self.final_stats))
            ),
            "final_crps": self.final_crps,
        }
        return json.dumps(d)

    @classmethod
    def from_json(cls, line):
        d = json.loads(line)
        fp = d["final_posterior"]
        fs = d["final_stats"]
        return cls(
            true_flux=d["true_flux"],
            start_cell=tuple(d["start_cell"]),
            reward_kind=d["reward_kind"],
            filter_seed=d["filter_seed"],
            path=[tuple(p) for p in d["path"]],
            observations=[
                Observation(o[0], o[1], (o[2], o[3], o[4]), o[5]) for o in d["observations"]
            ],
            rewards=list(d["rewards"]),
            final_posterior=None if fp is None else LognormalParams(fp["mu"], fp["sigma"]),
            final_stats=None if fs is None else (fs["mean"], fs["median"], fs["sd"]),
            final_crps=d["final_crps"],
        )

    def __eq__(self, other):
        if not isinstance(other, EpisodeRecord):
            return NotImplemented
        return self.to_json() == other.to_json()


class HotspotEnv:
    """Single-flight environment; create one instance per concurrent flight.

    Examples
    --------
    >>> env = HotspotEnv(ScenarioConfig(), RewardKind.NEG_CRPS)
    >>> s = env.reset(np.random.default_rng(0), true_flux=250.0, start=(0, 0))
    >>> s
    AgentState(cx=0, cy=0, t=0)
    >>> s, r, done = env.step(Action.PLUS_Y)
    """

    def __init__(self, scenario=None, reward_kind=RewardKind.NEG_CRPS):
        self.cfg = scenario if scenario is not None else ScenarioConfig()
        self.reward_kind = RewardKind.parse(reward_kind)
        self.gains = cell_gains(self.cfg.grid_nx, self.cfg.grid_ny, self.cfg.measurement_z, self.cfg.plume)
        self.mask = legal_action_mask(self.cfg)
        self.edges = edge_cells(self.cfg)
        self.state = None
        self.ensemble = None
        self.record = None

    def legal_actions(self, s=None):
        return legal_actions(self.state if s is None else s, self.cfg)

    def forward_at(self, cell):
        """Forward model from flux to ppm at a cell centre."""
        return LinearForward(self.cfg.plume.background_ppm, float(self.gains[cell[0], cell[1]]))

    def reset(self, rng, true_flux=None, start=None):
        """Start a new flight; returns the initial state at ``t = 0``.

        The flux and start cell are always drawn from ``rng`` so that
        overriding one of them leaves the rest of the stream unchanged.
        """
        cfg = self.cfg
        lo, hi = cfg.flux_range
        drawn_flux = float(rng.uniform(lo, hi))
        drawn_start = self.edges[int(rng.integers(len(self.edges)))]
        filter_seed = int(rng.integers(2**63 - 1))
        if start is not None:
            start = (int(start[0]), int(start[1]))
            if not in_grid(*start, cfg):
                raise DomainError(f"start cell {start} is off the grid")
        flux = drawn_flux if true_flux is None else float(true_flux)
        start = drawn_start if start is None else start

        self.rng = rng
        self.filter_rng = np.random.default_rng(filter_seed)
        self.true_flux = flux
        self.ensemble = sample_prior(cfg.prior, cfg.ensemble_size, self.filter_rng)
        self.state = AgentState(start[0], start[1], 0)
        self.record = EpisodeRecord(flux, start, self.reward_kind.value, filter_seed)
        self._take_observation()
        return self.state

    def _take_observation(self):
        s = self.state
        obs = observe((s.cx, s.cy), s.t, self.true_flux, self.cfg, self.rng, gains=self.gains)
        self.ensemble = assimilate(self.ensemble, obs, self.forward_at((s.cx, s.cy)), self.cfg.enkf, self.filter_rng)
        self.record.path.append(tuple(s))
        self.record.observations.append(obs)

    def step(self, action):
        """Move, observe, assimilate; returns ``(state, reward, done)``."""
        s = self.state
        if s is None:
            raise ContractViolation("reset() must be called before step()")
        if s.t >= self.cfg.terminal_t:
            raise ContractViolation("episode is over")
        a = int(action)
        if not 0 <= a < len(ACTION_DELTAS) or not self.mask[s.cx, s.cy, a]:
            raise ContractViolation(f"action {action!r} is illegal in state {s}")
        dx, dy = ACTION_DELTAS[a]
        self.state = AgentState(s.cx + dx, s.cy + dy, s.t + 1)
        self._take_observation()
        r = step_reward(self.reward_kind, self.ensemble, self.cfg.prior, self.true_flux)
        self.record.rewards.append(r)
        done = self.state.t == self.cfg.terminal_t
        if done:
            self._finalize()
        return self.state, r, done

    def _finalize(self):
        rec = self.record
        rec.final_posterior = _fit_clamped(self.ensemble)
        rec.final_stats = ensemble_stats(self.ensemble)
        rec.final_crps = crps_ensemble(self.ensemble, self.true_flux)
