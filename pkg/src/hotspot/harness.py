"""
Evaluation campaigns and data products.

Every flight of an evaluation draws from its own stream,
``SeedSequence(seed, spawn_key=(group, flight))``, so results do not depend
on the number of worker processes or on the order flights finish in.
"""
import csv
import hashlib
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hotspot import __version__
from hotspot.environment import EpisodeRecord, HotspotEnv, ScenarioConfig, edge_cells
from hotspot.errors import ConfigError, DomainError
from hotspot.plume import cell_center, cell_gains, concentration
from hotspot.qlearning import FixedPathPolicy, GreedyPolicy, greedy_rollout, load_policy
from hotspot.scoring import RewardKind

START_NAMES = ("upwind", "downwind", "crosswind")


def _ray_exit_cell(origin, direction, scenario):
    """Grid cell where a ray from ``origin`` leaves the domain."""
    width = scenario.grid_nx * scenario.cell_size
    height = scenario.grid_ny * scenario.cell_size
    (ox, oy), (ux, uy) = origin, direction
    ts = []
    for o, u, hi in ((ox, ux, width), (oy, uy, height)):
        if u > 1e-12:
            ts.append((hi - o) / u)
        elif u < -1e-12:
            ts.append(-o / u)
    t = min(ts)
    x, y = ox + t * ux, oy + t * uy
    cx = min(max(int(np.floor(x / scenario.cell_size)), 0), scenario.grid_nx - 1)
    cy = min(max(int(np.floor(y / scenario.cell_size)), 0), scenario.grid_ny - 1)
    return cx, cy


def canonical_start_cells(scenario=None):
    """Upwind, downwind and crosswind start cells derived from the plume axis.

    upwind / downwind
        Edge cell where the plume axis, extended against / along the wind
        from the source, leaves the domain.
    crosswind
        From the axis point closest to the domain centre, the edge cell
        reached first when moving perpendicular to the axis.
    """
    scenario = scenario if scenario is not None else ScenarioConfig()
    p = scenario.plume
    ux, uy = p.downwind_unit
    src = (p.source_x, p.source_y)
    upwind = _ray_exit_cell(src, (-ux, -uy), scenario)
    downwind = _ray_exit_cell(src, (ux, uy), scenario)

    cx0 = scenario.grid_nx * scenario.cell_size / 2
    cy0 = scenario.grid_ny * scenario.cell_size / 2
    s = (cx0 - src[0]) * ux + (cy0 - src[1]) * uy
    mid = (src[0] + s * ux, src[1] + s * uy)
    candidates = []
    for sign in (1.0, -1.0):
        d = (-sign * uy, sign * ux)
        cell = _ray_exit_cell(mid, d, scenario)
        c = cell_center(*cell, scenario.cell_size, 0.0)
        candidates.append((np.hypot(c.x - mid[0], c.y - mid[1]), cell))
    crosswind = min(candidates)[1]
    return {"upwind": upwind, "downwind": downwind, "crosswind": crosswind}


def parse_start(text, scenario=None):
    """``"upwind"``/``"downwind"``/``"crosswind"`` or ``"cx,cy"``."""
    if text in START_NAMES:
        return text, canonical_start_cells(scenario)[text]
    try:
        cx, cy = (int(v) for v in str(text).split(","))
    except ValueError:
        raise ConfigError(f"cannot parse start cell {text!r}") from None
    return f"{cx},{cy}", (cx, cy)


@dataclass
class EvalConfig:
    """Evaluation campaign.

    ``policy`` is a Q-table/path file name or a policy object. For a fixed
    path the start cells are ignored and a single group ``"grid-path"`` is
    flown.
    """

    policy: object
    n_flights: int = 5000
    true_flux: float = 250.0
    starts: Optional[dict] = None
    seed: int = 0
    reward_kind: RewardKind = RewardKind.NEG_CRPS
    workers: int = 1
    keep_records: bool = False

    def __post_init__(self):
        if self.n_flights < 1:
            raise ConfigError("n_flights must be >= 1")
        self.reward_kind = RewardKind.parse(self.reward_kind)


@dataclass
class EvalReport:
    """Final-CRPS summary per start group (population sd, ``ddof=0``)."""

    groups: dict
    crps: dict = field(default_factory=dict)
    records: Optional[dict] = None
    metadata: dict = field(default_factory=dict)

    def to_json(self):
        d = {"groups": self.groups, "crps": self.crps, "metadata": self.metadata}
        if self.records is not None:
            d["records"] = {k: [r.to_json() for r in v] for k, v in self.records.items()}
        return json.dumps(d, indent=1)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        records = d.get("records")
        if records is not None:
            records = {k: [EpisodeRecord.from_json(r) for r in v] for k, v in records.items()}
        return cls(d["groups"], d["crps"], records, d["metadata"])

    def __eq__(self, other):
        if not isinstance(other, EvalReport):
            return NotImplemented
        return self.to_json() == other.to_json()


def config_hash(*dicts):
    blob = json.dumps(dicts, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def flight_rng(seed, group, flight):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(group, flight)))


def _fly_chunk(args):
    policy, scenario, kind, seed, group, start, flux, flights, keep = args
    env = HotspotEnv(scenario, kind)
    out = []
    for i in flights:
        rec = greedy_rollout(policy, scenario, flight_rng(seed, group, i), true_flux=flux, start=start,
                             reward_kind=kind, env=env)
        out.append((i, rec.final_crps, rec.to_json() if keep else None))
    return out


def evaluate(cfg, scenario=None):
    """Fly ``n_flights`` greedy episodes per start group and summarise CRPS."""
    scenario = scenario if scenario is not None else ScenarioConfig()
    policy = cfg.policy
    if isinstance(policy, (str, bytes)) or hasattr(policy, "__fspath__"):
        try:
            policy = load_policy(policy, scenario)
        except FileNotFoundError as exc:
            raise ConfigError(f"policy file not found: {cfg.policy}") from exc
    if not isinstance(policy, (GreedyPolicy, FixedPathPolicy)):
        raise ConfigError(f"unsupported policy {policy!r}")

    if isinstance(policy, FixedPathPolicy):
        groups = {"grid-path": policy.cells[0]}
    else:
        starts = cfg.starts if cfg.starts is not None else canonical_start_cells(scenario)
        edges = set(edge_cells(scenario))
        groups = {}
        for name, cell in starts.items():
            cell = (int(cell[0]), int(cell[1]))
            if cell not in edges:
                raise ConfigError(f"start cell {name}={cell} is not on the grid edge")
            groups[name] = cell

    tasks = []
    n_chunks = max(1, cfg.workers) * 4 if cfg.workers > 1 else 1
    for g, (name, cell) in enumerate(groups.items()):
        for chunk in np.array_split(np.arange(cfg.n_flights), n_chunks):
            if chunk.size:
                tasks.append((name, (policy, scenario, cfg.reward_kind, cfg.seed, g, cell, cfg.true_flux,
                                     chunk.tolist(), cfg.keep_records)))
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            results = list(ex.map(_fly_chunk, [t[1] for t in tasks]))
    else:
        results = [_fly_chunk(t[1]) for t in tasks]

    crps = {name: [0.0] * cfg.n_flights for name in groups}
    records = {name: [None] * cfg.n_flights for name in groups} if cfg.keep_records else None
    for (name, _), res in zip(tasks, results):
        for i, score, rec in res:
            crps[name][i] = score
            if records is not None:
                records[name][i] = EpisodeRecord.from_json(rec)

    summary = {}
    for name, cell in groups.items():
        x = np.asarray(crps[name])
        summary[name] = {"cell": list(cell), "n": int(x.size), "mean": float(x.mean()), "sd": float(x.std())}
    metadata = {
        "seed": cfg.seed,
        "n_flights": cfg.n_flights,
        "true_flux": cfg.true_flux,
        "reward_kind": cfg.reward_kind.value,
        "policy": str(cfg.policy) if isinstance(cfg.policy, str) else type(policy).__name__,
        "config_hash": config_hash(scenario.to_dict(), {"seed": cfg.seed, "flux": cfg.true_flux}),
        "version": __version__,
    }
    return EvalReport(summary, crps, records, metadata)


def moving_average(series, window):
    """Trailing moving average; output[i] averages series[i : i + window]."""
    x = np.asarray(series, dtype=float)
    if window < 1:
        raise DomainError("window must be >= 1")
    if x.size < window:
        raise DomainError(f"series of length {x.size} is shorter than the window {window}")
    c = np.concatenate(([0.0], np.cumsum(x)))
    return (c[window:] - c[:-window]) / window


def range_normalize(x):
    """Min-max scale to [0, 1]; a constant series maps to zeros."""
    x = np.asarray(x, dtype=float)
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def postprocess_curve(series, window=1000):
    """Trailing moving average followed by per-series min-max normalisation.

    Returns ``(episodes, values)`` where ``episodes`` holds the index of the
    last episode in each window.
    """
    smoothed = moving_average(series, window)
    episodes = np.arange(window - 1, window - 1 + smoothed.size)
    return episodes, range_normalize(smoothed)


def concentration_field(scenario, phi):
    """Unperturbed ppm at every cell centre, shape ``(nx, ny)``."""
    if phi < 0:
        raise DomainError("flux must be non-negative")
    gains = cell_gains(scenario.grid_nx, scenario.grid_ny, scenario.measurement_z, scenario.plume)
    return scenario.plume.background_ppm + gains * phi


def dump_field(scenario, phi):
    """CSV (cx, cy, x, y, ppm) of the cell-centre concentration field."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cx", "cy", "x", "y", "ppm"])
    for cx in range(scenario.grid_nx):
        for cy in range(scenario.grid_ny):
            p = cell_center(cx, cy, scenario.cell_size, scenario.measurement_z)
            w.writerow([cx, cy, p.x, p.y, repr(float(concentration(phi, p, scenario.plume)))])
    return buf.getvalue()


def density_grid(params, n, width=6.0):
    """Log-spaced fluxes covering ``mu +/- width * sigma``."""
    return np.exp(np.linspace(params.mu - width * params.sigma, params.mu + width * params.sigma, n))


def dump_posterior(record, n_grid_points=1000, prior=None):
    """CSV (flux, prior_density, posterior_density, true_flux) for one flight.

    The flux grid merges log-spaced grids spanning +/-6 sigma of the prior
    and of the fitted posterior, so both densities are resolved.
    """
    if record.final_posterior is None:
        raise ConfigError("record has no final posterior (episode not finished)")
    prior = prior if prior is not None else ScenarioConfig().prior
    post = record.final_posterior
    grid = np.unique(np.concatenate([density_grid(prior, n_grid_points), density_grid(post, n_grid_points)]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["flux", "prior_density", "posterior_density", "true_flux"])
    for f, a, b in zip(grid, prior.pdf(grid), post.pdf(grid)):
        w.writerow([repr(float(f)), repr(float(a)), repr(float(b)), repr(float(record.true_flux))])
    return buf.getvalue()


def read_density_csv(text):
    rows = list(csv.DictReader(text.splitlines()))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}
