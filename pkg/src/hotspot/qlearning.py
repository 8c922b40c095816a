"""
Tabular Q-learning over (cell x, cell y, time step) states.

The behaviour policy is epsilon-greedy with epsilon annealed from
``eps_max`` to ``eps_min``; greedy ties are broken uniformly at random.
Q-values start at zero and illegal (off-grid) actions are never selected
or updated, so they keep their initial value.
"""
import csv
import logging
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from hotspot.environment import ACTION_DELTAS, Action, HotspotEnv, ScenarioConfig, in_grid
from hotspot.errors import ConfigError
from hotspot.scoring import RewardKind

log = logging.getLogger(__name__)

QTABLE_FORMAT_VERSION = 1


class QTable:
    """Dense action values ``[nx, ny, episode_length, 5]`` plus visit counts."""

    def __init__(self, values, visits=None):
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != 4 or self.values.shape[-1] != len(Action):
            raise ConfigError(f"bad Q-table shape {self.values.shape}")
        self.visits = (
            np.zeros(self.values.shape, dtype=np.int64) if visits is None else np.asarray(visits, dtype=np.int64)
        )

    @classmethod
    def zeros(cls, scenario):
        return cls(np.zeros((scenario.grid_nx, scenario.grid_ny, scenario.episode_length, len(Action))))

    @property
    def shape(self):
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, QTable):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(self.visits, other.visits)

    def save(self, path):
        """Write a versioned ``.npz`` (row-major values, shape header)."""
        with open(path, "wb") as fh:
            np.savez(
                fh,
                version=np.int64(QTABLE_FORMAT_VERSION),
                shape=np.asarray(self.values.shape, dtype=np.int64),
                values=self.values,
                visits=self.visits,
            )

    @classmethod
    def load(cls, path):
        with np.load(path) as z:
            version = int(z["version"])
            if version != QTABLE_FORMAT_VERSION:
                raise ConfigError(f"unsupported Q-table format version {version}")
            shape = tuple(int(v) for v in z["shape"])
            values = z["values"].reshape(shape)
            return cls(values, z["visits"].reshape(shape))


@dataclass(frozen=True)
class TrainConfig:
    """Q-learning hyperparameters.

    ``eps_schedule`` is ``"linear"`` (decay to ``eps_min`` over the first
    ``eps_decay_fraction`` of the episodes, then constant) or
    ``"exponential"`` (geometric decay reaching ``eps_min`` at the same point).
    """

    episodes: int = 1_500_000
    alpha: float = 0.1
    gamma: float = 1.0
    eps_max: float = 1.0
    eps_min: float = 0.01
    eps_schedule: str = "linear"
    eps_decay_fraction: float = 0.9
    reward_kind: RewardKind = RewardKind.NEG_CRPS
    seed: int = 0
    checkpoint_every: Optional[int] = None
    checkpoint_dir: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "reward_kind", RewardKind.parse(self.reward_kind))
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0 <= self.gamma <= 1:
            raise ConfigError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0 <= self.eps_min <= self.eps_max <= 1:
            raise ConfigError("need 0 <= eps_min <= eps_max <= 1")
        if self.eps_schedule not in ("linear", "exponential"):
            raise ConfigError(f"unknown eps_schedule {self.eps_schedule!r}")
        if not 0 < self.eps_decay_fraction <= 1:
            raise ConfigError("eps_decay_fraction must be in (0, 1]")
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")

    def to_dict(self):
        d = asdict(self)
        d["reward_kind"] = self.reward_kind.value
        return d


def epsilon_at(episode, cfg):
    """Exploration rate for a 0-based episode index."""
    horizon = max(cfg.eps_decay_fraction * cfg.episodes, 1.0)
    frac = min(episode / horizon, 1.0)
    if cfg.eps_schedule == "linear":
        return cfg.eps_max + (cfg.eps_min - cfg.eps_max) * frac
    if cfg.eps_max == 0:
        return 0.0
    floor = max(cfg.eps_min, 1e-12)
    return cfg.eps_max * (floor / cfg.eps_max) ** frac


def _legal_index(scenario):
    # legal[cx][cy] -> tuple of legal action ints
    return [
        [
            tuple(a for a, (dx, dy) in enumerate(ACTION_DELTAS) if in_grid(cx + dx, cy + dy, scenario))
            for cy in range(scenario.grid_ny)
        ]
        for cx in range(scenario.grid_nx)
    ]


def _greedy(row, legal, rng):
    best = max(row[a] for a in legal)
    ties = [a for a in legal if row[a] == best]
    if len(ties) == 1:
        return ties[0]
    return ties[int(rng.integers(len(ties)))]


def select_action(q, s, epsilon, legal, rng):
    """Epsilon-greedy choice among ``legal`` actions.

    With probability ``epsilon`` a uniformly random legal action, otherwise
    an argmax of ``q`` over legal actions with uniform tie-breaking.
    """
    legal = tuple(sorted(int(a) for a in legal))
    if not legal:
        raise ConfigError("no legal actions")
    if epsilon > 0 and rng.random() < epsilon:
        return Action(legal[int(rng.integers(len(legal)))])
    row = q.values[s.cx, s.cy, s.t].tolist()
    return Action(_greedy(row, legal, rng))


def q_update(q, s, a, r, s_next, done, alpha, gamma=1.0, legal_next=None):
    """One-step Q-learning backup of ``q(s, a)`` (in place).

    ``legal_next`` lists the actions available in ``s_next``; all actions
    are used when omitted.
    """
    target = r
    if not done:
        row = q.values[s_next.cx, s_next.cy, s_next.t]
        if legal_next is None:
            target += gamma * float(row.max())
        else:
            target += gamma * max(float(row[int(b)]) for b in legal_next)
    idx = (s.cx, s.cy, s.t, int(a))
    q.values[idx] += alpha * (target - q.values[idx])
    q.visits[idx] += 1


def train(cfg, scenario=None, progress_every=None):
    """Run Q-learning; returns ``(QTable, per-episode reward sums)``.

    Deterministic for a given ``(cfg, scenario)``: the environment and the
    behaviour policy draw from two streams spawned from ``cfg.seed``.
    """
    scenario = scenario if scenario is not None else ScenarioConfig()
    env = HotspotEnv(scenario, cfg.reward_kind)
    q = QTable.zeros(scenario)
    values, visits = q.values, q.visits
    legal = _legal_index(scenario)
    env_ss, act_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    env_rng = np.random.default_rng(env_ss)
    act_rng = np.random.default_rng(act_ss)
    alpha, gamma = cfg.alpha, cfg.gamma
    curve = np.empty(cfg.episodes)

    for ep in range(cfg.episodes):
        eps = epsilon_at(ep, cfg)
        cx, cy, t = env.reset(env_rng)
        total = 0.0
        done = False
        while not done:
            acts = legal[cx][cy]
            if act_rng.random() < eps:
                a = acts[int(act_rng.integers(len(acts)))]
            else:
                a = _greedy(values[cx, cy, t].tolist(), acts, act_rng)
            (nx, ny, nt), r, done = env.step(a)
            target = r
            if not done:
                row = values[nx, ny, nt].tolist()
                target += gamma * max(row[b] for b in legal[nx][ny])
            old = values[cx, cy, t, a]
            values[cx, cy, t, a] = old + alpha * (target - old)
            visits[cx, cy, t, a] += 1
            total += r
            cx, cy, t = nx, ny, nt
        curve[ep] = total

        if cfg.checkpoint_every and (ep + 1) % cfg.checkpoint_every == 0 and cfg.checkpoint_dir:
            Path(cfg.checkpoint_dir).mkdir(parents=True, exist_ok=True)
            q.save(Path(cfg.checkpoint_dir) / f"qtable_{ep + 1:08d}.npz")
        if progress_every and (ep + 1) % progress_every == 0:
            log.info("episode %d/%d eps=%.3f mean reward (last %d)=%.4f",
                     ep + 1, cfg.episodes, eps, progress_every, curve[ep + 1 - progress_every:ep + 1].mean())
    return q, curve


class GreedyPolicy:
    """Acts greedily with respect to a Q-table."""

    def __init__(self, q):
        self.q = q


class FixedPathPolicy:
    """Visits a prescribed sequence of cells, one per time step."""

    def __init__(self, cells, scenario=None):
        scenario = scenario if scenario is not None else ScenarioConfig()
        cells = [(int(c[0]), int(c[1])) for c in cells]
        if len(cells) != scenario.episode_length:
            raise ConfigError(f"path has {len(cells)} cells, need {scenario.episode_length}")
        for c in cells:
            if not in_grid(*c, scenario):
                raise ConfigError(f"path cell {c} is off the grid")
        for a, b in zip(cells, cells[1:]):
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) > 1:
                raise ConfigError(f"path cells {a} -> {b} are not adjacent")
        self.cells = cells

    def action(self, t):
        (x0, y0), (x1, y1) = self.cells[t], self.cells[t + 1]
        return Action(ACTION_DELTAS.index((x1 - x0, y1 - y0)))

    def to_csv(self):
        return "cx,cy\n" + "".join(f"{cx},{cy}\n" for cx, cy in self.cells)

    @classmethod
    def from_csv(cls, text, scenario=None):
        rows = list(csv.DictReader(text.splitlines()))
        return cls([(int(r["cx"]), int(r["cy"])) for r in rows], scenario)


def default_grid_path(scenario=None):
    """The shipped serpentine baseline: two transects across the plume."""
    text = resources.files("hotspot").joinpath("data/grid_path.csv").read_text()
    return FixedPathPolicy.from_csv(text, scenario)


def load_policy(path, scenario=None):
    """Load a Q-table (``.npz``) or a fixed path (``.csv``)."""
    path = Path(path)
    if path.suffix == ".csv":
        return FixedPathPolicy.from_csv(path.read_text(), scenario)
    return GreedyPolicy(QTable.load(path))


def greedy_rollout(policy, scenario, rng, true_flux=None, start=None, reward_kind=RewardKind.NEG_CRPS,
                   env=None):
    """Fly one episode without exploration and return its record.

    A fixed path always starts at its first cell; ``start`` is ignored.
    """
    scenario = scenario if scenario is not None else ScenarioConfig()
    env = env if env is not None else HotspotEnv(scenario, reward_kind)
    if isinstance(policy, FixedPathPolicy):
        env.reset(rng, true_flux=true_flux, start=policy.cells[0])
        for t in range(scenario.episode_length - 1):
            env.step(policy.action(t))
        return env.record

    legal = _legal_index(scenario)
    s = env.reset(rng, true_flux=true_flux, start=start)
    done = False
    while not done:
        a = _greedy(policy.q.values[s.cx, s.cy, s.t].tolist(), legal[s.cx][s.cy], rng)
        s, _, done = env.step(a)
    return env.record


def save_curve(path, series):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["episode", "reward_sum"])
        for i, v in enumerate(series):
            w.writerow([i, repr(float(v))])


def load_curve(path):
    with open(path, newline="") as fh:
        return np.array([float(r["reward_sum"]) for r in csv.DictReader(fh)])
