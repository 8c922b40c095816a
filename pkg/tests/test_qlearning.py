import numpy as np
import pytest

from hotspot.environment import Action, AgentState, ScenarioConfig, legal_action_mask, legal_actions
from hotspot.errors import ConfigError
from hotspot.qlearning import (
    FixedPathPolicy,
    GreedyPolicy,
    QTable,
    TrainConfig,
    default_grid_path,
    epsilon_at,
    greedy_rollout,
    load_curve,
    load_policy,
    q_update,
    save_curve,
    select_action,
    train,
)
from hotspot.scoring import RewardKind

SC = ScenarioConfig()


def test_hyperparameter_defaults():
    cfg = TrainConfig()
    assert (cfg.episodes, cfg.alpha, cfg.gamma, cfg.eps_max, cfg.eps_min) == (1_500_000, 0.1, 1.0, 1.0, 0.01)
    with pytest.raises(ConfigError):
        TrainConfig(alpha=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(eps_min=0.5, eps_max=0.2)


@pytest.mark.parametrize("schedule", ["linear", "exponential"])
def test_epsilon_schedule_endpoints(schedule):
    cfg = TrainConfig(episodes=1000, eps_schedule=schedule)
    eps = [epsilon_at(i, cfg) for i in range(1000)]
    assert eps[0] == pytest.approx(1.0)
    assert eps[900] == pytest.approx(0.01) and eps[-1] == pytest.approx(0.01)
    assert np.all(np.diff(eps) <= 1e-15)
    if schedule == "linear":
        assert eps[450] == pytest.approx(0.505)


def test_select_uniform_when_epsilon_one():
    q = QTable.zeros(SC)
    q.values[0, 0, 0, Action.PLUS_X] = 10.0
    s = AgentState(0, 0, 0)
    legal = legal_actions(s, SC)
    rng = np.random.default_rng(0)
    n = 100_000
    picks = [select_action(q, s, 1.0, legal, rng) for _ in range(n)]
    p = 1 / 3
    for a in legal:
        assert abs(picks.count(a) / n - p) < 3 * np.sqrt(p * (1 - p) / n)
    assert set(picks) == legal


def test_select_greedy_unique_max():
    q = QTable.zeros(SC)
    q.values[4, 4, 2] = [-3.0, -1.0, -2.0, -5.0, -4.0]
    rng = np.random.default_rng(0)
    s = AgentState(4, 4, 2)
    assert all(select_action(q, s, 0.0, set(Action), rng) is Action.MINUS_X for _ in range(200))


def test_select_greedy_ignores_illegal_maximum():
    q = QTable.zeros(SC)
    q.values[0, 0, 0] = [-1.0, 5.0, -2.0, 9.0, -3.0]  # MINUS_X and MINUS_Y are off-grid
    s = AgentState(0, 0, 0)
    assert select_action(q, s, 0.0, legal_actions(s, SC), np.random.default_rng(0)) is Action.PLUS_X


def test_select_tie_break_uniform():
    q = QTable.zeros(SC)
    q.values[4, 4, 0] = [-1.0, -1.0, -2.0, -2.0, -2.0]
    rng = np.random.default_rng(1)
    n = 10_000
    picks = [select_action(q, AgentState(4, 4, 0), 0.0, set(Action), rng) for _ in range(n)]
    frac = picks.count(Action.PLUS_X) / n
    assert set(picks) == {Action.PLUS_X, Action.MINUS_X}
    assert abs(frac - 0.5) < 3 * np.sqrt(0.25 / n)


def test_q_update_terminal_arithmetic():
    q = QTable.zeros(SC)
    s, s2 = AgentState(1, 1, 14), AgentState(1, 1, 15)
    q_update(q, s, Action.STAY, -1.0, s2, True, 0.1)
    assert q.values[1, 1, 14, Action.STAY] == pytest.approx(-0.1)
    assert q.visits[1, 1, 14, Action.STAY] == 1


def test_q_update_geometric_convergence():
    q = QTable.zeros(SC)
    s, s2 = AgentState(2, 2, 14), AgentState(2, 2, 15)
    q.values[2, 2, 14, 0] = 3.0
    r = -2.0
    for n in range(1, 60):
        q_update(q, s, 0, r, s2, True, 0.1)
        assert abs(q.values[2, 2, 14, 0] - r) == pytest.approx(abs(3.0 - r) * 0.9**n, rel=1e-9)


def test_two_state_chain_bellman():
    # s0 --a (r=-1)--> s1 ; s1 --STAY (r=-3) or PLUS_X (r=-0.5)--> terminal
    # Bellman: q(s1,STAY)=-3, q(s1,PLUS_X)=-0.5, q(s0,a)=-1+max(-3,-0.5)=-1.5
    q = QTable.zeros(SC)
    s0, s1, end = AgentState(5, 5, 13), AgentState(5, 5, 14), AgentState(5, 5, 15)
    legal1 = [Action.STAY, Action.PLUS_X]
    for _ in range(500):
        q_update(q, s1, Action.STAY, -3.0, end, True, 0.1)
        q_update(q, s1, Action.PLUS_X, -0.5, end, True, 0.1)
        q_update(q, s0, Action.PLUS_Y, -1.0, s1, False, 0.1, legal_next=legal1)
    assert q.values[5, 5, 14, Action.STAY] == pytest.approx(-3.0, abs=1e-3)
    assert q.values[5, 5, 14, Action.PLUS_X] == pytest.approx(-0.5, abs=1e-3)
    assert q.values[5, 5, 13, Action.PLUS_Y] == pytest.approx(-1.5, abs=1e-3)


def test_train_smoke():
    q, curve = train(TrainConfig(episodes=1000, seed=3))
    assert q.shape == (10, 10, 16, 5)
    assert np.all(np.isfinite(q.values))
    assert curve.shape == (1000,)
    assert q.visits.sum() == 1000 * 15


@pytest.mark.parametrize("kind", list(RewardKind))
def test_train_deterministic(kind):
    a = train(TrainConfig(episodes=300, seed=11, reward_kind=kind))
    b = train(TrainConfig(episodes=300, seed=11, reward_kind=kind))
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1], b[1])
    c = train(TrainConfig(episodes=300, seed=12, reward_kind=kind))
    assert not np.array_equal(a[0].values, c[0].values)


def test_illegal_entries_never_touched_and_crps_values_non_positive():
    q, _ = train(TrainConfig(episodes=2000, seed=4))
    mask = legal_action_mask(SC)
    illegal = ~np.broadcast_to(mask[:, :, None, :], q.shape)
    assert np.all(q.values[illegal] == 0.0)
    assert np.all(q.visits[illegal] == 0)
    assert np.all(q.visits[:, :, 15, :] == 0)
    assert np.all(q.values <= 0.0)


def test_checkpoints(tmp_path):
    train(TrainConfig(episodes=50, checkpoint_every=20, checkpoint_dir=str(tmp_path)))
    assert sorted(p.name for p in tmp_path.iterdir()) == ["qtable_00000020.npz", "qtable_00000040.npz"]


def test_qtable_round_trip(tmp_path):
    q, _ = train(TrainConfig(episodes=200, seed=5))
    path = tmp_path / "q.npz"
    q.save(path)
    back = QTable.load(path)
    assert back == q
    assert isinstance(load_policy(path), GreedyPolicy)


def test_curve_round_trip(tmp_path):
    series = np.random.default_rng(0).normal(size=500)
    save_curve(tmp_path / "c.csv", series)
    np.testing.assert_array_equal(load_curve(tmp_path / "c.csv"), series)
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "episode,reward_sum"


def test_fixed_path_rollout_follows_path():
    policy = default_grid_path()
    assert len(policy.cells) == 16
    rec = greedy_rollout(policy, SC, np.random.default_rng(0), true_flux=250.0)
    assert [(cx, cy) for cx, cy, _ in rec.path] == policy.cells
    assert [t for _, _, t in rec.path] == list(range(16))


def test_fixed_path_validation():
    cells = [(0, 0)] * 15 + [(2, 0)]
    with pytest.raises(ConfigError):
        FixedPathPolicy(cells)
    with pytest.raises(ConfigError):
        FixedPathPolicy([(0, 0)] * 15)
    with pytest.raises(ConfigError):
        FixedPathPolicy([(0, 0)] * 15 + [(0, -1)])


def test_fixed_path_csv_round_trip():
    p = default_grid_path()
    assert FixedPathPolicy.from_csv(p.to_csv()).cells == p.cells


def test_greedy_rollout_uses_table():
    q = QTable.zeros(SC)
    # make PLUS_Y strictly best everywhere it is legal
    q.values[..., Action.PLUS_Y] = 1.0
    q.values[:, 9, :, Action.PLUS_Y] = 0.0
    q.values[:, 9, :, Action.STAY] = 1.0
    rec = greedy_rollout(GreedyPolicy(q), SC, np.random.default_rng(0), true_flux=250.0, start=(3, 0))
    ys = [cy for _, cy, _ in rec.path]
    assert ys == list(range(10)) + [9] * 6
