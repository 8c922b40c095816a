import hashlib
from pathlib import Path

import numpy as np
import pytest

import hotspot
from hotspot.qlearning import QTable, TrainConfig, train

REDUCED_EPISODES = 200_000


def _source_digest():
    h = hashlib.sha256()
    for p in sorted(Path(hotspot.__file__).parent.rglob("*")):
        if p.suffix in (".py", ".csv"):
            h.update(p.read_bytes())
    return h.hexdigest()[:16]


@pytest.fixture(scope="session")
def reduced_training(request):
    """Reduced-scale training runs, one per reward kind, cached on disk.

    Training is a deterministic function of the configuration and the
    package source, so cached tables are reused only when both match.
    """
    cache_dir = Path(request.config.cache.mkdir("hotspot-training"))
    digest = _source_digest()
    results = {}

    def get(kind, episodes=REDUCED_EPISODES, seed=0):
        cfg = TrainConfig(episodes=episodes, reward_kind=kind, seed=seed)
        key = (cfg.reward_kind.value, episodes, seed)
        if key in results:
            return results[key]
        stem = cache_dir / f"{digest}_{cfg.reward_kind.value}_{episodes}_{seed}"
        qfile, cfile = stem.with_suffix(".npz"), stem.with_suffix(".curve.npy")
        if qfile.exists() and cfile.exists():
            q, curve = QTable.load(qfile), np.load(cfile)
        else:
            q, curve = train(cfg)
            q.save(qfile)
            np.save(cfile, curve)
        results[key] = (q, curve)
        return results[key]

    return get


ACCEPTANCE_RESULTS = {}


@pytest.fixture
def verdict(request):
    """Record the outcome of one acceptance criterion for the summary."""
    def record(criterion, ok, detail=""):
        ACCEPTANCE_RESULTS[criterion] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[criterion]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {criterion}  {detail}")
