from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from eri.blueprint import Blueprint, Section, Topic  # noqa: E402
from eri.events import AttemptEvent, EventLog, MockResult  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


# -- builders --------------------------------------------------------------


def make_blueprint(weights, sections=("S",), pace=60.0, k=5, lam=0.05, version="v") -> Blueprint:
    secs = tuple(Section(s, pace) for s in sections)
    topics = tuple(
        Topic(f"t{i}", sections[i % len(sections)], float(w), k, lam) for i, w in enumerate(weights)
    )
    return Blueprint(version, topics, secs, 3600.0)


def attempt(ts=0, topic="t0", section="S", correct=True, difficulty=1.0, rt=60.0, session="s0") -> AttemptEvent:
    return AttemptEvent(ts, topic, section, correct, difficulty, rt, session)


def random_blueprint(rng: np.random.Generator, max_topics=5) -> Blueprint:
    n = int(rng.integers(1, max_topics + 1))
    n_sec = int(rng.integers(1, min(n, 3) + 1))
    w = rng.dirichlet(np.ones(n))
    w[-1] = 1.0 - w[:-1].sum()
    if w[-1] < 0:
        w = np.full(n, 1.0 / n)
    secs = tuple(Section(f"S{j}", float(rng.uniform(30, 120))) for j in range(n_sec))
    topics = tuple(
        Topic(f"t{i}", f"S{i % n_sec}", float(w[i]), int(rng.integers(1, 10)), float(rng.uniform(0.0, 0.2)))
        for i in range(n)
    )
    return Blueprint("r", topics, secs, 3600.0)


def random_log(rng: np.random.Generator, bp: Blueprint, max_attempts=40, max_mocks=12,
               min_difficulty=0.5, max_pace_ratio=3.0) -> EventLog:
    """Random log inside the regularity envelope, sessions as contiguous runs."""
    n = int(rng.integers(0, max_attempts + 1))
    ts = np.sort(rng.integers(0, 30 * 86400, size=n))
    attempts = []
    sess, left = 0, int(rng.integers(1, 25))
    for i in range(n):
        t = bp.topics[int(rng.integers(len(bp.topics)))]
        tau = bp.pace_target(t.section)
        attempts.append(AttemptEvent(
            int(ts[i]), t.id, t.section, bool(rng.random() < 0.7),
            float(rng.uniform(min_difficulty, 1.0)), float(rng.uniform(0.2, max_pace_ratio) * tau), f"s{sess}",
        ))
        left -= 1
        if left == 0:
            sess, left = sess + 1, int(rng.integers(1, 25))
    m = int(rng.integers(0, max_mocks + 1))
    mts = np.sort(rng.integers(0, 30 * 86400, size=m))
    mocks = [MockResult(int(mts[j]), f"m{j}", float(rng.random())) for j in range(m)]
    return EventLog.build(attempts, mocks)


# -- hypothesis strategies -------------------------------------------------

# small pools so substitutions between streams are often allowed
event_st = st.builds(
    AttemptEvent,
    timestamp=st.integers(0, 3 * 86400),
    topic=st.sampled_from(["t0", "t1"]),
    section=st.just("S"),
    correct=st.booleans(),
    difficulty=st.sampled_from([0.5, 1.0]),
    response_time=st.sampled_from([30.0, 60.0, 90.0]),
    session=st.sampled_from(["s0", "s1"]),
)


def stream_st(max_size=6):
    return st.lists(event_st, max_size=max_size).map(lambda xs: tuple(sorted(xs, key=lambda e: e.timestamp)))


simplex_st = st.lists(st.floats(0.0, 1.0), min_size=6, max_size=6).filter(lambda v: sum(v) > 1e-6).map(
    lambda v: tuple(x / sum(v) for x in v)
)


def random_problem(rng: np.random.Generator, max_constraints=3, eta=None):
    """Feasible design problem: constraints pass through or near a random simplex point."""
    from eri.weights import DesignProblem

    prior = rng.dirichlet(np.ones(6))
    z = rng.dirichlet(np.ones(6))
    A, b = [], []
    for _ in range(int(rng.integers(0, max_constraints + 1))):
        a = rng.normal(size=6)
        A.append(tuple(a))
        b.append(float(a @ z + rng.choice([0.0, rng.uniform(0, 0.2)])))
    if eta is None:
        eta = float(rng.choice([0.0, 0.01, 0.1, 1.0]))
    return DesignProblem(tuple(prior / prior.sum()), eta, tuple(A), tuple(b))
