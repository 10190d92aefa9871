import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eri._io import DomainError
from eri.components import (
    ComponentConfig,
    ComponentVector,
    aggregate,
    coverage_topic,
    endurance,
    mastery_topic,
    pace_section,
    retention_topic,
    volatility,
)
from eri.events import DAY, EventLog, MockResult, stream_distance

from conftest import attempt, make_blueprint, random_blueprint, random_log, stream_st


def _mocks(scores):
    return [MockResult(i, f"m{i}", s) for i, s in enumerate(scores)]


# -- worked examples ------------------------------------------------------


def test_mastery_examples():
    assert mastery_topic(()) == 0.5
    assert mastery_topic([attempt(correct=True)] * 8) == pytest.approx(0.9)
    assert mastery_topic([attempt(correct=False)] * 8) == pytest.approx(0.1)


def test_coverage_examples():
    assert coverage_topic((), 5) == 0
    assert coverage_topic([attempt()] * 10, 5) == 1
    assert coverage_topic([attempt()] * 3, 5) == pytest.approx(0.6)
    with pytest.raises(DomainError):
        coverage_topic((), 0)


def test_retention_examples():
    assert retention_topic([attempt(ts=100)], 0.05, 100) == 1.0
    s = [attempt(ts=0)]
    assert retention_topic(s, 0.01, int(30 * DAY)) == pytest.approx(math.exp(-0.3))
    assert math.exp(-0.3) == pytest.approx(0.74082, abs=1e-5)
    assert retention_topic([attempt(correct=False)], 0.05, 10) == 0.0
    with pytest.raises(DomainError):
        retention_topic([attempt(ts=10)], 0.05, 5)


def test_pace_examples():
    assert pace_section([attempt(rt=60.0)], 60.0) == 1.0
    assert pace_section([attempt(rt=90.0)], 60.0) == pytest.approx(0.5)
    assert pace_section([attempt(rt=180.0)], 60.0) == 0.0
    assert pace_section([attempt(rt=10.0)], 60.0) == 1.0  # rushing not rewarded
    assert pace_section((), 60.0) == 1.0


def test_volatility_examples():
    assert volatility(_mocks([0.7] * 5)) == 1.0
    assert volatility(_mocks([0.0, 1.0] * 5)) == pytest.approx(0.0)
    assert volatility(_mocks([0.6, 0.8])) == pytest.approx(0.8)
    assert volatility(_mocks([0.3])) == 1.0


def test_volatility_uses_last_ten():
    assert volatility(_mocks([0.0, 1.0] * 3 + [0.5] * 10)) == 1.0


def _session(outcomes, sid="s"):
    return [attempt(ts=i, correct=c, session=sid) for i, c in enumerate(outcomes)]


def test_endurance_examples():
    assert endurance(_session([True, False] * 10)) == 1.0
    assert endurance(_session([True] * 10 + [True] * 5 + [False] * 5)) == pytest.approx(0.0)
    # first half 9/10, second 8/10 -> drop 0.1 -> 0.8
    outcomes = [True] * 9 + [False] + [True] * 8 + [False] * 2
    assert endurance(_session(outcomes)) == pytest.approx(0.8)
    assert endurance(_session([True] * 9 + [False] * 0)) == 1.0  # too short to qualify


def test_aggregate_all_ones():
    bp = make_blueprint([0.5, 0.5])
    # enough correct, recent, on-pace attempts: m < 1 always, so check C, R, P, V, E
    log = EventLog.build([attempt(ts=0, topic=f"t{i % 2}") for i in range(10)])
    x, _ = aggregate(log, bp)
    assert (x.C, x.R, x.P, x.V, x.E) == (1.0, 1.0, 1.0, 1.0, 1.0)


def test_aggregate_weighted_mean():
    bp = make_blueprint([0.5, 0.5])
    # m = (1 + h)/(2 + n): 0 of 3 -> 0.2, 3 of 3 -> 0.8
    log = EventLog.build([attempt(ts=i, topic="t0", correct=False) for i in range(3)]
                         + [attempt(ts=i, topic="t1", correct=True) for i in range(3)])
    x, br = aggregate(log, bp)
    assert (br["t0"].m, br["t1"].m) == (pytest.approx(0.2), pytest.approx(0.8))
    assert x.M == pytest.approx(0.5)


def test_aggregate_empty_log():
    x, br = aggregate(EventLog(), make_blueprint([0.3, 0.7]))
    assert x.as_tuple() == (0.5, 0.0, 0.0, 1.0, 1.0, 1.0)
    assert all(s.n == 0 and s.days_since_success is None for s in br.values())


def test_aggregate_rejects_early_as_of():
    log = EventLog.build([attempt(ts=100)])
    with pytest.raises(DomainError):
        aggregate(log, make_blueprint([1.0]), as_of=50)


def test_component_vector_rejects_out_of_range():
    with pytest.raises(DomainError):
        ComponentVector(1.1, 0, 0, 0, 0, 0)


def test_config_validation():
    with pytest.raises(DomainError):
        ComponentConfig(volatility_window=1)


# -- normalization and monotonicity ----------------------------------------


def test_normalization_on_random_logs():
    rng = np.random.default_rng(10)
    for _ in range(10_000 // 10):
        bp = random_blueprint(rng)
        for _ in range(10):
            x, br = aggregate(random_log(rng, bp), bp)
            assert all(0.0 <= v <= 1.0 for v in x.as_tuple())
            assert all(0.0 <= s.m <= 1.0 and 0.0 <= s.c <= 1.0 and 0.0 <= s.r <= 1.0 for s in br.values())


@given(stream_st(), st.floats(0.5, 1.0))
def test_appending_correct_never_lowers_mastery(s, d):
    assert mastery_topic(s + (attempt(ts=10**6, difficulty=d, correct=True),)) >= mastery_topic(s)


@given(stream_st(), st.integers(1, 8))
def test_appending_never_lowers_coverage(s, k):
    assert coverage_topic(s + (attempt(ts=10**6),), k) >= coverage_topic(s, k)


@given(stream_st(), st.integers(0, 10**6), st.floats(0, 0.5))
def test_later_as_of_never_raises_retention(s, extra, lam):
    now = max((e.timestamp for e in s), default=0)
    assert retention_topic(s, lam, now + extra) <= retention_topic(s, lam, now)


@given(stream_st(), st.integers(0, 5), st.floats(0, 500))
def test_slower_response_never_raises_pace(s, k, more):
    if not s:
        return
    k %= len(s)
    slower = s[:k] + (replace(s[k], response_time=s[k].response_time + more),) + s[k + 1:]
    assert pace_section(slower, 60.0) <= pace_section(s, 60.0)


@given(st.lists(st.floats(0, 1), min_size=2, max_size=10), st.data())
def test_mean_preserving_spread_never_raises_volatility(scores, data):
    i = data.draw(st.integers(0, len(scores) - 1))
    j = data.draw(st.integers(0, len(scores) - 1).filter(lambda j: j != i))
    lo, hi = sorted((i, j), key=lambda k: scores[k])
    room = min(scores[lo], 1.0 - scores[hi])
    t = data.draw(st.floats(0, 1)) * room
    spread = list(scores)
    spread[lo] -= t
    spread[hi] += t
    assert volatility(_mocks(spread)) <= volatility(_mocks(scores)) + 1e-12


@given(st.lists(st.booleans(), min_size=10, max_size=24), st.data())
def test_worse_second_half_never_raises_endurance(outcomes, data):
    h = len(outcomes) // 2
    hits = [k for k in range(h, len(outcomes)) if outcomes[k]]
    if not hits:
        return
    k = data.draw(st.sampled_from(hits))
    worse = list(outcomes)
    worse[k] = False
    assert endurance(_session(worse)) <= endurance(_session(outcomes))


# -- Lipschitz working constants -------------------------------------------


def test_mastery_lipschitz_in_stream_metric():
    """|m(a) - m(b)| <= (1 / min difficulty) * d(a, b); difficulty floor 0.5 gives 2."""
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(0, 12))
        a = tuple(attempt(ts=int(i), correct=bool(rng.random() < 0.6), difficulty=float(rng.uniform(0.5, 1)))
                  for i in range(n))
        b = list(a)
        for _ in range(int(rng.integers(1, 4))):
            op = rng.integers(3)
            if op == 0 and b:
                k = int(rng.integers(len(b)))
                b[k] = replace(b[k], correct=not b[k].correct)
            elif op == 1:
                k = int(rng.integers(len(b) + 1))
                b.insert(k, attempt(ts=k, correct=bool(rng.random() < 0.5), difficulty=float(rng.uniform(0.5, 1))))
            elif b:
                del b[int(rng.integers(len(b)))]
        b = tuple(sorted(b, key=lambda e: e.timestamp))
        d = stream_distance(a, b, 60.0)
        if d > 0:
            worst = max(worst, abs(mastery_topic(a) - mastery_topic(b)) / d)
    assert worst <= 2.0 + 1e-12


def test_retention_lipschitz_in_shift_days():
    rng = np.random.default_rng(12)
    for _ in range(1000):
        lam = float(rng.uniform(0, 0.3))
        ts = int(rng.integers(0, 10 * 86400))
        shift = int(rng.integers(0, 86400))
        now = ts + shift + int(rng.integers(0, 86400))
        ra = retention_topic([attempt(ts=ts)], lam, now)
        rb = retention_topic([attempt(ts=ts + shift)], lam, now)
        assert abs(ra - rb) <= lam * shift / DAY + 1e-12
