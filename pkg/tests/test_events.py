import hashlib
import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eri._io import ParseError, ValidationError
from eri.events import EventLog, parse_events, partition, serialize_events, stream_distance

from conftest import attempt, make_blueprint, random_blueprint, random_log, stream_st
from oracles import brute_stream_distance

TAU = 60.0


def _line(**kw):
    rec = {"kind": "attempt", "ts": 0, "topic": "t0", "section": "S", "correct": True,
           "difficulty": 1.0, "response_time_s": 30.0, "session": "s"}
    rec.update(kw)
    return json.dumps(rec)


def test_empty_input():
    log = parse_events(b"")
    assert log.attempts == () and log.mocks == ()


def test_single_attempt():
    log = parse_events(_line(correct=True))
    assert len(log) == 1 and log.attempts[0].correct is True


def test_comments_and_blank_lines():
    log = parse_events("# header\n\n" + _line() + "\n   \n# tail\n")
    assert len(log.attempts) == 1


def test_mock_score_out_of_range():
    with pytest.raises(ValidationError) as err:
        parse_events('{"kind":"mock","ts":1,"mock_id":"m","score":1.3}')
    assert any("score out of [0,1]" in p for p in err.value.problems)


def test_malformed_line_number():
    with pytest.raises(ParseError) as err:
        parse_events(_line() + "\n{not json\n")
    assert err.value.line == 2


def test_wrong_type_names_field():
    with pytest.raises(ParseError) as err:
        parse_events(_line(correct="yes"))
    assert err.value.field == "correct"


def test_unknown_kind_rejected():
    with pytest.raises(ParseError):
        parse_events('{"kind":"quiz","ts":1}')


def test_range_problems_collected():
    text = "\n".join([_line(difficulty=0.0), _line(response_time_s=-1), _line(ts=-5)])
    with pytest.raises(ValidationError) as err:
        parse_events(text)
    assert len(err.value.problems) == 3


def test_unsorted_input_is_stably_sorted():
    text = "\n".join([_line(ts=5, session="a"), _line(ts=1), _line(ts=5, session="b")])
    log = parse_events(text)
    assert [e.timestamp for e in log.attempts] == [1, 5, 5]
    assert [e.session for e in log.attempts[1:]] == ["a", "b"]


def test_subsecond_timestamps_truncate():
    assert parse_events(_line(ts=12.9)).attempts[0].timestamp == 12


def test_serialize_round_trip():
    rng = np.random.default_rng(1)
    bp = random_blueprint(rng)
    for _ in range(50):
        log = random_log(rng, bp)
        assert parse_events(serialize_events(log)) == log


def test_partition_law():
    bp = make_blueprint([0.5, 0.5])
    log = EventLog.build([attempt(1, "t0"), attempt(2, "t1"), attempt(3, "t0")])
    p = partition(log, bp)
    assert len(p.topics["t0"]) + len(p.topics["t1"]) == 3
    assert len(p.sections["S"]) == 3


def test_partition_unmapped_bucket():
    bp = make_blueprint([1.0])
    p = partition(EventLog.build([attempt(1, "t9")]), bp)
    assert len(p.unmapped) == 1
    assert "t9" in p.warnings[0]


def test_partition_empty():
    p = partition(EventLog(), make_blueprint([0.5, 0.5]))
    assert all(len(v) == 0 for v in p.topics.values())
    assert all(len(v) == 0 for v in p.sections.values())


def _digest(events):
    return sorted(hashlib.sha256(json.dumps(e.to_dict(), sort_keys=True).encode()).hexdigest() for e in events)


def test_partition_preserves_multiset():
    rng = np.random.default_rng(2)
    for _ in range(100):
        bp = random_blueprint(rng)
        log = random_log(rng, bp)
        p = partition(log, bp)
        from_topics = [e for s in p.topics.values() for e in s] + list(p.unmapped)
        from_sections = [e for s in p.sections.values() for e in s] + list(p.unmapped)
        assert _digest(from_topics) == _digest(log.attempts) == _digest(from_sections)


# -- stream metric ---------------------------------------------------------


def _stream(n, **kw):
    return tuple(attempt(ts=i * 100, **kw) for i in range(n))


def test_identical_streams():
    s = _stream(5)
    assert stream_distance(s, s, TAU) == 0.0


def test_one_flip_in_ten():
    a = _stream(10)
    b = a[:3] + (replace(a[3], correct=False),) + a[4:]
    assert stream_distance(a, b, TAU) == pytest.approx(0.1, abs=1e-15)


def test_one_insertion_ten_to_eleven():
    a = _stream(10)
    b = a[:5] + (attempt(ts=450, correct=False),) + a[5:]
    assert stream_distance(a, b, TAU) == pytest.approx(0.1, abs=1e-15)


def test_one_deletion_ten_to_nine():
    a = _stream(10)
    assert stream_distance(a, a[:4] + a[5:], TAU) == pytest.approx(1 / 9, abs=1e-15)


def test_timestamp_and_response_time_costs():
    a = _stream(4)
    b = a[:1] + (replace(a[1], timestamp=a[1].timestamp + 43200),) + a[2:]
    assert stream_distance(a, b, TAU) == pytest.approx(0.5 / 4)
    c = a[:1] + (replace(a[1], response_time=a[1].response_time + 30.0),) + a[2:]
    assert stream_distance(a, c, TAU) == pytest.approx(0.5 / 4)


def test_empty_vs_one():
    assert stream_distance((), (attempt(),), TAU) == pytest.approx(1.0)


@settings(max_examples=300)
@given(stream_st(3), stream_st(3))
def test_matches_exhaustive_edit_orders(a, b):
    assert stream_distance(a, b, TAU) == pytest.approx(brute_stream_distance(a, b, TAU), abs=1e-12)


@settings(max_examples=200)
@given(stream_st(), stream_st())
def test_symmetric_and_identity(a, b):
    d = stream_distance(a, b, TAU)
    assert d == stream_distance(b, a, TAU)
    assert (d == 0) == (a == b)


def test_metric_axioms_on_random_triples():
    rng = np.random.default_rng(3)
    pool = [attempt(ts=int(t), topic=tp, correct=c, session=s, rt=rt)
            for t in (0, 3600, 86400) for tp in ("t0", "t1") for c in (True, False)
            for s in ("s0",) for rt in (30.0, 60.0)]

    def draw():
        n = int(rng.integers(0, 7))
        idx = rng.integers(len(pool), size=n)
        return tuple(sorted((pool[i] for i in idx), key=lambda e: e.timestamp))

    for _ in range(1000):
        a, b, c = draw(), draw(), draw()
        dab, dbc, dac = (stream_distance(x, y, TAU) for x, y in ((a, b), (b, c), (a, c)))
        assert dab == stream_distance(b, a, TAU)
        assert dac <= dab + dbc + 1e-12


@given(stream_st(), st.integers(0, 5))
def test_single_flip_cost(a, k):
    if not a:
        return
    k %= len(a)
    b = a[:k] + (replace(a[k], correct=not a[k].correct),) + a[k + 1:]
    assert stream_distance(a, b, TAU) == pytest.approx(1 / len(a), abs=1e-12)
