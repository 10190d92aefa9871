import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eri._io import DomainError, ParseError, ValidationError
from eri.blueprint import drift_bound, drift_ceiling, parse_blueprint, serialize_blueprint, tv_distance
from eri.composite import WeightVector

from conftest import FIXTURES, make_blueprint


def _bp_json(weights, section="S", extra=None):
    obj = {
        "version": "v1",
        "exam_duration_s": 3600,
        "sections": [{"id": "S", "pace_target_s": 60}],
        "topics": [{"id": f"t{i}", "section": section, "weight": w} for i, w in enumerate(weights)],
    }
    obj.update(extra or {})
    return json.dumps(obj)


def test_parse_minimal_symmetric():
    bp = parse_blueprint(_bp_json([0.5, 0.5]))
    assert bp.weights == {"t0": 0.5, "t1": 0.5}
    assert bp.topics[0].evidence_threshold == 5
    assert bp.topics[0].retention_rate == pytest.approx(0.05)


def test_weight_sum_violation_message():
    with pytest.raises(ValidationError) as err:
        parse_blueprint(_bp_json([0.5, 0.6]))
    assert "weights sum to 1.1" in err.value.problems


def test_unknown_section_is_named():
    with pytest.raises(ValidationError) as err:
        parse_blueprint(_bp_json([1.0], section="X"))
    assert any("'X'" in p for p in err.value.problems)


def test_all_problems_reported_at_once():
    with pytest.raises(ValidationError) as err:
        parse_blueprint(_bp_json([0.5, 0.6], section="X"))
    assert len(err.value.problems) >= 3  # sum plus two bad references


def test_unknown_keys_rejected():
    with pytest.raises(ValidationError) as err:
        parse_blueprint(_bp_json([1.0], extra={"colour": "red"}))
    assert "unknown key 'colour'" in err.value.problems


def test_malformed_json_has_line():
    with pytest.raises(ParseError) as err:
        parse_blueprint('{\n"version": "v",\n oops}')
    assert err.value.line == 3


def test_marking_rules_carried_not_interpreted():
    bp = parse_blueprint(_bp_json([1.0], extra={"marking_rules": {"neg": -0.25}}))
    assert bp.marking_rules == {"neg": -0.25}


@pytest.mark.parametrize("name", ["blueprint.json", "blueprint_v2.json"])
def test_round_trip(name):
    raw = (FIXTURES / name).read_text()
    bp = parse_blueprint(raw)
    again = parse_blueprint(serialize_blueprint(bp))
    assert again == bp


def test_tv_examples():
    a = make_blueprint([0.5, 0.5])
    assert tv_distance(a, a) == 0.0
    assert tv_distance({"x": 0.5, "y": 0.5}, {"x": 1.0, "y": 0.0}) == pytest.approx(0.5)
    assert tv_distance({"a": 0.2, "b": 0.3, "c": 0.5}, {"a": 0.3, "b": 0.3, "c": 0.4}) == pytest.approx(0.1)


def test_tv_pads_missing_topics():
    assert tv_distance({"a": 1.0}, {"b": 1.0}) == pytest.approx(1.0)


def test_tv_metric_on_random_triples():
    rng = np.random.default_rng(0)
    keys = [f"t{i}" for i in range(6)]
    for _ in range(1000):
        u, v, w = (dict(zip(keys, rng.dirichlet(np.ones(6)))) for _ in range(3))
        duv, dvw, duw = tv_distance(u, v), tv_distance(v, w), tv_distance(u, w)
        assert duv >= 0
        assert duv == tv_distance(v, u)
        assert duw <= duv + dvw + 1e-12
        assert tv_distance(u, u) == 0


def test_drift_bound_examples():
    uniform = WeightVector.uniform()
    assert drift_bound(0.0, uniform) == 0.0
    assert drift_bound(0.1, uniform) == pytest.approx(0.15)
    assert drift_bound(0.1, (1, 0, 0, 0, 0, 0)) == pytest.approx(0.3)
    assert drift_ceiling(0.1) == pytest.approx(0.3)


@pytest.mark.parametrize("delta", [-0.1, 1.5])
def test_drift_bound_domain(delta):
    with pytest.raises(DomainError):
        drift_bound(delta, WeightVector.uniform())


@given(st.floats(0, 1), st.lists(st.floats(0, 1), min_size=6, max_size=6).filter(lambda v: sum(v) > 0))
def test_drift_bound_never_above_ceiling(delta, raw):
    alpha = [x / sum(raw) for x in raw]
    assert drift_bound(delta, alpha) <= drift_ceiling(delta) + 1e-15
