"""Exam blueprints: parsing, validation, total-variation distance, drift bounds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from ._io import DomainError, ParseError, ValidationError, is_number, load_json_object, read_bytes

WEIGHT_SUM_TOL = 1e-9
DEFAULT_EVIDENCE_THRESHOLD = 5
DEFAULT_RETENTION_RATE = 0.05  # per day

_TOP_KEYS = {"version", "exam_duration_s", "sections", "topics", "marking_rules"}
_SECTION_KEYS = {"id", "pace_target_s"}
_TOPIC_KEYS = {"id", "section", "weight", "evidence_threshold", "retention_rate_per_day"}


@dataclass(frozen=True)
class Section:
    id: str
    pace_target: float  # seconds per item


@dataclass(frozen=True)
class Topic:
    id: str
    section: str
    weight: float
    evidence_threshold: int = DEFAULT_EVIDENCE_THRESHOLD
    retention_rate: float = DEFAULT_RETENTION_RATE


@dataclass(frozen=True)
class Blueprint:
    version: str
    topics: tuple[Topic, ...]
    sections: tuple[Section, ...]
    exam_duration: float
    marking_rules: Any = field(default=None, compare=False)

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValidationError(problems)

    def problems(self) -> list[str]:
        """Every violated invariant, in a stable order."""
        out = []
        if not self.topics:
            out.append("blueprint has no topics")
        total = math.fsum(t.weight for t in self.topics)
        if self.topics and abs(total - 1.0) > WEIGHT_SUM_TOL:
            out.append(f"weights sum to {total:.12g}")
        seen_sections = set()
        for s in self.sections:
            if s.id in seen_sections:
                out.append(f"duplicate section id {s.id!r}")
            seen_sections.add(s.id)
            if not s.pace_target > 0:
                out.append(f"section {s.id!r}: pace target must be > 0")
        seen_topics = set()
        for t in self.topics:
            if t.id in seen_topics:
                out.append(f"duplicate topic id {t.id!r}")
            seen_topics.add(t.id)
            if not t.weight >= 0:
                out.append(f"topic {t.id!r}: weight must be >= 0")
            if t.weight > 1:
                out.append(f"topic {t.id!r}: weight must be <= 1")
            if not t.retention_rate >= 0:
                out.append(f"topic {t.id!r}: retention rate must be >= 0")
            if t.evidence_threshold < 1:
                out.append(f"topic {t.id!r}: evidence threshold must be >= 1")
            if t.section not in seen_sections:
                out.append(f"topic {t.id!r} references unknown section {t.section!r}")
        if not self.exam_duration > 0:
            out.append("exam duration must be > 0")
        return out

    @property
    def weights(self) -> dict[str, float]:
        return {t.id: t.weight for t in self.topics}

    @property
    def topic_ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.topics)

    @property
    def section_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.sections)

    def topic(self, topic_id: str) -> Topic:
        for t in self.topics:
            if t.id == topic_id:
                return t
        raise KeyError(topic_id)

    def pace_target(self, section_id: str) -> float:
        for s in self.sections:
            if s.id == section_id:
                return s.pace_target
        raise KeyError(section_id)

    def with_weights(self, weights: Mapping[str, float], version: str | None = None) -> "Blueprint":
        """Same blueprint, re-weighted. Topics missing from ``weights`` get weight 0."""
        topics = tuple(
            Topic(t.id, t.section, float(weights.get(t.id, 0.0)), t.evidence_threshold, t.retention_rate)
            for t in self.topics
        )
        return Blueprint(version or self.version, topics, self.sections, self.exam_duration, self.marking_rules)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "version": self.version,
            "exam_duration_s": self.exam_duration,
            "sections": [{"id": s.id, "pace_target_s": s.pace_target} for s in self.sections],
            "topics": [
                {
                    "id": t.id,
                    "section": t.section,
                    "weight": t.weight,
                    "evidence_threshold": t.evidence_threshold,
                    "retention_rate_per_day": t.retention_rate,
                }
                for t in self.topics
            ],
        }
        if self.marking_rules is not None:
            d["marking_rules"] = self.marking_rules
        return d


def parse_blueprint(raw: bytes | str) -> Blueprint:
    """Parse the blueprint JSON format.

    Syntax errors raise :class:`ParseError`; every schema or invariant
    violation is collected into a single :class:`ValidationError`.
    """
    obj = load_json_object(read_bytes(raw))
    problems: list[str] = []

    for k in sorted(set(obj) - _TOP_KEYS):
        problems.append(f"unknown key {k!r}")
    for k in ("version", "exam_duration_s", "sections", "topics"):
        if k not in obj:
            problems.append(f"missing key {k!r}")

    version = obj.get("version", "")
    if "version" in obj and not isinstance(version, str):
        problems.append("version must be a string")
    duration = obj.get("exam_duration_s", 1.0)
    if "exam_duration_s" in obj and not is_number(duration):
        problems.append("exam_duration_s must be a number")
        duration = 1.0

    sections = []
    raw_sections = obj.get("sections", [])
    if not isinstance(raw_sections, list):
        problems.append("sections must be an array")
        raw_sections = []
    for i, s in enumerate(raw_sections):
        where = f"sections[{i}]"
        if not isinstance(s, dict):
            problems.append(f"{where} must be an object")
            continue
        for k in sorted(set(s) - _SECTION_KEYS):
            problems.append(f"{where}: unknown key {k!r}")
        sid = s.get("id")
        tau = s.get("pace_target_s")
        if not isinstance(sid, str):
            problems.append(f"{where}.id must be a string")
            continue
        if not is_number(tau):
            problems.append(f"{where}.pace_target_s must be a number")
            continue
        sections.append(Section(sid, float(tau)))

    topics = []
    raw_topics = obj.get("topics", [])
    if not isinstance(raw_topics, list):
        problems.append("topics must be an array")
        raw_topics = []
    for i, t in enumerate(raw_topics):
        where = f"topics[{i}]"
        if not isinstance(t, dict):
            problems.append(f"{where} must be an object")
            continue
        for k in sorted(set(t) - _TOPIC_KEYS):
            problems.append(f"{where}: unknown key {k!r}")
        tid, sec, w = t.get("id"), t.get("section"), t.get("weight")
        k_t = t.get("evidence_threshold", DEFAULT_EVIDENCE_THRESHOLD)
        lam = t.get("retention_rate_per_day", DEFAULT_RETENTION_RATE)
        ok = True
        if not isinstance(tid, str):
            problems.append(f"{where}.id must be a string")
            ok = False
        if not isinstance(sec, str):
            problems.append(f"{where}.section must be a string")
            ok = False
        if not is_number(w):
            problems.append(f"{where}.weight must be a number")
            ok = False
        if isinstance(k_t, bool) or not (isinstance(k_t, int) or (is_number(k_t) and float(k_t).is_integer())):
            problems.append(f"{where}.evidence_threshold must be an integer")
            ok = False
        if not is_number(lam):
            problems.append(f"{where}.retention_rate_per_day must be a number")
            ok = False
        if ok:
            topics.append(Topic(tid, sec, float(w), int(k_t), float(lam)))

    if problems:
        raise ValidationError(problems)
    try:
        return Blueprint(version, tuple(topics), tuple(sections), float(duration), obj.get("marking_rules"))
    except ValidationError as exc:
        raise ValidationError(problems + exc.problems) from None


def serialize_blueprint(bp: Blueprint) -> str:
    return json.dumps(bp.to_dict(), indent=2) + "\n"


def _weight_map(x: Blueprint | Mapping[str, float]) -> Mapping[str, float]:
    return x.weights if isinstance(x, Blueprint) else x


def tv_distance(a: Blueprint | Mapping[str, float], b: Blueprint | Mapping[str, float]) -> float:
    """Total-variation distance between two topic weight maps.

    Topics present on one side only count with weight 0 on the other.
    """
    wa, wb = _weight_map(a), _weight_map(b)
    keys = sorted(set(wa) | set(wb))
    return 0.5 * math.fsum(abs(wa.get(k, 0.0) - wb.get(k, 0.0)) for k in keys)


def _alpha_triplet(alpha) -> tuple[float, float, float]:
    vals = alpha.as_tuple() if hasattr(alpha, "as_tuple") else tuple(alpha)
    if len(vals) != 6:
        raise DomainError("alpha must have six entries")
    return float(vals[0]), float(vals[1]), float(vals[2])


def drift_bound(delta: float, alpha) -> float:
    """Upper bound on |R(D; w) - R(D; w')| for a re-weighting at TV distance ``delta``.

    Only the M, C and R terms depend on topic weights, so the 3*delta ceiling
    is scaled by their combined composite weight and clipped to [0, 1].
    """
    if not (0.0 <= delta <= 1.0):
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    a_m, a_c, a_r = _alpha_triplet(alpha)
    return min(1.0, (a_m + a_c + a_r) * 3.0 * delta)


def drift_ceiling(delta: float) -> float:
    """The unscaled 3*delta ceiling for the topic-aggregated terms."""
    if not (0.0 <= delta <= 1.0):
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    return 3.0 * delta
