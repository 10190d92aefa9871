"""Interaction logs: JSONL ingestion, per-topic/section partitioning, stream metric."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ._io import ParseError, ValidationError, is_number, read_bytes
from .blueprint import Blueprint

DAY = 86400.0

_ATTEMPT_KEYS = {"kind", "ts", "topic", "section", "correct", "difficulty", "response_time_s", "session"}
_MOCK_KEYS = {"kind", "ts", "mock_id", "score"}


@dataclass(frozen=True)
class AttemptEvent:
    timestamp: int
    topic: str
    section: str
    correct: bool
    difficulty: float
    response_time: float
    session: str

    def problems(self) -> list[str]:
        out = []
        if self.timestamp < 0:
            out.append("ts must be >= 0")
        if not (0.0 < self.difficulty <= 1.0):
            out.append("difficulty out of (0,1]")
        if not self.response_time > 0:
            out.append("response_time_s must be > 0")
        return out

    def to_dict(self) -> dict:
        return {
            "kind": "attempt",
            "ts": self.timestamp,
            "topic": self.topic,
            "section": self.section,
            "correct": self.correct,
            "difficulty": self.difficulty,
            "response_time_s": self.response_time,
            "session": self.session,
        }


@dataclass(frozen=True)
class MockResult:
    timestamp: int
    mock_id: str
    score: float

    def problems(self) -> list[str]:
        out = []
        if self.timestamp < 0:
            out.append("ts must be >= 0")
        if not (0.0 <= self.score <= 1.0):
            out.append("score out of [0,1]")
        return out

    def to_dict(self) -> dict:
        return {"kind": "mock", "ts": self.timestamp, "mock_id": self.mock_id, "score": self.score}


@dataclass(frozen=True)
class EventLog:
    attempts: tuple[AttemptEvent, ...] = ()
    mocks: tuple[MockResult, ...] = ()

    @classmethod
    def build(cls, attempts: Iterable[AttemptEvent] = (), mocks: Iterable[MockResult] = ()) -> "EventLog":
        """Stable-sort both streams by timestamp."""
        return cls(
            tuple(sorted(attempts, key=lambda e: e.timestamp)),
            tuple(sorted(mocks, key=lambda e: e.timestamp)),
        )

    def __len__(self) -> int:
        return len(self.attempts) + len(self.mocks)

    @property
    def last_timestamp(self) -> int | None:
        ts = [e.timestamp for e in self.attempts[-1:]] + [m.timestamp for m in self.mocks[-1:]]
        return max(ts) if ts else None


def _parse_line(obj: dict, lineno: int) -> AttemptEvent | MockResult:
    kind = obj.get("kind")
    if kind == "attempt":
        keys = _ATTEMPT_KEYS
    elif kind == "mock":
        keys = _MOCK_KEYS
    else:
        raise ParseError(f"unknown record kind {kind!r}", line=lineno, field="kind")
    extra = sorted(set(obj) - keys)
    if extra:
        raise ParseError(f"unknown key(s) {', '.join(extra)}", line=lineno)
    missing = sorted(keys - set(obj))
    if missing:
        raise ParseError(f"missing key(s) {', '.join(missing)}", line=lineno)

    def num(name):
        v = obj[name]
        if not is_number(v):
            raise ParseError("must be a number", line=lineno, field=name)
        return v

    def text(name):
        v = obj[name]
        if not isinstance(v, str):
            raise ParseError("must be a string", line=lineno, field=name)
        return v

    ts = int(num("ts"))  # sub-second precision truncated
    if kind == "mock":
        return MockResult(ts, text("mock_id"), float(num("score")))
    correct = obj["correct"]
    if not isinstance(correct, bool):
        raise ParseError("must be a boolean", line=lineno, field="correct")
    return AttemptEvent(
        ts, text("topic"), text("section"), correct,
        float(num("difficulty")), float(num("response_time_s")), text("session"),
    )


def parse_events(raw: bytes | str) -> EventLog:
    """Parse the events JSONL format into a timestamp-sorted :class:`EventLog`.

    Blank lines and lines starting with ``#`` are skipped. Range violations
    across all records are collected before raising.
    """
    attempts, mocks, problems = [], [], []
    for lineno, line in enumerate(read_bytes(raw).splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=lineno) from exc
        if not isinstance(obj, dict):
            raise ParseError("record must be an object", line=lineno)
        rec = _parse_line(obj, lineno)
        for p in rec.problems():
            problems.append(f"line {lineno} ({obj['kind']}): {p}")
        (attempts if isinstance(rec, AttemptEvent) else mocks).append(rec)
    if problems:
        raise ValidationError(problems)
    return EventLog.build(attempts, mocks)


def serialize_events(log: EventLog) -> str:
    """Events JSONL, records merged in timestamp order (attempts first on ties)."""
    recs = [(e.timestamp, 0, i, e.to_dict()) for i, e in enumerate(log.attempts)]
    recs += [(m.timestamp, 1, i, m.to_dict()) for i, m in enumerate(log.mocks)]
    recs.sort(key=lambda r: r[:3])
    return "".join(json.dumps(r[3], separators=(",", ":")) + "\n" for r in recs)


@dataclass(frozen=True)
class Partition:
    topics: dict[str, tuple[AttemptEvent, ...]]
    sections: dict[str, tuple[AttemptEvent, ...]]
    unmapped: tuple[AttemptEvent, ...] = field(default=())

    @property
    def warnings(self) -> list[str]:
        if not self.unmapped:
            return []
        names = sorted({e.topic for e in self.unmapped})
        return [f"{len(self.unmapped)} attempt(s) on topics absent from the blueprint: {', '.join(names)}"]


def partition(log: EventLog, bp: Blueprint) -> Partition:
    """Split attempts into per-topic and per-section streams.

    Section membership follows the blueprint's topic -> section map. Attempts
    on unknown topics land in ``unmapped``.
    """
    section_of = {t.id: t.section for t in bp.topics}
    topics: dict[str, list] = {t: [] for t in bp.topic_ids}
    sections: dict[str, list] = {s: [] for s in bp.section_ids}
    unmapped = []
    for e in log.attempts:
        sec = section_of.get(e.topic)
        if sec is None:
            unmapped.append(e)
            continue
        topics[e.topic].append(e)
        sections[sec].append(e)
    return Partition(
        {k: tuple(v) for k, v in topics.items()},
        {k: tuple(v) for k, v in sections.items()},
        tuple(unmapped),
    )


# -- stream metric ---------------------------------------------------------
#
# Single edits on a stream of length L cost (field change)/max(1, L) for
# substitutions and 1/max(1, min(L, L')) for an insertion or deletion.
# stream_distance is the cheapest path of such edits. An optimal path inserts
# first, substitutes at the peak length P, then deletes, so the distance is
#
#   min_P  H(|a|, P) + H(|b|, P) + S*(P) / P
#
# where H(x, P) = sum_{L=x}^{P-1} 1/max(1, L) and S*(P) is the cheapest
# order-preserving matching with at least |a| + |b| - P matched pairs.


def substitution_cost(x: AttemptEvent, y: AttemptEvent, pace_target: float) -> float:
    """Unnormalized cost of turning ``x`` into ``y`` in place (inf if not allowed)."""
    if (x.topic, x.section, x.difficulty, x.session) != (y.topic, y.section, y.difficulty, y.session):
        return math.inf
    cost = 0.0
    if x.correct != y.correct:
        cost += 1.0
    if x.timestamp != y.timestamp:
        cost += min(1.0, abs(x.timestamp - y.timestamp) / DAY)
    if x.response_time != y.response_time:
        cost += min(1.0, abs(x.response_time - y.response_time) / pace_target)
    return cost


def _matching_costs(a: Sequence[AttemptEvent], b: Sequence[AttemptEvent], pace_target: float) -> list[float]:
    """best[k] = cheapest order-preserving matching with exactly k pairs."""
    la, lb = len(a), len(b)
    kmax = min(la, lb)
    inf = math.inf
    prev = [[0.0] + [inf] * kmax for _ in range(lb + 1)]
    for i in range(1, la + 1):
        cur = [[0.0] + [inf] * kmax]
        ai = a[i - 1]
        for j in range(1, lb + 1):
            up, left, diag = prev[j], cur[j - 1], prev[j - 1]
            s = substitution_cost(ai, b[j - 1], pace_target)
            cell = [0.0] * (kmax + 1)
            for k in range(1, min(i, j, kmax) + 1):
                best = up[k] if up[k] < left[k] else left[k]
                via = diag[k - 1] + s
                cell[k] = via if via < best else best
            for k in range(min(i, j, kmax) + 1, kmax + 1):
                cell[k] = inf
            cur.append(cell)
        prev = cur
    return prev[lb]


def _harmonic_span(x: int, p: int) -> float:
    return math.fsum(1.0 / max(1, n) for n in range(x, p))


def stream_distance(a: Sequence[AttemptEvent], b: Sequence[AttemptEvent], pace_target: float) -> float:
    """Edit-path distance between two event streams.

    A flipped outcome costs 1/n, a timestamp shift of s seconds
    min(1, s/86400)/n, a response-time change of r seconds
    min(1, r/pace_target)/n and an insertion or deletion 1/n, with n the
    shorter stream length (at least 1). Multi-edit differences take the
    cheapest sequence of such edits, which makes this a true metric.
    """
    a, b = tuple(a), tuple(b)
    if a == b:
        return 0.0
    la, lb = len(a), len(b)
    pre = 0
    while pre < min(la, lb) and a[pre] == b[pre]:
        pre += 1
    suf = 0
    while suf < min(la, lb) - pre and a[la - 1 - suf] == b[lb - 1 - suf]:
        suf += 1
    core = _matching_costs(a[pre:la - suf], b[pre:lb - suf], pace_target)
    # suffix minimum: cheapest matching with at least k core pairs
    at_least = core[:]
    for k in range(len(at_least) - 2, -1, -1):
        at_least[k] = min(at_least[k], at_least[k + 1])

    best = math.inf
    for peak in range(max(la, lb), la + lb + 1):
        need = max(0, la + lb - peak - pre - suf)
        if need >= len(at_least) or at_least[need] == math.inf:
            continue
        cost = _harmonic_span(la, peak) + _harmonic_span(lb, peak)
        if at_least[need]:
            cost += at_least[need] / max(1, peak)
        best = min(best, cost)
        if need == 0:
            break
    return best
