"""The six normalized readiness components and their blueprint aggregation."""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._io import DomainError
from .blueprint import Blueprint
from .events import DAY, AttemptEvent, EventLog, MockResult, partition

COMPONENTS = ("M", "C", "R", "P", "V", "E")


@dataclass(frozen=True)
class ComponentConfig:
    """Tunables for the component maps. Defaults make every map's full range reachable."""

    volatility_window: int = 10
    volatility_normalizer: float = 0.5
    endurance_min_session: int = 10
    endurance_normalizer: float = 0.5
    pace_slope: float = 1.0

    def __post_init__(self):
        problems = []
        if self.volatility_window < 2:
            problems.append("volatility_window must be >= 2")
        if self.endurance_min_session < 2:
            problems.append("endurance_min_session must be >= 2")
        for name in ("volatility_normalizer", "endurance_normalizer", "pace_slope"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0")
        if problems:
            raise DomainError("; ".join(problems))


@dataclass(frozen=True)
class ComponentVector:
    M: float
    C: float
    R: float
    P: float
    V: float
    E: float
    as_of: int | None = None

    def __post_init__(self):
        bad = [n for n in COMPONENTS if not (0.0 <= getattr(self, n) <= 1.0)]
        if bad:
            raise DomainError(f"components outside [0,1]: {', '.join(bad)}")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, n) for n in COMPONENTS)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)

    def as_dict(self) -> dict[str, float]:
        return OrderedDict((n, getattr(self, n)) for n in COMPONENTS)

    @classmethod
    def from_sequence(cls, values: Sequence[float], as_of: int | None = None) -> "ComponentVector":
        if len(values) != 6:
            raise DomainError("a component vector has six entries")
        return cls(*(float(v) for v in values), as_of=as_of)


@dataclass(frozen=True)
class TopicStats:
    m: float
    c: float
    r: float
    n: int
    days_since_success: float | None

    def to_dict(self, topic_id: str) -> dict:
        return {
            "topic": topic_id,
            "m": self.m,
            "c": self.c,
            "r": self.r,
            "n": self.n,
            "days_since_success": self.days_since_success,
        }


TopicBreakdown = dict  # topic_id -> TopicStats, in blueprint order


def mastery_topic(stream: Sequence[AttemptEvent]) -> float:
    """Difficulty-weighted success rate with one pseudo-success and one pseudo-failure."""
    hit = math.fsum(e.difficulty for e in stream if e.correct)
    total = math.fsum(e.difficulty for e in stream)
    return (1.0 + hit) / (2.0 + total)


def coverage_topic(stream: Sequence[AttemptEvent], k_t: int) -> float:
    if k_t < 1:
        raise DomainError("evidence threshold must be >= 1")
    return min(1.0, len(stream) / k_t)


def days_since_success(stream: Sequence[AttemptEvent], as_of: int) -> float | None:
    last = None
    for e in stream:
        if e.timestamp > as_of:
            raise DomainError(f"as_of {as_of} precedes event at {e.timestamp}")
        if e.correct and (last is None or e.timestamp > last):
            last = e.timestamp
    return None if last is None else (as_of - last) / DAY


def retention_topic(stream: Sequence[AttemptEvent], lambda_t: float, as_of: int) -> float:
    """exp(-lambda * days since the last correct attempt); 0 if there was none."""
    if lambda_t < 0:
        raise DomainError("retention rate must be >= 0")
    gap = days_since_success(stream, as_of)
    if gap is None:
        return 0.0
    return math.exp(-lambda_t * gap)


def pace_section(stream: Sequence[AttemptEvent], tau_s: float, slope: float = 1.0) -> float:
    """Clipped linear penalty on mean time per item above the target. Faster is not rewarded."""
    if not tau_s > 0:
        raise DomainError("pace target must be > 0")
    if not stream:
        return 1.0
    ratio = math.fsum(e.response_time for e in stream) / len(stream) / tau_s
    return min(1.0, max(0.0, 1.0 - slope * max(0.0, ratio - 1.0)))


def volatility(mocks: Sequence[MockResult], window: int = 10, normalizer: float = 0.5) -> float:
    recent = [m.score for m in mocks[-window:]]
    if len(recent) < 2:
        return 1.0
    sigma = float(np.std(recent))  # population std
    return min(1.0, max(0.0, 1.0 - sigma / normalizer))


def session_drops(attempts: Sequence[AttemptEvent], min_session: int = 10) -> dict[str, float]:
    """First-half minus second-half accuracy for every session with enough attempts.

    Attempts keep log order within a session; the first half is the first
    floor(n/2) attempts.
    """
    by_session: dict[str, list[bool]] = OrderedDict()
    for e in attempts:
        by_session.setdefault(e.session, []).append(e.correct)
    drops = {}
    for sid, outcomes in by_session.items():
        n = len(outcomes)
        if n < min_session:
            continue
        h = n // 2
        first = sum(outcomes[:h]) / h
        second = sum(outcomes[h:]) / (n - h)
        drops[sid] = first - second
    return drops


def endurance(log: EventLog | Sequence[AttemptEvent], min_session: int = 10, normalizer: float = 0.5) -> float:
    attempts = log.attempts if isinstance(log, EventLog) else log
    drops = session_drops(attempts, min_session)
    if not drops:
        return 1.0
    mean_drop = math.fsum(drops.values()) / len(drops)
    return min(1.0, max(0.0, 1.0 - max(0.0, mean_drop) / normalizer))


def aggregate(
    log: EventLog,
    bp: Blueprint,
    as_of: int | None = None,
    config: ComponentConfig = ComponentConfig(),
) -> tuple[ComponentVector, TopicBreakdown]:
    """Blueprint-weighted M, C, R; section-mean P; global V and E.

    ``as_of`` defaults to the last event timestamp (0 for an empty log).
    """
    if as_of is None:
        as_of = log.last_timestamp or 0
    last = log.last_timestamp
    if last is not None and as_of < last:
        raise DomainError(f"as_of {as_of} precedes the last event at {last}")
    parts = partition(log, bp)

    breakdown: TopicBreakdown = OrderedDict()
    terms_m, terms_c, terms_r = [], [], []
    for t in bp.topics:
        stream = parts.topics[t.id]
        gap = days_since_success(stream, as_of)
        stats = TopicStats(
            m=mastery_topic(stream),
            c=coverage_topic(stream, t.evidence_threshold),
            r=0.0 if gap is None else math.exp(-t.retention_rate * gap),
            n=len(stream),
            days_since_success=gap,
        )
        breakdown[t.id] = stats
        terms_m.append(t.weight * stats.m)
        terms_c.append(t.weight * stats.c)
        terms_r.append(t.weight * stats.r)
    M, C, R = (min(1.0, math.fsum(x)) for x in (terms_m, terms_c, terms_r))

    paces = [pace_section(parts.sections[s.id], s.pace_target, config.pace_slope) for s in bp.sections]
    P = math.fsum(paces) / len(paces) if paces else 1.0
    V = volatility(log.mocks, config.volatility_window, config.volatility_normalizer)
    E = endurance(log.attempts, config.endurance_min_session, config.endurance_normalizer)
    return ComponentVector(M, C, R, P, V, E, as_of=as_of), breakdown
