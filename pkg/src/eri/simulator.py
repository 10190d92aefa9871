"""Seeded synthetic learner logs and single-edit perturbations with known cost."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping

import numpy as np

from ._io import DomainError, ParseError, ValidationError, is_number, load_json_object
from .blueprint import Blueprint
from .events import DAY, AttemptEvent, EventLog, MockResult

PERTURB_KINDS = ("flip-outcome", "shift-time", "insert", "delete")
DEFAULT_START_TS = 1_704_067_200  # 2024-01-01T00:00:00Z


@dataclass(frozen=True)
class TopicSim:
    p_correct: float = 0.7
    rate_per_day: float = 2.0


@dataclass(frozen=True)
class SimConfig:
    """Ground-truth parameters for one synthetic learner.

    Response times default to the section pace target and are clamped to
    ``max_pace_ratio`` times it, so generated logs stay in the range where
    the component Lipschitz constants hold.
    """

    seed: int = 0
    horizon_days: int = 30
    start_ts: int = DEFAULT_START_TS
    topics: Mapping[str, TopicSim] = field(default_factory=dict)
    default_topic: TopicSim = TopicSim()
    response_mean_s: float | None = None
    response_jitter: float = 0.2
    max_pace_ratio: float = 3.0
    mock_every_days: int = 7
    mock_noise: float = 0.05
    session_length: tuple[int, int] = (5, 20)
    fatigue_slope: float = 0.0
    difficulty_range: tuple[float, float] = (0.5, 1.0)

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValidationError(problems)

    def problems(self) -> list[str]:
        out = []
        if self.horizon_days < 1:
            out.append("horizon_days must be >= 1")
        if self.start_ts < 0:
            out.append("start_ts must be >= 0")
        for name, ts in [("default_topic", self.default_topic)] + [(f"topics.{k}", v) for k, v in self.topics.items()]:
            if not 0.0 <= ts.p_correct <= 1.0:
                out.append(f"{name}: p_correct must lie in [0,1]")
            if not ts.rate_per_day >= 0:
                out.append(f"{name}: rate_per_day must be >= 0")
        if self.response_mean_s is not None and not self.response_mean_s > 0:
            out.append("response_mean_s must be > 0")
        if not 0.0 <= self.response_jitter < 1.0:
            out.append("response_jitter must lie in [0,1)")
        if not self.max_pace_ratio >= 1.0:
            out.append("max_pace_ratio must be >= 1")
        if self.mock_every_days < 0:
            out.append("mock_every_days must be >= 0")
        if not self.mock_noise >= 0:
            out.append("mock_noise must be >= 0")
        lo, hi = self.session_length
        if not 1 <= lo <= hi:
            out.append("session_length must satisfy 1 <= lo <= hi")
        if not self.fatigue_slope >= 0:
            out.append("fatigue_slope must be >= 0")
        dlo, dhi = self.difficulty_range
        if not 0.0 < dlo <= dhi <= 1.0:
            out.append("difficulty_range must satisfy 0 < lo <= hi <= 1")
        return out

    def topic(self, topic_id: str) -> TopicSim:
        return self.topics.get(topic_id, self.default_topic)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["topics"] = {k: asdict(v) for k, v in self.topics.items()}
        d["session_length"] = list(self.session_length)
        d["difficulty_range"] = list(self.difficulty_range)
        return d


_CONFIG_KEYS = {f for f in SimConfig.__dataclass_fields__}


def _topic_sim(obj, where: str) -> TopicSim:
    if not isinstance(obj, dict):
        raise ParseError("must be an object", field=where)
    extra = sorted(set(obj) - {"p_correct", "rate_per_day"})
    if extra:
        raise ParseError(f"unknown key(s) {', '.join(extra)}", field=where)
    for k, v in obj.items():
        if not is_number(v):
            raise ParseError("must be a number", field=f"{where}.{k}")
    return TopicSim(**{k: float(v) for k, v in obj.items()})


def parse_sim_config(raw) -> SimConfig:
    obj = load_json_object(raw)
    extra = sorted(set(obj) - _CONFIG_KEYS)
    if extra:
        raise ParseError(f"unknown key(s) {', '.join(extra)}")
    kw = {}
    for k, v in obj.items():
        if k == "topics":
            if not isinstance(v, dict):
                raise ParseError("must be an object", field=k)
            kw[k] = {t: _topic_sim(s, f"topics.{t}") for t, s in v.items()}
        elif k == "default_topic":
            kw[k] = _topic_sim(v, k)
        elif k in ("session_length", "difficulty_range"):
            if not (isinstance(v, list) and len(v) == 2 and all(is_number(x) for x in v)):
                raise ParseError("must be a pair of numbers", field=k)
            kw[k] = (int(v[0]), int(v[1])) if k == "session_length" else (float(v[0]), float(v[1]))
        elif k == "response_mean_s" and v is None:
            kw[k] = None
        else:
            if not is_number(v):
                raise ParseError("must be a number", field=k)
            kw[k] = int(v) if k in ("seed", "horizon_days", "start_ts", "mock_every_days") else float(v)
    return SimConfig(**kw)


def simulate(config: SimConfig, bp: Blueprint) -> EventLog:
    """Deterministic synthetic log for ``bp`` under ``config``.

    The seed is split into one stream per blueprint topic (attempt counts,
    outcomes, difficulties, response times), one for session scheduling and
    one for mock scores, so changing one topic's parameters leaves the other
    topics' draws untouched. Outcomes are independent given the schedule:
    attempt j of a session succeeds with probability
    max(0, p_correct - fatigue_slope * j).
    """
    root = np.random.SeedSequence(config.seed)
    topic_seeds = root.spawn(len(bp.topics) + 2)
    topic_rngs = [np.random.default_rng(s) for s in topic_seeds[: len(bp.topics)]]
    sched = np.random.default_rng(topic_seeds[-2])
    mock_rng = np.random.default_rng(topic_seeds[-1])
    dlo, dhi = config.difficulty_range

    attempts: list[AttemptEvent] = []
    for day in range(config.horizon_days):
        # per-topic draws for the day; outcome uniforms are compared after
        # the session position is known
        pool = []
        for ti, t in enumerate(bp.topics):
            rng = topic_rngs[ti]
            sim = config.topic(t.id)
            n = int(rng.poisson(sim.rate_per_day)) if sim.rate_per_day > 0 else 0
            if n == 0:
                continue
            u = rng.random(n)
            diff = rng.uniform(dlo, dhi, n)
            tau = bp.pace_target(t.section)
            mean = config.response_mean_s if config.response_mean_s is not None else tau
            rt = mean * (1.0 + config.response_jitter * rng.uniform(-1.0, 1.0, n))
            rt = np.clip(rt, 1e-3, config.max_pace_ratio * tau)
            for k in range(n):
                pool.append((t, sim.p_correct, float(u[k]), float(diff[k]), float(rt[k])))
        if not pool:
            continue
        order = sched.permutation(len(pool))
        lo, hi = config.session_length
        day_start = config.start_ts + day * int(DAY)
        clock = day_start + 8 * 3600
        pos, sess = 0, 0
        while pos < len(order):
            size = int(sched.integers(lo, hi + 1))
            chunk = order[pos:pos + size]
            sid = f"d{day:04d}s{sess:02d}"
            for j, idx in enumerate(chunk):
                t, p, u, diff, rt = pool[idx]
                p_eff = max(0.0, p - config.fatigue_slope * j)
                attempts.append(AttemptEvent(
                    timestamp=int(clock), topic=t.id, section=t.section, correct=bool(u < p_eff),
                    difficulty=round(diff, 6), response_time=round(rt, 3), session=sid,
                ))
                clock += math.ceil(rt)
            clock += 1800  # break between sessions
            pos += size
            sess += 1

    mocks: list[MockResult] = []
    if config.mock_every_days > 0:
        truth = math.fsum(t.weight * config.topic(t.id).p_correct for t in bp.topics)
        for k, day in enumerate(range(config.mock_every_days - 1, config.horizon_days, config.mock_every_days)):
            score = min(1.0, max(0.0, truth + config.mock_noise * float(mock_rng.standard_normal())))
            ts = config.start_ts + day * int(DAY) + 20 * 3600
            mocks.append(MockResult(ts, f"mock{k:03d}", round(score, 6)))
    return EventLog.build(attempts, mocks)


def _topic_positions(log: EventLog, topic: str) -> list[int]:
    return [i for i, e in enumerate(log.attempts) if e.topic == topic]


def perturb(log: EventLog, kind: str, magnitude: float = 0.0, seed: int = 0,
            bp: Blueprint | None = None) -> tuple[EventLog, float]:
    """Apply one edit to a random attempt and return its topic-stream cost.

    * ``flip-outcome``: toggle ``correct``; cost 1/n.
    * ``shift-time``: move the timestamp by ``magnitude`` seconds, clamped so
      the event keeps its place among same-topic attempts and stays >= 0;
      cost min(1, |shift| / 86400) / n.
    * ``insert``: add a copy of a random attempt (or, for an empty log, a
      fresh attempt on a random ``bp`` topic) with a random outcome right
      after it; cost 1/n.
    * ``delete``: remove a random attempt; cost 1/(n - 1).

    n is the length of the edited topic stream before the edit, and every
    cost is floored at one attempt as in the stream metric.
    """
    if kind not in PERTURB_KINDS:
        raise DomainError(f"unknown perturbation {kind!r}; expected one of {', '.join(PERTURB_KINDS)}")
    rng = np.random.default_rng(seed)
    attempts = list(log.attempts)

    if not attempts:
        if kind != "insert":
            raise DomainError(f"{kind} needs a log with at least one attempt")
        if bp is None:
            raise DomainError("inserting into an empty log needs a blueprint")
        t = bp.topics[int(rng.integers(len(bp.topics)))]
        ts = log.last_timestamp or 0
        e = AttemptEvent(ts, t.id, t.section, bool(rng.integers(2)), 0.75, bp.pace_target(t.section), "s0")
        return EventLog(tuple([e]), log.mocks), 1.0

    i = int(rng.integers(len(attempts)))
    target = attempts[i]
    stream = _topic_positions(log, target.topic)
    n = len(stream)
    k = stream.index(i)

    if kind == "flip-outcome":
        attempts[i] = replace(target, correct=not target.correct)
        return EventLog(tuple(attempts), log.mocks), 1.0 / n

    if kind == "delete":
        del attempts[i]
        return EventLog(tuple(attempts), log.mocks), 1.0 / max(1, n - 1)

    if kind == "insert":
        new = replace(target, correct=bool(rng.integers(2)))
        attempts.insert(i + 1, new)
        return EventLog(tuple(attempts), log.mocks), 1.0 / n

    # shift-time
    lo = attempts[stream[k - 1]].timestamp if k > 0 else 0
    hi = attempts[stream[k + 1]].timestamp if k + 1 < n else None
    ts = int(round(target.timestamp + magnitude))
    ts = max(lo, ts)
    if hi is not None:
        ts = min(hi, ts)
    shift = abs(ts - target.timestamp)
    if shift == 0:
        return log, 0.0
    attempts[i] = replace(target, timestamp=ts)
    # re-sort globally; ties keep list order, so the topic stream order is preserved
    return EventLog.build(attempts, log.mocks), min(1.0, shift / DAY) / n
