"""The linear readiness composite, its Lipschitz constant, and validity diagnostics."""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._io import DomainError
from .blueprint import Blueprint, drift_bound, drift_ceiling, tv_distance
from .components import (
    COMPONENTS,
    ComponentConfig,
    ComponentVector,
    TopicBreakdown,
    aggregate,
    days_since_success,
    session_drops,
)
from .events import EventLog, partition, stream_distance

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class WeightVector:
    alpha_M: float
    alpha_C: float
    alpha_R: float
    alpha_P: float
    alpha_V: float
    alpha_E: float

    def __post_init__(self):
        vals = self.as_tuple()
        if any(not (v >= 0) for v in vals):
            raise DomainError(f"weights must be >= 0, got {vals}")
        if abs(math.fsum(vals) - 1.0) > SIMPLEX_TOL:
            raise DomainError(f"weights must sum to 1, got {math.fsum(vals):.12g}")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.alpha_M, self.alpha_C, self.alpha_R, self.alpha_P, self.alpha_V, self.alpha_E)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)

    def as_dict(self) -> dict[str, float]:
        return OrderedDict(zip(COMPONENTS, self.as_tuple()))

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "WeightVector":
        if len(values) != 6:
            raise DomainError("a weight vector has six entries")
        return cls(*(float(v) for v in values))

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "WeightVector":
        missing = [k for k in COMPONENTS if k not in values]
        if missing or set(values) - set(COMPONENTS):
            raise DomainError(f"weight keys must be exactly {', '.join(COMPONENTS)}")
        return cls.from_sequence([values[k] for k in COMPONENTS])

    @classmethod
    def uniform(cls) -> "WeightVector":
        return cls(*([1.0 / 6.0] * 6))


def eri(x: ComponentVector, alpha: WeightVector) -> float:
    """Convex combination of the six components, in [0, 1]."""
    if not isinstance(x, ComponentVector):
        x = ComponentVector.from_sequence(x)
    if not isinstance(alpha, WeightVector):
        alpha = WeightVector.from_sequence(alpha)
    r = math.fsum(a * v for a, v in zip(alpha.as_tuple(), x.as_tuple()))
    return min(1.0, max(0.0, r))


def display_score(r: float) -> float:
    return 100.0 * r


# -- Lipschitz constants ---------------------------------------------------


@dataclass(frozen=True)
class RegularityEnvelope:
    """Data range under which the per-component Lipschitz constants hold.

    Mastery moves by at most 1/min_difficulty per unit of stream distance;
    pace by at most max(1, max_pace_ratio) times its slope, where
    max_pace_ratio bounds response_time / pace_target.
    """

    min_difficulty: float = 0.5
    max_pace_ratio: float = 3.0

    def violations(self, log: EventLog, bp: Blueprint) -> list[str]:
        out = []
        section_of = {t.id: t.section for t in bp.topics}
        for i, e in enumerate(log.attempts):
            if e.difficulty < self.min_difficulty:
                out.append(f"attempt {i}: difficulty {e.difficulty} < {self.min_difficulty}")
            sec = section_of.get(e.topic)
            if sec is not None and e.response_time > self.max_pace_ratio * bp.pace_target(sec):
                out.append(f"attempt {i}: response time above {self.max_pace_ratio} x pace target")
        return out


@dataclass(frozen=True)
class LipschitzConstants:
    M: float
    C: float
    R: float
    P: float
    V: float
    E: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.M, self.C, self.R, self.P, self.V, self.E)


def endurance_lipschitz(min_session: int, normalizer: float) -> float:
    # per-session drop moves by <= 1/floor(n/2) + 1/ceil(n/2) per unit edit at
    # length n; n * (that) is 4 for even n and 4 + 1/(k(k+1)) for n = 2k + 1
    n = min_session if min_session % 2 else min_session + 1
    k = (n - 1) // 2
    return (4.0 + 1.0 / (k * (k + 1))) / normalizer


def component_lipschitz(
    bp: Blueprint,
    config: ComponentConfig = ComponentConfig(),
    envelope: RegularityEnvelope = RegularityEnvelope(),
) -> LipschitzConstants:
    """Per-component constants against the matching terms of :func:`log_distance`."""
    return LipschitzConstants(
        M=1.0 / envelope.min_difficulty,
        C=1.0,
        R=max(t.retention_rate for t in bp.topics),
        P=config.pace_slope * max(1.0, envelope.max_pace_ratio),
        V=1.0 / config.volatility_normalizer,
        E=endurance_lipschitz(config.endurance_min_session, config.endurance_normalizer),
    )


def lipschitz_constant(alpha: WeightVector, L) -> float:
    """alpha-weighted sum of per-component Lipschitz constants."""
    if isinstance(L, Mapping):
        L = [L[k] for k in COMPONENTS]
    elif hasattr(L, "as_tuple"):
        L = L.as_tuple()
    L = [float(v) for v in L]
    if len(L) != 6 or any(v < 0 for v in L):
        raise DomainError("need six nonnegative Lipschitz constants")
    a = alpha.as_tuple() if hasattr(alpha, "as_tuple") else tuple(alpha)
    return math.fsum(ai * li for ai, li in zip(a, L))


@dataclass(frozen=True)
class LogDistance:
    """Terms of the dominating log metric, one per stream family."""

    topic: float  # sum_t w_t d_t
    section: float  # mean_s d_s
    recency: float  # sum_t w_t min(1/lambda_t, |shift of last success| in days)
    mock: float  # max-norm over the volatility window, 1 if window sizes differ
    session: float  # max over qualifying sessions of d, +1 if qualifying set differs

    @property
    def total(self) -> float:
        return self.topic + self.section + self.recency + self.mock + self.session

    def per_component(self) -> tuple[float, ...]:
        return (self.topic, self.topic, self.recency, self.section, self.mock, self.session)


def _sessions(attempts) -> dict[str, tuple]:
    out: dict[str, list] = {}
    for e in attempts:
        out.setdefault(e.session, []).append(e)
    return {k: tuple(v) for k, v in out.items()}


def log_distance(
    a: EventLog,
    b: EventLog,
    bp: Blueprint,
    as_of: int | None = None,
    config: ComponentConfig = ComponentConfig(),
) -> LogDistance:
    """Dominating metric between two logs under one blueprint."""
    if as_of is None:
        as_of = max(a.last_timestamp or 0, b.last_timestamp or 0)
    pa, pb = partition(a, bp), partition(b, bp)

    topic_terms, recency_terms = [], []
    for t in bp.topics:
        sa, sb = pa.topics[t.id], pb.topics[t.id]
        if t.weight == 0:
            continue
        topic_terms.append(t.weight * stream_distance(sa, sb, bp.pace_target(t.section)))
        ga, gb = days_since_success(sa, as_of), days_since_success(sb, as_of)
        cap = 1.0 / t.retention_rate if t.retention_rate > 0 else math.inf
        if ga is None and gb is None:
            rho = 0.0
        elif ga is None or gb is None:
            rho = cap
        else:
            rho = min(cap, abs(ga - gb)) if ga != gb else 0.0
        recency_terms.append(t.weight * rho)

    section_terms = [stream_distance(pa.sections[s.id], pb.sections[s.id], s.pace_target) for s in bp.sections]
    section = math.fsum(section_terms) / len(section_terms) if section_terms else 0.0

    wa = [m.score for m in a.mocks[-config.volatility_window:]]
    wb = [m.score for m in b.mocks[-config.volatility_window:]]
    if len(wa) != len(wb):
        mock = 1.0
    else:
        mock = max((abs(x - y) for x, y in zip(wa, wb)), default=0.0)

    qa = set(session_drops(a.attempts, config.endurance_min_session))
    qb = set(session_drops(b.attempts, config.endurance_min_session))
    sess_a, sess_b = _sessions(a.attempts), _sessions(b.attempts)
    session = 0.0 if qa == qb else 1.0
    # response-time changes cannot move endurance, so they are free here
    session += max(
        (stream_distance(sess_a.get(s, ()), sess_b.get(s, ()), math.inf) for s in sorted(qa | qb)),
        default=0.0,
    )
    return LogDistance(math.fsum(topic_terms), section, math.fsum(recency_terms), mock, session)


def lipschitz_bound(alpha: WeightVector, L: LipschitzConstants, d: LogDistance) -> float:
    """(sum_i alpha_i L_i) * d, with d the total dominating distance."""
    k = lipschitz_constant(alpha, L)
    total = d.total
    if k == 0.0:
        return 0.0 if math.isfinite(total) else math.inf
    return k * total


# -- validity diagnostics --------------------------------------------------


@dataclass
class ValidityReport:
    violations: list[str] = field(default_factory=list)
    rejected_probes: list[tuple[int, str]] = field(default_factory=list)
    deltas: list[float] = field(default_factory=list)
    coherence: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_validity(
    x: ComponentVector,
    alpha: WeightVector,
    probes: Sequence[Sequence[float]],
    breakdown: TopicBreakdown | None = None,
    topic_weights: Mapping[str, float] | None = None,
) -> ValidityReport:
    """Numerically check boundedness, monotonicity and blueprint coherence.

    Each probe is six nonnegative increments; increments are clipped so the
    perturbed components stay in [0, 1]. Probes with a negative entry break
    the precondition and are rejected without evaluation.

    Coherence is checked per topic on the raw weight partial
    alpha_M m_t + alpha_C c_t + alpha_R r_t, which must be nonnegative and
    must not shrink when (m_t, c_t, r_t) weakly increase. The slope along
    proportional renormalization of the other weights is reported alongside
    as ``renormalized_slope``; its sign depends on where the topic sits
    relative to the weighted mean, so it is informational only.
    """
    report = ValidityReport()
    base = math.fsum(ai * xi for ai, xi in zip(alpha.as_tuple(), x.as_tuple()))
    if not (0.0 <= base <= 1.0 + 1e-12):
        report.violations.append(f"R = {base} outside [0,1] at the base point")
    xs = x.as_array()
    a = alpha.as_array()
    for i, probe in enumerate(probes):
        p = np.asarray(probe, dtype=float)
        if p.shape != (6,):
            report.rejected_probes.append((i, "probe must have six entries"))
            continue
        if np.any(p < 0):
            report.rejected_probes.append((i, "non-monotone probe: negative increment"))
            continue
        moved = np.minimum(1.0, xs + p)
        r = math.fsum(float(ai * mi) for ai, mi in zip(a, moved))
        report.deltas.append(r - base)
        if not (0.0 <= r <= 1.0 + 1e-12):
            report.violations.append(f"probe {i}: R = {r} outside [0,1]")
        if r < base - 1e-12:
            report.violations.append(f"probe {i}: R decreased from {base} to {r}")

    if breakdown:
        a_m, a_c, a_r = a[:3]
        weights = topic_weights or {}
        gs = {t: a_m * s.m + a_c * s.c + a_r * s.r for t, s in breakdown.items()}
        mean_g = math.fsum(weights.get(t, 0.0) * g for t, g in gs.items())
        for t, s in breakdown.items():
            partial = gs[t]
            entry = {"partial": partial, "renormalized_slope": partial - mean_g}
            report.coherence[t] = entry
            if partial < 0:
                report.violations.append(f"topic {t}: dR/dw_t = {partial} < 0")
            for j, probe in enumerate(probes):
                p = np.asarray(probe, dtype=float)
                if p.shape != (6,) or np.any(p < 0):
                    continue
                bumped = (a_m * min(1.0, s.m + p[0]) + a_c * min(1.0, s.c + p[1])
                          + a_r * min(1.0, s.r + p[2]))
                if bumped < partial - 1e-12:
                    report.violations.append(f"topic {t}, probe {j}: dR/dw_t decreased")
    return report


# -- report ----------------------------------------------------------------

APPROXIMATION_NOTE = (
    "band treats each topic estimate as a mean of independent [0,1] outcomes; "
    "the mastery estimator's prior and difficulty weights make it approximate"
)


@dataclass(frozen=True)
class ReadinessReport:
    R: float
    display_score: float
    components: ComponentVector
    band_halfwidth: float
    breakdown: TopicBreakdown
    lipschitz_constant: float
    blueprint_version: str
    as_of: int
    band: object = None  # confidence.ConfidenceBand
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = OrderedDict()
        d["R"] = self.R
        d["display_score"] = self.display_score
        d["band_halfwidth"] = self.band_halfwidth
        d["components"] = self.components.as_dict()
        d["topics"] = [s.to_dict(t) for t, s in self.breakdown.items()]
        d["blueprint_version"] = self.blueprint_version
        d["as_of"] = self.as_of
        d["lipschitz_constant"] = self.lipschitz_constant
        if self.band is not None:
            d["band"] = self.band.to_dict()
        d["notes"] = [APPROXIMATION_NOTE, *self.warnings]
        return d


def score(
    log: EventLog,
    bp: Blueprint,
    alpha: WeightVector,
    as_of: int | None = None,
    config: ComponentConfig = ComponentConfig(),
    envelope: RegularityEnvelope = RegularityEnvelope(),
    confidence: float = 0.95,
) -> ReadinessReport:
    """End-to-end readiness report for one log under one blueprint."""
    from .confidence import eri_band, profiles_from_breakdown

    x, breakdown = aggregate(log, bp, as_of, config)
    r = eri(x, alpha)
    band = eri_band(alpha, profiles_from_breakdown(bp, breakdown), confidence)
    warnings = list(partition(log, bp).warnings)
    warnings += [f"vacuous band for {c}: no attempts on {', '.join(ts)}" for c, ts in band.uncovered.items()]
    return ReadinessReport(
        R=r,
        display_score=display_score(r),
        components=x,
        band_halfwidth=band.eri_halfwidth,
        breakdown=breakdown,
        lipschitz_constant=lipschitz_constant(alpha, component_lipschitz(bp, config, envelope)),
        blueprint_version=bp.version,
        as_of=x.as_of,
        band=band,
        warnings=tuple(warnings),
    )


# -- blueprint drift -------------------------------------------------------


@dataclass(frozen=True)
class DriftReport:
    delta: float
    bound_tight: float
    bound_paper_3delta: float
    observed: float
    R_old: float
    R_new: float

    def to_dict(self) -> dict:
        return OrderedDict(
            delta=self.delta,
            bound_tight=self.bound_tight,
            bound_paper_3delta=self.bound_paper_3delta,
            observed=self.observed,
        )


def reweighted(x: ComponentVector, stats: Mapping, weights: Mapping[str, float]) -> ComponentVector:
    """Replace M, C, R by their aggregates under ``weights``; P, V, E stay."""
    terms = {k: math.fsum(w * getattr(stats[t], k) for t, w in weights.items() if w > 0) for k in "mcr"}
    return ComponentVector(min(1.0, terms["m"]), min(1.0, terms["c"]), min(1.0, terms["r"]),
                           x.P, x.V, x.E, as_of=x.as_of)


def drift_report(
    log: EventLog,
    old: Blueprint,
    new: Blueprint,
    alpha: WeightVector,
    as_of: int | None = None,
    config: ComponentConfig = ComponentConfig(),
) -> DriftReport:
    """ERI change from re-weighting topics with per-topic statistics held fixed.

    Per-topic stats come from the old blueprint where it defines the topic
    and from the new one otherwise.
    """
    x_old, b_old = aggregate(log, old, as_of, config)
    _, b_new = aggregate(log, new, x_old.as_of, config)
    stats = {**b_new, **b_old}
    r_old = eri(reweighted(x_old, stats, old.weights), alpha)
    r_new = eri(reweighted(x_old, stats, new.weights), alpha)
    delta = min(1.0, tv_distance(old, new))
    return DriftReport(delta, drift_bound(delta, alpha), drift_ceiling(delta), abs(r_new - r_old), r_old, r_new)
