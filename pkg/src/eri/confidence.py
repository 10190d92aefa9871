"""Hoeffding tails, blueprint-weighted concentration, and the union-bound ERI band."""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Mapping

from ._io import DomainError
from .blueprint import Blueprint

BANDED = ("M", "C", "R")
UNBANDED = ("P", "V", "E")


@dataclass(frozen=True)
class SampleProfile:
    weights: Mapping[str, float]
    counts: Mapping[str, int]

    def __post_init__(self):
        if any(n < 0 for n in self.counts.values()):
            raise DomainError("sample counts must be >= 0")
        if any(w < 0 for w in self.weights.values()):
            raise DomainError("weights must be >= 0")

    def uncovered(self) -> list[str]:
        """Topics with positive weight and no observations."""
        return sorted(t for t, w in self.weights.items() if w > 0 and self.counts.get(t, 0) == 0)

    def variance_proxy(self) -> float:
        """sum_t w_t^2 / n_t over weighted topics; inf if any is uncovered."""
        if self.uncovered():
            return math.inf
        return math.fsum(w * w / self.counts[t] for t, w in self.weights.items() if w > 0)


def profiles_from_breakdown(bp: Blueprint, breakdown) -> dict[str, SampleProfile]:
    """M, C and R profiles share the per-topic attempt counts."""
    prof = SampleProfile(bp.weights, {t: s.n for t, s in breakdown.items()})
    return {c: prof for c in BANDED}


def hoeffding_topic(n_t: int, eps: float) -> float:
    """Two-sided Hoeffding tail for a mean of n_t outcomes in [0, 1].

    n_t = 0 gives the vacuous bound 1.
    """
    if n_t < 0:
        raise DomainError("n_t must be >= 0")
    if eps < 0:
        raise DomainError("eps must be >= 0")
    if n_t == 0:
        return 1.0
    return min(1.0, 2.0 * math.exp(-2.0 * n_t * eps * eps))


def component_tail(profile: SampleProfile, eps: float) -> float:
    """P(|estimate - truth| >= eps) bound for a blueprint-weighted aggregate."""
    if eps < 0:
        raise DomainError("eps must be >= 0")
    v = profile.variance_proxy()
    if math.isinf(v):
        return 1.0
    if v == 0.0:
        return 0.0 if eps > 0 else 1.0
    return min(1.0, 2.0 * math.exp(-2.0 * eps * eps / v))


def invert_band(profile: SampleProfile, delta: float) -> float:
    """Smallest eps with component_tail(profile, eps) <= delta."""
    if not (0.0 < delta < 1.0):
        raise DomainError(f"failure probability must lie in (0, 1), got {delta}")
    v = profile.variance_proxy()
    if math.isinf(v):
        return math.inf
    return math.sqrt(v * math.log(2.0 / delta) / 2.0)


def effective_sample_size(profile: SampleProfile) -> float:
    v = profile.variance_proxy()
    if math.isinf(v):
        return 0.0
    if v == 0.0:
        return math.inf
    return 1.0 / v


@dataclass(frozen=True)
class ConfidenceBand:
    confidence_level: float
    per_component_halfwidth: dict[str, float]
    eri_halfwidth: float
    effective_sample_size: float
    unbanded: tuple[str, ...] = UNBANDED
    uncovered: dict[str, list[str]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return OrderedDict(
            confidence=self.confidence_level,
            per_component=OrderedDict((c, self.per_component_halfwidth.get(c)) for c in BANDED),
            eri_halfwidth=self.eri_halfwidth,
            effective_sample_size=self.effective_sample_size,
        )


def eri_band(alpha, profiles: Mapping[str, SampleProfile], confidence: float = 0.95) -> ConfidenceBand:
    """Union-bound band: the failure probability is split evenly over banded components."""
    if not (0.0 < confidence < 1.0):
        raise DomainError(f"confidence must lie in (0, 1), got {confidence}")
    extra = set(profiles) - set(BANDED)
    if extra:
        raise DomainError(f"only {', '.join(BANDED)} carry bands, got {', '.join(sorted(extra))}")
    if not profiles:
        raise DomainError("need at least one banded component")
    a = dict(zip(("M", "C", "R", "P", "V", "E"), alpha.as_tuple() if hasattr(alpha, "as_tuple") else alpha))
    delta = (1.0 - confidence) / len(profiles)
    halfwidths, uncovered, terms = {}, {}, []
    for c in BANDED:
        if c not in profiles:
            continue
        eps = invert_band(profiles[c], delta)
        halfwidths[c] = eps
        if profiles[c].uncovered():
            uncovered[c] = profiles[c].uncovered()
        if a[c] > 0:
            terms.append(a[c] * eps)
    first = profiles[next(c for c in BANDED if c in profiles)]
    return ConfidenceBand(
        confidence_level=confidence,
        per_component_halfwidth=halfwidths,
        eri_halfwidth=math.fsum(terms),
        effective_sample_size=effective_sample_size(first),
        uncovered=uncovered,
    )
