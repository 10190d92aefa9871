"""Knowledge spaces over a small concept universe, outer fringes, gated recommendations.

States are bit patterns: bit i is set when concept ``universe[i]`` is mastered.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from ._io import DomainError, ParseError, ValidationError, load_json_object

MAX_CONCEPTS = 24
_CHUNK = 512


@dataclass(frozen=True)
class KnowledgeSpace:
    universe: tuple[str, ...]
    states: frozenset[int]

    def __post_init__(self):
        if len(self.universe) > MAX_CONCEPTS:
            raise DomainError(f"at most {MAX_CONCEPTS} concepts supported, got {len(self.universe)}")
        if len(set(self.universe)) != len(self.universe):
            raise DomainError("duplicate concept ids in universe")
        top = self.full
        if any(s < 0 or s & ~top for s in self.states):
            raise DomainError("state uses bits outside the universe")

    @property
    def full(self) -> int:
        return (1 << len(self.universe)) - 1

    def index(self, concept: str) -> int:
        try:
            return self.universe.index(concept)
        except ValueError:
            raise DomainError(f"unknown concept {concept!r}") from None

    def mask(self, state: int | Iterable[str]) -> int:
        if isinstance(state, (int, np.integer)):
            s = int(state)
            if s < 0 or s & ~self.full:
                raise DomainError("state uses bits outside the universe")
            return s
        out = 0
        for q in state:
            out |= 1 << self.index(q)
        return out

    def concepts(self, mask: int) -> tuple[str, ...]:
        return tuple(q for i, q in enumerate(self.universe) if mask >> i & 1)

    def __contains__(self, state) -> bool:
        return self.mask(state) in self.states

    def sorted_states(self) -> np.ndarray:
        return np.array(sorted(self.states), dtype=np.int64)

    def label(self, mask: int) -> str:
        return "{" + ",".join(self.concepts(mask)) + "}"

    def to_dict(self) -> dict:
        order = sorted(self.states, key=lambda s: (bin(s).count("1"), self.concepts(s)))
        return {"universe": list(self.universe), "states": [list(self.concepts(s)) for s in order]}


def parse_space(raw) -> KnowledgeSpace:
    """Knowledge-space JSON: ``{"universe": [...], "states": [[...], ...]}``."""
    obj = load_json_object(raw)
    extra = sorted(set(obj) - {"universe", "states"})
    if extra:
        raise ParseError(f"unknown key(s) {', '.join(extra)}")
    for key in ("universe", "states"):
        if key not in obj:
            raise ParseError("missing key", field=key)
        if not isinstance(obj[key], list):
            raise ParseError("must be an array", field=key)
    universe = obj["universe"]
    if not all(isinstance(q, str) for q in universe):
        raise ParseError("concept ids must be strings", field="universe")
    problems = []
    if len(set(universe)) != len(universe):
        problems.append("duplicate concept ids in universe")
    if len(universe) > MAX_CONCEPTS:
        problems.append(f"at most {MAX_CONCEPTS} concepts supported, got {len(universe)}")
    pos = {q: i for i, q in enumerate(universe)}
    states = set()
    for k, st in enumerate(obj["states"]):
        if not isinstance(st, list) or not all(isinstance(q, str) for q in st):
            raise ParseError("each state must be an array of concept ids", field=f"states[{k}]")
        unknown = sorted(set(st) - set(pos))
        if unknown:
            problems.append(f"states[{k}] uses unknown concept(s) {', '.join(unknown)}")
            continue
        states.add(sum(1 << pos[q] for q in set(st)))
    if problems:
        raise ValidationError(problems)
    return KnowledgeSpace(tuple(universe), frozenset(states))


@dataclass(frozen=True)
class Violation:
    kind: str  # "empty", "full", "union", "accessible", "graded"
    message: str
    fatal: bool = True


def _member_table(ks: KnowledgeSpace) -> np.ndarray:
    """Boolean lookup over all 2^|Q| bit patterns."""
    table = np.zeros(ks.full + 1, dtype=bool)
    table[ks.sorted_states()] = True
    return table


def _missing_unions(ks: KnowledgeSpace, S: np.ndarray, table: np.ndarray) -> dict[int, tuple[int, int]]:
    """Each union of two states that is absent, with one witness pair."""
    missing: dict[int, tuple[int, int]] = {}
    for lo in range(0, len(S), _CHUNK):
        rows = S[lo:lo + _CHUNK]
        U = rows[:, None] | S[None, :]
        for i, j in zip(*np.nonzero(~table[U])):
            u = int(U[i, j])
            if u not in missing:
                missing[u] = (int(rows[i]), int(S[j]))
    return missing


def _toggle_bits(ks: KnowledgeSpace, S: np.ndarray, table: np.ndarray, down_only: bool) -> np.ndarray:
    """Per state, the bit pattern of concepts whose toggle stays inside the family.

    With ``down_only`` only removals count.
    """
    out = np.zeros(len(S), dtype=np.int64)
    for i in range(len(ks.universe)):
        bit = 1 << i
        ok = table[S ^ bit]
        if down_only:
            ok &= (S & bit) != 0
        out |= np.where(ok, bit, 0)
    return out


def validate_space(ks: KnowledgeSpace) -> list[Violation]:
    """Every axiom failure found. Well-gradedness failures are informational (fatal=False)."""
    out: list[Violation] = []
    if 0 not in ks.states:
        out.append(Violation("empty", "empty state missing"))
    if ks.full not in ks.states:
        out.append(Violation("full", f"full state {ks.label(ks.full)} missing"))
    if not ks.states:
        return out

    S = ks.sorted_states()
    table = _member_table(ks)
    for u, (x, y) in sorted(_missing_unions(ks, S, table).items()):
        out.append(Violation("union", f"{ks.label(u)} not a state (union of {ks.label(x)} and {ks.label(y)})"))

    removable = _toggle_bits(ks, S, table, down_only=True)
    for s in S[(S != 0) & (removable == 0)]:
        out.append(Violation("accessible", f"{ks.label(int(s))} has no predecessor one concept smaller"))

    # Local criterion: from every X, some single toggle inside the family moves
    # strictly closer to every other Y. By induction this gives a tight path.
    nbits = _toggle_bits(ks, S, table, down_only=False)
    for lo in range(0, len(S), _CHUNK):
        rows, nb = S[lo:lo + _CHUNK], nbits[lo:lo + _CHUNK]
        diff = rows[:, None] ^ S[None, :]
        stuck = (diff != 0) & ((diff & nb[:, None]) == 0)
        for i in np.flatnonzero(stuck.any(axis=1)):  # one example per source state
            x, y = int(rows[i]), int(S[np.argmax(stuck[i])])
            out.append(Violation(
                "graded", f"no one-concept step from {ks.label(x)} toward {ks.label(y)}", fatal=False))
    return out


def is_learning_space(ks: KnowledgeSpace) -> bool:
    return not any(v.fatal for v in validate_space(ks))


def _require_state(ks: KnowledgeSpace, X) -> int:
    x = ks.mask(X)
    if x not in ks.states:
        raise DomainError(f"{ks.label(x)} is not a state of the space")
    return x


def outer_fringe(ks: KnowledgeSpace, X) -> frozenset[str]:
    """Concepts outside X whose addition lands on another state."""
    x = _require_state(ks, X)
    return frozenset(
        q for i, q in enumerate(ks.universe)
        if not x >> i & 1 and (x | 1 << i) in ks.states
    )


def admissible_actions(ks: KnowledgeSpace, X, coverage_evidence: Mapping[str, float]) -> frozenset[str]:
    """Fringe concepts with positive coverage evidence."""
    return frozenset(q for q in outer_fringe(ks, X) if coverage_evidence.get(q, 0.0) > 0)


@dataclass(frozen=True)
class SurrogateSpec:
    """Per-concept deficit a(1 - m) + b(1 - c) + c(1 - r)."""

    a: float = 1.0
    b: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if min(self.a, self.b, self.c) < 0:
            raise DomainError("surrogate coefficients must be >= 0")

    def loss(self, m: float, cov: float, r: float) -> float:
        return self.a * (1.0 - m) + self.b * (1.0 - cov) + self.c * (1.0 - r)


@dataclass(frozen=True)
class Recommendation:
    items: tuple[tuple[str, float], ...]
    fringe: tuple[str, ...]
    diagnostics: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "recommendations": [{"concept": q, "loss": v} for q, v in self.items],
            "fringe": list(self.fringe),
            "diagnostics": list(self.diagnostics),
        }


def recommend(ks: KnowledgeSpace, X, breakdown: Mapping, spec: SurrogateSpec = SurrogateSpec(),
              top_k: int = 3) -> Recommendation:
    """Rank admissible concepts by descending deficit, ties by concept id.

    ``breakdown`` maps concept id to per-topic stats with ``m``, ``c`` and
    ``r``; coverage ``c`` is the evidence that gates admissibility. Never
    falls back to concepts outside the fringe.
    """
    if top_k < 1:
        raise DomainError("top_k must be >= 1")
    fringe = outer_fringe(ks, X)
    diags = []
    absent = sorted(q for q in fringe if q not in breakdown)
    if absent:
        diags.append(f"no topic statistics for fringe concept(s) {', '.join(absent)}")
    evidence = {q: breakdown[q].c for q in fringe if q in breakdown}
    allowed = admissible_actions(ks, X, evidence)
    if not fringe:
        diags.append("outer fringe is empty")
    elif not allowed:
        diags.append("no fringe concept has coverage evidence")
    scored = [(q, spec.loss(breakdown[q].m, breakdown[q].c, breakdown[q].r)) for q in allowed]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return Recommendation(tuple(scored[:top_k]), tuple(sorted(fringe)), tuple(diags))


def random_learning_space(n: int, rng: np.random.Generator, chains: int | None = None,
                          names: Iterable[str] | None = None) -> KnowledgeSpace:
    """Union-closure of the prefix chains of 1-3 random concept orders.

    Each prefix chain is a learning space and the union-closure of several is
    again one, so every output is accessible and union-closed.
    """
    if not 0 <= n <= MAX_CONCEPTS:
        raise DomainError(f"n must lie in [0, {MAX_CONCEPTS}]")
    universe = tuple(names) if names is not None else tuple(f"q{i}" for i in range(n))
    if len(universe) != n:
        raise DomainError("names must have n entries")
    if chains is None:
        chains = int(rng.integers(1, 4))
    prefixes = []
    for _ in range(chains):
        order = rng.permutation(n)
        acc, pre = 0, [0]
        for i in order:
            acc |= 1 << int(i)
            pre.append(acc)
        prefixes.append(pre)
    states = {0}
    for combo in itertools.product(*prefixes):
        u = 0
        for s in combo:
            u |= s
        states.add(u)
    return KnowledgeSpace(universe, frozenset(states))
