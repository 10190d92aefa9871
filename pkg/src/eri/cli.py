"""Command-line entry point: score, design, band, drift, recommend, simulate, validate."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields, replace
from datetime import datetime, timezone
from pathlib import Path

from ._io import DomainError, ParseError, ValidationError, atomic_write, dumps, load_json_object
from .blueprint import parse_blueprint
from .components import ComponentConfig, aggregate
from .composite import APPROXIMATION_NOTE, RegularityEnvelope, WeightVector, drift_report, score
from .confidence import eri_band, profiles_from_breakdown
from .events import parse_events, serialize_events
from .learnspace import SurrogateSpec, parse_space, recommend, validate_space
from .simulator import parse_sim_config, simulate
from .weights import InfeasibleDesign, parse_problem, solve_weights, weights_from_json

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL, EXIT_INFEASIBLE = 0, 1, 2, 3


class InputError(Exception):
    """Bad command-line input: missing file, bad flag value."""


@dataclass(frozen=True)
class RunConfig:
    """Tunables read from ``--config``. Every key is optional."""

    volatility_window: int = 10
    volatility_normalizer: float = 0.5
    endurance_min_session: int = 10
    endurance_normalizer: float = 0.5
    pace_slope: float = 1.0
    min_difficulty: float = 0.5
    max_pace_ratio: float = 3.0
    confidence: float = 0.95
    tol: float = 1e-8
    surrogate_a: float = 1.0
    surrogate_b: float = 1.0
    surrogate_c: float = 1.0

    def __post_init__(self):
        problems = []
        if not 0.0 < self.confidence < 1.0:
            problems.append("confidence must lie in (0, 1)")
        if not self.tol > 0:
            problems.append("tol must be > 0")
        if problems:
            raise ValidationError(problems)

    @property
    def components(self) -> ComponentConfig:
        return ComponentConfig(self.volatility_window, self.volatility_normalizer,
                               self.endurance_min_session, self.endurance_normalizer, self.pace_slope)

    @property
    def envelope(self) -> RegularityEnvelope:
        return RegularityEnvelope(self.min_difficulty, self.max_pace_ratio)

    @property
    def surrogate(self) -> SurrogateSpec:
        return SurrogateSpec(self.surrogate_a, self.surrogate_b, self.surrogate_c)


def load_run_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    obj = load_json_object(_read(path))
    known = {f.name: f.type for f in fields(RunConfig)}
    extra = sorted(set(obj) - set(known))
    if extra:
        raise ParseError(f"unknown config key(s) {', '.join(extra)}")
    kw = {}
    for k, v in obj.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError("must be a number", field=k)
        kw[k] = int(v) if known[k] in (int, "int") else float(v)
    return RunConfig(**kw)


def _read(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {path}")
    return p.read_text(encoding="utf-8")


def parse_as_of(text: str | None) -> int | None:
    """Unix seconds or an RFC 3339 timestamp (naive times are taken as UTC)."""
    if text is None:
        return None
    try:
        return int(text)
    except ValueError:
        pass
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(raw)
    except ValueError:
        raise InputError(f"--as-of: not a timestamp: {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        atomic_write(out, text)


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _load_weights(path: str | None) -> WeightVector:
    if path is None:
        return WeightVector.uniform()
    text = _read(path)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    return weights_from_json(obj)


def cmd_score(args, cfg: RunConfig) -> int:
    bp = parse_blueprint(_read(args.blueprint))
    log = parse_events(_read(args.events))
    alpha = _load_weights(args.weights)
    report = score(log, bp, alpha, parse_as_of(args.as_of), cfg.components, cfg.envelope, cfg.confidence)
    for w in report.warnings:
        _warn(w)
    for v in cfg.envelope.violations(log, bp)[:5]:
        _warn(f"outside the Lipschitz envelope: {v}")
    _emit(dumps(report.to_dict()), args.out)
    return EXIT_OK


def cmd_design(args, cfg: RunConfig) -> int:
    problem = parse_problem(_read(args.problem))
    tol = args.tol if args.tol is not None else cfg.tol
    try:
        sol = solve_weights(problem, tol=tol, seed=args.seed)
    except InfeasibleDesign as exc:
        print(f"error: {exc}", file=sys.stderr)
        _emit(dumps({"status": "infeasible", "certificate": exc.certificate}), args.out)
        return EXIT_INFEASIBLE
    _emit(dumps({"status": "optimal", **sol.to_dict()}), args.out)
    return EXIT_OK


def cmd_band(args, cfg: RunConfig) -> int:
    bp = parse_blueprint(_read(args.blueprint))
    log = parse_events(_read(args.events))
    alpha = _load_weights(args.weights)
    level = args.confidence if args.confidence is not None else cfg.confidence
    _, breakdown = aggregate(log, bp, parse_as_of(args.as_of), cfg.components)
    band = eri_band(alpha, profiles_from_breakdown(bp, breakdown), level)
    for c, ts in band.uncovered.items():
        _warn(f"vacuous band for {c}: no attempts on {', '.join(ts)}")
    out = band.to_dict()
    out["notes"] = [APPROXIMATION_NOTE]
    _emit(dumps(out), args.out)
    return EXIT_OK


def cmd_drift(args, cfg: RunConfig) -> int:
    old = parse_blueprint(_read(args.old))
    new = parse_blueprint(_read(args.new))
    log = parse_events(_read(args.events))
    alpha = _load_weights(args.weights)
    rep = drift_report(log, old, new, alpha, parse_as_of(args.as_of), cfg.components)
    if rep.observed > rep.bound_tight + 1e-12:
        print("internal error: observed drift exceeds its bound", file=sys.stderr)
        return EXIT_INTERNAL
    _emit(dumps(rep.to_dict()), args.out)
    return EXIT_OK


def cmd_recommend(args, cfg: RunConfig) -> int:
    space = parse_space(_read(args.space))
    state = [q.strip() for q in args.state.split(",") if q.strip()] if args.state else []
    bp = parse_blueprint(_read(args.blueprint))
    log = parse_events(_read(args.events))
    _, breakdown = aggregate(log, bp, parse_as_of(args.as_of), cfg.components)
    rec = recommend(space, state, breakdown, cfg.surrogate, args.top_k)
    for d in rec.diagnostics:
        _warn(d)
    _emit(dumps({"state": sorted(state), **rec.to_dict()}), args.out)
    return EXIT_OK


def cmd_simulate(args, cfg: RunConfig) -> int:
    config = parse_sim_config(_read(args.config_file))
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    bp = parse_blueprint(_read(args.blueprint))
    _emit(serialize_events(simulate(config, bp)), args.out)
    return EXIT_OK


def _detect(path: str, text: str) -> str:
    if path.endswith(".jsonl"):
        return "events"
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        return "events"  # JSONL with several lines is not valid JSON
    if isinstance(obj, dict):
        if "universe" in obj:
            return "space"
        if "prior" in obj:
            return "design"
        if "topics" in obj and "sections" in obj:
            return "blueprint"
        if "kind" in obj:
            return "events"
        if "horizon_days" in obj or "default_topic" in obj:
            return "simulation"
    return "weights"


def cmd_validate(args, cfg: RunConfig) -> int:
    text = _read(args.path)
    kind = _detect(args.path, text)
    problems: list[str] = []
    info: list[str] = []
    try:
        if kind == "blueprint":
            parse_blueprint(text)
        elif kind == "events":
            log = parse_events(text)
            info.append(f"{len(log.attempts)} attempts, {len(log.mocks)} mocks")
        elif kind == "space":
            for v in validate_space(parse_space(text)):
                (problems if v.fatal else info).append(f"{v.kind}: {v.message}")
        elif kind == "design":
            parse_problem(text)
        elif kind == "simulation":
            parse_sim_config(text)
        else:
            weights_from_json(json.loads(text))
    except ValidationError as exc:
        problems.extend(exc.problems)
    except (ParseError, DomainError) as exc:
        problems.append(str(exc))
    result = {"path": args.path, "kind": kind, "valid": not problems, "problems": problems, "info": info}
    for p in problems:
        print(f"invalid: {p}", file=sys.stderr)
    _emit(dumps(result), args.out)
    return EXIT_OK if not problems else EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--as-of", help="scoring time, unix seconds or RFC 3339")
    common.add_argument("--config", help="JSON file of tunables")
    common.add_argument("--seed", type=int, help="random seed")

    parser = argparse.ArgumentParser(prog="eri", description="Exam readiness scoring toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[common], help="readiness report for one log")
    p.add_argument("blueprint")
    p.add_argument("events")
    p.add_argument("--weights", help="composite weights JSON (default: uniform)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("design", parents=[common], help="solve the weight design problem")
    p.add_argument("problem")
    p.add_argument("--tol", type=float, help="KKT tolerance")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("band", parents=[common], help="confidence band for the composite")
    p.add_argument("blueprint")
    p.add_argument("events")
    p.add_argument("--weights")
    p.add_argument("--confidence", type=float)
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("drift", parents=[common], help="composite change between blueprint versions")
    p.add_argument("old")
    p.add_argument("new")
    p.add_argument("events")
    p.add_argument("--weights")
    p.set_defaults(func=cmd_drift)

    p = sub.add_parser("recommend", parents=[common], help="next concepts inside the outer fringe")
    p.add_argument("space")
    p.add_argument("state", help="comma-separated concept ids ('' for the empty state)")
    p.add_argument("blueprint")
    p.add_argument("events")
    p.add_argument("--top-k", type=int, default=3)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("simulate", parents=[common], help="synthetic events JSONL")
    p.add_argument("config_file", metavar="simconfig")
    p.add_argument("blueprint")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", parents=[common], help="check any input file")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_run_config(args.config)
        return args.func(args, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except ValidationError as exc:
        for p in exc.problems:
            print(f"error: {p}", file=sys.stderr)
    except (ParseError, DomainError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except Exception as exc:  # invariant breach; should never happen
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
