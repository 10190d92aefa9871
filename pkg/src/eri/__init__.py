"""Blueprint-aware exam readiness scoring with stability, drift and confidence guarantees."""

from ._io import DomainError, ParseError, ValidationError
from .blueprint import Blueprint, Section, Topic, drift_bound, drift_ceiling, parse_blueprint, tv_distance
from .components import ComponentConfig, ComponentVector, aggregate
from .composite import (
    LipschitzConstants,
    RegularityEnvelope,
    WeightVector,
    check_validity,
    component_lipschitz,
    display_score,
    drift_report,
    eri,
    lipschitz_constant,
    log_distance,
    score,
)
from .confidence import ConfidenceBand, SampleProfile, eri_band, invert_band
from .events import AttemptEvent, EventLog, MockResult, parse_events, serialize_events, stream_distance
from .learnspace import KnowledgeSpace, SurrogateSpec, outer_fringe, parse_space, recommend, validate_space
from .simulator import SimConfig, perturb, simulate
from .weights import DesignProblem, InfeasibleDesign, fit_weights_from_orderings, solve_weights

__version__ = "0.1.0"
