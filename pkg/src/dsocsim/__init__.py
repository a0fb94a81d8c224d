"""Simulator for greedy and prioritized classifier-update orchestration on edge clusters."""

from .cluster import (
    Application,
    Classifier,
    Cluster,
    InvariantViolation,
    Node,
    NodeCapacity,
    ResourceVector,
    ScenarioError,
    TransferState,
    UpdateRequest,
    advance_transfers,
    apply_update_effects,
    begin_transfer,
    is_constrained,
)
from .engine import MetricsSnapshot, Summary, TraceEvent, emit_trace, run_mission, tick
from .priority import (
    ConfigError,
    PriorityClass,
    PriorityScore,
    PriorityThresholds,
    WeightConfig,
    assign_priority,
    classify_pval,
    compute_ap,
    compute_sp,
)
from .schedulers import (
    ScheduleDecision,
    UpdateQueue,
    compute_k,
    dsoc_schedule,
    greedy_schedule,
    oracle_max_feasible,
)
from .state import CorrelationGroup, SimState
from .workload import ScenarioSpec, apply_drift, generate_scenario, reference_spec, sample_update_arrivals

__version__ = "0.1.0"
