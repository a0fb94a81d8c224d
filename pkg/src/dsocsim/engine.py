"""Deterministic tick loop and trace/summary output.

Every tick runs the same phases in the same order:

1. sample update arrivals into the queue
2. run the selected scheduler over the queue
3. begin transfers for assigned updates
4. advance all transfers by one tick
5. apply the effects of completed updates
6. apply classifier drift
7. advance application progress by ``progress_rate * accuracy``
8. emit a ``TickMetrics`` event

Changing this order changes the golden trace.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import IO, List, Optional, Sequence, Tuple, Union

from .cluster import (
    EPS,
    InvariantViolation,
    advance_transfers,
    apply_update_effects,
    begin_transfer,
    check_invariants,
)
from .schedulers import STRATEGIES, schedule
from .state import SimState
from .workload import ScenarioSpec, apply_drift, generate_scenario, mark_updated, sample_update_arrivals

EVENT_KINDS = (
    "UpdateArrived",
    "UpdateAssigned",
    "UpdateDelayed",
    "UpdateDropped",
    "UpdateCompleted",
    "TickMetrics",
    "GoalReached",
)

DECILES = tuple(k / 10 for k in range(1, 11))

Value = Union[str, int, float]


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    kind: str
    subject: str
    payload: Tuple[Tuple[str, Value], ...] = ()

    def get(self, key: str) -> Optional[Value]:
        for k, v in self.payload:
            if k == key:
                return v
        return None


@dataclass(frozen=True)
class MetricsSnapshot:
    mean_accuracy: float
    mean_progress: float
    node_utilization: Tuple[Tuple[str, Tuple[float, float, float, float]], ...]
    queue_depth: int
    inflight: int
    updates_applied: int
    mb_transferred: float

    def as_payload(self) -> Tuple[Tuple[str, Value], ...]:
        payload: List[Tuple[str, Value]] = [
            ("mean_accuracy", self.mean_accuracy),
            ("mean_progress", self.mean_progress),
            ("queue_depth", self.queue_depth),
            ("inflight", self.inflight),
            ("applied", self.updates_applied),
            ("mb_transferred", self.mb_transferred),
        ]
        for nid, util in self.node_utilization:
            payload.append((f"util_{nid}", "|".join(_fmt(u) for u in util)))
        return tuple(payload)


def snapshot(state: SimState) -> MetricsSnapshot:
    return MetricsSnapshot(
        mean_accuracy=state.mean_accuracy(),
        mean_progress=state.mean_progress(),
        node_utilization=tuple(
            (nid, node.utilization.as_tuple()) for nid, node in sorted(state.cluster.nodes.items())
        ),
        queue_depth=len(state.queue),
        inflight=len(state.inflight),
        updates_applied=state.applied,
        mb_transferred=state.mb_transferred,
    )


def _score_payload(decision, uid) -> Tuple[Tuple[str, Value], ...]:
    s = decision.scores.get(uid)
    if s is None:
        return ()
    return (("pval", s.pval), ("class", str(s.cls)))


def tick(state: SimState, strategy: str) -> Tuple[SimState, List[TraceEvent]]:
    """Advance the world by one tick; mutates and returns ``state``."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    spec = state.spec
    cluster = state.cluster
    t = state.tick
    events: List[TraceEvent] = []
    emit = events.append
    before = {aid: a.progress for aid, a in cluster.apps.items()}

    # 1. arrivals
    for u in sample_update_arrivals(state, t, state.rng):
        state.queue.push(u)
        state.arrived += 1
        emit(TraceEvent(t, "UpdateArrived", u.id, (
            ("app", u.app_id), ("node", u.node_id), ("classifier", u.classifier_id),
            ("delta_mb", u.delta_mb), ("gain", u.accuracy_gain),
        )))

    # 2. scheduling
    decision = schedule(
        strategy, state.queue, cluster, spec.weights,
        spec.constraint_thresholds, spec.priority_thresholds,
    )
    by_id = {u.id: u for u in state.queue}
    for uid in decision.dropped:
        state.queue.remove(uid)
        state.dropped += 1
        emit(TraceEvent(t, "UpdateDropped", uid, _score_payload(decision, uid)))

    # 3. begin transfers
    for uid in decision.assigned:
        u = state.queue.remove(uid)
        begin_transfer(cluster, u)
        state.inflight[uid] = u
        emit(TraceEvent(t, "UpdateAssigned", uid, (
            ("app", u.app_id), ("node", u.node_id), ("delta_mb", u.delta_mb),
        ) + _score_payload(decision, uid)))
    for uid in decision.delayed:
        state.delayed_ids.add(uid)
        state.delay_events += 1
        emit(TraceEvent(t, "UpdateDelayed", uid, (
            ("reason", decision.delay_reasons.get(uid, "")),
        ) + _score_payload(decision, uid)))
    if strategy == "greedy":
        state.queue.requeue([uid for uid in decision.delayed if uid in by_id])

    # 4. transfers
    completed: List[str] = []
    for nid in sorted(cluster.nodes):
        done, moved = advance_transfers(cluster, nid, 1)
        state.mb_transferred += moved
        completed.extend(done)

    # 5. effects
    for uid in completed:
        u = state.inflight.pop(uid)
        app = cluster.app(u.app_id)
        apply_update_effects(app, u)
        mark_updated(state, u.classifier_id)
        state.applied += 1
        state.mb_completed += u.delta_mb
        clf = app.classifier(u.classifier_id)
        emit(TraceEvent(t, "UpdateCompleted", uid, (
            ("app", u.app_id), ("classifier", u.classifier_id),
            ("accuracy", clf.accuracy), ("version", clf.version),
        )))

    # 6. drift
    apply_drift(state, t)

    # 7. progress
    for aid in sorted(cluster.apps):
        app = cluster.apps[aid]
        if aid in state.finished_apps:
            continue
        app.progress = min(1.0, app.progress + spec.progress_rate * app.accuracy)
        if app.progress >= 1.0 - EPS:
            app.progress = 1.0
            state.finished_apps.add(aid)
            emit(TraceEvent(t, "GoalReached", aid, (("progress", 1.0),)))
    if (
        cluster.apps
        and state.completion_tick < 0
        and len(state.finished_apps) == len(cluster.apps)
    ):
        state.completion_tick = t
        emit(TraceEvent(t, "GoalReached", "swarm", (("mean_accuracy", state.mean_accuracy()),)))

    check_invariants(cluster)
    for aid, p in before.items():
        if cluster.apps[aid].progress < p:
            raise InvariantViolation(f"application {aid} progress decreased")

    # 8. metrics
    emit(TraceEvent(t, "TickMetrics", "cluster", snapshot(state).as_payload()))
    state.tick = t + 1
    return state, events


@dataclass
class Summary:
    strategy: str
    seed: int
    completion_tick: int
    ticks_run: int
    final_accuracy: float
    final_progress: float
    arrived: int
    applied: int
    dropped: int
    delayed: int
    pending: int
    mb_transferred: float
    # (decile, first tick at or past it, mean accuracy then); tick -1 if never reached
    curve: List[Tuple[float, int, float]] = field(default_factory=list)

    @property
    def goal_reached(self) -> bool:
        return self.completion_tick >= 0


SUMMARY_HEADER = (
    "strategy", "seed", "completion_tick", "ticks_run", "final_accuracy", "final_progress",
    "arrived", "applied", "dropped", "delayed", "pending", "mb_transferred",
)


def run_mission(
    spec: ScenarioSpec,
    strategy: str,
    max_ticks: Optional[int] = None,
    record_trace: bool = True,
) -> Tuple[SimState, List[TraceEvent], Summary]:
    """Tick until every application finishes or ``max_ticks`` elapse."""
    if max_ticks is None:
        max_ticks = spec.mission_length_hint
    if max_ticks < 1:
        raise ValueError("max_ticks must be >= 1")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    state = generate_scenario(spec)
    trace: List[TraceEvent] = []
    curve: List[Tuple[float, int, float]] = []
    for _ in range(max_ticks):
        _, events = tick(state, strategy)
        if record_trace:
            trace.extend(events)
        p = state.mean_progress()
        while len(curve) < len(DECILES) and p >= DECILES[len(curve)] - EPS:
            curve.append((DECILES[len(curve)], state.tick - 1, state.mean_accuracy()))
        if state.cluster.apps and state.completion_tick >= 0:
            break
        if not state.cluster.apps:
            break
    while len(curve) < len(DECILES):
        curve.append((DECILES[len(curve)], -1, math.nan))
    summary = Summary(
        strategy=strategy,
        seed=spec.seed,
        completion_tick=state.completion_tick,
        ticks_run=state.tick,
        final_accuracy=state.mean_accuracy(),
        final_progress=state.mean_progress(),
        arrived=state.arrived,
        applied=state.applied,
        dropped=state.dropped,
        delayed=len(state.delayed_ids),
        pending=state.pending,
        mb_transferred=state.mb_transferred,
        curve=curve,
    )
    return state, trace, summary


# -- output -----------------------------------------------------------------


def _fmt(v: Value) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        s = f"{v:.6f}"
        return "0.000000" if s == "-0.000000" else s
    return str(v)


def format_event(e: TraceEvent) -> str:
    """``tick<TAB>kind<TAB>subject[<TAB>key=value]...`` with floats at 6 decimals."""
    parts = [str(e.tick), e.kind, e.subject]
    parts.extend(f"{k}={_fmt(v)}" for k, v in e.payload)
    return "\t".join(parts)


def emit_trace(trace: Sequence[TraceEvent], sink: IO[str]) -> int:
    """Write one line per event; returns the number of lines written."""
    n = 0
    for e in trace:
        sink.write(format_event(e))
        sink.write("\n")
        n += 1
    return n


def summary_row(s: Summary) -> List[str]:
    return [_fmt(getattr(s, name)) for name in SUMMARY_HEADER]


def write_summary_csv(summaries: Sequence[Summary], sink: IO[str]) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for s in summaries:
        w.writerow(summary_row(s))


CURVE_HEADER = ("strategy", "decile", "seeds_reached", "mean_tick", "mean_accuracy")


def write_curve_csv(summaries: Sequence[Summary], sink: IO[str]) -> None:
    """Mean accuracy at each completion decile, averaged over seeds per strategy."""
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    strategies = sorted({s.strategy for s in summaries}, key=STRATEGIES.index)
    for strat in strategies:
        group = [s for s in summaries if s.strategy == strat]
        for i, decile in enumerate(DECILES):
            hits = [s.curve[i] for s in group if s.curve[i][1] >= 0]
            if hits:
                mean_tick = sum(h[1] for h in hits) / len(hits)
                mean_acc = sum(h[2] for h in hits) / len(hits)
            else:
                mean_tick = mean_acc = math.nan
            w.writerow([strat, _fmt(decile), len(hits), _fmt(float(mean_tick)), _fmt(float(mean_acc))])
