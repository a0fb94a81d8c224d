"""Greedy and prioritized update schedulers plus a brute-force oracle.

Both schedulers are pure: they read the cluster and queue and return a
``ScheduleDecision`` without touching either. Admission runs through one
shared feasibility walk (``admission_walk``), so the greedy ``K`` and the
per-update constrained check agree by construction.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .cluster import (
    DEFAULT_CONSTRAINT_THRESHOLDS,
    Cluster,
    ResourceVector,
    UpdateRequest,
    is_constrained,
)
from .priority import (
    PriorityClass,
    PriorityScore,
    PriorityThresholds,
    WeightConfig,
    assign_priority,
)

ORACLE_MAX_CANDIDATES = 12

# Reasons an update can be turned away by the admission walk.
REASON_WORKER = "worker"
REASON_CONSTRAINED = "constrained"
REASON_CAPACITY = "capacity"

STRATEGIES = ("greedy", "dsoc")


class UpdateQueue:
    """FIFO of pending updates; ids are unique."""

    def __init__(self, updates: Iterable[UpdateRequest] = ()):
        self._items: List[UpdateRequest] = []
        self._ids: Set[str] = set()
        for u in updates:
            self.push(u)

    def push(self, update: UpdateRequest) -> None:
        if update.id in self._ids:
            raise ValueError(f"duplicate update id {update.id!r}")
        self._items.append(update)
        self._ids.add(update.id)

    def remove(self, update_id: str) -> UpdateRequest:
        for i, u in enumerate(self._items):
            if u.id == update_id:
                self._ids.discard(update_id)
                return self._items.pop(i)
        raise KeyError(update_id)

    def requeue(self, update_ids: Sequence[str]) -> None:
        """Move the given updates to the tail, keeping their relative order."""
        moved = [self.remove(uid) for uid in update_ids]
        for u in moved:
            self.push(u)

    def __iter__(self):
        return iter(list(self._items))

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, update_id: object) -> bool:
        return update_id in self._ids

    def ids(self) -> List[str]:
        return [u.id for u in self._items]


@dataclass
class ScheduleDecision:
    assigned: List[str] = field(default_factory=list)
    delayed: List[str] = field(default_factory=list)
    dropped: List[str] = field(default_factory=list)
    k: int = 0
    scores: Dict[str, PriorityScore] = field(default_factory=dict)
    delay_reasons: Dict[str, str] = field(default_factory=dict)


def _rejection(
    update: UpdateRequest,
    cluster: Cluster,
    thresholds: ResourceVector,
    admitted_apps: Set[str],
    pending_deltas: Dict[str, List[float]],
) -> Optional[str]:
    app = cluster.apps.get(update.app_id)
    node = cluster.nodes.get(update.node_id)
    if app is None or node is None or app.node_id != node.id:
        return REASON_CAPACITY
    if app.worker_busy or app.id in admitted_apps:
        return REASON_WORKER
    extra = pending_deltas[node.id]
    if is_constrained(node, thresholds, extra):
        return REASON_CONSTRAINED
    if not node.fits(update.delta_mb, extra):
        return REASON_CAPACITY
    return None


def admission_walk(
    candidates: Sequence[UpdateRequest],
    cluster: Cluster,
    thresholds: ResourceVector = DEFAULT_CONSTRAINT_THRESHOLDS,
) -> Tuple[List[UpdateRequest], Dict[str, str]]:
    """Admit candidates in order against tentatively consumed resources.

    An update is admitted when its application's worker is free (and not
    already claimed this round), its node is unconstrained given earlier
    admissions, and its footprint keeps every resource component at or below
    1. Rejected updates are skipped; since admissions only consume resources,
    a skipped update could not become admissible later in the same walk.
    """
    admitted: List[UpdateRequest] = []
    reasons: Dict[str, str] = {}
    admitted_apps: Set[str] = set()
    pending: Dict[str, List[float]] = defaultdict(list)
    for u in candidates:
        why = _rejection(u, cluster, thresholds, admitted_apps, pending)
        if why is not None:
            reasons[u.id] = why
            continue
        admitted.append(u)
        admitted_apps.add(u.app_id)
        pending[u.node_id].append(u.delta_mb)
    return admitted, reasons


def compute_k(
    candidates: Sequence[UpdateRequest],
    cluster: Cluster,
    thresholds: ResourceVector = DEFAULT_CONSTRAINT_THRESHOLDS,
) -> int:
    """Number of updates that can start this round without overloading any node."""
    admitted, _ = admission_walk(candidates, cluster, thresholds)
    return len(admitted)


def greedy_schedule(
    queue: Iterable[UpdateRequest],
    cluster: Cluster,
    thresholds: ResourceVector = DEFAULT_CONSTRAINT_THRESHOLDS,
) -> ScheduleDecision:
    """Start every queued update whose node and worker are free, in FIFO order.

    Updates that cannot start are delayed; the caller requeues them at the
    tail. Nothing is ever dropped.
    """
    candidates = list(queue)
    admitted, reasons = admission_walk(candidates, cluster, thresholds)
    chosen = {u.id for u in admitted}
    return ScheduleDecision(
        assigned=[u.id for u in admitted],
        delayed=[u.id for u in candidates if u.id not in chosen],
        k=len(admitted),
        delay_reasons=reasons,
    )


def dsoc_schedule(
    queue: Iterable[UpdateRequest],
    cluster: Cluster,
    weights: WeightConfig,
    thresholds: ResourceVector = DEFAULT_CONSTRAINT_THRESHOLDS,
    priority_thresholds: PriorityThresholds = PriorityThresholds(),
) -> ScheduleDecision:
    """Score, drop Red, and admit the rest by class then descending pval."""
    weights.validate()
    candidates = list(queue)
    scores: Dict[str, PriorityScore] = {}
    for u in candidates:
        scores[u.id] = assign_priority(
            u, cluster.node(u.node_id), cluster.app(u.app_id), weights, priority_thresholds
        )
    dropped = [u.id for u in candidates if scores[u.id].cls is PriorityClass.RED]
    kept = [(i, u) for i, u in enumerate(candidates) if scores[u.id].cls is not PriorityClass.RED]
    kept.sort(key=lambda iu: (scores[iu[1].id].cls.rank, -scores[iu[1].id].pval, iu[0]))
    ordered = [u for _, u in kept]
    admitted, reasons = admission_walk(ordered, cluster, thresholds)
    chosen = {u.id for u in admitted}
    return ScheduleDecision(
        assigned=[u.id for u in admitted],
        delayed=[u.id for u in ordered if u.id not in chosen],
        dropped=dropped,
        k=len(admitted),
        scores=scores,
        delay_reasons=reasons,
    )


def schedule(
    strategy: str,
    queue: Iterable[UpdateRequest],
    cluster: Cluster,
    weights: WeightConfig,
    thresholds: ResourceVector = DEFAULT_CONSTRAINT_THRESHOLDS,
    priority_thresholds: PriorityThresholds = PriorityThresholds(),
) -> ScheduleDecision:
    if strategy == "greedy":
        return greedy_schedule(queue, cluster, thresholds)
    if strategy == "dsoc":
        return dsoc_schedule(queue, cluster, weights, thresholds, priority_thresholds)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


# -- oracle -----------------------------------------------------------------


def _node_sequence_ok(node, members, thresholds) -> bool:
    for order in itertools.permutations(members):
        held: List[float] = []
        ok = True
        for u in order:
            if is_constrained(node, thresholds, held) or not node.fits(u.delta_mb, held):
                ok = False
                break
            held.append(u.delta_mb)
        if ok:
            return True
    return False


def subset_feasible(
    subset: Sequence[UpdateRequest],
    cluster: Cluster,
    thresholds: ResourceVector = DEFAULT_CONSTRAINT_THRESHOLDS,
) -> bool:
    """Whether all of ``subset`` can start together in some admission order.

    Checked directly by trying every per-node ordering; independent of the
    schedulers' walk.
    """
    apps = [u.app_id for u in subset]
    if len(set(apps)) != len(apps):
        return False
    by_node: Dict[str, List[UpdateRequest]] = defaultdict(list)
    for u in subset:
        app = cluster.apps.get(u.app_id)
        if app is None or app.worker_busy or app.node_id != u.node_id:
            return False
        if u.node_id not in cluster.nodes:
            return False
        by_node[u.node_id].append(u)
    return all(
        _node_sequence_ok(cluster.nodes[nid], members, thresholds)
        for nid, members in by_node.items()
    )


def oracle_max_feasible(
    candidates: Sequence[UpdateRequest],
    cluster: Cluster,
    thresholds: ResourceVector = DEFAULT_CONSTRAINT_THRESHOLDS,
) -> List[frozenset]:
    """All inclusion-maximal feasible subsets of ``candidates`` (as id sets)."""
    if len(candidates) > ORACLE_MAX_CANDIDATES:
        raise ValueError(
            f"oracle limited to {ORACLE_MAX_CANDIDATES} candidates, got {len(candidates)}"
        )
    feasible: List[frozenset] = []
    for r in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, r):
            if subset_feasible(combo, cluster, thresholds):
                feasible.append(frozenset(u.id for u in combo))
    return [s for s in feasible if not any(s < t for t in feasible)]
