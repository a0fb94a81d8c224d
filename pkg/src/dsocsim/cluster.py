"""Cluster entities: nodes, applications, classifiers, update requests and
the link-sharing transfer model.

A node's effective utilization is its background load plus the footprint of
every in-flight update transfer. Each transfer holds a fixed slice of cpu and
memory, keeps its delta on local storage until applied, and reserves the
minimum link rate. Transfers share whatever link capacity the background
traffic leaves over, equally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

EPS = 1e-9

RESOURCE_NAMES = ("cpu", "memory", "storage", "throughput")


class ScenarioError(ValueError):
    """Malformed scenario or configuration."""


class InvariantViolation(RuntimeError):
    """A simulation invariant was broken."""


class WorkerBusyError(ScenarioError):
    """An application already has an update in flight."""


def _check_fraction(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise ScenarioError(f"{name} must be in [0, 1], got {value!r}")


@dataclass(frozen=True)
class ResourceVector:
    cpu: float = 0.0
    memory: float = 0.0
    storage: float = 0.0
    throughput: float = 0.0

    def __post_init__(self) -> None:
        for name, value in zip(RESOURCE_NAMES, self.as_tuple()):
            _check_fraction(name, value)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.cpu, self.memory, self.storage, self.throughput)

    def __iter__(self) -> Iterator[float]:
        return iter(self.as_tuple())

    @classmethod
    def uniform(cls, value: float) -> "ResourceVector":
        return cls(value, value, value, value)


DEFAULT_CONSTRAINT_THRESHOLDS = ResourceVector.uniform(0.9)


@dataclass(frozen=True)
class NodeCapacity:
    """Absolute node capacity: cores, MB of memory and storage, MB per tick of link."""

    cpu_cores: float = 8.0
    memory_mb: float = 16384.0
    storage_mb: float = 2048.0
    link_mb_per_tick: float = 40.0

    def __post_init__(self) -> None:
        for name in ("cpu_cores", "memory_mb", "storage_mb", "link_mb_per_tick"):
            if getattr(self, name) <= 0:
                raise ScenarioError(f"capacity {name} must be positive")


@dataclass
class Classifier:
    id: str
    accuracy: float
    size_mb: float = 10.0
    frequent_update: bool = False
    version: int = 1

    def __post_init__(self) -> None:
        _check_fraction(f"classifier {self.id} accuracy", self.accuracy)
        if self.size_mb < 0:
            raise ScenarioError(f"classifier {self.id} size_mb must be >= 0")


@dataclass
class Application:
    id: str
    node_id: str
    classifiers: List[Classifier]
    progress: float = 0.0
    latency_ms: float = 100.0
    exec_time_ms: float = 200.0
    worker_busy: bool = False

    @property
    def accuracy(self) -> float:
        """Mean accuracy of the application's classifiers."""
        if not self.classifiers:
            return 0.0
        return math.fsum(c.accuracy for c in self.classifiers) / len(self.classifiers)

    def classifier(self, classifier_id: str) -> Classifier:
        for c in self.classifiers:
            if c.id == classifier_id:
                return c
        raise ScenarioError(
            f"application {self.id} has no classifier {classifier_id!r}"
        )


@dataclass(frozen=True)
class UpdateRequest:
    id: str
    app_id: str
    node_id: str
    classifier_id: str
    delta_mb: float
    accuracy_gain: float
    latency_reduction: float = 0.0
    exec_reduction: float = 0.0
    arrival_tick: int = 0
    correlated_with: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.delta_mb < 0 or math.isnan(self.delta_mb):
            raise ScenarioError(f"update {self.id}: delta_mb must be >= 0")
        _check_fraction(f"update {self.id} accuracy_gain", self.accuracy_gain)
        _check_fraction(f"update {self.id} latency_reduction", self.latency_reduction)
        _check_fraction(f"update {self.id} exec_reduction", self.exec_reduction)


@dataclass
class TransferState:
    update_id: str
    app_id: str
    delta_mb: float
    remaining_mb: float
    rate_mb_per_tick: float = 0.0


@dataclass
class Node:
    """A host with background load and a set of in-flight update transfers.

    ``update_cpu`` and ``update_memory`` are the utilization fractions one
    transfer holds while it runs; ``min_rate_mb`` is the lowest per-transfer
    link rate the node accepts, which caps transfer concurrency.
    """

    id: str
    capacity: NodeCapacity = field(default_factory=NodeCapacity)
    base_load: ResourceVector = field(default_factory=ResourceVector)
    update_cpu: float = 0.05
    update_memory: float = 0.05
    min_rate_mb: float = 8.0
    transfers: Dict[str, TransferState] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.min_rate_mb <= 0:
            raise ScenarioError("min_rate_mb must be positive")
        _check_fraction("update_cpu", self.update_cpu)
        _check_fraction("update_memory", self.update_memory)

    @property
    def transfer_link_mb(self) -> float:
        """Link capacity left over for update transfers."""
        return self.capacity.link_mb_per_tick * (1.0 - self.base_load.throughput)

    def projected_load(self, extra_deltas: Sequence[float] = ()) -> Tuple[float, ...]:
        """Raw (unclamped) utilization if ``extra_deltas`` transfers were added."""
        n = len(self.transfers) + len(extra_deltas)
        held_mb = math.fsum(t.delta_mb for t in self.transfers.values()) + math.fsum(extra_deltas)
        b = self.base_load
        return (
            b.cpu + n * self.update_cpu,
            b.memory + n * self.update_memory,
            b.storage + held_mb / self.capacity.storage_mb,
            b.throughput + n * self.min_rate_mb / self.capacity.link_mb_per_tick,
        )

    @property
    def utilization(self) -> ResourceVector:
        return ResourceVector(*(min(1.0, max(0.0, v)) for v in self.projected_load()))

    def link_saturated(self, extra_deltas: Sequence[float] = ()) -> bool:
        """True when one more transfer would drop below the minimum rate."""
        n = len(self.transfers) + len(extra_deltas)
        return self.transfer_link_mb / (n + 1) < self.min_rate_mb - EPS

    def fits(self, delta_mb: float, extra_deltas: Sequence[float] = ()) -> bool:
        """Whether adding one transfer of ``delta_mb`` keeps every component <= 1."""
        load = self.projected_load(list(extra_deltas) + [delta_mb])
        return all(v <= 1.0 + EPS for v in load) and not self.link_saturated(extra_deltas)

    def reshare(self) -> None:
        n = len(self.transfers)
        if n == 0:
            return
        rate = self.transfer_link_mb / n
        for t in self.transfers.values():
            t.rate_mb_per_tick = rate


def is_constrained(
    node: Node,
    thresholds: ResourceVector = DEFAULT_CONSTRAINT_THRESHOLDS,
    extra_deltas: Sequence[float] = (),
) -> bool:
    """True iff some utilization component reaches its threshold or the link
    has no room for another transfer at the minimum rate.

    ``extra_deltas`` lets schedulers ask the question against tentatively
    admitted transfers without mutating the node.
    """
    load = node.projected_load(extra_deltas)
    if any(v >= t - EPS for v, t in zip(load, thresholds)):
        return True
    return node.link_saturated(extra_deltas)


@dataclass
class Cluster:
    nodes: Dict[str, Node]
    apps: Dict[str, Application]

    def app(self, app_id: str) -> Application:
        try:
            return self.apps[app_id]
        except KeyError:
            raise ScenarioError(f"unknown application {app_id!r}") from None

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise ScenarioError(f"unknown node {node_id!r}") from None

    def classifiers(self) -> Iterable[Tuple[Application, Classifier]]:
        for app in self.apps.values():
            for c in app.classifiers:
                yield app, c

    def inflight_count(self) -> int:
        return sum(len(n.transfers) for n in self.nodes.values())


def begin_transfer(cluster: Cluster, update: UpdateRequest) -> TransferState:
    """Start moving ``update``'s delta to its node and occupy the app's worker."""
    node = cluster.node(update.node_id)
    app = cluster.app(update.app_id)
    if app.node_id != node.id:
        raise ScenarioError(
            f"update {update.id}: application {app.id} is not hosted on {node.id}"
        )
    if app.worker_busy:
        raise WorkerBusyError(f"application {app.id} already has an update in flight")
    if node.capacity.link_mb_per_tick <= 0:
        raise ScenarioError(f"node {node.id} has no link capacity")
    if update.id in node.transfers:
        raise ScenarioError(f"update {update.id} is already in flight")
    state = TransferState(update.id, app.id, update.delta_mb, update.delta_mb)
    node.transfers[update.id] = state
    app.worker_busy = True
    node.reshare()
    return state


def advance_transfers(
    cluster: Cluster, node_id: str, ticks: int = 1
) -> Tuple[List[str], float]:
    """Move every transfer on the node forward by ``ticks``.

    Returns the ids of completed updates (in start order) and the megabytes
    delivered during the step.
    """
    if ticks < 1:
        raise ValueError("ticks must be >= 1")
    node = cluster.node(node_id)
    done: List[str] = []
    delivered = 0.0
    for t in node.transfers.values():
        moved = min(t.remaining_mb, t.rate_mb_per_tick * ticks)
        delivered += moved
        t.remaining_mb -= moved
        if t.remaining_mb <= EPS:
            t.remaining_mb = 0.0
            done.append(t.update_id)
    for uid in done:
        t = node.transfers.pop(uid)
        cluster.app(t.app_id).worker_busy = False
    node.reshare()
    return done, delivered


def apply_update_effects(app: Application, update: UpdateRequest) -> Application:
    """Install a fully transferred update on its application."""
    clf = app.classifier(update.classifier_id)
    clf.accuracy = min(1.0, clf.accuracy + update.accuracy_gain)
    clf.version += 1
    app.latency_ms *= 1.0 - update.latency_reduction
    app.exec_time_ms *= 1.0 - update.exec_reduction
    return app


def check_invariants(cluster: Cluster) -> None:
    """Raise InvariantViolation if resource safety or worker exclusivity fails."""
    busy: Dict[str, str] = {}
    for node in cluster.nodes.values():
        for name, v in zip(RESOURCE_NAMES, node.projected_load()):
            if v > 1.0 + EPS or v < -EPS:
                raise InvariantViolation(f"node {node.id} {name} utilization {v:.6f} outside [0, 1]")
        total_rate = math.fsum(t.rate_mb_per_tick for t in node.transfers.values())
        if total_rate > node.capacity.link_mb_per_tick + EPS:
            raise InvariantViolation(f"node {node.id} link oversubscribed: {total_rate:.6f}")
        for t in node.transfers.values():
            if t.remaining_mb < 0:
                raise InvariantViolation(f"transfer {t.update_id} has negative remaining")
            if t.app_id in busy:
                raise InvariantViolation(
                    f"application {t.app_id} has two in-flight updates: {busy[t.app_id]}, {t.update_id}"
                )
            busy[t.app_id] = t.update_id
    for app in cluster.apps.values():
        if app.worker_busy != (app.id in busy):
            raise InvariantViolation(f"application {app.id} worker flag out of sync")
        if not (0.0 <= app.progress <= 1.0):
            raise InvariantViolation(f"application {app.id} progress {app.progress} outside [0, 1]")
        for c in app.classifiers:
            if not (0.0 <= c.accuracy <= 1.0):
                raise InvariantViolation(f"classifier {c.id} accuracy {c.accuracy} outside [0, 1]")
