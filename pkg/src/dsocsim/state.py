"""Whole-world simulation state."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Set, Tuple

import numpy as np

from .cluster import Cluster, UpdateRequest
from .schedulers import UpdateQueue

if TYPE_CHECKING:
    from .workload import ScenarioSpec


@dataclass
class CorrelationGroup:
    members: Tuple[str, ...]
    penalty_multiplier: float = 2.0

    def __post_init__(self) -> None:
        if len(self.members) < 2:
            raise ValueError("correlation group needs at least two members")
        if self.penalty_multiplier < 1.0:
            raise ValueError("penalty_multiplier must be >= 1")


@dataclass
class SimState:
    spec: "ScenarioSpec"
    cluster: Cluster
    rng: np.random.Generator
    groups: List[CorrelationGroup] = field(default_factory=list)
    tick: int = 0
    queue: UpdateQueue = field(default_factory=UpdateQueue)
    inflight: Dict[str, UpdateRequest] = field(default_factory=dict)
    # classifiers whose group partner was updated after they were
    unmatched: Set[str] = field(default_factory=set)
    arrived: int = 0
    applied: int = 0
    dropped: int = 0
    delayed_ids: Set[str] = field(default_factory=set)
    delay_events: int = 0
    mb_transferred: float = 0.0
    mb_completed: float = 0.0
    next_seq: int = 0
    finished_apps: Set[str] = field(default_factory=set)
    completion_tick: int = -1

    def __post_init__(self) -> None:
        self._owner: Dict[str, str] = {}
        self._partners: Dict[str, Tuple[str, ...]] = {}
        self.reindex()

    def reindex(self) -> None:
        self._owner = {c.id: app.id for app, c in self.cluster.classifiers()}
        self._partners = {}
        for g in self.groups:
            for m in g.members:
                self._partners[m] = tuple(x for x in g.members if x != m)
        self._multiplier = {m: g.penalty_multiplier for g in self.groups for m in g.members}

    def owner(self, classifier_id: str) -> str:
        return self._owner[classifier_id]

    def partners(self, classifier_id: str) -> Tuple[str, ...]:
        return self._partners.get(classifier_id, ())

    def multiplier(self, classifier_id: str) -> float:
        return self._multiplier.get(classifier_id, 1.0)

    @property
    def pending(self) -> int:
        return len(self.queue) + len(self.inflight)

    def mean_accuracy(self) -> float:
        apps = list(self.cluster.apps.values())
        return sum(a.accuracy for a in apps) / len(apps) if apps else 0.0

    def mean_progress(self) -> float:
        apps = list(self.cluster.apps.values())
        return sum(a.progress for a in apps) / len(apps) if apps else 0.0
