"""Synthetic edge workloads: scenario generation, update arrivals and drift."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import List, Tuple

import numpy as np

from .cluster import (
    DEFAULT_CONSTRAINT_THRESHOLDS,
    Application,
    Classifier,
    Cluster,
    Node,
    NodeCapacity,
    ResourceVector,
    UpdateRequest,
)
from .priority import ConfigError, PriorityThresholds, WeightConfig
from .state import CorrelationGroup, SimState

CLASSIFIER_RANGE = (40, 140)
FREQUENT_ARRIVAL_WEIGHT = 3.0


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int = 42
    node_count: int = 4
    app_count: int = 10
    classifier_total: int = 60
    enforce_classifier_range: bool = True
    frequent_fraction: float = 0.4
    correlated_fraction: float = 0.5
    penalty_multiplier: float = 2.0
    drift_per_tick: float = 0.005
    accuracy_floor: float = 0.2
    arrival_rate: float = 2.0
    progress_rate: float = 0.005
    mission_length_hint: int = 1000
    gain_range: Tuple[float, float] = (0.02, 0.15)
    delta_mb_range: Tuple[float, float] = (1.0, 50.0)
    reduction_range: Tuple[float, float] = (0.0, 0.1)
    initial_accuracy_range: Tuple[float, float] = (0.55, 0.85)
    link_mb_per_tick: float = 40.0
    min_rate_mb: float = 8.0
    update_cpu: float = 0.05
    update_memory: float = 0.05
    weights: WeightConfig = field(default_factory=WeightConfig)
    constraint_thresholds: ResourceVector = DEFAULT_CONSTRAINT_THRESHOLDS
    priority_thresholds: PriorityThresholds = field(default_factory=PriorityThresholds)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        for name in ("node_count", "app_count", "classifier_total", "mission_length_hint"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        lo, hi = CLASSIFIER_RANGE
        if self.enforce_classifier_range and not lo <= self.classifier_total <= hi:
            raise ConfigError(
                f"classifier_total {self.classifier_total} outside [{lo}, {hi}]; "
                "disable range enforcement to override"
            )
        if self.classifier_total < self.app_count:
            raise ConfigError("need at least one classifier per application")
        for name in ("frequent_fraction", "correlated_fraction", "accuracy_floor",
                     "drift_per_tick", "update_cpu", "update_memory"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.penalty_multiplier < 1.0:
            raise ConfigError("penalty_multiplier must be >= 1")
        if self.arrival_rate < 0 or self.progress_rate < 0:
            raise ConfigError("rates must be nonnegative")
        if self.link_mb_per_tick <= 0 or self.min_rate_mb <= 0:
            raise ConfigError("link capacity and minimum rate must be positive")
        for name in ("gain_range", "reduction_range", "initial_accuracy_range"):
            a, b = getattr(self, name)
            if not 0.0 <= a <= b <= 1.0:
                raise ConfigError(f"{name} must satisfy 0 <= low <= high <= 1")
        a, b = self.delta_mb_range
        if not 0.0 <= a <= b:
            raise ConfigError("delta_mb_range must satisfy 0 <= low <= high")
        if self.correlated_count == 1:
            raise ConfigError("correlated classifiers must form groups of at least two")

    @property
    def frequent_count(self) -> int:
        return math.ceil(self.frequent_fraction * self.classifier_total - 1e-9)

    @property
    def correlated_count(self) -> int:
        return math.ceil(self.correlated_fraction * self.classifier_total - 1e-9)

    def replace(self, **changes) -> "ScenarioSpec":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return ScenarioSpec(**values)


def reference_spec(seed: int = 42) -> ScenarioSpec:
    """The reference scenario: 4 nodes, 10 apps, 60 classifiers, default weights."""
    return ScenarioSpec(seed=seed)


def _distribute(total: int, bins: int, rng: np.random.Generator) -> List[int]:
    """Round-robin counts per bin, then a few random one-classifier moves."""
    counts = [total // bins + (1 if i < total % bins else 0) for i in range(bins)]
    for _ in range(bins // 2):
        src, dst = (int(x) for x in rng.integers(0, bins, size=2))
        if src != dst and counts[src] > 1:
            counts[src] -= 1
            counts[dst] += 1
    return counts


def generate_scenario(spec: ScenarioSpec) -> SimState:
    spec.validate()
    rng = np.random.default_rng(spec.seed)

    nodes = {}
    for i in range(spec.node_count):
        base = ResourceVector(
            cpu=float(rng.uniform(0.2, 0.6)),
            memory=float(rng.uniform(0.2, 0.6)),
            storage=float(rng.uniform(0.1, 0.5)),
            throughput=float(rng.uniform(0.1, 0.4)),
        )
        nid = f"n{i}"
        nodes[nid] = Node(
            id=nid,
            capacity=NodeCapacity(link_mb_per_tick=spec.link_mb_per_tick),
            base_load=base,
            update_cpu=spec.update_cpu,
            update_memory=spec.update_memory,
            min_rate_mb=spec.min_rate_mb,
        )

    counts = _distribute(spec.classifier_total, spec.app_count, rng)
    frequent = set(int(x) for x in rng.choice(spec.classifier_total, spec.frequent_count, replace=False))
    acc_lo, acc_hi = spec.initial_accuracy_range

    apps = {}
    idx = 0
    for j in range(spec.app_count):
        classifiers = []
        for _ in range(counts[j]):
            classifiers.append(
                Classifier(
                    id=f"c{idx:03d}",
                    accuracy=float(rng.uniform(acc_lo, acc_hi)),
                    size_mb=float(rng.uniform(5.0, 100.0)),
                    frequent_update=idx in frequent,
                )
            )
            idx += 1
        aid = f"a{j}"
        apps[aid] = Application(
            id=aid,
            node_id=f"n{j % spec.node_count}",
            classifiers=classifiers,
            latency_ms=float(rng.uniform(50.0, 200.0)),
            exec_time_ms=float(rng.uniform(100.0, 500.0)),
        )

    order = [int(x) for x in rng.permutation(spec.classifier_total)[: spec.correlated_count]]
    groups = []
    pairs = [order[i : i + 2] for i in range(0, len(order) - len(order) % 2, 2)]
    if len(order) % 2:
        pairs[-1].append(order[-1])
    for members in pairs:
        groups.append(
            CorrelationGroup(tuple(f"c{m:03d}" for m in members), spec.penalty_multiplier)
        )

    return SimState(spec=spec, cluster=Cluster(nodes, apps), rng=rng, groups=groups)


def sample_update_arrivals(
    state: SimState, tick: int, rng: np.random.Generator
) -> List[UpdateRequest]:
    """Draw this tick's new update requests.

    The count is Poisson with mean ``arrival_rate``; frequent-update
    classifiers are three times as likely to be targeted as the rest.
    """
    spec = state.spec
    if spec.arrival_rate == 0:
        return []
    count = int(rng.poisson(spec.arrival_rate))
    if count == 0:
        return []
    targets = list(state.cluster.classifiers())
    if not targets:
        return []
    w = np.array([FREQUENT_ARRIVAL_WEIGHT if c.frequent_update else 1.0 for _, c in targets])
    picks = rng.choice(len(targets), size=count, p=w / w.sum())
    out = []
    g_lo, g_hi = spec.gain_range
    d_lo, d_hi = spec.delta_mb_range
    r_lo, r_hi = spec.reduction_range
    for p in picks:
        app, clf = targets[int(p)]
        gain = float(rng.uniform(g_lo, g_hi))
        delta = float(rng.uniform(d_lo, d_hi))
        lat = float(rng.uniform(r_lo, r_hi))
        exe = float(rng.uniform(r_lo, r_hi))
        partners = set(state.partners(clf.id))
        correlated = tuple(
            u.id
            for u in list(state.queue) + list(state.inflight.values()) + out
            if u.classifier_id in partners
        )
        out.append(
            UpdateRequest(
                id=f"u{state.next_seq:06d}",
                app_id=app.id,
                node_id=app.node_id,
                classifier_id=clf.id,
                delta_mb=delta,
                accuracy_gain=gain,
                latency_reduction=lat,
                exec_reduction=exe,
                arrival_tick=tick,
                correlated_with=correlated,
            )
        )
        state.next_seq += 1
    return out


def mark_updated(state: SimState, classifier_id: str) -> None:
    """Record that ``classifier_id`` was updated: it is matched, its partners are not."""
    state.unmatched.discard(classifier_id)
    state.unmatched.update(state.partners(classifier_id))


def apply_drift(state: SimState, tick: int) -> SimState:
    """Degrade classifier accuracy by one tick of drift.

    Frequent-update classifiers lose ``drift_per_tick``. A correlated
    classifier whose partner was updated after it loses
    ``drift_per_tick * penalty_multiplier`` until it is updated itself.
    Drift never takes accuracy below ``accuracy_floor``.
    """
    spec = state.spec
    d = spec.drift_per_tick
    if d == 0:
        return state
    for _, c in state.cluster.classifiers():
        if c.id in state.unmatched:
            loss = d * state.multiplier(c.id)
        elif c.frequent_update:
            loss = d
        else:
            continue
        c.accuracy = max(c.accuracy - loss, min(c.accuracy, spec.accuracy_floor))
    return state
