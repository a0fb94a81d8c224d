"""Update priority scoring.

Each pending update gets a system score (weighted headroom of its node), an
application score (weighted benefit and urgency of the update), and a single
``pval`` blending the two. ``pval`` maps onto four colour classes; Red means
the update is not worth applying.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from .cluster import Application, Node, ScenarioError, UpdateRequest

WEIGHT_TOL = 1e-9


class ConfigError(ScenarioError):
    """Invalid weights or thresholds."""


class PriorityClass(enum.Enum):
    GREEN = "Green"
    YELLOW = "Yellow"
    BLUE = "Blue"
    RED = "Red"

    @property
    def rank(self) -> int:
        """0 for Green (most urgent) through 3 for Red."""
        return _RANK[self]

    def __str__(self) -> str:
        return self.value


_RANK = {
    PriorityClass.GREEN: 0,
    PriorityClass.YELLOW: 1,
    PriorityClass.BLUE: 2,
    PriorityClass.RED: 3,
}


def _as_weights(name: str, values: Sequence[float]) -> Tuple[float, float, float, float]:
    values = tuple(float(v) for v in values)
    if len(values) != 4:
        raise ConfigError(f"{name} needs 4 components, got {len(values)}")
    if any(v < 0 or math.isnan(v) for v in values):
        raise ConfigError(f"{name} components must be nonnegative")
    if abs(math.fsum(values) - 1.0) > WEIGHT_TOL:
        raise ConfigError(f"{name} must sum to 1, got {math.fsum(values)!r}")
    return values  # type: ignore[return-value]


@dataclass(frozen=True)
class WeightConfig:
    """Blend weights for the priority score.

    ``s_weight`` orders (cpu, memory, storage, throughput); ``a_weight`` orders
    (accuracy, progress, latency, exec_time). ``c1`` weighs the system score and
    ``c2`` the application score. ``c1 <= c2`` is enforced unless
    ``relax_order`` is set, in which case only ``c1 + c2 = 1`` is required.
    """

    c1: float = 0.4
    c2: float = 0.6
    s_weight: Tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    a_weight: Tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    relax_order: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "s_weight", _as_weights("s_weight", self.s_weight))
        object.__setattr__(self, "a_weight", _as_weights("a_weight", self.a_weight))
        self.validate()

    def validate(self) -> None:
        c1, c2 = self.c1, self.c2
        if not (0.0 <= c1 <= 1.0 and 0.0 <= c2 <= 1.0):
            raise ConfigError(f"c1, c2 must lie in [0, 1], got {c1}, {c2}")
        if abs(c1 + c2 - 1.0) > WEIGHT_TOL:
            raise ConfigError(f"c1 + c2 must equal 1, got {c1 + c2!r}")
        if not self.relax_order and c1 > c2 + WEIGHT_TOL:
            raise ConfigError(f"c1 <= c2 required (c1={c1}, c2={c2})")


@dataclass(frozen=True)
class PriorityThresholds:
    green_min: float = 0.75
    yellow_min: float = 0.5
    blue_min: float = 0.25

    def __post_init__(self) -> None:
        if not (0.0 < self.blue_min < self.yellow_min < self.green_min < 1.0):
            raise ConfigError(
                "priority thresholds need 0 < blue_min < yellow_min < green_min < 1"
            )


@dataclass(frozen=True)
class PriorityScore:
    sp: float
    ap: float
    pval: float
    cls: PriorityClass


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, x))


def compute_sp(node: Node, s_weight: Sequence[float]) -> float:
    """Weighted headroom of the node: sum of w_k * (1 - utilization_k)."""
    util = node.utilization.as_tuple()
    return _clip01(math.fsum(w * (1.0 - u) for w, u in zip(s_weight, util)))


def compute_ap(app: Application, update: UpdateRequest, a_weight: Sequence[float]) -> float:
    w_acc, w_prog, w_lat, w_exec = a_weight
    return _clip01(
        math.fsum(
            (
                w_acc * update.accuracy_gain,
                w_prog * (1.0 - app.progress),
                w_lat * update.latency_reduction,
                w_exec * update.exec_reduction,
            )
        )
    )


def classify_pval(pval: float, thresholds: PriorityThresholds = PriorityThresholds()) -> PriorityClass:
    # Boundaries belong to the higher class.
    if pval >= thresholds.green_min:
        return PriorityClass.GREEN
    if pval >= thresholds.yellow_min:
        return PriorityClass.YELLOW
    if pval >= thresholds.blue_min:
        return PriorityClass.BLUE
    return PriorityClass.RED


def combine(sp: float, ap: float, weights: WeightConfig) -> float:
    return _clip01(weights.c1 * sp + weights.c2 * ap)


def assign_priority(
    update: UpdateRequest,
    node: Node,
    app: Application,
    weights: WeightConfig,
    thresholds: PriorityThresholds = PriorityThresholds(),
) -> PriorityScore:
    weights.validate()
    sp = compute_sp(node, weights.s_weight)
    ap = compute_ap(app, update, weights.a_weight)
    pval = combine(sp, ap, weights)
    return PriorityScore(sp, ap, pval, classify_pval(pval, thresholds))
