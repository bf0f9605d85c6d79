"""
Driver-Based Access Adaptation

Splits the chain into safe and unsafe drivers by estimated collision
probability and gives unsafe drivers the larger channel-access probability.
The leader, which sends every warning, is Unsafe whenever any follower is.
The split is recomputed from fresh estimates until the class vector repeats.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.kinematics import SafetyClass
from app.core.montecarlo import ROUND_STREAM, derive_seed, estimate
from app.core.scenario import ScenarioConfig
from app.utils.emoji_logger import EmojiLogger

logger = logging.getLogger(__name__)


class AssignmentOrderError(ValueError):
    """Raised when unsafe drivers would get a smaller access probability than safe ones."""
    pass


class RuleKind(str, Enum):
    QUANTILE = "quantile"
    THRESHOLD = "threshold"


@dataclass(frozen=True)
class ClassificationRule:
    """Unsafe iff collision probability exceeds the cutoff.

    ``QUANTILE`` uses the chain's q-quantile as cutoff, ``THRESHOLD`` an absolute value.
    """
    kind: RuleKind = RuleKind.QUANTILE
    value: float = 0.5

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", RuleKind(self.kind))
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"Classification cutoff must be in [0, 1], got {self.value}")

    def cutoff(self, probs: np.ndarray) -> float:
        if self.kind is RuleKind.QUANTILE:
            return float(np.quantile(probs, self.value))
        return self.value


@dataclass(frozen=True)
class AccessAssignment:
    """Channel-access probability of each chain vehicle.

    ``background_p`` is used by vehicles in the other lanes. Every probability
    lies strictly inside (0, 1).
    """
    p_access: Tuple[float, ...]
    classes: Tuple[SafetyClass, ...]
    background_p: float
    iterations: int = 0
    converged: bool = True

    def __post_init__(self) -> None:
        if len(self.p_access) != len(self.classes):
            raise ValueError("p_access and classes differ in length")
        outside = [p for p in (*self.p_access, self.background_p) if not 0.0 < p < 1.0]
        if outside:
            raise ValueError(f"Access probabilities must lie in (0, 1), got {outside}")
        unsafe = [p for p, c in zip(self.p_access, self.classes) if c is SafetyClass.UNSAFE]
        safe = [p for p, c in zip(self.p_access, self.classes) if c is SafetyClass.SAFE]
        if unsafe and safe and min(unsafe) < max(safe):
            raise AssignmentOrderError("Every unsafe driver needs p >= every safe driver's p")

    @property
    def unsafe_indices(self) -> List[int]:
        return [k for k, c in enumerate(self.classes) if c is SafetyClass.UNSAFE]


@dataclass(frozen=True)
class AdaptationConfig:
    """Knobs of the iterative safe/unsafe split."""
    p_safe: float
    p_unsafe: float
    rule: ClassificationRule = field(default_factory=ClassificationRule)
    max_iterations: int = 6
    trials: Optional[int] = None
    seed: Optional[int] = None
    initial_classes: Optional[Tuple[SafetyClass, ...]] = None

    def __post_init__(self) -> None:
        if self.p_unsafe < self.p_safe:
            raise AssignmentOrderError(
                f"p_unsafe ({self.p_unsafe}) must be >= p_safe ({self.p_safe})"
            )
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass(frozen=True)
class TraceEntry:
    """One round of the loop: estimates under the round's assignment and the resulting split."""
    iteration: int
    p_access: Tuple[float, ...]
    vehicle_probs: Tuple[float, ...]
    vehicle_stderr: Tuple[float, ...]
    chain_prob: float
    classes: Tuple[SafetyClass, ...]


@dataclass
class AdaptationResult:
    """Final assignment and the per-round trace.

    ``cycle_length`` is set when the class vector came back to one used
    ``cycle_length`` rounds earlier without settling.
    """
    assignment: AccessAssignment
    trace: List[TraceEntry]
    cycle_length: Optional[int] = None


def classify(collision_probs: Sequence[float], rule: ClassificationRule = ClassificationRule()
             ) -> Tuple[SafetyClass, ...]:
    """Label each vehicle Unsafe when its collision probability exceeds the rule's cutoff."""
    probs = np.asarray(collision_probs, dtype=float)
    if np.any((probs < 0) | (probs > 1)):
        raise ValueError("Collision probabilities must lie in [0, 1]")
    cutoff = rule.cutoff(probs)
    return tuple(SafetyClass.UNSAFE if p > cutoff else SafetyClass.SAFE for p in probs)


def classify_chain(collision_probs: Sequence[float],
                   rule: ClassificationRule = ClassificationRule()) -> Tuple[SafetyClass, ...]:
    """Classify the followers, then give the leader the class of the warning it sends.

    The leader never hits anyone but originates every warning, so it is Unsafe
    as soon as any follower is.
    """
    probs = np.asarray(collision_probs, dtype=float)
    if len(probs) < 2:
        raise ValueError("A chain needs a leader and at least one follower")
    followers = classify(probs[1:], rule)
    leader = SafetyClass.UNSAFE if SafetyClass.UNSAFE in followers else SafetyClass.SAFE
    return (leader, *followers)


def assign(classes: Sequence[SafetyClass], p_safe: float, p_unsafe: float,
           background_p: Optional[float] = None) -> AccessAssignment:
    """Map Safe to p_safe and Unsafe to p_unsafe; other lanes default to p_safe."""
    if p_unsafe < p_safe:
        raise AssignmentOrderError(f"p_unsafe ({p_unsafe}) must be >= p_safe ({p_safe})")
    classes = tuple(SafetyClass(c) for c in classes)
    p_access = tuple(p_unsafe if c is SafetyClass.UNSAFE else p_safe for c in classes)
    return AccessAssignment(p_access, classes, p_safe if background_p is None else background_p)


def uniform_assignment(n: int, p: float) -> AccessAssignment:
    """Equal-probability baseline: every vehicle in every lane uses p."""
    return assign((SafetyClass.SAFE,) * n, p, p)


def adapt(scenario: ScenarioConfig, config: AdaptationConfig, workers: int = 1) -> AdaptationResult:
    """Iterate estimate -> classify -> assign until the class vector repeats.

    Each round estimates with its own seed derived from (master seed, round), so
    rounds are independent yet reproducible. A vector equal to the current one
    is a fixed point. A vector seen in an earlier round closes a cycle and ends
    the loop unconverged. Hitting ``max_iterations`` returns the last assignment
    with ``converged`` False.
    """
    master = scenario.seed if config.seed is None else config.seed
    trials = scenario.trials if config.trials is None else config.trials
    n = scenario.chain_length
    classes = config.initial_classes or (SafetyClass.SAFE,) * n
    if len(classes) != n:
        raise ValueError(f"initial_classes must have {n} entries, got {len(classes)}")

    current = assign(classes, config.p_safe, config.p_unsafe)
    trace: List[TraceEntry] = []
    seen: Dict[Tuple[SafetyClass, ...], int] = {}
    converged = False
    cycle_length: Optional[int] = None

    for iteration in range(config.max_iterations):
        seen[current.classes] = iteration
        round_scenario = replace(scenario, seed=derive_seed(master, ROUND_STREAM, iteration),
                                 trials=trials)
        result = estimate(round_scenario, current, workers=workers)
        new_classes = classify_chain(result.vehicle_probs, config.rule)
        trace.append(TraceEntry(
            iteration=iteration + 1,
            p_access=current.p_access,
            vehicle_probs=tuple(float(p) for p in result.vehicle_probs),
            vehicle_stderr=tuple(float(s) for s in result.vehicle_stderr),
            chain_prob=result.chain_prob,
            classes=new_classes,
        ))
        logger.debug("round %d: unsafe=%s", iteration + 1,
                     [k for k, c in enumerate(new_classes) if c is SafetyClass.UNSAFE])
        if new_classes == current.classes:
            converged = True
            break
        if new_classes in seen:
            cycle_length = iteration + 1 - seen[new_classes]
            break
        current = assign(new_classes, config.p_safe, config.p_unsafe)

    if cycle_length is not None:
        EmojiLogger.log('adapt', f"Class vector cycles with period {cycle_length} "
                                 f"(p_safe={config.p_safe}, p_unsafe={config.p_unsafe})", 'warning')
    elif not converged:
        EmojiLogger.log('adapt', f"No fixed point after {config.max_iterations} rounds "
                                 f"(p_safe={config.p_safe}, p_unsafe={config.p_unsafe})", 'warning')

    final = replace(current, iterations=len(trace), converged=converged)
    return AdaptationResult(assignment=final, trace=trace, cycle_length=cycle_length)
