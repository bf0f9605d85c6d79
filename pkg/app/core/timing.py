"""
Delay Model

Expected number of slots until a warning is first received, the success
probability within a tolerable delay, and the average reception delay D(i)
along a braking chain when a single middle vehicle may relay the warning.

Expected slots compose additively across legs (expected values are summed, no
convolution of the geometric distributions).
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.channel import ChannelParams, Interferer, MacMode, packet_success, sap_effective_probability

logger = logging.getLogger(__name__)


class InfeasibleLinkError(ValueError):
    """Raised when a link can never deliver a packet (per-slot success is zero)."""

    def __init__(self, p_success: float, p_tr: float, p_rx: float):
        self.p_success = p_success
        self.p_tr = p_tr
        self.p_rx = p_rx
        super().__init__(
            f"Infeasible link: P_s={p_success:g}, p_tr={p_tr:g}, p_rx={p_rx:g} "
            "give zero per-slot success"
        )


@dataclass(frozen=True)
class LinkBudget:
    """Packet length, data rate and tolerable delay of the warning link."""
    packet_bits: float
    rate_bps: float
    tolerable_delay: float

    def __post_init__(self) -> None:
        if not self.packet_bits > 0:
            raise ValueError(f"Packet length must be > 0 bits, got {self.packet_bits}")
        if not self.rate_bps > 0:
            raise ValueError(f"Data rate must be > 0, got {self.rate_bps}")
        if not self.tolerable_delay > 0:
            raise ValueError(f"Tolerable delay must be > 0 s, got {self.tolerable_delay}")

    @property
    def slot_seconds(self) -> float:
        return self.packet_bits / self.rate_bps


@dataclass
class ChainTiming:
    """Per-vehicle timing of one chain; index 0 is the leader."""
    expected_slots: List[float]
    taus: List[float]
    reception_delays: List[float]
    opportunities: int = 0
    deadline_success: List[float] = field(default_factory=list)


def expected_slots(p_success: float, p_tr: float, p_rx: float) -> float:
    """Mean slots to the first successful reception: 1 / (P_s * p_tr * (1 - p_rx))."""
    per_slot = p_success * p_tr * (1.0 - p_rx)
    if per_slot <= 0.0:
        raise InfeasibleLinkError(p_success, p_tr, p_rx)
    return 1.0 / per_slot


def link_expected_slots(r: float, interferers: Sequence[Interferer], p_tr: float, p_rx: float,
                        params: ChannelParams) -> float:
    """Expected slots for one link, with the receiver's own activity remapped under SAP."""
    p_success = packet_success(r, interferers, params)
    if params.mode is MacMode.SAP:
        p_rx = sap_effective_probability(p_rx, approx=params.sap_approx)
    return expected_slots(p_success, p_tr, p_rx)


def transmission_opportunities(budget: LinkBudget) -> int:
    """Whole slots that fit in the tolerable delay: floor(τ_tol R / L)."""
    # tolerate representation error such as 0.05 * 6e6 / 3000 = 99.99999...
    raw = budget.tolerable_delay * budget.rate_bps / budget.packet_bits
    return max(int(math.floor(raw + 1e-9)), 0)


def success_within_deadline(s: float, opportunities: int) -> float:
    """Probability of at least one success in D slots: 1 - (1 - 1/s)^D."""
    if opportunities <= 0:
        return 0.0
    if math.isinf(s):
        return 0.0
    if s < 1.0:
        raise ValueError(f"Expected slots must be >= 1, got {s}")
    # log1p keeps precision for large s
    return -math.expm1(opportunities * math.log1p(-1.0 / s)) if s > 1.0 else 1.0


def reception_delay_pairwise(i: int, slots: np.ndarray, taus: Sequence[float],
                             slot_seconds: float) -> float:
    """Average delay before vehicle i first learns of the leader's braking.

    ``slots[a, b]`` is the expected slots for vehicle a to reach vehicle b
    (``inf`` for an unavailable link). ``taus[j]`` is driver j's reaction time
    (``taus[0]`` unused). Candidates for i > 2 are: a relay j in 1..i-2 that
    brakes after hearing the leader and then transmits, the direct link, and the
    predecessor that heard the leader directly.
    """
    if i < 1:
        raise ValueError(f"Vehicle index must be >= 1, got {i}")
    if i == 1:
        return 0.0
    if i == 2:
        return slot_seconds * slots[0, 2]

    direct = slot_seconds * slots[0, i]
    via_predecessor = slot_seconds * slots[0, i - 1] + taus[i - 1]
    best = min(direct, via_predecessor)
    for j in range(1, i - 1):
        relayed = slot_seconds * slots[0, j] + taus[j] + slot_seconds * slots[j, i]
        if relayed < best:
            best = relayed
    return best


def separation_matrix(s: Callable[[int], float], n: int) -> np.ndarray:
    """Expand a separation-indexed slot function into a pairwise matrix."""
    matrix = np.full((n, n), math.inf)
    for a in range(n):
        for b in range(a + 1, n):
            matrix[a, b] = s(b - a)
    return matrix


def reception_delay(i: int, s: Callable[[int], float], taus: Sequence[float],
                    slot_seconds: float) -> float:
    """D(i) with expected slots given as a function of index separation (s(1) = 0)."""
    return reception_delay_pairwise(i, separation_matrix(s, i + 1), taus, slot_seconds)


def chain_timing(slots: np.ndarray, taus: Sequence[float], budget: LinkBudget,
                 deadline_floor: Optional[float] = None) -> ChainTiming:
    """Evaluate s(i), P_s^D and D(i) for every vehicle of a chain.

    Links whose deadline success falls below ``deadline_floor`` are treated as
    unavailable before the delays are computed.
    """
    n = slots.shape[0]
    opportunities = transmission_opportunities(budget)
    usable = apply_deadline_floor(slots, opportunities, deadline_floor)

    # s(1) = 0: the first follower watches brake lights
    direct = [0.0] + [0.0 if i == 1 else float(slots[0, i]) for i in range(1, n)]
    deadline = [1.0] + [1.0 if i == 1 else success_within_deadline(direct[i], opportunities)
                        for i in range(1, n)]
    delays = [0.0] + [reception_delay_pairwise(i, usable, taus, budget.slot_seconds)
                      for i in range(1, n)]
    return ChainTiming(
        expected_slots=direct,
        taus=list(taus),
        reception_delays=delays,
        opportunities=opportunities,
        deadline_success=deadline,
    )


def apply_deadline_floor(slots: np.ndarray, opportunities: int,
                         deadline_floor: Optional[float]) -> np.ndarray:
    """Mark links unavailable (inf) when their deadline success is below the floor."""
    if not deadline_floor:
        return slots
    usable = np.array(slots, dtype=float, copy=True)
    n = usable.shape[0]
    for a in range(n):
        for b in range(a + 2, n):
            if success_within_deadline(usable[a, b], opportunities) < deadline_floor:
                usable[a, b] = math.inf
    return usable


def _path_label(path: Tuple[int, ...]) -> str:
    if len(path) == 2:
        return "adjacent" if path[-1] == 1 else "direct"
    relay = path[1]
    return "brake-light" if relay == path[-1] - 1 else f"relay:{relay}"


def brute_force_delay(i: int, slots: np.ndarray, taus: Sequence[float], slot_seconds: float,
                      max_relays: int = 1) -> Tuple[float, str]:
    """Walk every warning path from the leader to vehicle i and return the fastest one.

    A path visits at most ``max_relays`` intermediate vehicles, each of which
    reacts for its τ before its own leg starts. A leg from a to b costs
    ``slot_seconds * slots[a, b]``, so the leg to the next vehicle (brake
    lights) is free. Vehicle 2 only listens to the leader. Used as a reference
    for reception_delay; returns the delay and a label of the winning path.
    """
    if i < 1:
        raise ValueError(f"Vehicle index must be >= 1, got {i}")
    relays = max_relays if i > 2 else 0
    best_delay, best_path = math.inf, (0, i)
    for count in range(relays + 1):
        for middle in itertools.combinations(range(1, i), count):
            path = (0, *middle, i)
            delay = 0.0
            for a, b in zip(path[:-1], path[1:]):
                delay += slot_seconds * slots[a, b]
                if b != i:
                    delay += taus[b]
            if delay < best_delay:
                best_delay, best_path = delay, path
    return best_delay, _path_label(best_path)
