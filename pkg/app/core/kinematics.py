"""
Braking Chain Kinematics

Brake-onset times along a chain of vehicles with and without inter-vehicle
warnings, constant-deceleration trajectories and rear-end collision detection.

Vehicles cruise at a common speed, brake at constant deceleration to a stop
and, when they hit their predecessor, both are frozen at the contact point.
Vehicle length is folded into the bumper-to-bumper gap.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

_EPS = 1e-12


class KinematicsDomainError(ValueError):
    """Raised on nonpositive speeds, decelerations or gaps."""
    pass


class SafetyClass(str, Enum):
    SAFE = "safe"
    UNSAFE = "unsafe"


@dataclass(frozen=True)
class VehicleState:
    """One vehicle of the chain; index 0 is the leader."""
    index: int
    position: float
    speed: float
    gap_to_predecessor: float
    tau: float
    lane: int = 0
    p_access: float = 0.0
    safety_class: SafetyClass = SafetyClass.SAFE


@dataclass(frozen=True)
class BrakeSchedule:
    """Brake-onset time and deceleration per vehicle."""
    onset_times: Tuple[float, ...]
    decelerations: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.onset_times) != len(self.decelerations):
            raise KinematicsDomainError("onset_times and decelerations differ in length")
        if any(t < 0 for t in self.onset_times):
            raise KinematicsDomainError("Brake onset times must be >= 0")
        if any(not a > 0 for a in self.decelerations):
            raise KinematicsDomainError("Decelerations must be > 0")

    @classmethod
    def uniform(cls, onset_times: Sequence[float], deceleration: float) -> "BrakeSchedule":
        return cls(tuple(float(t) for t in onset_times), (float(deceleration),) * len(onset_times))


@dataclass(frozen=True)
class Trajectory:
    """Cruise at ``speed``, brake at ``brake_time`` with ``decel`` until stopped.

    A trajectory may be frozen at ``freeze_time`` (collision), after which its
    position stays constant.
    """
    start: float
    speed: float
    brake_time: float
    decel: float
    freeze_time: Optional[float] = None

    @property
    def stop_time(self) -> float:
        return self.brake_time + self.speed / self.decel

    def _nominal(self, t: float) -> Tuple[float, float, float]:
        if t < self.brake_time:
            return self.start + self.speed * t, self.speed, 0.0
        if t < self.stop_time:
            dt = t - self.brake_time
            x = self.start + self.speed * self.brake_time + self.speed * dt - 0.5 * self.decel * dt * dt
            return x, self.speed - self.decel * dt, -self.decel
        x = self.start + self.speed * self.brake_time + self.speed ** 2 / (2.0 * self.decel)
        return x, 0.0, 0.0

    def state(self, t: float) -> Tuple[float, float, float]:
        """Position, velocity and acceleration holding from time t onwards."""
        if self.freeze_time is not None and t >= self.freeze_time:
            return self._nominal(self.freeze_time)[0], 0.0, 0.0
        return self._nominal(t)

    def position(self, t: float) -> float:
        return self.state(t)[0]

    def breakpoints(self) -> List[float]:
        points = [self.brake_time, self.stop_time]
        if self.freeze_time is not None:
            points = [p for p in points if p < self.freeze_time] + [self.freeze_time]
        return points

    def frozen_at(self, t: float) -> "Trajectory":
        if self.freeze_time is not None and self.freeze_time <= t:
            return self
        return Trajectory(self.start, self.speed, self.brake_time, self.decel, t)


@dataclass(frozen=True)
class CollisionEvent:
    follower: int
    time: float
    position: float
    min_gap: float


@dataclass
class CollisionReport:
    """Outcome of one chain braking episode."""
    collided: List[bool]
    min_gaps: List[float]
    events: List[CollisionEvent] = field(default_factory=list)

    @property
    def count(self) -> int:
        return sum(self.collided)


def brake_onset_no_comms(taus: Sequence[float]) -> List[float]:
    """Onset times t_0..t_n when each driver reacts only to brake lights: cumulative τ."""
    onsets = [0.0]
    for tau in taus:
        onsets.append(onsets[-1] + tau)
    return onsets


def brake_onset_with_comms(taus: Sequence[float], comm_delays: Sequence[float]) -> List[float]:
    """Onset times when driver i reacts τ_i after the earlier of the predecessor's
    brake lights and the warning arriving at t_c(i)."""
    if len(comm_delays) != len(taus):
        raise ValueError("taus and comm_delays must have the same length")
    onsets = [0.0]
    for tau, t_c in zip(taus, comm_delays):
        onsets.append(tau + min(onsets[-1], t_c))
    return onsets


def brake_onset_with_relays(taus: Sequence[float], comm_delays: Sequence[float],
                            relay_slots: np.ndarray, slot_seconds: float) -> List[float]:
    """Onset times where every braked vehicle also originates a fresh warning.

    Vehicle j (1 <= j <= i-2) reaches vehicle i at t_j + slot_seconds * relay_slots[j, i];
    that arrival competes with t_c(i). Indices of ``relay_slots`` count the leader as 0.
    """
    if len(comm_delays) != len(taus):
        raise ValueError("taus and comm_delays must have the same length")
    onsets = [0.0]
    for i, (tau, t_c) in enumerate(zip(taus, comm_delays), start=1):
        warning = t_c
        for j in range(1, i - 1):
            warning = min(warning, onsets[j] + slot_seconds * relay_slots[j, i])
        onsets.append(tau + min(onsets[-1], warning))
    return onsets


def _interval_min(g0: float, dv: float, da: float, length: float) -> float:
    """Minimum of g0 + dv*t + da*t^2/2 over t in [0, length]."""
    best = g0
    if math.isfinite(length):
        best = min(best, g0 + dv * length + 0.5 * da * length * length)
    if da > 0:
        t_star = -dv / da
        if 0.0 < t_star < length:
            best = min(best, g0 + dv * t_star + 0.5 * da * t_star * t_star)
    return best


def _interval_first_root(g0: float, dv: float, da: float, length: float) -> Optional[float]:
    """Earliest t in [0, length] where g0 + dv*t + da*t^2/2 drops below zero."""
    if g0 < 0:
        return 0.0
    roots: List[float] = []
    if abs(da) < _EPS:
        if dv < 0:
            roots.append(-g0 / dv)
    else:
        disc = dv * dv - 2.0 * da * g0
        if disc >= 0:
            sq = math.sqrt(disc)
            roots.extend([(-dv - sq) / da, (-dv + sq) / da])
    valid = [t for t in roots if -_EPS <= t <= length + _EPS]
    return max(min(valid), 0.0) if valid else None


def _segments(leader: Trajectory, follower: Trajectory) -> List[Tuple[float, float]]:
    points = sorted({0.0, *[p for p in leader.breakpoints() + follower.breakpoints() if p > 0]})
    return [(points[k], points[k + 1] if k + 1 < len(points) else math.inf)
            for k in range(len(points))]


def gap_profile_minimum(leader: Trajectory, follower: Trajectory) -> float:
    """Exact minimum over time of leader position minus follower position."""
    best = math.inf
    for t0, t1 in _segments(leader, follower):
        xl, vl, al = leader.state(t0)
        xf, vf, af = follower.state(t0)
        best = min(best, _interval_min(xl - xf, vl - vf, al - af, t1 - t0))
    return best


def first_contact_time(leader: Trajectory, follower: Trajectory) -> Optional[float]:
    """Earliest time the gap turns negative, or None when the follower stops short."""
    for t0, t1 in _segments(leader, follower):
        xl, vl, al = leader.state(t0)
        xf, vf, af = follower.state(t0)
        root = _interval_first_root(xl - xf, vl - vf, al - af, t1 - t0)
        if root is not None and _interval_min(xl - xf, vl - vf, al - af, t1 - t0) < 0:
            return t0 + root
    return None


def min_gap_two_vehicles(v: float, gap: float, lead_brake_time: float, follow_brake_time: float,
                         a: float, a_follow: Optional[float] = None) -> float:
    """Smallest bumper-to-bumper distance while a follower brakes behind a leader.

    Negative values mean a collision. With equal deceleration the result is
    gap - v * max(follow_brake_time - lead_brake_time, 0).
    """
    if not v > 0:
        raise KinematicsDomainError(f"Speed must be > 0, got {v}")
    if not a > 0 or (a_follow is not None and not a_follow > 0):
        raise KinematicsDomainError("Deceleration must be > 0")
    if not gap > 0:
        raise KinematicsDomainError(f"Gap must be > 0, got {gap}")
    if lead_brake_time < 0 or follow_brake_time < 0:
        raise KinematicsDomainError("Brake times must be >= 0")
    leader = Trajectory(gap, v, lead_brake_time, a)
    follower = Trajectory(0.0, v, follow_brake_time, a if a_follow is None else a_follow)
    return gap_profile_minimum(leader, follower)


def build_chain(gaps: Sequence[float], taus: Sequence[float], speed: float,
                p_access: Optional[Sequence[float]] = None) -> List[VehicleState]:
    """Lay out a chain from follower gaps (gaps[k] is between vehicle k and k+1)."""
    chain = [VehicleState(index=0, position=0.0, speed=speed, gap_to_predecessor=math.inf,
                          tau=0.0, p_access=p_access[0] if p_access is not None else 0.0)]
    position = 0.0
    for k, (gap, tau) in enumerate(zip(gaps, taus), start=1):
        position -= gap
        chain.append(VehicleState(index=k, position=position, speed=speed,
                                  gap_to_predecessor=gap, tau=tau,
                                  p_access=p_access[k] if p_access is not None else 0.0))
    return chain


def simulate_chain_braking(chain: Sequence[VehicleState], schedule: BrakeSchedule) -> CollisionReport:
    """Play the braking episode and report every rear-end collision.

    Contacts are resolved in time order: the earliest pending contact freezes
    both vehicles, then every remaining pair is re-examined against the updated
    trajectories. ``min_gaps`` of a colliding pair is its penetration just
    before the contact was resolved.
    """
    n = len(chain)
    if len(schedule.onset_times) != n:
        raise KinematicsDomainError("Schedule length does not match the chain")
    for vehicle in chain:
        if not vehicle.speed > 0:
            raise KinematicsDomainError(f"Vehicle {vehicle.index} speed must be > 0")
    for k in range(1, n):
        if not chain[k - 1].position - chain[k].position > 0:
            raise KinematicsDomainError(f"Vehicle {k} is not behind vehicle {k - 1}")

    trajectories = [Trajectory(chain[k].position, chain[k].speed,
                               schedule.onset_times[k], schedule.decelerations[k]) for k in range(n)]
    collided = [False] * n
    min_gaps = [math.inf] * n
    events: List[CollisionEvent] = []
    pending = set(range(1, n))

    while pending:
        contacts = []
        for k in sorted(pending):
            contact = first_contact_time(trajectories[k - 1], trajectories[k])
            if contact is not None:
                contacts.append((contact, k))
        if not contacts:
            break
        contact, k = min(contacts)
        leader, follower = trajectories[k - 1], trajectories[k]
        min_gaps[k] = gap_profile_minimum(leader, follower)
        collided[k] = True
        trajectories[k - 1] = leader.frozen_at(contact)
        trajectories[k] = follower.frozen_at(contact)
        pending.discard(k)
        events.append(CollisionEvent(k, contact, follower.position(contact), min_gaps[k]))
        logger.debug("vehicle %d hits %d at t=%.3f s", k, k - 1, contact)

    for k in pending:
        min_gaps[k] = gap_profile_minimum(trajectories[k - 1], trajectories[k])
    return CollisionReport(collided=collided, min_gaps=min_gaps, events=events)
