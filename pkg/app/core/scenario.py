"""
Highway Scenario

Scenario parameters, per-trial geometry sampling and the pairwise expected-slot
matrix of a braking chain embedded in an N-lane highway.

Lateral lane separation is neglected: every vehicle in every lane interferes at
its longitudinal distance to the receiver, floored at ``min_distance``. Vehicles
in the other lanes only interfere; they never brake.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from app.core.channel import ChannelParams, MacMode, packet_success_many
from app.core.timing import LinkBudget

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DriverProfile:
    """Multipliers applied to one chain position's drawn reaction time, gap and braking."""
    tau_scale: float = 1.0
    gap_scale: float = 1.0
    decel_scale: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a Monte Carlo trial needs; all distances in m, times in s."""
    budget: LinkBudget
    channel: ChannelParams
    chain_length: int = 8
    lanes: int = 3
    vehicles_per_lane: int = 8
    speed: float = 30.0
    tau_median: float = 1.0
    tau_sigma_log: float = 0.3
    tau_min: float = 0.3
    tau_max: float = 3.0
    gap_low: float = 15.0
    gap_high: float = 40.0
    deceleration: float = 6.0
    min_distance: float = 1.0
    deadline_floor: float = 1e-3
    relay_cascade: bool = False
    profiles: Tuple[DriverProfile, ...] = field(default_factory=tuple)
    trials: int = 2000
    seed: int = 20130601

    def __post_init__(self) -> None:
        if self.chain_length < 2:
            raise ValueError(f"chain_length must be >= 2, got {self.chain_length}")
        if self.lanes < 1:
            raise ValueError(f"lanes must be >= 1, got {self.lanes}")
        if self.vehicles_per_lane < 0:
            raise ValueError("vehicles_per_lane must be >= 0")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.speed > 0 or not self.deceleration > 0:
            raise ValueError("speed and deceleration must be > 0")
        if not 0 < self.tau_min <= self.tau_median <= self.tau_max:
            raise ValueError("need 0 < tau_min <= tau_median <= tau_max")
        if self.tau_sigma_log < 0:
            raise ValueError("tau_sigma_log must be >= 0")
        if not 0 < self.gap_low <= self.gap_high:
            raise ValueError("need 0 < gap_low <= gap_high")
        if not self.min_distance > 0:
            raise ValueError("min_distance must be > 0")
        if self.profiles and len(self.profiles) != self.chain_length:
            raise ValueError(
                f"profiles must list one entry per chain vehicle ({self.chain_length}), "
                f"got {len(self.profiles)}"
            )

    def profile(self, index: int) -> DriverProfile:
        return self.profiles[index] if self.profiles else DriverProfile()

    @property
    def other_lane_count(self) -> int:
        return (self.lanes - 1) * self.vehicles_per_lane


@dataclass(frozen=True)
class TrialGeometry:
    """Drawn layout of one trial.

    ``taus[0]`` is unused (the leader does not react); ``gaps[k]`` separates
    vehicle k from vehicle k + 1.
    """
    gaps: np.ndarray
    taus: np.ndarray
    chain_positions: np.ndarray
    other_positions: np.ndarray
    decelerations: np.ndarray


def _truncated_lognormal(rng: np.random.Generator, size: int, median: float, sigma: float,
                         low: float, high: float) -> np.ndarray:
    values = median * np.exp(sigma * rng.standard_normal(size))
    outside = (values < low) | (values > high)
    while np.any(outside):
        values[outside] = median * np.exp(sigma * rng.standard_normal(int(outside.sum())))
        outside = (values < low) | (values > high)
    return values


def sample_geometry(scenario: ScenarioConfig, rng: np.random.Generator) -> TrialGeometry:
    """Draw gaps, reaction times and the other-lane layout for one trial.

    The draw order is fixed so that paired runs under different access
    probabilities see identical physical samples.
    """
    n = scenario.chain_length
    gaps = rng.uniform(scenario.gap_low, scenario.gap_high, n - 1)
    taus = np.zeros(n)
    taus[1:] = _truncated_lognormal(rng, n - 1, scenario.tau_median, scenario.tau_sigma_log,
                                    scenario.tau_min, scenario.tau_max)
    other = []
    for _ in range(scenario.lanes - 1):
        start = rng.uniform(-scenario.gap_high, scenario.gap_high)
        spacing = rng.uniform(scenario.gap_low, scenario.gap_high, scenario.vehicles_per_lane)
        other.append(start - np.concatenate(([0.0], np.cumsum(spacing[:-1]))))

    for k in range(1, n):
        profile = scenario.profile(k)
        gaps[k - 1] *= profile.gap_scale
        taus[k] *= profile.tau_scale
    decels = np.array([scenario.deceleration * scenario.profile(k).decel_scale for k in range(n)])

    positions = -np.concatenate(([0.0], np.cumsum(gaps)))
    other_positions = np.concatenate(other) if other else np.zeros(0)
    return TrialGeometry(gaps=gaps, taus=taus, chain_positions=positions,
                         other_positions=other_positions, decelerations=decels)


def fixed_geometry(scenario: ScenarioConfig, gaps: Sequence[float],
                   taus: Optional[Sequence[float]] = None) -> TrialGeometry:
    """Deterministic layout for closed-form reports.

    Other lanes copy the chain spacing, shifted by a fraction of the mean gap per lane.
    """
    gaps = np.asarray(gaps, dtype=float)
    n = len(gaps) + 1
    tau_values = np.zeros(n)
    tau_values[1:] = scenario.tau_median if taus is None else np.asarray(taus, dtype=float)
    positions = -np.concatenate(([0.0], np.cumsum(gaps)))
    mean_gap = float(gaps.mean()) if len(gaps) else scenario.gap_low
    other = [positions - lane * mean_gap / scenario.lanes for lane in range(1, scenario.lanes)]
    other_positions = np.concatenate(other) if other else np.zeros(0)
    decels = np.full(n, scenario.deceleration)
    return TrialGeometry(gaps=gaps, taus=tau_values, chain_positions=positions,
                         other_positions=other_positions, decelerations=decels)


def link_matrices(geometry: TrialGeometry, p_chain: Sequence[float], p_background: float,
                  channel: ChannelParams, min_distance: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Success probability and expected slots for every forward link of the chain.

    Returns ``(success, slots)``, both shaped (n, n) and indexed [transmitter, receiver].
    Only entries with transmitter ahead of receiver are meaningful; ``slots[a, a + 1]``
    is 0 (brake lights) and infeasible or backward links are ``inf``.
    """
    x_chain = geometry.chain_positions
    n = len(x_chain)
    x_all = np.concatenate((x_chain, geometry.other_positions))
    p_chain = np.asarray(p_chain, dtype=float)
    p_all = np.concatenate((p_chain, np.full(len(geometry.other_positions), p_background)))

    # distance from every vehicle k to every chain receiver b
    to_receiver = np.maximum(np.abs(x_all[None, :] - x_chain[:, None]), min_distance)
    forward = np.triu(np.ones((n, n), dtype=bool), k=1)
    link = np.where(forward, x_chain[:, None] - x_chain[None, :], 1.0)

    k_index = np.arange(len(x_all))
    mask = (k_index[None, None, :] != np.arange(n)[:, None, None]) & \
           (k_index[None, None, :] != np.arange(n)[None, :, None])
    success = packet_success_many(link, np.broadcast_to(to_receiver[None, :, :], mask.shape),
                                  p_all, channel, mask=mask)
    success = np.where(forward, success, 0.0)

    p_rx = p_chain
    if channel.mode is MacMode.SAP:
        p_rx = np.minimum(2.0 * p_chain, 1.0) if channel.sap_approx \
            else np.minimum(2.0 * p_chain - p_chain ** 2, 1.0)
    per_slot = success * p_chain[:, None] * (1.0 - p_rx[None, :])
    with np.errstate(divide="ignore"):
        slots = np.where(per_slot > 0, 1.0 / np.where(per_slot > 0, per_slot, 1.0), math.inf)
    slots = np.where(forward, slots, math.inf)
    idx = np.arange(n - 1)
    slots[idx, idx + 1] = 0.0
    return success, slots
