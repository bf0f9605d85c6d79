"""
Monte Carlo Trial Engine

Slot-level validation oracle for the closed-form success probability, single
braking-chain trials and their aggregation into collision-probability
estimates.

Every trial draws from its own generator seeded by (master seed, trial index),
so results do not depend on how trials are spread over worker processes.
"""

import logging
import math
from dataclasses import dataclass
from multiprocessing import Pool
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np

from app.core.channel import ChannelParams, Interferer, MacMode
from app.core.kinematics import (
    BrakeSchedule,
    brake_onset_with_comms,
    brake_onset_with_relays,
    build_chain,
    simulate_chain_braking,
)
from app.core.scenario import ScenarioConfig, link_matrices, sample_geometry
from app.core.timing import apply_deadline_floor, reception_delay_pairwise, transmission_opportunities

if TYPE_CHECKING:
    from app.core.adaptation import AccessAssignment

logger = logging.getLogger(__name__)

# spawn-key domains so trial and adaptation-round streams never overlap
TRIAL_STREAM = 0
ROUND_STREAM = 1
ORACLE_CHUNK = 100_000


@dataclass(frozen=True)
class OracleResult:
    estimate: float
    stderr: float
    slots: int


@dataclass
class TrialOutcome:
    """Result of one braking episode."""
    index: int
    collided: np.ndarray
    onset_times: np.ndarray
    comm_delays: np.ndarray
    infeasible_links: int = 0

    @property
    def chain_collision(self) -> bool:
        return bool(self.collided.any())


@dataclass
class EstimateResult:
    """Aggregated collision probabilities over ``trials`` paired-seed trials."""
    trials: int
    vehicle_probs: np.ndarray
    vehicle_stderr: np.ndarray
    chain_prob: float
    chain_stderr: float
    mean_onsets: np.ndarray
    mean_delays: np.ndarray
    warning_availability: np.ndarray
    mean_collisions: float = 0.0
    infeasible_rate: float = 0.0


@dataclass
class TrialBatch:
    """Per-trial arrays in trial-index order."""
    collided: np.ndarray
    onsets: np.ndarray
    delays: np.ndarray
    infeasible: np.ndarray


def bernoulli_stderr(p_hat: float, trials: int) -> float:
    """Standard error sqrt(p(1-p)/n) of a Bernoulli mean."""
    return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / trials)


def derive_seed(master_seed: int, stream: int, index: int) -> int:
    """Deterministic 64-bit child seed for (master seed, stream, index)."""
    sequence = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(stream, int(index)))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(master_seed), spawn_key=(TRIAL_STREAM, int(trial_index)))
    )


#----------# CHANNEL ORACLE #----------#

def slot_oracle_success(r: float, interferers: Sequence[Interferer], params: ChannelParams,
                        slots: int, seed: int) -> OracleResult:
    """Empirical decoding probability from per-slot Bernoulli activity and exponential fading.

    Under SAP an interferer is active in a slot when it transmitted in that slot
    or in the previous one.
    """
    if slots < 1:
        raise ValueError(f"slots must be >= 1, got {slots}")
    if not interferers:
        return OracleResult(1.0, 0.0, slots)

    rng = np.random.default_rng(seed)
    d = np.array([i.r_i for i in interferers], dtype=float)
    p = np.array([i.p_i for i in interferers], dtype=float)
    gains = d ** -params.alpha
    signal_gain = r ** -params.alpha
    sap = params.mode is MacMode.SAP

    successes = 0
    previous = rng.random(len(p)) < p if sap else None
    remaining = slots
    while remaining > 0:
        size = min(ORACLE_CHUNK, remaining)
        fired = rng.random((size, len(p))) < p
        if sap:
            shifted = np.vstack((previous[None, :], fired[:-1]))
            active = fired | shifted
            previous = fired[-1]
        else:
            active = fired
        h = rng.exponential(1.0, size)
        h_i = rng.exponential(1.0, (size, len(p)))
        interference = (active * h_i * gains).sum(axis=1)
        signal = h * signal_gain
        ok = np.where(interference > 0, signal > params.beta_linear * interference, True)
        successes += int(ok.sum())
        remaining -= size

    estimate = successes / slots
    return OracleResult(estimate, bernoulli_stderr(estimate, slots), slots)


#----------# TRIALS #----------#

def run_trial(scenario: ScenarioConfig, assignment: "AccessAssignment", trial_index: int,
              comms_enabled: bool = True, ideal_channel: bool = False) -> TrialOutcome:
    """Play one braking episode.

    Args:
        scenario: Scenario parameters; ``scenario.seed`` is the master seed.
        assignment: Access probabilities of the chain and of the other lanes.
        trial_index: Selects the trial's random stream.
        comms_enabled: When False every driver relies on brake lights only.
        ideal_channel: Deliver every warning instantly (lower bound on collisions).
    """
    rng = trial_rng(scenario.seed, trial_index)
    geometry = sample_geometry(scenario, rng)
    n = scenario.chain_length
    taus = geometry.taus
    slot = scenario.budget.slot_seconds
    infeasible = 0
    usable = None

    if ideal_channel:
        delays = np.zeros(n)
    elif not comms_enabled:
        delays = np.full(n, math.inf)
        delays[:2] = 0.0
    else:
        _, slots = link_matrices(geometry, assignment.p_access, assignment.background_p,
                                 scenario.channel, scenario.min_distance)
        forward = np.triu(np.ones((n, n), dtype=bool), k=2)
        infeasible = int(np.isinf(slots[forward]).sum())
        usable = apply_deadline_floor(slots, transmission_opportunities(scenario.budget),
                                      scenario.deadline_floor)
        delays = np.zeros(n)
        for i in range(1, n):
            delays[i] = reception_delay_pairwise(i, usable, taus, slot)

    if comms_enabled and scenario.relay_cascade and usable is not None:
        onsets = brake_onset_with_relays(taus[1:], delays[1:], usable, slot)
    else:
        onsets = brake_onset_with_comms(taus[1:], delays[1:])

    chain = build_chain(geometry.gaps, taus[1:], scenario.speed)
    schedule = BrakeSchedule(tuple(onsets), tuple(float(a) for a in geometry.decelerations))
    report = simulate_chain_braking(chain, schedule)
    return TrialOutcome(
        index=trial_index,
        collided=np.array(report.collided, dtype=bool),
        onset_times=np.array(onsets),
        comm_delays=delays,
        infeasible_links=infeasible,
    )


def _run_chunk(args: Tuple) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    scenario, assignment, start, stop, comms_enabled, ideal_channel = args
    outcomes = [run_trial(scenario, assignment, k, comms_enabled, ideal_channel)
                for k in range(start, stop)]
    return (
        np.array([o.collided for o in outcomes]),
        np.array([o.onset_times for o in outcomes]),
        np.array([o.comm_delays for o in outcomes]),
        np.array([o.infeasible_links for o in outcomes]),
    )


def _chunks(trials: int, workers: int) -> List[Tuple[int, int]]:
    pieces = max(1, min(trials, workers * 4))
    bounds = np.linspace(0, trials, pieces + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run_trials(scenario: ScenarioConfig, assignment: "AccessAssignment",
               comms_enabled: bool = True, ideal_channel: bool = False,
               workers: int = 1) -> TrialBatch:
    """Run every trial of the scenario and return per-trial arrays in index order."""
    tasks = [(scenario, assignment, a, b, comms_enabled, ideal_channel)
             for a, b in _chunks(scenario.trials, workers)]
    if workers > 1 and len(tasks) > 1:
        with Pool(processes=workers) as pool:
            parts = pool.map(_run_chunk, tasks)
    else:
        parts = [_run_chunk(task) for task in tasks]
    return TrialBatch(
        collided=np.concatenate([part[0] for part in parts]),
        onsets=np.concatenate([part[1] for part in parts]),
        delays=np.concatenate([part[2] for part in parts]),
        infeasible=np.concatenate([part[3] for part in parts]),
    )


def summarize(batch: TrialBatch) -> EstimateResult:
    """Collapse per-trial arrays into probabilities and standard errors."""
    trials = batch.collided.shape[0]
    vehicle_counts = batch.collided.sum(axis=0)
    vehicle_probs = vehicle_counts / trials
    chain_count = int(batch.collided.any(axis=1).sum())
    chain_prob = chain_count / trials

    finite = np.isfinite(batch.delays)
    with np.errstate(invalid="ignore"):
        delay_sums = np.where(finite, batch.delays, 0.0).sum(axis=0)
        available = finite.sum(axis=0)
        mean_delays = np.where(available > 0, delay_sums / np.maximum(available, 1), math.nan)

    return EstimateResult(
        trials=trials,
        vehicle_probs=vehicle_probs,
        vehicle_stderr=np.array([bernoulli_stderr(p, trials) for p in vehicle_probs]),
        chain_prob=chain_prob,
        chain_stderr=bernoulli_stderr(chain_prob, trials),
        mean_onsets=batch.onsets.mean(axis=0),
        mean_delays=mean_delays,
        warning_availability=available / trials,
        mean_collisions=float(vehicle_counts.sum()) / trials,
        infeasible_rate=float(batch.infeasible.sum()) / trials,
    )


def estimate(scenario: ScenarioConfig, assignment: "AccessAssignment", comms_enabled: bool = True,
             ideal_channel: bool = False, workers: int = 1) -> EstimateResult:
    """Per-vehicle and chain collision probabilities under an access assignment."""
    return summarize(run_trials(scenario, assignment, comms_enabled, ideal_channel, workers))


@dataclass(frozen=True)
class PairedComparison:
    """Chain collision probability of two configurations on identical trial seeds."""
    prob_a: float
    prob_b: float
    difference: float
    stderr: float
    trials: int
    worse_trials: int

    @property
    def z_score(self) -> float:
        return self.difference / self.stderr if self.stderr > 0 else math.inf


def _pair(candidate: TrialBatch, baseline: TrialBatch) -> PairedComparison:
    chain_a = candidate.collided.any(axis=1).astype(float)
    chain_b = baseline.collided.any(axis=1).astype(float)
    diff = chain_b - chain_a
    trials = len(diff)
    stderr = float(diff.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    worse = int((candidate.collided.sum(axis=1) > baseline.collided.sum(axis=1)).sum())
    return PairedComparison(
        prob_a=float(chain_a.mean()),
        prob_b=float(chain_b.mean()),
        difference=float(diff.mean()),
        stderr=stderr,
        trials=trials,
        worse_trials=worse,
    )


def paired_comparison(scenario: ScenarioConfig, assignment: "AccessAssignment",
                      workers: int = 1) -> PairedComparison:
    """Compare warnings against the brake-light-only chain on the same seeds.

    ``difference`` is baseline minus communications, positive when the warnings
    help; ``worse_trials`` counts trials where communications added collisions.
    """
    with_comms = run_trials(scenario, assignment, True, False, workers)
    baseline = run_trials(scenario, assignment, False, False, workers)
    return _pair(with_comms, baseline)


def compare_assignments(scenario: ScenarioConfig, candidate: "AccessAssignment",
                        baseline: "AccessAssignment", workers: int = 1) -> PairedComparison:
    """Two access assignments on the same trial seeds.

    ``prob_a`` belongs to ``candidate``, ``prob_b`` to ``baseline``; a positive
    ``difference`` means the candidate collides less.
    """
    return _pair(run_trials(scenario, candidate, workers=workers),
                 run_trials(scenario, baseline, workers=workers))
