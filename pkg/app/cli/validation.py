"""
Validation Batteries

Self-checks run by the ``validate`` command. Each battery compares a model
against an independent reference (slot-level simulation, geometric sampling,
path enumeration, time-stepped integration) on seeded random cases and
returns a BatteryResult listing every failing case with its inputs.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List

import numpy as np

from app.config.config_validator import RunConfig
from app.core.adaptation import uniform_assignment
from app.core.channel import (
    RATE_TABLE,
    ChannelParams,
    MacMode,
    db_to_linear,
    interferers_from_arrays,
    packet_success,
    sir_threshold_for_rate,
)
from app.core.kinematics import min_gap_two_vehicles
from app.core.montecarlo import bernoulli_stderr, derive_seed, run_trials, slot_oracle_success
from app.core.timing import brute_force_delay, reception_delay_pairwise, success_within_deadline
from app.utils.emoji_logger import EmojiLogger

logger = logging.getLogger(__name__)

# spawn-key domain of the validation streams, disjoint from trials and adaptation rounds
VALIDATION_STREAM = 2
DELAY_TOLERANCE = 1e-12
GAP_TOLERANCE = 1e-3


@dataclass
class BatteryResult:
    name: str
    cases: int
    passed_cases: int
    required: int
    failures: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.passed_cases >= self.required


def _rng(seed: int, battery: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, VALIDATION_STREAM, battery))


#----------# CHANNEL #----------#

def check_rate_table() -> BatteryResult:
    """Every tabulated rate maps back to its SIR threshold."""
    failures = []
    for entry in RATE_TABLE:
        observed = sir_threshold_for_rate(entry.rate_bps)
        if observed != entry.beta_db:
            failures.append({"rate_bps": entry.rate_bps, "observed": observed, "expected": entry.beta_db})
    n = len(RATE_TABLE)
    return BatteryResult("rate-table", n, n - len(failures), n, failures)


def check_channel_oracle(config: RunConfig, mode: MacMode) -> BatteryResult:
    """Closed-form success against the slot-level simulation on random configurations.

    A case passes when the two agree within 3 binomial standard errors at the
    closed-form value.
    """
    settings = config.validate_suite
    seed = config.montecarlo.seed
    rng = _rng(seed, 0 if mode is MacMode.SSP else 1)
    rates = [entry.rate_bps for entry in RATE_TABLE]
    failures = []
    passed = 0
    for case in range(settings.oracle_cases):
        k = int(rng.integers(0, 11))
        alpha = float(rng.uniform(2.0, 4.0))
        rate = float(rates[int(rng.integers(0, len(rates)))])
        r = float(rng.uniform(5.0, 100.0))
        distances = rng.uniform(5.0, 200.0, k)
        probs = rng.uniform(0.0, 0.2, k)
        params = ChannelParams(alpha=alpha, beta_linear=db_to_linear(sir_threshold_for_rate(rate)),
                               mode=mode)
        interferers = interferers_from_arrays(distances, probs)
        closed = packet_success(r, interferers, params)
        oracle = slot_oracle_success(r, interferers, params, settings.oracle_slots,
                                     seed=derive_seed(seed, VALIDATION_STREAM, 100 + case))
        stderr = bernoulli_stderr(closed, settings.oracle_slots)
        if abs(closed - oracle.estimate) <= 3.0 * stderr:
            passed += 1
        else:
            failures.append({
                "case": case, "mode": mode.value, "r": r, "alpha": alpha, "rate_bps": rate,
                "interferers": [(float(d), float(p)) for d, p in zip(distances, probs)],
                "observed": oracle.estimate, "expected": closed, "stderr": stderr,
            })
    return BatteryResult(f"channel-oracle-{mode.value}", settings.oracle_cases, passed,
                         settings.oracle_min_pass, failures)


#----------# TIMING #----------#

def check_deadline_success(config: RunConfig) -> BatteryResult:
    """1 - (1 - 1/s)^D against the fraction of geometric first-success times within D slots."""
    settings = config.validate_suite
    rng = _rng(config.montecarlo.seed, 2)
    failures = []
    for case in range(settings.deadline_cases):
        s = float(rng.uniform(1.5, 60.0))
        opportunities = int(rng.integers(1, 80))
        expected = success_within_deadline(s, opportunities)
        first = rng.geometric(1.0 / s, settings.deadline_trials)
        observed = float(np.mean(first <= opportunities))
        stderr = bernoulli_stderr(expected, settings.deadline_trials)
        if abs(observed - expected) > 3.0 * max(stderr, 1e-12):
            failures.append({"case": case, "s": s, "D": opportunities,
                             "observed": observed, "expected": expected, "stderr": stderr})
    n = settings.deadline_cases
    return BatteryResult("deadline-success", n, n - len(failures), n, failures)


def random_slot_matrix(rng: np.random.Generator, n: int, unavailable: float = 0.2) -> np.ndarray:
    """Random forward slot matrix with zero adjacent entries and some unavailable links."""
    slots = np.full((n, n), math.inf)
    for a in range(n):
        for b in range(a + 1, n):
            if b == a + 1:
                slots[a, b] = 0.0
            elif rng.random() >= unavailable:
                slots[a, b] = float(rng.uniform(1.0, 300.0))
    return slots


def check_reception_delay(config: RunConfig) -> BatteryResult:
    """Recursive D(i) against enumeration of every warning path, chains of 2 to 8 vehicles."""
    settings = config.validate_suite
    rng = _rng(config.montecarlo.seed, 3)
    failures = []
    cases = 0
    for chain in range(settings.delay_chains):
        n = int(rng.integers(2, 9))
        slots = random_slot_matrix(rng, n)
        taus = np.concatenate(([0.0], rng.uniform(0.3, 3.0, n - 1)))
        slot_seconds = float(rng.uniform(5e-4, 8e-3))
        for i in range(1, n):
            cases += 1
            observed = reception_delay_pairwise(i, slots, taus, slot_seconds)
            expected, path = brute_force_delay(i, slots, taus, slot_seconds)
            same = (math.isinf(observed) and math.isinf(expected)) or \
                abs(observed - expected) <= DELAY_TOLERANCE
            if not same:
                failures.append({"chain": chain, "vehicle": i, "path": path,
                                 "observed": observed, "expected": expected})
    return BatteryResult("reception-delay", cases, cases - len(failures), cases, failures)


#----------# KINEMATICS #----------#

def integrate_min_gap(v: np.ndarray, gap: np.ndarray, lead_brake: np.ndarray, follow_brake: np.ndarray,
                      a_lead: np.ndarray, a_follow: np.ndarray, step: float) -> np.ndarray:
    """Smallest leader-follower distance from fixed-step integration of many cases at once.

    Each step cruises up to the brake time and then decelerates for the rest of
    the step, stopping at zero speed.
    """
    def advance(x, speed, t, brake, decel):
        cruise = np.clip(brake - t, 0.0, step)
        x = x + speed * cruise
        braking = np.minimum(step - cruise, speed / decel)
        x = x + speed * braking - 0.5 * decel * braking ** 2
        return x, np.maximum(speed - decel * braking, 0.0)

    end = float(np.max(np.maximum(lead_brake + v / a_lead, follow_brake + v / a_follow)))
    x_lead, x_follow = gap.astype(float).copy(), np.zeros_like(gap, dtype=float)
    v_lead, v_follow = v.astype(float).copy(), v.astype(float).copy()
    smallest = x_lead - x_follow
    for k in range(int(math.ceil(end / step)) + 1):
        t = k * step
        x_lead, v_lead = advance(x_lead, v_lead, t, lead_brake, a_lead)
        x_follow, v_follow = advance(x_follow, v_follow, t, follow_brake, a_follow)
        smallest = np.minimum(smallest, x_lead - x_follow)
    return smallest


def check_kinematics(config: RunConfig) -> BatteryResult:
    """Closed-form minimum gap against the integrator, plus gap - vΔt for equal braking."""
    settings = config.validate_suite
    rng = _rng(config.montecarlo.seed, 4)
    n = settings.kinematics_cases
    v = rng.uniform(10.0, 40.0, n)
    gap = rng.uniform(5.0, 60.0, n)
    lead_brake = rng.uniform(0.0, 1.0, n)
    follow_brake = rng.uniform(0.0, 3.0, n)
    a_lead = rng.uniform(4.0, 9.0, n)
    equal = np.arange(n) % 2 == 0
    a_follow = np.where(equal, a_lead, rng.uniform(4.0, 9.0, n))

    reference = integrate_min_gap(v, gap, lead_brake, follow_brake, a_lead, a_follow,
                                  settings.integrator_step)
    failures = []
    for k in range(n):
        observed = min_gap_two_vehicles(float(v[k]), float(gap[k]), float(lead_brake[k]),
                                        float(follow_brake[k]), float(a_lead[k]), float(a_follow[k]))
        case = {"case": k, "v": float(v[k]), "gap": float(gap[k]), "lead_brake": float(lead_brake[k]),
                "follow_brake": float(follow_brake[k]), "a_lead": float(a_lead[k]),
                "a_follow": float(a_follow[k]), "observed": observed}
        if abs(observed - reference[k]) > GAP_TOLERANCE:
            failures.append({**case, "expected": float(reference[k]), "reference": "integrator"})
        elif equal[k]:
            closed = float(gap[k] - v[k] * max(follow_brake[k] - lead_brake[k], 0.0))
            if abs(observed - closed) > 1e-9:
                failures.append({**case, "expected": closed, "reference": "gap - v*dt"})
    return BatteryResult("kinematics", n, n - len(failures), n, failures)


#----------# DETERMINISM #----------#

def check_determinism(config: RunConfig, trials: int = 64) -> BatteryResult:
    """Identical per-trial outcomes for one and for two worker processes."""
    scenario = config.scenario_config()
    scenario = replace(scenario, trials=min(trials, scenario.trials))
    assignment = uniform_assignment(scenario.chain_length, config.adaptation.p_safe)
    serial = run_trials(scenario, assignment, workers=1)
    parallel = run_trials(scenario, assignment, workers=2)
    same = (np.array_equal(serial.collided, parallel.collided)
            and np.array_equal(serial.onsets, parallel.onsets)
            and np.array_equal(serial.delays, parallel.delays))
    failures = [] if same else [{"trials": scenario.trials, "observed": "worker-dependent output"}]
    return BatteryResult("determinism", 1, int(same), 1, failures)


BATTERIES: Dict[str, Callable[[RunConfig], BatteryResult]] = {
    "rate-table": lambda config: check_rate_table(),
    "channel-oracle-ssp": lambda config: check_channel_oracle(config, MacMode.SSP),
    "channel-oracle-sap": lambda config: check_channel_oracle(config, MacMode.SAP),
    "deadline-success": check_deadline_success,
    "reception-delay": check_reception_delay,
    "kinematics": check_kinematics,
    "determinism": check_determinism,
}


def run_batteries(config: RunConfig, names: List[str] = None) -> List[BatteryResult]:
    """Run the selected batteries (all by default) and log each outcome."""
    results = []
    for name in names or list(BATTERIES):
        result = BATTERIES[name](config)
        summary = f"{result.name}: {result.passed_cases}/{result.cases} cases (need {result.required})"
        if result.passed:
            EmojiLogger.validation_passed(summary)
        else:
            EmojiLogger.validation_failure(summary)
        for failure in result.failures:
            EmojiLogger.validation_failure(f"{result.name} case failed", extra=failure)
        results.append(result)
    return results
