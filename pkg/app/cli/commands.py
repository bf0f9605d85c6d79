"""
Command Implementations

analyze, sweep, adapt and validate. Each command takes a validated RunConfig,
writes its tables and a run manifest into the output directory and returns a
CommandResult carrying the exit code and a summary for the console.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from app.cli.outputs import (
    ADAPT_COLUMNS,
    ANALYZE_COLUMNS,
    SWEEP_2D_COLUMNS,
    SWEEP_EQUAL_COLUMNS,
    RunManifest,
    frame_from_rows,
    write_csv,
    write_curve_script,
    write_surface_script,
)
from app.cli.validation import run_batteries
from app.config.config_validator import ConfigError, RunConfig
from app.core.adaptation import adapt
from app.core.scenario import fixed_geometry, link_matrices
from app.core.sweeps import SweepGrid, sweep_differentiated, sweep_equal
from app.core.timing import chain_timing, transmission_opportunities
from app.utils.emoji_logger import EmojiLogger

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_VALIDATION = 3


@dataclass
class CommandResult:
    exit_code: int
    outputs: List[Path] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)


def _finish(manifest: RunManifest, out_dir: Path, outputs: List[Path], summary: Dict[str, Any],
            exit_code: int = EXIT_OK) -> CommandResult:
    manifest.summary = summary
    outputs.append(manifest.write(out_dir))
    return CommandResult(exit_code, outputs, summary)


#----------# ANALYZE #----------#

def cmd_analyze(config: RunConfig, out_dir: Path, workers: int = 1) -> CommandResult:
    """Closed-form report for a fixed chain: P_s, s(i), D, P_s^D and D(i) per vehicle."""
    manifest = RunManifest.start("analyze", config, workers)
    scenario = config.scenario_config()
    settings = config.analyze
    n = scenario.chain_length if settings.gaps is None else len(settings.gaps) + 1
    gaps = settings.gaps or [0.5 * (scenario.gap_low + scenario.gap_high)] * (n - 1)
    if settings.taus is not None and len(settings.taus) != n - 1:
        raise ConfigError("analyze", [("analyze.taus", f"needs {n - 1} entries, got {len(settings.taus)}")])
    p_access = settings.p_access or [settings.p] * n
    if len(p_access) != n:
        raise ConfigError("analyze", [("analyze.p_access", f"needs {n} entries, got {len(p_access)}")])

    EmojiLogger.log('channel', f"β = {config.beta_db:g} dB applied for R = {config.link.rate_bps / 1e6:g} Mbps "
                               f"({config.channel.mode.value.upper()}, α = {config.channel.alpha:g})")
    geometry = fixed_geometry(scenario, gaps, settings.taus)
    success, slots = link_matrices(geometry, p_access, settings.p, scenario.channel, scenario.min_distance)
    timing = chain_timing(slots, geometry.taus, scenario.budget, scenario.deadline_floor)
    opportunities = transmission_opportunities(scenario.budget)

    rows = []
    for i in range(1, n):
        if i >= 2 and math.isinf(slots[0, i]):
            EmojiLogger.warning(f"Direct link 0 -> {i} is infeasible (per-slot success is zero)")
        rows.append({
            "vehicle": i,
            "r": float(geometry.chain_positions[0] - geometry.chain_positions[i]),
            "Ps": float(success[0, i]),
            "s": timing.expected_slots[i],
            "D_opportunities": opportunities,
            "PsD": timing.deadline_success[i],
            "D_delay_s": timing.reception_delays[i],
        })
        EmojiLogger.log('timing', f"vehicle {i}: s={timing.expected_slots[i]:.4g} slots, "
                                  f"PsD={timing.deadline_success[i]:.4f}, D={timing.reception_delays[i]:.4g} s")

    outputs = [write_csv(frame_from_rows(rows, ANALYZE_COLUMNS), out_dir / "analyze.csv", manifest)]
    summary = {"beta_db": config.beta_db, "opportunities": opportunities, "vehicles": n}
    return _finish(manifest, out_dir, outputs, summary)


#----------# SWEEP #----------#

def _equal_rows(grid: SweepGrid) -> List[Dict[str, Any]]:
    return [{"p": cell.p_safe, "collision_prob": cell.result.chain_prob,
             "stderr": cell.result.chain_stderr, "trials": cell.result.trials} for cell in grid.cells]


def _bracket(p0: float, factors: List[float]) -> List[float]:
    """Grid points p0 * f, rounded and kept inside (0, 1)."""
    return sorted({round(p0 * f, 10) for f in factors if 0.0 < p0 * f < 1.0})


def cmd_sweep(config: RunConfig, out_dir: Path, mode: str = "equal", workers: int = 1,
              progress: bool = True) -> CommandResult:
    """Equal-p curve or differentiated (p_safe, p_unsafe) surface, with plot scripts.

    The differentiated mode runs the equal sweep first: its minimum is the
    reference for the reduction figure and, with ``sweep.bracket_p0``, the
    centre of the 2-D grid.
    """
    if mode not in ("equal", "differentiated"):
        raise ConfigError("command line", [("mode", f"unknown sweep mode {mode!r}")])
    manifest = RunManifest.start(f"sweep-{mode}", config, workers)
    scenario = config.scenario_config()
    outputs: List[Path] = []

    equal = sweep_equal(scenario, config.sweep.p_grid, workers=workers, progress=progress)
    equal_csv = write_csv(frame_from_rows(_equal_rows(equal), SWEEP_EQUAL_COLUMNS),
                          out_dir / "sweep-equal.csv", manifest)
    outputs += [equal_csv, write_curve_script(out_dir / "sweep-equal.gp", equal_csv.name, manifest)]
    best = equal.argmin
    summary: Dict[str, Any] = {
        "p0": best.p_safe,
        "equal_minimum": best.result.chain_prob,
        "equal_stderr": best.result.chain_stderr,
        "interior_minimum": equal.is_interior_minimum(),
    }

    if mode == "differentiated":
        if config.sweep.bracket_p0:
            safe_grid = _bracket(best.p_safe, config.sweep.safe_factors)
            unsafe_grid = _bracket(best.p_safe, config.sweep.unsafe_factors)
        else:
            safe_grid, unsafe_grid = config.sweep.p_safe_grid, config.sweep.p_unsafe_grid
        surface = sweep_differentiated(scenario, safe_grid, unsafe_grid, config.adaptation_config(),
                                       equal_reference=equal, workers=workers, progress=progress)
        rows = [{"p_safe": cell.p_safe, "p_unsafe": cell.p_unsafe,
                 "collision_prob": cell.result.chain_prob, "stderr": cell.result.chain_stderr,
                 "trials": cell.result.trials} for cell in surface.cells]
        surface_csv = write_csv(frame_from_rows(rows, SWEEP_2D_COLUMNS), out_dir / "sweep-2d.csv", manifest)
        outputs += [surface_csv, write_surface_script(out_dir / "sweep-2d.gp", surface_csv.name, manifest)]
        cell = surface.argmin
        summary.update({
            "p_safe": cell.p_safe,
            "p_unsafe": cell.p_unsafe,
            "minimum": cell.result.chain_prob,
            "stderr": cell.result.chain_stderr,
            "reduction": surface.reduction_vs_equal,
        })

    return _finish(manifest, out_dir, outputs, summary)


#----------# ADAPT #----------#

def cmd_adapt(config: RunConfig, out_dir: Path, workers: int = 1) -> CommandResult:
    """Run the safe/unsafe loop and write one row per (round, vehicle).

    Non-convergence is not an error: it is flagged in the table header and summary.
    """
    manifest = RunManifest.start("adapt", config, workers)
    result = adapt(config.scenario_config(), config.adaptation_config(), workers=workers)
    rows = []
    for entry in result.trace:
        for vehicle, (estimate, safety, p) in enumerate(zip(entry.vehicle_probs, entry.classes,
                                                             entry.p_access)):
            rows.append({"iter": entry.iteration, "vehicle": vehicle, "collision_est": estimate,
                         "class": safety.value, "p_access": p})

    assignment = result.assignment
    cycle = result.cycle_length if result.cycle_length is not None else "none"
    flags = {"converged": str(assignment.converged).lower(), "iterations": assignment.iterations,
             "cycle": cycle}
    outputs = [write_csv(frame_from_rows(rows, ADAPT_COLUMNS), out_dir / "adapt-trace.csv", manifest, flags)]
    summary = {
        "converged": assignment.converged,
        "iterations": assignment.iterations,
        "cycle_length": result.cycle_length,
        "unsafe": assignment.unsafe_indices,
        "p_access": list(assignment.p_access),
        "chain_prob": result.trace[-1].chain_prob if result.trace else None,
    }
    return _finish(manifest, out_dir, outputs, summary)


#----------# VALIDATE #----------#

def cmd_validate(config: RunConfig, out_dir: Path, workers: int = 1,
                 batteries: Optional[List[str]] = None) -> CommandResult:
    """Run the self-check batteries; exit code 3 when any battery fails."""
    manifest = RunManifest.start("validate", config, workers)
    results = run_batteries(config, batteries)
    rows = [{"battery": r.name, "cases": r.cases, "passed_cases": r.passed_cases,
             "required": r.required, "passed": r.passed} for r in results]
    outputs = [write_csv(frame_from_rows(rows, ["battery", "cases", "passed_cases", "required", "passed"]),
                         out_dir / "validate.csv", manifest)]
    failed = [r.name for r in results if not r.passed]
    summary = {"batteries": len(results), "failed": failed,
               "failures": sum(len(r.failures) for r in results)}
    return _finish(manifest, out_dir, outputs, summary, EXIT_VALIDATION if failed else EXIT_OK)
