"""
Configuration Validation Module

Schema, defaults and validation for the JSON run configuration. Every field has
a default so an empty file (or no file) is a complete configuration; the fully
resolved model is what gets written into each run manifest.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.core.adaptation import AdaptationConfig, ClassificationRule, RuleKind
from app.core.channel import ChannelParams, MacMode, db_to_linear, sir_threshold_for_rate, supported_rates
from app.core.scenario import DriverProfile, ScenarioConfig
from app.core.timing import LinkBudget

logger = logging.getLogger(__name__)

DEFAULT_P_GRID = [0.005, 0.01, 0.015, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08,
                  0.1, 0.12, 0.14, 0.16, 0.18, 0.2, 0.22, 0.25, 0.28, 0.3]


class ConfigError(ValueError):
    """Invalid configuration; ``diagnostics`` holds (location, message) pairs."""

    def __init__(self, source: str, diagnostics: List[Tuple[str, str]]):
        self.source = source
        self.diagnostics = diagnostics
        lines = "\n".join(f"  {where}: {what}" for where, what in diagnostics)
        super().__init__(f"Invalid configuration in {source}:\n{lines}")


class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)


class ProfileSettings(_Section):
    tau_scale: float = Field(1.0, gt=0)
    gap_scale: float = Field(1.0, gt=0)
    decel_scale: float = Field(1.0, gt=0)


class ScenarioSettings(_Section):
    chain_length: int = Field(8, ge=2)
    lanes: int = Field(3, ge=1)
    vehicles_per_lane: int = Field(8, ge=0)
    speed: float = Field(30.0, gt=0)
    tau_median: float = Field(1.0, gt=0)
    tau_sigma_log: float = Field(0.3, ge=0)
    tau_min: float = Field(0.3, gt=0)
    tau_max: float = Field(3.0, gt=0)
    gap_low: float = Field(15.0, gt=0)
    gap_high: float = Field(40.0, gt=0)
    deceleration: float = Field(6.0, gt=0)
    min_distance: float = Field(1.0, gt=0)
    profiles: List[ProfileSettings] = Field(default_factory=list)

    @model_validator(mode='after')
    def _check_ranges(self) -> 'ScenarioSettings':
        if not self.tau_min <= self.tau_median <= self.tau_max:
            raise ValueError("need tau_min <= tau_median <= tau_max")
        if self.gap_low > self.gap_high:
            raise ValueError("need gap_low <= gap_high")
        if self.profiles and len(self.profiles) != self.chain_length:
            raise ValueError(f"profiles needs {self.chain_length} entries, got {len(self.profiles)}")
        return self


class LinkSettings(_Section):
    packet_bits: float = Field(12000.0, gt=0)
    rate_bps: float = Field(6.0e6, gt=0)
    tolerable_delay: float = Field(1.0, gt=0)
    deadline_floor: float = Field(1e-3, ge=0, lt=1)


class ChannelSettings(_Section):
    alpha: float = Field(3.0, gt=1)
    mode: MacMode = MacMode.SSP
    sap_approx: bool = False
    beta_db: Optional[float] = None


class MonteCarloSettings(_Section):
    trials: int = Field(2000, ge=1)
    seed: int = Field(20130601, ge=0, lt=2**64)
    workers: Optional[int] = Field(None, ge=1)
    relay_cascade: bool = False


class SweepSettings(_Section):
    p_grid: List[float] = Field(default_factory=lambda: list(DEFAULT_P_GRID))
    bracket_p0: bool = True
    safe_factors: List[float] = Field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0])
    unsafe_factors: List[float] = Field(default_factory=lambda: [1.0, 1.5, 2.0, 3.0])
    p_safe_grid: List[float] = Field(default_factory=lambda: [0.01, 0.02, 0.03, 0.05, 0.07, 0.09])
    p_unsafe_grid: List[float] = Field(default_factory=lambda: [0.03, 0.05, 0.07, 0.09, 0.12, 0.15])

    @model_validator(mode='after')
    def _check_grids(self) -> 'SweepSettings':
        for name in ('p_grid', 'p_safe_grid', 'p_unsafe_grid'):
            values = getattr(self, name)
            if not values:
                raise ValueError(f"{name} must not be empty")
            if any(not 0.0 < v < 1.0 for v in values):
                raise ValueError(f"{name} values must lie in (0, 1)")
        if any(f <= 0 for f in self.safe_factors + self.unsafe_factors):
            raise ValueError("bracket factors must be > 0")
        return self


class AdaptationSettings(_Section):
    rule: RuleKind = RuleKind.QUANTILE
    quantile: float = Field(0.75, ge=0, le=1)
    threshold: float = Field(0.1, ge=0, le=1)
    max_iterations: int = Field(6, ge=1)
    trials: Optional[int] = Field(1000, ge=1)
    p_safe: float = Field(0.03, gt=0, lt=1)
    p_unsafe: float = Field(0.08, gt=0, lt=1)

    @model_validator(mode='after')
    def _check_order(self) -> 'AdaptationSettings':
        if self.p_unsafe < self.p_safe:
            raise ValueError("p_unsafe must be >= p_safe")
        return self


class AnalyzeSettings(_Section):
    gaps: Optional[List[float]] = None
    taus: Optional[List[float]] = None
    p: float = Field(0.05, gt=0, lt=1)
    p_access: Optional[List[float]] = None

    @model_validator(mode='after')
    def _check_values(self) -> 'AnalyzeSettings':
        if self.gaps is not None and any(g <= 0 for g in self.gaps):
            raise ValueError("gaps must be > 0")
        if self.taus is not None and any(t <= 0 for t in self.taus):
            raise ValueError("taus must be > 0")
        if self.p_access is not None and any(not 0 <= p <= 1 for p in self.p_access):
            raise ValueError("p_access values must lie in [0, 1]")
        return self


class ValidateSettings(_Section):
    oracle_cases: int = Field(50, ge=1)
    oracle_slots: int = Field(100_000, ge=1)
    oracle_min_pass: int = Field(48, ge=0)
    deadline_cases: int = Field(10, ge=1)
    deadline_trials: int = Field(1_000_000, ge=1)
    delay_chains: int = Field(200, ge=1)
    kinematics_cases: int = Field(100, ge=1)
    integrator_step: float = Field(1e-4, gt=0)


class RunConfig(_Section):
    """Root of the run configuration."""
    scenario: ScenarioSettings = Field(default_factory=ScenarioSettings)
    link: LinkSettings = Field(default_factory=LinkSettings)
    channel: ChannelSettings = Field(default_factory=ChannelSettings)
    montecarlo: MonteCarloSettings = Field(default_factory=MonteCarloSettings)
    sweep: SweepSettings = Field(default_factory=SweepSettings)
    adaptation: AdaptationSettings = Field(default_factory=AdaptationSettings)
    analyze: AnalyzeSettings = Field(default_factory=AnalyzeSettings)
    validate_suite: ValidateSettings = Field(default_factory=ValidateSettings, alias='validate')

    model_config = ConfigDict(extra='forbid', frozen=True, populate_by_name=True)

    @model_validator(mode='after')
    def _check_rate(self) -> 'RunConfig':
        if self.channel.beta_db is None:
            known = supported_rates()
            if not any(math.isclose(self.link.rate_bps, r, rel_tol=1e-9) for r in known):
                rates = ", ".join(f"{r / 1e6:g}" for r in known)
                raise ValueError(
                    f"link.rate_bps {self.link.rate_bps:g} is not a tabulated rate ({rates} Mbps); "
                    "set channel.beta_db explicitly"
                )
        return self

    # ----- conversions into core types -----

    @property
    def beta_db(self) -> float:
        if self.channel.beta_db is not None:
            return self.channel.beta_db
        return sir_threshold_for_rate(self.link.rate_bps)

    def channel_params(self) -> ChannelParams:
        return ChannelParams(alpha=self.channel.alpha, beta_linear=db_to_linear(self.beta_db),
                             mode=self.channel.mode, sap_approx=self.channel.sap_approx)

    def link_budget(self) -> LinkBudget:
        return LinkBudget(packet_bits=self.link.packet_bits, rate_bps=self.link.rate_bps,
                          tolerable_delay=self.link.tolerable_delay)

    def scenario_config(self) -> ScenarioConfig:
        s = self.scenario
        return ScenarioConfig(
            budget=self.link_budget(),
            channel=self.channel_params(),
            chain_length=s.chain_length,
            lanes=s.lanes,
            vehicles_per_lane=s.vehicles_per_lane,
            speed=s.speed,
            tau_median=s.tau_median,
            tau_sigma_log=s.tau_sigma_log,
            tau_min=s.tau_min,
            tau_max=s.tau_max,
            gap_low=s.gap_low,
            gap_high=s.gap_high,
            deceleration=s.deceleration,
            min_distance=s.min_distance,
            deadline_floor=self.link.deadline_floor,
            relay_cascade=self.montecarlo.relay_cascade,
            profiles=tuple(DriverProfile(**p.model_dump()) for p in s.profiles),
            trials=self.montecarlo.trials,
            seed=self.montecarlo.seed,
        )

    def adaptation_config(self, p_safe: Optional[float] = None,
                          p_unsafe: Optional[float] = None) -> AdaptationConfig:
        a = self.adaptation
        value = a.quantile if a.rule is RuleKind.QUANTILE else a.threshold
        return AdaptationConfig(
            p_safe=a.p_safe if p_safe is None else p_safe,
            p_unsafe=a.p_unsafe if p_unsafe is None else p_unsafe,
            rule=ClassificationRule(a.rule, value),
            max_iterations=a.max_iterations,
            trials=a.trials,
        )

    def with_overrides(self, **overrides: Any) -> 'RunConfig':
        """Apply dotted-path overrides such as ``{'montecarlo.seed': 7}``; None values are skipped."""
        data = self.resolved()
        for path, value in overrides.items():
            if value is None:
                continue
            section, key = path.split('.', 1)
            data[section][key] = value
        return parse_config(data, source='command line')

    def resolved(self) -> Dict[str, Any]:
        """Fully materialized configuration as plain JSON types."""
        return self.model_dump(mode='json', by_alias=True)


def parse_config(data: Dict[str, Any], source: str = '<memory>') -> RunConfig:
    """Validate a configuration mapping, collecting every field error."""
    if not isinstance(data, dict):
        raise ConfigError(source, [("<root>", "configuration must be a JSON object")])
    if 'config' in data and isinstance(data['config'], dict):
        # an emitted run manifest
        data = data['config']
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        diagnostics = [(".".join(str(part) for part in err['loc']) or "<root>", err['msg'])
                       for err in exc.errors()]
        raise ConfigError(source, diagnostics) from exc


def load_config(path: Optional[str] = None) -> RunConfig:
    """Read and validate a JSON config file; no path means all defaults.

    Raises:
        ConfigError: with line/column for JSON syntax errors, field paths for schema errors
    """
    if path is None:
        return RunConfig()
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(str(path), [("<file>", "file not found")])
    text = config_path.read_text(encoding='utf-8')
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), [(f"line {exc.lineno}, column {exc.colno}", exc.msg)]) from exc
    config = parse_config(data, source=str(path))
    logger.info(f"Configuration loaded from {config_path}")
    return config
