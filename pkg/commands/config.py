# commands/config.py
# ============================================================================
# Run configuration: dotted key = value documents <-> RunConfig
# ============================================================================

import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from Core.errors import ConfigError, ParameterError, PreconditionError
from Core.params import ModelParams, validate_params
from Core.state import BoundaryCondition
from Utils.diagnostics import DiagnosticsConfig
from Utils.integrator import IntegratorConfig, Method
from Utils.scenarios import ScenarioKind, ScenarioSpec, VelocityInit, get_preset

logger = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "VACUUMFLOW_OUTPUT_ROOT"


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "runs"
    run_name: str = "run"


@dataclass(frozen=True)
class AnalysisConfig:
    """Thresholds for the run summary"""
    rho_thresh: float = 0.05
    hold: float = 1.0
    decay_offset: float = 2.0
    blowup_eta: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    params: ModelParams = field(default_factory=ModelParams)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    preset: Optional[str] = None

    def output_dir(self) -> Path:
        """Run directory, honouring the output-root environment override"""
        root = os.getenv(OUTPUT_ROOT_ENV) or self.outputs.directory
        return Path(root) / self.outputs.run_name


# ============================================================================
# VALUE CODECS
# ============================================================================

def _bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ('true', 'yes', '1', 'on'):
        return True
    if lowered in ('false', 'no', '0', 'off'):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _optional_float(value: str) -> Optional[float]:
    return None if value.lower() in ('none', '') else float(value)


def _optional_str(value: str) -> Optional[str]:
    return None if value.lower() in ('none', '') else value


def _float_list(value: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in value.split(',') if v.strip())


def _render(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if hasattr(value, 'value'):
        return str(value.value)
    return str(value)


@dataclass(frozen=True)
class KeySpec:
    section: str
    attr: str
    decode: Callable[[str], Any]


def _keys(section: str, decoders: Dict[str, Callable[[str], Any]], attr_map: Dict[str, str] = None) -> Dict[str, KeySpec]:
    attr_map = attr_map or {}
    return {
        f"{section}.{name}": KeySpec(section=attr_map.get(name, (section, name))[0],
                                     attr=attr_map.get(name, (section, name))[1],
                                     decode=decode)
        for name, decode in decoders.items()
    }


# Canonical key order; also the serialization order
KEYS: Dict[str, KeySpec] = {
    **_keys("params", {
        'alpha': float, 'gamma': float, 'a1': float, 'a2': float, 'eps': float,
        'theta': float, 'n_reg': int, 'nu': float, 'c0_floor': float,
    }),
    **_keys("scenario", {
        'kind': ScenarioKind, 'sigma': _optional_float, 'A0': float, 'A1': float,
        'B0': float, 'B1': float, 'x0': float, 'x1': float, 'u0_spec': VelocityInit,
        'u0_amplitude': float, 'u0_frequency': float, 'N': int, 'bc': BoundaryCondition.parse,
        'pinned': _bool, 'resolution': int, 'profile': _optional_str,
    }),
    **_keys("integrator", {
        'method': Method, 'cfl_safety': float, 'dt_max': float, 'dt_min': float,
        't_end': float, 'positivity_floor': float, 'max_rejections': int,
    }),
    **_keys("outputs", {
        'directory': str, 'run_name': str, 'snapshot_times': _float_list,
        'snapshot_interval': float, 'series_cadence': float,
    }, attr_map={
        'snapshot_times': ('integrator', 'snapshot_times'),
        'snapshot_interval': ('integrator', 'snapshot_interval'),
        'series_cadence': ('integrator', 'sample_interval'),
    }),
    **_keys("diagnostics", {'b': _optional_float}),
    **_keys("analysis", {
        'rho_thresh': float, 'hold': float, 'decay_offset': float, 'blowup_eta': float,
    }),
}


# ============================================================================
# SUGGESTIONS
# ============================================================================

def get_key_suggestions(key: str, available: List[str]) -> List[str]:
    """Smart key suggestions using fuzzy matching"""
    if not available:
        return []

    suggestions = []
    key_lower = key.lower()
    leaf = key_lower.rsplit('.', 1)[-1]

    # Exact substring matches first
    for candidate in available:
        candidate_leaf = candidate.lower().rsplit('.', 1)[-1]
        if leaf in candidate_leaf or candidate_leaf in leaf:
            suggestions.append(candidate)

    # Similar spelling
    if not suggestions:
        scored = []
        for candidate in available:
            candidate_leaf = candidate.lower().rsplit('.', 1)[-1]
            overlap = len(set(leaf) & set(candidate_leaf))
            if overlap >= min(2, len(leaf) // 2):
                scored.append((-overlap / max(len(set(leaf) | set(candidate_leaf)), 1), candidate))
        suggestions = [candidate for _, candidate in sorted(scored)]

    return suggestions[:3]


# ============================================================================
# PARSE / SERIALIZE
# ============================================================================

def _tokenize(text: str) -> List[Tuple[int, str, str]]:
    entries = []
    seen = set()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"line {number}: expected 'key = value'", context={'line': number, 'text': raw})
        key, value = (part.strip() for part in line.split('=', 1))
        if key in seen:
            raise ConfigError(f"line {number}: duplicate key '{key}'", context={'line': number, 'key': key})
        seen.add(key)
        entries.append((number, key, value))
    return entries


def _base_config(preset_name: Optional[str]) -> RunConfig:
    if preset_name is None:
        return RunConfig()
    try:
        preset = get_preset(preset_name)
    except ParameterError as e:
        raise ConfigError(f"unknown preset '{preset_name}'", context={'key': 'preset'}, cause=e) from e
    logger.info(f"Seeding configuration from preset '{preset_name}'")
    return RunConfig(scenario=preset.scenario, params=preset.params,
                     integrator=preset.integrator, preset=preset_name)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration document.

    Unknown keys are rejected with suggestions; parameter violations
    propagate as ParameterError.
    """
    entries = _tokenize(text)
    preset_name = next((value for _, key, value in entries if key == 'preset'), None)
    config = _base_config(preset_name)

    updates: Dict[str, Dict[str, Any]] = {}
    lines: Dict[str, int] = {}
    for number, key, value in entries:
        if key == 'preset':
            continue
        spec = KEYS.get(key)
        if spec is None:
            suggestions = get_key_suggestions(key, list(KEYS))
            hint = f" (did you mean: {', '.join(suggestions)}?)" if suggestions else ""
            raise ConfigError(f"line {number}: unknown key '{key}'{hint}",
                              context={'line': number, 'key': key, 'suggestions': suggestions})
        try:
            decoded = spec.decode(value)
        except ValueError as e:
            raise ConfigError(f"line {number}: bad value {value!r} for '{key}'",
                              context={'line': number, 'key': key}, cause=e) from e
        updates.setdefault(spec.section, {})[spec.attr] = decoded
        lines[key] = number

    sections = {name: replace(getattr(config, name), **changes) for name, changes in updates.items()}
    return validate_config(replace(config, **sections), lines)


def validate_config(config: RunConfig, lines: Optional[Dict[str, int]] = None) -> RunConfig:
    """Cross-key checks; `lines` maps keys to their document line for error context"""
    lines = lines or {}
    validate_params(config.params)
    try:
        config.integrator.validate()
    except PreconditionError as e:
        raise ConfigError(str(e), context=e.context, cause=e) from e
    if config.scenario.N < 3:
        raise ConfigError("scenario.N must be at least 3", context={'key': 'scenario.N'})
    if config.scenario.resolution < config.scenario.N:
        raise ConfigError("scenario.resolution must be at least scenario.N", context={'key': 'scenario.resolution'})

    scenario = config.scenario
    if scenario.kind is ScenarioKind.CUSTOM:
        if scenario.profile is None:
            raise ConfigError("scenario.kind = custom needs scenario.profile",
                              context={'key': 'scenario.kind', 'line': lines.get('scenario.kind')})
        if not Path(scenario.profile).is_file():
            raise ConfigError(f"scenario.profile {scenario.profile} does not exist",
                              context={'key': 'scenario.profile', 'line': lines.get('scenario.profile')})
    return config


def serialize_config(config: RunConfig) -> str:
    """Render every key in canonical order; parse_config reproduces the config"""
    lines = []
    if config.preset:
        lines.append(f"preset = {config.preset}")
    for key, spec in KEYS.items():
        lines.append(f"{key} = {_render(getattr(getattr(config, spec.section), spec.attr))}")
    return "\n".join(lines) + "\n"


def load_config(path: str) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}", context={'path': path}, cause=e) from e
    return parse_config(text)
