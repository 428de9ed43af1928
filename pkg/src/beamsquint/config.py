"""Typed run configuration.

A run is described by one YAML document parsed into nested dataclasses.
Validation is exhaustive: unknown keys, wrong types, and version
mismatches raise ConfigError with the offending field path, because a
silently ignored typo in a simulation config is a reproducibility bug.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union, get_args, get_origin

import yaml

__all__ = [
    "CONFIG_VERSION",
    "ConfigError",
    "PathLossSection",
    "RfSection",
    "ArraysSection",
    "ChannelSection",
    "RanSection",
    "TrafficSection",
    "ScenarioSection",
    "RunSection",
    "RunConfig",
    "McsRow",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "save_config",
    "load_mcs_table",
]

CONFIG_VERSION = 1

MODES = ("baseline", "squint", "compensated")


class ConfigError(ValueError):
    """Schema violation; the message names the offending field path."""


@dataclass
class PathLossSection:
    a: float = 28.0
    b: float = 22.0
    c: float = 20.0


@dataclass
class RfSection:
    f1_hz: float = 28e9
    delta_f_hz: List[float] = field(default_factory=lambda: [0.0, 100e6, 500e6, 1000e6])
    modes: List[str] = field(default_factory=lambda: list(MODES))


@dataclass
class ArraysSection:
    # the NCR access panel mirrors the gNB aperture; backhaul panel is small
    gnb_elements: List[int] = field(default_factory=lambda: [64, 128, 256])
    ncr_backhaul_elements: int = 16
    oversampling: int = 1


@dataclass
class ChannelSection:
    pathloss: PathLossSection = field(default_factory=PathLossSection)
    # direct gNB-UE leg may carry a steeper slope (street-level clutter proxy)
    pathloss_gnb_ue: Optional[PathLossSection] = None
    # backhaul leg likewise (rooftop-to-lamppost links are rarely clean LOS)
    pathloss_gnb_ncr: Optional[PathLossSection] = None
    shadowing_sigma_db: float = 4.0
    shadowing_dcorr_m: float = 13.0
    noise_figure_db: float = 9.0


@dataclass
class RanSection:
    n_rbs: int = 66
    subcarriers_per_rb: int = 12
    scs_hz: float = 60e3
    slot_s: float = 0.25e-3
    gnb_power_dbm: float = 35.0
    ncr_power_dbm: float = 33.0
    ncr_fixed_gain_db: float = 60.0
    ue_power_dbm: float = 24.0
    access_sweep_period_ttis: int = 20
    backhaul_sweep_period_ttis: int = 200
    olla_step_ack_db: float = 0.1
    olla_step_nack_db: float = 1.0
    mcs_table: str = "mcs_table.csv"


@dataclass
class TrafficSection:
    packet_bits: int = 4096
    period_slots: int = 4


@dataclass
class ScenarioSection:
    n_ues: int = 72
    ue_street: int = 1
    ue_side: str = "east"
    ue_span_m: List[float] = field(default_factory=lambda: [10.0, 378.0])
    gnb_block_offset: int = 2
    gnb_position: Optional[List[float]] = None
    gnb_boresight_deg: float = 45.0
    ncr_position: List[float] = field(default_factory=lambda: [254.0, 194.0, 10.0])
    ncr_access_boresight_deg: float = 45.0
    ncr_backhaul_boresight_deg: float = -90.0
    ue_speed_kmh: float = 3.0
    p_continue: float = 0.5
    p_turn: float = 0.2
    p_cross: float = 0.1


@dataclass
class RunSection:
    ttis: int = 2000
    drops: int = 2
    seed: int = 1


@dataclass
class RunConfig:
    version: int = CONFIG_VERSION
    rf: RfSection = field(default_factory=RfSection)
    arrays: ArraysSection = field(default_factory=ArraysSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    ran: RanSection = field(default_factory=RanSection)
    traffic: TrafficSection = field(default_factory=TrafficSection)
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    run: RunSection = field(default_factory=RunSection)

    def pathloss_gnb_ue(self) -> PathLossSection:
        return self.channel.pathloss_gnb_ue or self.channel.pathloss

    def pathloss_gnb_ncr(self) -> PathLossSection:
        return self.channel.pathloss_gnb_ncr or self.channel.pathloss


def _coerce(value: Any, typ: Any, path: str) -> Any:
    origin = get_origin(typ)
    if origin is Union:
        args = [a for a in get_args(typ) if a is not type(None)]
        if value is None:
            if type(None) in get_args(typ):
                return None
            raise ConfigError(f"{path}: null not allowed")
        return _coerce(value, args[0], path)
    if dataclasses.is_dataclass(typ):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected a mapping")
        return _build_section(typ, value, path)
    if origin in (list, List):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list")
        (elem_t,) = get_args(typ)
        return [_coerce(v, elem_t, f"{path}[{i}]") for i, v in enumerate(value)]
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean")
        return value
    raise ConfigError(f"{path}: unsupported schema type {typ!r}")


def _build_section(cls, mapping: Dict[str, Any], path: str):
    import typing

    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    for key in mapping:
        if key not in known:
            raise ConfigError(f"{path}.{key}: unknown key")
    kwargs = {}
    for name in known:
        if name in mapping:
            kwargs[name] = _coerce(mapping[name], hints[name], f"{path}.{name}")
    return cls(**kwargs)


def config_from_dict(tree: Dict[str, Any]) -> RunConfig:
    if not isinstance(tree, dict):
        raise ConfigError("config: document root must be a mapping")
    version = tree.get("version")
    if version != CONFIG_VERSION:
        raise ConfigError(
            f"config.version: expected {CONFIG_VERSION}, got {version!r}"
        )
    cfg = _build_section(RunConfig, tree, "config")
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.rf.f1_hz <= 0:
        raise ConfigError("config.rf.f1_hz: must be positive")
    if not cfg.rf.modes:
        raise ConfigError("config.rf.modes: must not be empty")
    for i, m in enumerate(cfg.rf.modes):
        if m not in MODES:
            raise ConfigError(
                f"config.rf.modes[{i}]: {m!r} not one of {sorted(MODES)}"
            )
    if len(set(cfg.rf.modes)) != len(cfg.rf.modes):
        raise ConfigError("config.rf.modes: duplicate entries")
    for i, df in enumerate(cfg.rf.delta_f_hz):
        if df < 0:
            raise ConfigError(f"config.rf.delta_f_hz[{i}]: must be nonnegative")
    for i, n in enumerate(cfg.arrays.gnb_elements):
        if n < 2:
            raise ConfigError(f"config.arrays.gnb_elements[{i}]: need at least 2")
    if cfg.arrays.ncr_backhaul_elements < 1:
        raise ConfigError("config.arrays.ncr_backhaul_elements: need at least 1")
    if cfg.arrays.oversampling < 1:
        raise ConfigError("config.arrays.oversampling: must be >= 1")
    if cfg.ran.n_rbs < 1:
        raise ConfigError("config.ran.n_rbs: must be >= 1")
    if cfg.ran.slot_s <= 0:
        raise ConfigError("config.ran.slot_s: must be positive")
    if cfg.traffic.packet_bits < 1:
        raise ConfigError("config.traffic.packet_bits: must be >= 1")
    if cfg.traffic.period_slots < 1:
        raise ConfigError("config.traffic.period_slots: must be >= 1")
    if cfg.scenario.n_ues < 1:
        raise ConfigError("config.scenario.n_ues: must be >= 1")
    if cfg.scenario.ue_side not in ("east", "west"):
        raise ConfigError("config.scenario.ue_side: must be 'east' or 'west'")
    if len(cfg.scenario.ue_span_m) != 2 or cfg.scenario.ue_span_m[0] > cfg.scenario.ue_span_m[1]:
        raise ConfigError("config.scenario.ue_span_m: expected [low, high]")
    if cfg.scenario.gnb_position is not None and len(cfg.scenario.gnb_position) != 3:
        raise ConfigError("config.scenario.gnb_position: expected [x, y, z]")
    if len(cfg.scenario.ncr_position) != 3:
        raise ConfigError("config.scenario.ncr_position: expected [x, y, z]")
    probs = (cfg.scenario.p_continue, cfg.scenario.p_turn, cfg.scenario.p_cross)
    if any(p < 0 for p in probs) or sum(probs) <= 0:
        raise ConfigError("config.scenario: turn probabilities must be nonnegative")
    if cfg.run.ttis < 1:
        raise ConfigError("config.run.ttis: must be >= 1")
    if cfg.run.drops < 1:
        raise ConfigError("config.run.drops: must be >= 1")


def config_to_dict(cfg: RunConfig) -> Dict[str, Any]:
    return dataclasses.asdict(cfg)


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"config: invalid YAML ({e})") from e
    return config_from_dict(tree)


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=False))


@dataclass(frozen=True)
class McsRow:
    index: int
    threshold_db: float
    spectral_efficiency: float


def load_mcs_table(path) -> List[McsRow]:
    """CSV with header index,threshold_db,spectral_efficiency."""
    import csv

    rows: List[McsRow] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["index", "threshold_db", "spectral_efficiency"]
        if reader.fieldnames != expected:
            raise ConfigError(
                f"mcs_table: expected columns {expected}, got {reader.fieldnames}"
            )
        for i, row in enumerate(reader):
            rows.append(
                McsRow(
                    int(row["index"]),
                    float(row["threshold_db"]),
                    float(row["spectral_efficiency"]),
                )
            )
    if not rows:
        raise ConfigError("mcs_table: empty table")
    for i, r in enumerate(rows):
        if r.index != i:
            raise ConfigError(f"mcs_table: row {i} has index {r.index}")
        if r.spectral_efficiency <= 0:
            raise ConfigError(f"mcs_table: row {i} efficiency must be positive")
        if i and r.threshold_db <= rows[i - 1].threshold_db:
            raise ConfigError(f"mcs_table: thresholds must increase at row {i}")
    return rows
