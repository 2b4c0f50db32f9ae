"""Link configuration: one fully specified end-to-end run, and its JSON
serialization. An empty config file gives the default setup (25 GBaud
64-QAM, 6-bit DAC at 100 GSa/s, tone at +13.9 GHz, 50 km span, 80 GSa/s
ADC), so `run` with `{}` reproduces the reference link.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .channel import FiberSpec, OsnrSpec
from .dre import DreConfig
from .errors import ConfigError
from .kkrx import BiasSearch, EqualizerConfig, KkConfig
from .txdsp import ToneSpec

OFF = None  # sentinel spelling used in config files: "off" or null


@dataclass(frozen=True)
class RrcParams:
    rolloff: float = 0.01
    span_symbols: int = 128


@dataclass(frozen=True)
class ShapingParams:
    """Noise-shaping filter design inputs (taps are designed at run time)."""

    n_taps: int = 5
    passband_edge_hz: float | None = None  # None: tone offset + 2 GHz guard


@dataclass(frozen=True)
class LinkConfig:
    bits_per_symbol: int = 6
    baud_hz: float = 25e9
    sps_dac: int = 4
    tone: ToneSpec = field(default_factory=ToneSpec)
    dac_bits: int | None = 6
    dre_enabled: bool = False
    dre: DreConfig = field(default_factory=DreConfig)
    shaping: ShapingParams = field(default_factory=ShapingParams)
    rrc: RrcParams = field(default_factory=RrcParams)
    fiber: FiberSpec = field(default_factory=FiberSpec)
    osnr: OsnrSpec = field(default_factory=OsnrSpec)
    bpf_bandwidth_hz: float = 40e9
    adc_rate_hz: float = 80e9
    adc_bits: int | None = None
    kk: KkConfig = field(default_factory=KkConfig)
    bias: BiasSearch = field(default_factory=BiasSearch)
    eq: EqualizerConfig = field(default_factory=EqualizerConfig)
    n_symbols: int = 65536
    guard_symbols: int = 512
    seed: int = 1

    def validate(self) -> None:
        if self.bits_per_symbol not in (2, 4, 6):
            raise ConfigError(f"bits_per_symbol must be 2, 4 or 6, got {self.bits_per_symbol}")
        if self.baud_hz <= 0 or self.sps_dac < 2:
            raise ConfigError("baud_hz must be positive and sps_dac >= 2")
        edge = self.baud_hz * (1.0 + self.rrc.rolloff) / 2.0
        if self.tone.offset_hz <= edge:
            raise ConfigError(
                f"tone offset {self.tone.offset_hz:g} Hz inside the signal band (edge {edge:g})"
            )
        if self.tone.offset_hz >= self.baud_hz * self.sps_dac / 2:
            raise ConfigError("tone offset beyond DAC Nyquist")
        if self.dac_bits is not None and not 1 <= self.dac_bits <= 16:
            raise ConfigError(f"dac_bits must be in [1, 16] or off, got {self.dac_bits}")
        if self.n_symbols < 2**14:
            raise ConfigError("n_symbols >= 16384 required for NGMI-reporting runs")
        if self.guard_symbols < 0 or 2 * self.guard_symbols >= self.n_symbols:
            raise ConfigError("guard_symbols must be >= 0 and < n_symbols / 2")
        if self.adc_rate_hz <= 2 * edge:
            raise ConfigError("adc_rate_hz too low for the signal band")

    @property
    def dac_rate_hz(self) -> float:
        return self.baud_hz * self.sps_dac

    def shaping_edge_hz(self) -> float:
        if self.shaping.passband_edge_hz is not None:
            return self.shaping.passband_edge_hz
        return self.tone.offset_hz + 2e9


def _maybe_off(value, name: str) -> float | None:
    if value is None or (isinstance(value, str) and value.lower() == "off"):
        return None
    if isinstance(value, (int, float)):
        return value
    raise ConfigError(f"{name}: expected a number, null, or 'off', got {value!r}")


def _build(cls, data: dict, path: str):
    """Construct a (nested) dataclass from a dict, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    fields = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    unknown = set(data) - fields
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    return data


_SUBSPECS = {
    "tone": ToneSpec,
    "dre": DreConfig,
    "shaping": ShapingParams,
    "rrc": RrcParams,
    "fiber": FiberSpec,
    "osnr": OsnrSpec,
    "kk": KkConfig,
    "eq": EqualizerConfig,
    "bias": BiasSearch,
}

_OFF_FIELDS = {"dac_bits", "adc_bits"}


def config_from_dict(data: dict) -> LinkConfig:
    _build(LinkConfig, data, "config")
    kwargs = {}
    for key, value in data.items():
        if key in _SUBSPECS:
            sub_cls = _SUBSPECS[key]
            sub_data = dict(_build(sub_cls, value, key))
            if key == "osnr" and "target_db" in sub_data:
                sub_data["target_db"] = _maybe_off(sub_data["target_db"], "osnr.target_db")
            if key == "bias" and "grid" in sub_data:
                sub_data["grid"] = tuple(sub_data["grid"])
            if key == "shaping" and "passband_edge_hz" in sub_data:
                sub_data["passband_edge_hz"] = _maybe_off(
                    sub_data["passband_edge_hz"], "shaping.passband_edge_hz"
                )
            try:
                kwargs[key] = sub_cls(**sub_data)
            except ConfigError:
                raise
            except Exception as exc:
                raise ConfigError(f"{key}: {exc}") from exc
        elif key in _OFF_FIELDS:
            v = _maybe_off(value, key)
            kwargs[key] = None if v is None else int(v)
        else:
            kwargs[key] = value
    try:
        cfg = LinkConfig(**kwargs)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def load_config(path: str) -> LinkConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def with_overrides(cfg: LinkConfig, **kwargs) -> LinkConfig:
    """replace() that re-validates."""
    out = replace(cfg, **kwargs)
    out.validate()
    return out
