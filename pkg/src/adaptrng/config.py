"""Run configuration files.

A config file is a list of ``key = value`` lines. Keys may be dotted
(``lfsr.width = 16``) or grouped under a section header, so ``[lfsr]``
followed by ``width = 16`` means the same thing. ``#`` and ``;`` start
comments. See the README for the complete key reference.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .harness import PipelineConfig

_TOP = "__top__"


def _taps(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(",", " ").split())


def _int(text: str) -> int:
    return int(text, 0)


def _optional_float(text: str) -> float | None:
    return None if text.lower() in ("", "none", "auto") else float(text)


def _optional_int(text: str) -> int | None:
    return None if text.lower() in ("", "none", "auto") else int(text, 0)


# config key -> (PipelineConfig field, parser)
PIPELINE_KEYS = {
    "seed": ("seed", _int),
    "source": ("source", str),
    "cipher": ("cipher", str),
    "vdd": ("vdd", float),
    "g0": ("g0", float),
    "tmr": ("tmr", float),
    "tau_c": ("tau_c", float),
    "dt": ("dt", _optional_float),
    "r_series": ("r_series", float),
    "readout": ("readout", str),
    "lfsr.width": ("lfsr_width", _int),
    "lfsr.taps": ("lfsr_taps", _taps),
    "lfsr.state": ("lfsr_state", _optional_int),
    "lfsr.dac_bits": ("dac_bits", _int),
    "lfsr.word_time": ("word_time", float),
    "digitizer.mode": ("mode", str),
    "digitizer.v_ref": ("v_ref_fixed", _optional_float),
    "digitizer.tau_lpf": ("tau_lpf", _optional_float),
    "digitizer.sample_interval": ("sample_interval", _optional_float),
    "digitizer.warmup": ("warmup", _optional_float),
}

OUTPUT_KEYS = {
    "output.dir": str,
    "output.format": str,
    "output.name": str,
}

SWEEP_KEYS = {
    "sweep.parameter": str,
    "sweep.nominal": float,
    "sweep.step": float,
    "sweep.max_steps": _int,
    "sweep.bits_per_point": _int,
    "sweep.seeds_per_point": _int,
}

# aliases that read naturally as section headers
_ALIASES = {"cipher.kind": "cipher", "source.kind": "source"}

OUTPUT_FORMATS = ("bits1", "ascii", "both")


@dataclass(frozen=True)
class RunConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    output_dir: str | None = None
    output_format: str = "bits1"
    output_name: str = "stream"
    sweep: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        self.pipeline.validate()
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output.format must be one of {OUTPUT_FORMATS}, got {self.output_format!r}")
        return self


def parse_pairs(text: str, origin: str = "<config>") -> dict[str, str]:
    """Flatten a config text into ``{dotted_key: raw_value}``."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#", ";"),
                                       default_section="__defaults_unused__")
    parser.optionxform = str.lower
    try:
        parser.read_string(f"[{_TOP}]\n" + text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from exc
    pairs = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            name = key if section == _TOP else f"{section.lower()}.{key}"
            pairs[_ALIASES.get(name, name)] = value.strip()
    return pairs


def build_config(pairs: dict[str, str], base: RunConfig | None = None) -> RunConfig:
    """Apply parsed ``pairs`` on top of ``base``; unknown keys are errors."""
    base = base or RunConfig()
    pipe_updates, top_updates, sweep = {}, {}, dict(base.sweep)
    for key, raw in pairs.items():
        try:
            if key in PIPELINE_KEYS:
                name, conv = PIPELINE_KEYS[key]
                pipe_updates[name] = conv(raw)
            elif key in OUTPUT_KEYS:
                top_updates["output_" + key.split(".", 1)[1]] = OUTPUT_KEYS[key](raw)
            elif key in SWEEP_KEYS:
                sweep[key.split(".", 1)[1]] = SWEEP_KEYS[key](raw)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
    pipeline = replace(base.pipeline, **pipe_updates)
    return replace(base, pipeline=pipeline, sweep=sweep, **top_updates)


def load_config(path=None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Read ``path`` (if given), then apply ``overrides``, then validate."""
    cfg = RunConfig()
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc.strerror}") from exc
        cfg = build_config(parse_pairs(text, str(p)), cfg)
    if overrides:
        cfg = build_config({_ALIASES.get(k, k): v for k, v in overrides.items()}, cfg)
    return cfg.validate()


def reference() -> list[str]:
    """All accepted keys, for help output."""
    return sorted([*PIPELINE_KEYS, *OUTPUT_KEYS, *SWEEP_KEYS])


__all__ = ["RunConfig", "build_config", "load_config", "parse_pairs", "reference",
           "PIPELINE_KEYS", "OUTPUT_KEYS", "SWEEP_KEYS", "OUTPUT_FORMATS"]
