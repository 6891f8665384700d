"""Adaptive-reference random bit generation: simulation and SP 800-22 testing."""

from .bits import BitStream, read_stream, write_ascii, write_bits1
from .cipher import KeyIv, postprocess, trivium_keystream
from .digitizer import DigitizerConfig, StreamingDigitizer, digitize
from .entropy import LfsrSource, MagnetizationProcess, SmtjDevice
from .errors import (
    AdaptRngError,
    ConfigError,
    DomainError,
    InputFormatError,
    SeedError,
    StateError,
)
from .harness import (
    ComparisonReport,
    PipelineConfig,
    ResilienceRange,
    SweepSpec,
    compare_fixed_vs_adaptive,
    find_resilience_range,
    repeated_run_study,
    run_pipeline,
)
from .nist import BatteryReport, run_battery

__all__ = [
    "AdaptRngError", "BatteryReport", "BitStream", "ComparisonReport", "ConfigError",
    "DigitizerConfig", "DomainError", "InputFormatError", "KeyIv", "LfsrSource",
    "MagnetizationProcess", "PipelineConfig", "ResilienceRange", "SeedError",
    "SmtjDevice", "StateError", "StreamingDigitizer", "SweepSpec",
    "compare_fixed_vs_adaptive", "digitize", "find_resilience_range", "postprocess",
    "read_stream", "repeated_run_study", "run_battery", "run_pipeline",
    "trivium_keystream", "write_ascii", "write_bits1",
]
