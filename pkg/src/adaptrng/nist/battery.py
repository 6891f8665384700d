"""Run the full battery and export its report."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..bits import BitStream
from ..errors import DomainError
from . import suite
from .suite import ROW_NAMES, TestResult


@dataclass(frozen=True)
class BatteryParams:
    block_freq_M: int = 128
    template_m: int = 9
    overlap_m: int = 9
    overlap_M: int = 1032
    universal_L: int | None = None
    universal_Q: int | None = None
    linear_complexity_M: int = 500
    serial_m: int = 16
    apen_m: int = 10

    def check(self, n: int) -> list[str]:
        """Deviations from the recommended operating bounds for an n-bit stream."""
        notes = []
        log2n = math.floor(math.log2(n)) if n > 0 else 0
        if self.block_freq_M < 20:
            notes.append("block_freq_M should be at least 20")
        if not 2 <= self.template_m <= 16:
            notes.append("template_m should lie in [2, 16]")
        if not 500 <= self.linear_complexity_M <= 5000:
            notes.append("linear_complexity_M should lie in [500, 5000]")
        if self.serial_m >= log2n - 2:
            notes.append(f"serial_m should be below floor(log2 n) - 2 = {log2n - 2}")
        if self.apen_m >= log2n - 5:
            notes.append(f"apen_m should be below floor(log2 n) - 5 = {log2n - 5}")
        return notes


@dataclass(frozen=True)
class BatteryReport:
    results: tuple[TestResult, ...]
    bit_count: int
    params: BatteryParams = field(default_factory=BatteryParams)

    @property
    def all_passed(self) -> bool:
        applicable = [r for r in self.results if r.applicable]
        return bool(applicable) and all(r.passed for r in applicable)

    def row(self, name: str) -> TestResult:
        for r in self.results:
            if r.test_name == name:
                return r
        raise KeyError(name)

    def failed_rows(self) -> list[str]:
        return [r.test_name for r in self.results if r.applicable and not r.passed]

    def to_dict(self) -> dict:
        return {
            "bit_count": self.bit_count,
            "all_passed": self.all_passed,
            "params": asdict(self.params),
            "results": [
                {
                    "test_name": r.test_name,
                    "p_value": r.p_value if r.p_values else None,
                    "p_values": list(r.p_values),
                    "applicable": r.applicable,
                    "passed": r.passed,
                    "stats": _jsonable(r.stats),
                }
                for r in self.results
            ],
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def run_battery(bits, params: BatteryParams | None = None) -> BatteryReport:
    """Run all sixteen rows in table order."""
    params = params or BatteryParams()
    x = bits.bits if isinstance(bits, BitStream) else np.asarray(bits, np.uint8)
    n = int(x.size)
    if n == 0:
        raise DomainError("cannot test an empty stream")
    if n < 1_000_000:
        warnings.warn(f"{n} bits is below the recommended 10^6 for the full battery", stacklevel=2)
    results = (
        suite.test_frequency(x),
        suite.test_block_frequency(x, params.block_freq_M),
        suite.test_runs(x),
        suite.test_longest_run(x),
        suite.test_matrix_rank(x),
        suite.test_dft(x),
        suite.test_nonoverlapping_template(x, params.template_m),
        suite.test_overlapping_template(x, params.overlap_m, params.overlap_M),
        suite.test_universal(x, params.universal_L, params.universal_Q),
        suite.test_linear_complexity(x, params.linear_complexity_M),
        suite.test_serial(x, params.serial_m),
        suite.test_apen(x, params.apen_m),
        suite.test_cusum(x, "forward"),
        suite.test_cusum(x, "reverse"),
        suite.test_random_excursions(x),
        suite.test_random_excursions_variant(x),
    )
    assert tuple(r.test_name for r in results) == ROW_NAMES
    return BatteryReport(results, n, params)


def _result_label(passed: bool, applicable: bool) -> str:
    if not applicable:
        return "N/A"
    return "Pass" if passed else "Fail"


def write_report_csv(path, report: BatteryReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test_name", "p_value", "result", "pass_rate"])
        for r in report.results:
            p = f"{r.p_value:.6f}" if r.p_values else ""
            rate = f"{int(r.passed)}/1" if r.applicable else "0/0"
            w.writerow([r.test_name, p, _result_label(r.passed, r.applicable), rate])


def write_report_json(path, report: BatteryReport) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
