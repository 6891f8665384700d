"""End-to-end experiments: pipelines, resilience sweeps and pass-rate studies.

A pipeline is source -> digitizer -> optional cipher. Everything is a pure
function of a :class:`PipelineConfig`, whose ``seed`` drives the entropy
source, so every experiment is reproducible from its configuration alone.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .bits import BitStream
from .cipher import SEED_BITS, postprocess
from .digitizer import DigitizerConfig, StreamingDigitizer
from .entropy import (
    LfsrSource,
    MagnetizationProcess,
    SmtjDevice,
    conductance,
    lfsr_dac_trace,
    readout_voltage,
    READOUTS,
)
from .errors import ConfigError, DomainError, InputFormatError, SeedError
from .nist import ROW_NAMES, BatteryReport, run_battery

SOURCES = ("smtj", "lfsr")
CIPHERS = ("none", "trivium", "mini")
PARAMETERS = ("vdd", "g0", "tmr")
MIN_SWEEP_BITS = 1_000_000
_CHUNK_STEPS = 1 << 20


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of one generator run.

    Digitizer timing left as ``None`` follows the source: ``tau_lpf`` is 100
    correlation times and warm-up is five ``tau_lpf``. The sMTJ path samples
    every 5 ``tau_c``; the LFSR path samples every DAC word.
    """

    source: str = "smtj"
    seed: int = 1
    # sMTJ source
    tau_c: float = 100e-9
    dt: float | None = None
    g0: float = 1e-3
    tmr: float = 2.0
    vdd: float = 5.0
    r_series: float = 1000.0
    readout: str = "linear"
    # LFSR source
    lfsr_width: int = 16
    lfsr_taps: tuple[int, ...] = (16, 14, 13, 11)
    lfsr_state: int | None = None
    dac_bits: int = 8
    word_time: float = 1e-6
    # digitizer
    mode: str = "adaptive"
    v_ref_fixed: float | None = None
    tau_lpf: float | None = None
    sample_interval: float | None = None
    warmup: float | None = None
    # post-processing
    cipher: str = "trivium"

    @property
    def step_time(self) -> float:
        if self.source == "lfsr":
            return self.word_time
        return self.tau_c / 10 if self.dt is None else self.dt

    @property
    def correlation_time(self) -> float:
        return self.word_time if self.source == "lfsr" else self.tau_c

    @property
    def seed_bits(self) -> int:
        return SEED_BITS.get(self.cipher, 0)

    def digitizer_config(self) -> DigitizerConfig:
        interval = self.sample_interval
        if interval is None and self.source == "lfsr":
            interval = self.word_time
        return DigitizerConfig.defaults_for(
            self.correlation_time, self.mode, tau_lpf=self.tau_lpf,
            sample_interval=interval, warmup=self.warmup, v_ref_fixed=self.v_ref_fixed)

    def lfsr_seed_state(self) -> int:
        """Initial register value: explicit, or derived from ``seed``."""
        if self.lfsr_state is not None:
            return self.lfsr_state
        period = (1 << self.lfsr_width) - 1
        word = int(np.random.SeedSequence(self.seed).generate_state(2, np.uint64)[0])
        return word % period + 1

    def device(self) -> SmtjDevice:
        return SmtjDevice(self.g0, self.tmr)

    def lfsr(self) -> LfsrSource:
        src = LfsrSource(self.lfsr_width, self.lfsr_taps, self.lfsr_seed_state(),
                         self.dac_bits, self.vdd)
        if src.dac_bits > src.width:
            raise ConfigError(f"dac_bits={src.dac_bits} exceeds the LFSR width {src.width}")
        return src

    def validate(self) -> "PipelineConfig":
        """Raise ConfigError/DomainError for any inconsistent field."""
        if self.source not in SOURCES:
            raise ConfigError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.cipher not in CIPHERS:
            raise ConfigError(f"cipher must be one of {CIPHERS}, got {self.cipher!r}")
        if self.readout not in READOUTS:
            raise ConfigError(f"readout must be one of {tuple(READOUTS)}, got {self.readout!r}")
        if not self.vdd > 0:
            raise ConfigError(f"vdd must be positive, got {self.vdd}")
        if self.source == "smtj":
            if not self.r_series > 0:
                raise ConfigError(f"r_series must be positive, got {self.r_series}")
            MagnetizationProcess(self.tau_c, self.dt, 0)
            try:
                self.device()
            except DomainError as exc:
                raise ConfigError(str(exc)) from exc
        else:
            if not self.word_time > 0:
                raise ConfigError("word_time must be positive")
            self.lfsr()
        StreamingDigitizer(self.digitizer_config(), self.step_time, self.correlation_time)
        return self

    def with_value(self, parameter: str, value: float) -> "PipelineConfig":
        if parameter not in PARAMETERS:
            raise ConfigError(f"unknown sweep parameter {parameter!r}; choose from {PARAMETERS}")
        return replace(self, **{parameter: float(value)})


@dataclass(frozen=True)
class PipelineResult:
    raw: BitStream
    output: BitStream


def _digitizer(cfg: PipelineConfig) -> StreamingDigitizer:
    return StreamingDigitizer(cfg.digitizer_config(), cfg.step_time, cfg.correlation_time)


def _signal_chunks(cfg: PipelineConfig, steps: int):
    """Yield the source voltage as ``(values, lengths)`` pieces covering ``steps`` steps."""
    if cfg.source == "lfsr":
        src = cfg.lfsr()
        for lo in range(0, steps, _CHUNK_STEPS):
            tr = lfsr_dac_trace(src, min(_CHUNK_STEPS, steps - lo), cfg.word_time)
            yield tr.samples, None
        return
    proc = MagnetizationProcess(cfg.tau_c, cfg.dt, cfg.seed)
    dev = cfg.device()
    for lo in range(0, steps, _CHUNK_STEPS):
        mz, lengths = proc.runs(min(_CHUNK_STEPS, steps - lo))
        volts = readout_voltage(conductance(dev, mz), cfg.vdd, cfg.r_series, cfg.readout)
        yield volts, lengths


def raw_bits(cfg: PipelineConfig, n_bits: int) -> BitStream:
    """Digitizer output before post-processing."""
    cfg.validate()
    if n_bits <= 0:
        return BitStream(np.empty(0, np.uint8))
    dig = _digitizer(cfg)
    parts = []
    for values, lengths in _signal_chunks(cfg, dig.steps_for_bits(n_bits)):
        parts.append(dig.feed(values) if lengths is None else dig.feed_runs(values, lengths))
    return BitStream(np.concatenate(parts)[:n_bits])


def sampled_voltages(cfg: PipelineConfig, n: int) -> np.ndarray:
    """The ``n`` source voltages the comparator would see."""
    probe = replace(cfg, mode="fixed", v_ref_fixed=0.0)
    probe.validate()
    dig = _digitizer(probe)
    parts = [dig.sampled(v, l) for v, l in _signal_chunks(probe, dig.steps_for_bits(n))]
    return np.concatenate(parts)[:n]


def run_pipeline(cfg: PipelineConfig, n_bits: int) -> PipelineResult:
    """Generate ``n_bits`` output bits (plus the raw bits used to seed the cipher)."""
    raw = raw_bits(cfg, n_bits + cfg.seed_bits)
    out = raw if cfg.cipher == "none" else postprocess(raw, cfg.cipher)
    return PipelineResult(raw, out)


def lfsr_raw_stream(cfg: PipelineConfig, n_bits: int) -> BitStream:
    """The LFSR's own output bits, before the DAC."""
    return BitStream(cfg.lfsr().bits(n_bits))


def calibrate_fixed_reference(cfg: PipelineConfig, n_samples: int = 1 << 20,
                              tol: float = 0.001) -> float:
    """Bisect a fixed reference until the ones-fraction lies in 0.5 +- tol.

    For a discrete source where no threshold reaches the band, the bisection
    still converges to the threshold closest to the median.
    """
    v = sampled_voltages(cfg, n_samples)
    lo, hi = 0.0, float(cfg.vdd)
    mid = 0.5 * (lo + hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        frac = np.count_nonzero(v > mid) / v.size
        if abs(frac - 0.5) <= tol:
            break
        if frac > 0.5:
            lo = mid
        else:
            hi = mid
    return float(mid)


# --------------------------------------------------------------------------
# Point evaluation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RunOutcome:
    """One seeded pipeline run at one parameter value."""

    seed: int
    passed: bool
    ones_fraction: float | None = None
    report: BatteryReport | None = field(default=None, compare=False)
    diagnostic: str = ""

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "passed": self.passed,
            "ones_fraction": self.ones_fraction,
            "diagnostic": self.diagnostic,
            "failed_rows": self.report.failed_rows() if self.report else None,
        }


Evaluator = Callable[[PipelineConfig, int], "RunOutcome | bool"]


def evaluate_run(cfg: PipelineConfig, n_bits: int) -> RunOutcome:
    """Generate, post-process and test one stream.

    ``ones_fraction`` is measured on the raw digitizer bits, where bias lives.
    A raw stream too degenerate to seed the cipher counts as a failing run.
    """
    raw = raw_bits(cfg, n_bits + cfg.seed_bits)
    frac = raw.ones() / len(raw)
    try:
        out = raw if cfg.cipher == "none" else postprocess(raw, cfg.cipher)
    except SeedError as exc:
        return RunOutcome(cfg.seed, False, frac, None, f"cipher seed rejected: {exc}")
    report = run_battery(out)
    diag = "" if report.all_passed else "failed: " + ", ".join(report.failed_rows())
    return RunOutcome(cfg.seed, report.all_passed, frac, report, diag)


def _normalise(outcome, seed: int) -> RunOutcome:
    if isinstance(outcome, RunOutcome):
        return outcome
    return RunOutcome(seed, bool(outcome))


@dataclass(frozen=True)
class SweepPoint:
    value: float
    runs: tuple[RunOutcome, ...]

    @property
    def passed(self) -> bool:
        return bool(self.runs) and all(r.passed for r in self.runs)

    @property
    def ones_fractions(self) -> list[float]:
        return [r.ones_fraction for r in self.runs if r.ones_fraction is not None]

    def to_dict(self) -> dict:
        return {"value": self.value, "passed": self.passed,
                "runs": [r.to_dict() for r in self.runs]}


class _PointRunner:
    """Evaluates the seeds of a sweep point, optionally in parallel.

    The outcome never depends on ``jobs``: seeds are tried in order and the
    record stops at the first failing seed either way. Results are cached by
    configuration so a point shared by two searches is simulated once.
    """

    def __init__(self, evaluate: Evaluator | None, n_bits: int, seeds: int, jobs: int = 1):
        self.evaluate = evaluate or evaluate_run
        self.n_bits = n_bits
        self.seeds = seeds
        self.jobs = max(1, int(jobs))
        self.cache: dict[PipelineConfig, RunOutcome] = {}
        self._pool = None

    def __enter__(self):
        if self.jobs > 1:
            self._pool = ProcessPoolExecutor(max_workers=self.jobs)
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def point(self, cfg: PipelineConfig, value: float) -> SweepPoint:
        configs = [replace(cfg, seed=cfg.seed + i) for i in range(self.seeds)]
        todo = [c for c in configs if c not in self.cache]
        if self._pool is not None and len(todo) > 1:
            results = self._pool.map(self.evaluate, todo, [self.n_bits] * len(todo))
            for c, res in zip(todo, results):
                self.cache[c] = _normalise(res, c.seed)
        runs = []
        for c in configs:
            if c not in self.cache:
                self.cache[c] = _normalise(self.evaluate(c, self.n_bits), c.seed)
            runs.append(self.cache[c])
            if not runs[-1].passed:
                break
        return SweepPoint(value, tuple(runs))


# --------------------------------------------------------------------------
# Resilience search
# --------------------------------------------------------------------------

_DEFAULT_SWEEPS = {
    # parameter: (nominal, step, max_steps)
    "vdd": (5.0, 0.5, 4),
    "g0": (1e-3, 1e-4, 4),
    "tmr": (2.0, 0.2, 4),
}


def _in_bounds(parameter: str, value: float) -> bool:
    return value >= 0 if parameter == "tmr" else value > 0


def _grid(nominal: float, offset: float) -> float:
    return float(f"{nominal + offset:.12g}")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    nominal: float
    step_up: float
    step_down: float
    max_steps: int = 4
    bits_per_point: int = 1 << 21
    seeds_per_point: int = 3

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ConfigError(f"unknown sweep parameter {self.parameter!r}; choose from {PARAMETERS}")
        if not (self.step_up > 0 and self.step_down > 0):
            raise ConfigError("sweep steps must be positive")
        if self.max_steps < 0:
            raise ConfigError("max_steps must be non-negative")
        if self.seeds_per_point < 1:
            raise ConfigError("seeds_per_point must be at least 1")
        if self.bits_per_point < MIN_SWEEP_BITS:
            raise ConfigError(f"bits_per_point must be at least {MIN_SWEEP_BITS} for the full battery")
        if not _in_bounds(self.parameter, self.nominal):
            raise ConfigError(f"nominal {self.parameter}={self.nominal} is outside its physical range")

    @classmethod
    def default(cls, parameter: str, **overrides) -> "SweepSpec":
        """Nominal 5 V / 1 mS / TMR 2; steps of 0.5 V and 10 % of nominal."""
        if parameter not in _DEFAULT_SWEEPS:
            raise ConfigError(f"unknown sweep parameter {parameter!r}; choose from {PARAMETERS}")
        nominal, step, max_steps = _DEFAULT_SWEEPS[parameter]
        nominal = overrides.pop("nominal", None) or nominal
        if parameter != "vdd" and "step" not in overrides:
            step = 0.1 * nominal
        step = overrides.pop("step", None) or step
        fields = dict(parameter=parameter, nominal=nominal, step_up=step, step_down=step,
                      max_steps=max_steps)
        fields.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**fields)


@dataclass(frozen=True)
class ResilienceRange:
    """Contiguous all-pass interval found by the stepwise search.

    ``lower``/``upper`` are ``None`` when the nominal point failed.
    ``points`` holds every visited point in ascending order of value.
    """

    parameter: str
    nominal: float
    lower: float | None
    upper: float | None
    points: tuple[SweepPoint, ...]
    step_up: float
    step_down: float
    diagnostic: str = ""

    @property
    def empty(self) -> bool:
        return self.lower is None

    @property
    def width(self) -> float:
        return 0.0 if self.empty else self.upper - self.lower

    def contains(self, other: "ResilienceRange") -> bool:
        if other.empty:
            return True
        if self.empty:
            return False
        return self.lower <= other.lower and self.upper >= other.upper

    def passing_points(self) -> list[SweepPoint]:
        if self.empty:
            return []
        return [p for p in self.points if self.lower <= p.value <= self.upper]

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter, "nominal": self.nominal,
            "lower": self.lower, "upper": self.upper, "width": self.width,
            "empty": self.empty, "step_up": self.step_up, "step_down": self.step_down,
            "diagnostic": self.diagnostic,
            "points": [p.to_dict() for p in self.points],
        }


def _search(spec: SweepSpec, config: PipelineConfig, runner: _PointRunner) -> ResilienceRange:
    base = config.with_value(spec.parameter, spec.nominal)
    visited = {}

    def visit(value: float) -> SweepPoint:
        visited[value] = runner.point(base.with_value(spec.parameter, value), value)
        return visited[value]

    nominal = visit(spec.nominal)
    lower = upper = None
    diagnostic = ""
    if not nominal.passed:
        failing = next(r for r in nominal.runs if not r.passed)
        diagnostic = f"nominal point fails (seed {failing.seed}): {failing.diagnostic or 'battery failed'}"
    else:
        lower = upper = spec.nominal
        for sign, step in ((1, spec.step_up), (-1, spec.step_down)):
            for i in range(1, spec.max_steps + 1):
                value = _grid(spec.nominal, sign * i * step)
                if not _in_bounds(spec.parameter, value) or not visit(value).passed:
                    break
                if sign > 0:
                    upper = value
                else:
                    lower = value
    points = tuple(visited[v] for v in sorted(visited))
    return ResilienceRange(spec.parameter, spec.nominal, lower, upper, points,
                           spec.step_up, spec.step_down, diagnostic)


def find_resilience_range(spec: SweepSpec, config: PipelineConfig,
                          evaluate: Evaluator | None = None, jobs: int = 1) -> ResilienceRange:
    """Step away from nominal in each direction until a point fails.

    A point passes when every one of its seeds passes every applicable row.
    ``evaluate(config, n_bits)`` may be replaced, for instance by a stub
    returning a bool.
    """
    config.validate()
    with _PointRunner(evaluate, spec.bits_per_point, spec.seeds_per_point, jobs) as runner:
        return _search(spec, config, runner)


@dataclass(frozen=True)
class ComparisonReport:
    parameter: str
    fixed_range: ResilienceRange
    adaptive_range: ResilienceRange
    v_ref_fixed: float

    @property
    def enhancement(self) -> float | None:
        """(adaptive width - fixed width) / fixed width; ``None`` if fixed width is 0."""
        fw = self.fixed_range.width
        if fw <= 0:
            return None
        return (self.adaptive_range.width - fw) / fw

    @property
    def adaptive_contains_fixed(self) -> bool:
        return self.adaptive_range.contains(self.fixed_range)

    @property
    def strictly_wider(self) -> bool:
        """Adaptive range reaches past the fixed one on at least one side."""
        a, f = self.adaptive_range, self.fixed_range
        if a.empty:
            return False
        if f.empty:
            return True
        return a.lower < f.lower or a.upper > f.upper

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "v_ref_fixed": self.v_ref_fixed,
            "enhancement": self.enhancement,
            "adaptive_contains_fixed": self.adaptive_contains_fixed,
            "strictly_wider": self.strictly_wider,
            "fixed": self.fixed_range.to_dict(),
            "adaptive": self.adaptive_range.to_dict(),
        }


def compare_fixed_vs_adaptive(spec: SweepSpec, config: PipelineConfig,
                              evaluate: Evaluator | None = None, jobs: int = 1,
                              v_ref: float | None = None) -> ComparisonReport:
    """Run the search for both digitizers on the same source settings.

    The fixed reference is calibrated once at the nominal point (first seed)
    unless ``v_ref`` is given, and is then held for the whole sweep.
    """
    config = config.with_value(spec.parameter, spec.nominal)
    adaptive = replace(config, mode="adaptive", v_ref_fixed=None)
    if v_ref is None:
        v_ref = calibrate_fixed_reference(replace(config, mode="fixed"), spec.bits_per_point)
    fixed = replace(config, mode="fixed", v_ref_fixed=float(v_ref))
    fixed.validate()
    adaptive.validate()
    with _PointRunner(evaluate, spec.bits_per_point, spec.seeds_per_point, jobs) as runner:
        fixed_range = _search(spec, fixed, runner)
        adaptive_range = _search(spec, adaptive, runner)
    return ComparisonReport(spec.parameter, fixed_range, adaptive_range, float(v_ref))


def write_sweep_csv(path, reports) -> None:
    """One line per (arm, parameter value, seed, row)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["arm", "parameter", "parameter_value", "seed", "row_name", "p_value", "pass"])
        for rep in reports:
            for arm, rng in (("fixed", rep.fixed_range), ("adaptive", rep.adaptive_range)):
                for point in rng.points:
                    for run in point.runs:
                        if run.report is None:
                            w.writerow([arm, rng.parameter, repr(point.value), run.seed,
                                        "", "", int(run.passed)])
                            continue
                        for row in run.report.results:
                            p = f"{row.p_value:.6f}" if row.p_values else ""
                            w.writerow([arm, rng.parameter, repr(point.value), run.seed,
                                        row.test_name, p, "" if not row.applicable else int(row.passed)])


def write_sweep_json(path, reports) -> None:
    Path(path).write_text(json.dumps([r.to_dict() for r in reports], indent=2) + "\n")


# --------------------------------------------------------------------------
# Repeated runs, bias and bitmaps
# --------------------------------------------------------------------------

STREAMS = ("output", "raw", "lfsr")


@dataclass(frozen=True)
class RowTally:
    test_name: str
    passes: int
    applicable_runs: int
    mean_p_value: float | None

    @property
    def pass_rate(self) -> str:
        return f"{self.passes}/{self.applicable_runs}"


@dataclass(frozen=True)
class PassRateTable:
    runs: int
    bits_per_run: int
    stream: str
    rows: tuple[RowTally, ...]
    reports: tuple[BatteryReport, ...] = field(compare=False, default=())

    def row(self, name: str) -> RowTally:
        for r in self.rows:
            if r.test_name == name:
                return r
        raise KeyError(name)

    @property
    def runs_all_passed(self) -> int:
        return sum(r.all_passed for r in self.reports)

    def to_dict(self) -> dict:
        return {
            "runs": self.runs, "bits_per_run": self.bits_per_run, "stream": self.stream,
            "runs_all_passed": self.runs_all_passed,
            "rows": [dict(asdict(r), pass_rate=r.pass_rate) for r in self.rows],
            "per_run": [rep.to_dict() for rep in self.reports],
        }


def _stream_for(cfg: PipelineConfig, n_bits: int, stream: str) -> BitStream:
    if stream == "lfsr":
        return lfsr_raw_stream(cfg, n_bits)
    if stream == "raw":
        return raw_bits(cfg, n_bits)
    return run_pipeline(cfg, n_bits).output


def _battery_job(cfg: PipelineConfig, n_bits: int, stream: str) -> BatteryReport:
    return run_battery(_stream_for(cfg, n_bits, stream))


def repeated_run_study(config: PipelineConfig, runs: int, n_bits: int = 1_670_000,
                       stream: str = "output", jobs: int = 1) -> PassRateTable:
    """Run ``runs`` independently seeded experiments and count passes per row.

    Run ``i`` uses seed ``config.seed + i``. ``stream`` picks what is tested:
    the post-processed ``output``, the ``raw`` digitizer bits, or the ``lfsr``
    register output before the DAC.
    """
    if runs < 1:
        raise ConfigError("runs must be at least 1")
    if stream not in STREAMS:
        raise ConfigError(f"stream must be one of {STREAMS}, got {stream!r}")
    config.validate()
    if stream == "lfsr" and config.source != "lfsr":
        raise ConfigError("the lfsr stream needs source = lfsr")
    configs = [replace(config, seed=config.seed + i) for i in range(runs)]
    if jobs > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_battery_job, configs, [n_bits] * runs, [stream] * runs))
    else:
        reports = [_battery_job(c, n_bits, stream) for c in configs]
    rows = []
    for i, name in enumerate(ROW_NAMES):
        results = [rep.results[i] for rep in reports]
        applicable = [r for r in results if r.applicable]
        ps = [r.p_value for r in applicable]
        rows.append(RowTally(name, sum(r.passed for r in applicable), len(applicable),
                             float(np.mean(ps)) if ps else None))
    return PassRateTable(runs, n_bits, stream, tuple(rows), tuple(reports))


def write_pass_rate_csv(path, table: PassRateTable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test_name", "mean_p_value", "result", "pass_rate"])
        for r in table.rows:
            p = "" if r.mean_p_value is None else f"{r.mean_p_value:.6f}"
            if r.applicable_runs == 0:
                result = "N/A"
            else:
                result = "Pass" if r.passes == r.applicable_runs else "Fail"
            w.writerow([r.test_name, p, result, r.pass_rate])


def bias_curve(parameter: str, values, config: PipelineConfig,
               n_bits: int = 1_000_000) -> list[tuple[float, float]]:
    """Ones-fraction of the raw digitizer bits at each parameter value."""
    out = []
    for v in values:
        raw = raw_bits(config.with_value(parameter, v), n_bits)
        out.append((float(v), raw.ones() / n_bits))
    return out


def emit_bitmap(bits, width: int) -> str:
    """Plain portable bitmap (P1) text; 1 is a black pixel, rows fill left to right.

    A trailing partial row is dropped.
    """
    x = bits.bits if isinstance(bits, BitStream) else np.asarray(bits, np.uint8)
    if width <= 0:
        raise ConfigError(f"bitmap width must be positive, got {width}")
    height = x.size // width
    if height < 1:
        raise InputFormatError(f"{x.size} bits cannot fill one row of width {width}")
    grid = x[: height * width].reshape(height, width)
    lines = ["P1", f"{width} {height}"]
    lines += [" ".join("1" if b else "0" for b in row) for row in grid]
    return "\n".join(lines) + "\n"


def black_fraction(bits, width: int) -> float:
    """Fraction of black pixels in the bitmap :func:`emit_bitmap` would draw."""
    x = bits.bits if isinstance(bits, BitStream) else np.asarray(bits, np.uint8)
    if width <= 0 or x.size < width:
        raise ConfigError("width must be positive and at most the stream length")
    used = (x.size // width) * width
    return float(np.count_nonzero(x[:used])) / used

