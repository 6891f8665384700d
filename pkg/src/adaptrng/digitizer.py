"""Comparator digitizers with a fixed or a low-pass-filtered reference.

In adaptive mode the reference is a one-pole RC low-pass of the signal
itself, updated with the exact discretisation
``y <- y + (1 - exp(-dt/tau)) * (x - y)``. The filter starts at the first
sample. At an emitting step the comparator sees the incoming sample and the
filter state from before that sample is absorbed. Ties emit 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .bits import BitStream
from .entropy import AnalogTrace
from .errors import ConfigError, DomainError


@dataclass
class LowPassFilter:
    tau_lpf: float
    state: float = 0.0

    def __post_init__(self):
        if not self.tau_lpf > 0:
            raise DomainError(f"tau_lpf must be positive, got {self.tau_lpf}")


def lpf_step(f: LowPassFilter, v_in: float, dt: float) -> float:
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    f.state += -math.expm1(-dt / f.tau_lpf) * (v_in - f.state)
    return f.state


def cutoff_frequency(tau_lpf: float) -> float:
    if not tau_lpf > 0:
        raise DomainError(f"tau_lpf must be positive, got {tau_lpf}")
    return 1.0 / (2 * math.pi * tau_lpf)


def compare(v_in: float, v_ref: float) -> int:
    return 1 if v_in > v_ref else 0


def ones_fraction(bits) -> float:
    arr = bits.bits if isinstance(bits, BitStream) else np.asarray(bits)
    if arr.size == 0:
        raise DomainError("ones fraction of an empty stream")
    return float(np.count_nonzero(arr)) / arr.size


@dataclass(frozen=True)
class DigitizerConfig:
    """Comparator settings.

    ``source_tau_c`` is the correlation time of the signal being digitised;
    when known, adaptive mode requires ``tau_lpf > source_tau_c``.
    """

    mode: str = "adaptive"
    v_ref_fixed: float | None = None
    tau_lpf: float = 10e-6
    sample_interval: float = 500e-9
    warmup: float = 50e-6
    source_tau_c: float | None = None

    def validate(self, tau_c: float | None = None) -> "DigitizerConfig":
        tau_c = self.source_tau_c if tau_c is None else tau_c
        if self.mode not in ("fixed", "adaptive"):
            raise ConfigError(f"digitizer mode must be 'fixed' or 'adaptive', got {self.mode!r}")
        if not self.sample_interval > 0:
            raise ConfigError("sample_interval must be positive")
        if not self.warmup >= 0:
            raise ConfigError("warmup must be non-negative")
        if self.mode == "fixed":
            if self.v_ref_fixed is None:
                raise ConfigError("fixed mode needs v_ref_fixed")
            return self
        if not self.tau_lpf > 0:
            raise ConfigError("tau_lpf must be positive")
        if tau_c is not None and not self.tau_lpf > tau_c:
            raise ConfigError(
                f"adaptive digitizer needs tau_lpf > tau_c (tau_lpf={self.tau_lpf:g} s, tau_c={tau_c:g} s)"
            )
        if self.warmup < 3 * self.tau_lpf * (1 - 1e-12):
            raise ConfigError(
                f"warmup must be at least 3*tau_lpf (warmup={self.warmup:g} s, tau_lpf={self.tau_lpf:g} s)"
            )
        return self

    @classmethod
    def defaults_for(cls, tau_c: float, mode: str = "adaptive", **overrides) -> "DigitizerConfig":
        """Default ratios: tau_lpf = 100 tau_c, sample every 5 tau_c, warm up for 5 tau_lpf."""
        tau_lpf = overrides.pop("tau_lpf", None) or 100 * tau_c
        cfg = cls(mode=mode, tau_lpf=tau_lpf, sample_interval=5 * tau_c,
                  warmup=5 * tau_lpf, source_tau_c=tau_c)
        return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def _steps(interval: float, dt: float, what: str) -> int:
    ratio = interval / dt
    k = round(ratio)
    if k < 1 or abs(ratio - k) > 1e-9 * max(1.0, ratio):
        raise ConfigError(f"trace dt={dt:g} s must divide {what}={interval:g} s")
    return k


class StreamingDigitizer:
    """Digitizer fed with consecutive pieces of one trace.

    Feed dense samples with :meth:`feed` or piecewise-constant runs with
    :meth:`feed_runs`; both give the same bits for the same signal.
    """

    # largest exponent allowed when scaling a run segment (exp(300) is safe)
    _MAX_EXPONENT = 300.0

    def __init__(self, cfg: DigitizerConfig, dt: float, tau_c: float | None = None):
        self.cfg = cfg.validate(tau_c)
        self.dt = float(dt)
        self.interval = _steps(cfg.sample_interval, dt, "sample_interval")
        self.warmup_steps = math.ceil(cfg.warmup / dt - 1e-9)
        self.alpha = -math.expm1(-dt / cfg.tau_lpf) if cfg.mode == "adaptive" else 0.0
        self.rho = 1.0 - self.alpha
        self.state: float | None = None
        self.steps = 0

    @property
    def adaptive(self) -> bool:
        return self.cfg.mode == "adaptive"

    def _sample_steps(self, start: int, stop: int) -> np.ndarray:
        """Global step indices in [start, stop) that emit a bit."""
        w, s = self.warmup_steps, self.interval
        first = w if start <= w else w + -(-(start - w) // s) * s
        return np.arange(first, stop, s, dtype=np.int64)

    def steps_for_bits(self, n_bits: int) -> int:
        """Steps from a fresh start needed to emit ``n_bits`` bits."""
        return self.warmup_steps + (n_bits - 1) * self.interval + 1 if n_bits else 0

    def feed(self, samples) -> np.ndarray:
        x = np.asarray(samples, float)
        if x.size == 0:
            return np.empty(0, np.uint8)
        start = self.steps
        idx = self._sample_steps(start, start + x.size) - start
        self.steps += x.size
        if not self.adaptive:
            return (x[idx] > self.cfg.v_ref_fixed).astype(np.uint8)
        if self.state is None:
            self.state = float(x[0])
        after, _ = lfilter([self.alpha], [1.0, -self.rho], x, zi=[self.rho * self.state])
        before = np.concatenate([[self.state], after[:-1]])
        self.state = float(after[-1])
        return (x[idx] > before[idx]).astype(np.uint8)

    def feed_runs(self, values, lengths) -> np.ndarray:
        """Feed a signal given as ``values[i]`` held for ``lengths[i]`` steps.

        Matches :meth:`feed` bit for bit unless a value is held for tens of
        filter time constants: the filter then settles onto it and the
        comparison becomes a tie decided by rounding.
        """
        values = np.asarray(values, float)
        lengths = np.asarray(lengths, np.int64)
        if values.size == 0:
            return np.empty(0, np.uint8)
        if self.state is None:
            self.state = float(values[0])
        limit = max(1, int(self._MAX_EXPONENT / max(self.alpha, 1e-300) / 4))
        if not self.adaptive or int(lengths.sum()) <= limit:
            return self._feed_segment(values, lengths)
        out = []
        for v, l in _split_runs(values, lengths, limit):
            out.append(self._feed_segment(v, l))
        return np.concatenate(out)

    def sampled(self, values, lengths=None) -> np.ndarray:
        """Input values at the emitting steps, without comparing.

        Advances the step counter but leaves the filter alone, so only use
        it on a digitizer dedicated to inspecting a signal (for instance to
        calibrate a fixed reference).
        """
        values = np.asarray(values, float)
        if lengths is None:
            lengths = np.ones(values.size, np.int64)
        lengths = np.asarray(lengths, np.int64)
        if values.size == 0:
            return np.empty(0)
        ends = np.cumsum(lengths)
        steps = self._sample_steps(self.steps, self.steps + int(ends[-1])) - self.steps
        self.steps += int(ends[-1])
        return values[np.searchsorted(ends, steps, side="right")]

    def _feed_segment(self, values: np.ndarray, lengths: np.ndarray) -> np.ndarray:
        start = self.steps
        ends = np.cumsum(lengths)
        total = int(ends[-1])
        steps = self._sample_steps(start, start + total) - start
        self.steps += total
        run = np.searchsorted(ends, steps, side="right")
        x_at = values[run]
        if not self.adaptive:
            return (x_at > self.cfg.v_ref_fixed).astype(np.uint8)
        # shift so that every term of the scaled recursion is non-negative
        base = min(float(values.min()), self.state)
        v = values - base
        y0 = self.state - base
        k = -math.log(self.rho)  # per-step decay rate
        e_end = ends.astype(float)
        e_start = e_end - lengths
        # u = y * rho^-E evolves additively across runs
        grow_end = np.exp(k * e_end)
        grow_start = np.exp(k * e_start)
        u_end = y0 + np.cumsum(v * (grow_end - grow_start))
        y_end = u_end * np.exp(-k * e_end)
        y_run_start = np.concatenate([[y0], y_end[:-1]])
        offset = steps - e_start[run]
        y_before = v[run] + (y_run_start[run] - v[run]) * np.exp(-k * offset)
        self.state = float(y_end[-1] + base)
        return (v[run] > y_before).astype(np.uint8)


def _split_runs(values: np.ndarray, lengths: np.ndarray, limit: int):
    """Cut a run-length signal into pieces spanning at most ``limit`` steps."""
    ends = np.cumsum(lengths)
    total = int(ends[-1])
    for lo in range(0, total, limit):
        hi = min(lo + limit, total)
        i0 = int(np.searchsorted(ends, lo, side="right"))
        i1 = int(np.searchsorted(ends, hi, side="left"))
        v = values[i0: i1 + 1]
        starts = ends[i0: i1 + 1] - lengths[i0: i1 + 1]
        l = np.minimum(ends[i0: i1 + 1], hi) - np.maximum(starts, lo)
        yield v, l


def digitize(trace: AnalogTrace, cfg: DigitizerConfig) -> BitStream:
    """Digitise a whole trace in one pass."""
    dig = StreamingDigitizer(cfg, trace.dt, trace.tau_c)
    return BitStream(dig.feed(trace.samples))
