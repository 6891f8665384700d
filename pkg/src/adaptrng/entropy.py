"""Analog entropy sources: a stochastic MTJ model and an LFSR driving a DAC.

The magnetization ``mz`` follows a hold/redraw process. At every step of
length ``dt`` it is redrawn from Uniform(-1, 1) with probability
``1 - exp(-dt/tau_c)`` and otherwise held. The marginal is uniform and the
autocorrelation at lag ``k*dt`` is ``exp(-k*dt/tau_c)`` exactly.

Internally the process is event based. One PCG64 stream supplies the
geometric gaps between redraws, a second one supplies the redrawn values,
and both are consumed in fixed-size batches. The realised path is therefore
identical whether it is advanced one step at a time or in bulk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, StateError

_BATCH = 1 << 14


class MagnetizationProcess:
    """Seeded hold/redraw process for ``mz(t)``.

    Redraw events come in pairs ``(gap, value)``: the redraw happens ``gap``
    steps after the previous one and sets ``mz = value``.
    """

    def __init__(self, tau_c: float = 100e-9, dt: float | None = None, rng_seed: int = 0):
        dt = tau_c / 10 if dt is None else dt
        if not tau_c > 0:
            raise ConfigError(f"tau_c must be positive, got {tau_c}")
        if not 0 < dt <= tau_c / 10 * (1 + 1e-12):
            raise ConfigError(f"dt must lie in (0, tau_c/10]; got dt={dt}, tau_c={tau_c}")
        self.tau_c = float(tau_c)
        self.dt = float(dt)
        self.rng_seed = int(rng_seed)
        self.p_redraw = -math.expm1(-self.dt / self.tau_c)
        gap_seq, value_seq = np.random.SeedSequence(self.rng_seed).spawn(2)
        self._gap_rng = np.random.Generator(np.random.PCG64(gap_seq))
        self._value_rng = np.random.Generator(np.random.PCG64(value_seq))
        self._gaps = np.empty(0, np.int64)
        self._values = np.empty(0)
        self._pos = 0
        self.current_mz = float(self._value_rng.uniform(-1.0, 1.0))
        self._left, self._pending = self._next_event()

    def _refill(self) -> None:
        self._gaps = self._gap_rng.geometric(self.p_redraw, size=_BATCH)
        self._values = self._value_rng.uniform(-1.0, 1.0, size=_BATCH)
        self._pos = 0

    def _next_event(self) -> tuple[int, float]:
        if self._pos >= self._gaps.size:
            self._refill()
        event = int(self._gaps[self._pos]), float(self._values[self._pos])
        self._pos += 1
        return event

    def step(self) -> float:
        self._left -= 1
        if self._left == 0:
            self.current_mz = self._pending
            self._left, self._pending = self._next_event()
        return self.current_mz

    def runs(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Run-length encoding of the next ``n`` values: (values, lengths)."""
        if n <= 0:
            return np.empty(0), np.empty(0, np.int64)
        if self._left > n:
            self._left -= n
            return np.array([self.current_mz]), np.array([n], np.int64)
        head = self._left - 1  # steps still holding the current value
        span = n - head  # steps from the pending redraw through step n
        gap_parts, value_parts = [], []
        need = span
        while True:
            if self._pos >= self._gaps.size:
                self._refill()
            gaps = self._gaps[self._pos:]
            values = self._values[self._pos:]
            csum = np.cumsum(gaps)
            k = int(np.searchsorted(csum, need, side="left"))
            if k < gaps.size:
                gap_parts.append(gaps[: k + 1])
                value_parts.append(values[: k + 1])
                self._pos += k + 1
                break
            gap_parts.append(gaps)
            value_parts.append(values)
            need -= int(csum[-1])
            self._pos = self._gaps.size
        gaps = np.concatenate(gap_parts)
        values = np.concatenate(value_parts)
        held = gaps[:-1]
        tail = span - int(held.sum())
        out_values = np.concatenate([[self.current_mz] if head else [], [self._pending], values[:-1]])
        out_lengths = np.concatenate([[head] if head else [], held, [tail]]).astype(np.int64)
        self._left = int(gaps[-1]) - tail + 1
        self.current_mz = float(out_values[-1])
        self._pending = float(values[-1])
        return out_values, out_lengths

    def sample(self, n: int) -> np.ndarray:
        """The next ``n`` values of ``mz`` as a dense array."""
        values, lengths = self.runs(n)
        return np.repeat(values, lengths)


def step_mz(proc: MagnetizationProcess) -> float:
    """Advance ``proc`` by one step and return the new ``mz``."""
    return proc.step()


# --------------------------------------------------------------------------
# Device
# --------------------------------------------------------------------------

def tmr_from_resistances(r_p: float, r_ap: float) -> float:
    """Tunnelling magnetoresistance ratio (R_AP - R_P) / R_P."""
    if not r_p > 0:
        raise DomainError(f"r_p must be positive, got {r_p}")
    if not r_ap >= r_p:
        raise DomainError(f"r_ap must not be below r_p (got r_p={r_p}, r_ap={r_ap})")
    return (r_ap - r_p) / r_p


@dataclass(frozen=True)
class SmtjDevice:
    """Stochastic MTJ described by its mean conductance and TMR."""

    g0: float = 1e-3
    tmr: float = 2.0

    def __post_init__(self):
        if not self.g0 > 0:
            raise ConfigError(f"g0 must be positive, got {self.g0}")
        if not self.tmr >= 0:
            raise ConfigError(f"tmr must be non-negative, got {self.tmr}")

    @classmethod
    def from_resistances(cls, r_p: float, r_ap: float) -> "SmtjDevice":
        tmr = tmr_from_resistances(r_p, r_ap)
        return cls(g0=(1 / r_p + 1 / r_ap) / 2, tmr=tmr)

    @property
    def r_p(self) -> float:
        return (2 + self.tmr) / (2 * self.g0 * (1 + self.tmr))

    @property
    def r_ap(self) -> float:
        return self.r_p * (1 + self.tmr)


def conductance(dev: SmtjDevice, mz):
    """G = g0 * (1 + mz * TMR / (2 + TMR)); accepts scalars or arrays."""
    arr = np.asarray(mz, dtype=float)
    if arr.size and (np.nanmin(arr) < -1 or np.nanmax(arr) > 1 or np.isnan(arr).any()):
        raise DomainError("mz must lie in [-1, 1]")
    g = dev.g0 * (1 + arr * (dev.tmr / (2 + dev.tmr)))
    return float(g) if np.ndim(mz) == 0 else g


# --------------------------------------------------------------------------
# Readout
# --------------------------------------------------------------------------

def divider_voltage(g, vdd: float, r_series: float):
    """Voltage across ``r_series`` in series with a conductance ``g``."""
    x = np.asarray(g, float) * r_series
    return vdd * x / (1 + x)


def linear_voltage(g, vdd: float, r_series: float):
    """Divider response linearised at the matched point ``g * r_series = 1``.

    Same operating point and small-signal gain as the divider, without its
    curvature; clipped to the supply rails.
    """
    x = np.asarray(g, float) * r_series
    return vdd * np.clip(0.5 + (x - 1) / 4, 0.0, 1.0)


READOUTS = {"divider": divider_voltage, "linear": linear_voltage}


def readout_voltage(g, vdd: float, r_series: float, readout: str = "divider"):
    if not vdd > 0:
        raise ConfigError(f"vdd must be positive, got {vdd}")
    if not r_series > 0:
        raise ConfigError(f"r_series must be positive, got {r_series}")
    try:
        fn = READOUTS[readout]
    except KeyError:
        raise ConfigError(f"unknown readout {readout!r}; choose from {sorted(READOUTS)}") from None
    return fn(g, vdd, r_series)


# --------------------------------------------------------------------------
# Traces
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalogTrace:
    """Uniformly sampled voltage trace.

    ``tau_c`` optionally records the correlation time of the source so that a
    digitizer can check its filter against it.
    """

    samples: np.ndarray
    dt: float
    vdd: float
    tau_c: float | None = None

    def __post_init__(self):
        arr = np.asarray(self.samples, float)
        if arr.size and (arr.min() < 0 or arr.max() > self.vdd * (1 + 1e-12)):
            raise DomainError("trace samples must lie in [0, vdd]")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return int(self.samples.size)

    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("index,time_s,volts\n")
            for i, (t, v) in enumerate(zip(self.times().tolist(), self.samples.tolist())):
                fh.write(f"{i},{t!r},{v!r}\n")

    def to_binary(self, path) -> None:
        """Raw little-endian float64 samples."""
        Path(path).write_bytes(self.samples.astype("<f8").tobytes())

    @classmethod
    def from_binary(cls, path, dt: float, vdd: float) -> "AnalogTrace":
        return cls(np.frombuffer(Path(path).read_bytes(), dtype="<f8").copy(), dt, vdd)


def smtj_trace(proc: MagnetizationProcess, dev: SmtjDevice, vdd: float, r_series: float,
               n: int, readout: str = "divider") -> AnalogTrace:
    """Voltage trace of ``n`` steps driven by ``proc``."""
    mz = proc.sample(n)
    volts = readout_voltage(conductance(dev, mz), vdd, r_series, readout) if n else np.empty(0)
    return AnalogTrace(volts, proc.dt, vdd, proc.tau_c)


# --------------------------------------------------------------------------
# LFSR + DAC
# --------------------------------------------------------------------------

class LfsrSource:
    """Fibonacci LFSR. Tap t reads state bit ``width - t``; bit 0 is the output."""

    def __init__(self, width: int = 16, taps=(16, 14, 13, 11), state: int = 1,
                 dac_bits: int = 8, vdd: float = 5.0):
        taps = tuple(sorted({int(t) for t in taps}, reverse=True))
        if width < 2:
            raise ConfigError("LFSR width must be at least 2")
        if not taps or taps[0] != width or taps[-1] < 1:
            raise ConfigError(f"taps must lie in [1, width] and include width={width}")
        if dac_bits < 1:
            raise ConfigError(f"dac_bits must be positive, got {dac_bits}")
        if not vdd > 0:
            raise ConfigError(f"vdd must be positive, got {vdd}")
        self.width = int(width)
        self.taps = taps
        self.dac_bits = int(dac_bits)
        self.vdd = float(vdd)
        self.state = int(state) & ((1 << width) - 1)
        if self.state == 0:
            raise StateError("LFSR state must be nonzero")
        self._tap_mask = sum(1 << (width - t) for t in taps)

    def step(self) -> int:
        s = self.state
        if s == 0:
            raise StateError("LFSR state must be nonzero")
        out = s & 1
        fb = (s & self._tap_mask).bit_count() & 1
        self.state = (s >> 1) | (fb << (self.width - 1))
        return out

    def bits(self, n: int) -> np.ndarray:
        """Next ``n`` output bits; identical to ``n`` calls of :meth:`step`."""
        out_mat, jump = _lfsr_block_maps(self.width, self.taps)
        block = out_mat.shape[0]
        n_blocks, rest = divmod(int(n), block)
        out = np.empty(n, np.uint8)
        vec = np.array([(self.state >> i) & 1 for i in range(self.width)], np.int64)
        for b in range(n_blocks):
            out[b * block:(b + 1) * block] = (out_mat @ vec) & 1
            vec = (jump @ vec) & 1
        self.state = sum(int(v) << i for i, v in enumerate(vec.tolist()))
        for k in range(n_blocks * block, n):
            out[k] = self.step()
        return out

    def words(self, n: int) -> np.ndarray:
        """Next ``n`` DAC words, each built from ``dac_bits`` outputs MSB first."""
        bits = self.bits(n * self.dac_bits).reshape(n, self.dac_bits).astype(np.int64)
        weights = 1 << np.arange(self.dac_bits - 1, -1, -1)
        return bits @ weights


def lfsr_next(src: LfsrSource) -> int:
    """Clock ``src`` once and return its output bit."""
    return src.step()


def lfsr_dac_trace(src: LfsrSource, n: int, dt: float = 1e-6) -> AnalogTrace:
    """``n`` DAC samples, ``vdd * word / (2**dac_bits - 1)`` each."""
    if src.dac_bits > src.width:
        raise ConfigError(f"dac_bits={src.dac_bits} exceeds the LFSR width {src.width}")
    volts = src.vdd * src.words(n) / ((1 << src.dac_bits) - 1)
    return AnalogTrace(volts, dt, src.vdd, tau_c=dt)


@lru_cache(maxsize=16)
def _lfsr_block_maps(width: int, taps: tuple, block: int = 4096):
    """Output matrix (block x width) and state jump (width x width) over GF(2)."""
    out_mat = np.zeros((block, width), np.int64)
    jump = np.zeros((width, width), np.int64)
    for i in range(width):
        src = LfsrSource.__new__(LfsrSource)
        src.width, src.taps = width, taps
        src._tap_mask = sum(1 << (width - t) for t in taps)
        src.state = 1 << i
        for k in range(block):
            out_mat[k, i] = src.state & 1
            fb = (src.state & src._tap_mask).bit_count() & 1
            src.state = (src.state >> 1) | (fb << (width - 1))
        for j in range(width):
            jump[j, i] = (src.state >> j) & 1
    return out_mat, jump
