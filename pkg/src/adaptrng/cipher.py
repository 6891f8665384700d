"""Trivium and the 19-bit Mini-Trivium post-processor.

State bits are numbered s1..sN as in the Trivium reference description and
stored in a Python int with s_i at bit position i-1. Shifting moves s_i to
s_(i+1); the feedback bit enters at s1.

Key and IV bits are sequences K1..K80 and IV1..IV80. When they come from raw
entropy the first raw bit is K1. When they come from bytes the eSTREAM
convention applies: K_(8i+j+1) is bit j (least significant first) of byte i,
and keystream bytes are packed the same way. That is the layout used by the
published test vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import BitStream
from .errors import InputFormatError, SeedError, StateError

TRIVIUM_WARMUP = 4 * 288
MINI_BITS = 19
MINI_WARMUP = 4 * MINI_BITS
_MINI_MASK = (1 << MINI_BITS) - 1
_TRIVIUM_MASK = (1 << 288) - 1


def _bit(state: int, i: int) -> int:
    """s_i of a state word."""
    return (state >> (i - 1)) & 1


def _bits_to_int(bits) -> int:
    """Pack a bit sequence so that element k lands at bit position k."""
    value = 0
    for k, b in enumerate(bits):
        if b:
            value |= 1 << k
    return value


def _int_to_bits(value: int, width: int) -> list[int]:
    return [(value >> k) & 1 for k in range(width)]


@dataclass(frozen=True)
class KeyIv:
    """80-bit key and 80-bit IV in eSTREAM byte order."""

    key: bytes
    iv: bytes

    def __post_init__(self):
        if len(self.key) != 10 or len(self.iv) != 10:
            raise InputFormatError("key and IV must be exactly 80 bits (10 bytes)")

    @classmethod
    def from_hex(cls, key_hex: str, iv_hex: str) -> "KeyIv":
        return cls(bytes.fromhex(key_hex), bytes.fromhex(iv_hex))

    @classmethod
    def from_bits(cls, key_bits, iv_bits) -> "KeyIv":
        """Build from K1..K80 and IV1..IV80."""
        key_bits, iv_bits = list(key_bits), list(iv_bits)
        if len(key_bits) != 80 or len(iv_bits) != 80:
            raise InputFormatError("key and IV must be exactly 80 bits")
        return cls(_bits_to_int(key_bits).to_bytes(10, "little"),
                   _bits_to_int(iv_bits).to_bytes(10, "little"))

    @property
    def key_bits(self) -> list[int]:
        return _int_to_bits(int.from_bytes(self.key, "little"), 80)

    @property
    def iv_bits(self) -> list[int]:
        return _int_to_bits(int.from_bytes(self.iv, "little"), 80)


# --------------------------------------------------------------------------
# Trivium, bit-serial reference
# --------------------------------------------------------------------------

class TriviumState:
    """288-bit Trivium state; see :func:`trivium_init`."""

    __slots__ = ("s", "warmed_up")

    def __init__(self, s: int, warmed_up: bool = False):
        self.s = s & _TRIVIUM_MASK
        self.warmed_up = warmed_up

    def copy(self) -> "TriviumState":
        return TriviumState(self.s, self.warmed_up)

    def bits(self) -> list[int]:
        return _int_to_bits(self.s, 288)

    def __eq__(self, other) -> bool:
        return isinstance(other, TriviumState) and (self.s, self.warmed_up) == (other.s, other.warmed_up)

    def __repr__(self) -> str:
        return f"TriviumState(warmed_up={self.warmed_up}, s=0x{self.s:072x})"


def trivium_round(s: int) -> tuple[int, int]:
    """One Trivium round on a state word; returns (new state, z)."""
    t1 = _bit(s, 66) ^ _bit(s, 93)
    t2 = _bit(s, 162) ^ _bit(s, 177)
    t3 = _bit(s, 243) ^ _bit(s, 288)
    z = t1 ^ t2 ^ t3
    t1 ^= (_bit(s, 91) & _bit(s, 92)) ^ _bit(s, 171)
    t2 ^= (_bit(s, 175) & _bit(s, 176)) ^ _bit(s, 264)
    t3 ^= (_bit(s, 286) & _bit(s, 287)) ^ _bit(s, 69)
    s = (s << 1) & _TRIVIUM_MASK
    # clear the bits that arrived from the neighbouring register, insert feedback
    s &= ~((1 << 0) | (1 << 93) | (1 << 177))
    s |= t3 | (t1 << 93) | (t2 << 177)
    return s, z


def trivium_unround(s: int) -> int:
    """Inverse of :func:`trivium_round` on the state word."""
    new = s
    old = (new >> 1)
    # bits shifted out of each register's end are lost; recover them from the feedback
    old &= ~((1 << 92) | (1 << 176) | (1 << 287))
    old_b = lambda i: (old >> (i - 1)) & 1  # noqa: E731 - valid except at s93, s177, s288
    s93 = _bit(new, 94) ^ old_b(66) ^ (old_b(91) & old_b(92)) ^ old_b(171)
    s177 = _bit(new, 178) ^ old_b(162) ^ (old_b(175) & old_b(176)) ^ old_b(264)
    s288 = _bit(new, 1) ^ old_b(243) ^ (old_b(286) & old_b(287)) ^ old_b(69)
    return old | (s93 << 92) | (s177 << 176) | (s288 << 287)


def load_state(k: KeyIv) -> int:
    key = int.from_bytes(k.key, "little")
    iv = int.from_bytes(k.iv, "little")
    return key | (iv << 93) | (0b111 << 285)


def trivium_init(k: KeyIv) -> TriviumState:
    """Load key and IV and run the 1152 warm-up rounds."""
    s = load_state(k)
    for _ in range(TRIVIUM_WARMUP):
        s, _z = trivium_round(s)
    return TriviumState(s, warmed_up=True)


def trivium_clock(st: TriviumState) -> int:
    if not st.warmed_up:
        raise StateError("Trivium state clocked before warm-up completed")
    st.s, z = trivium_round(st.s)
    return z


# --------------------------------------------------------------------------
# Trivium, block keystream
# --------------------------------------------------------------------------

_CHUNK = 64  # rounds whose inputs are all already known


def _state_sequences(s: int, total: int):
    """Unrolled register contents: A holds a[t..t+92] with s1 = a[t+92], etc."""
    bits = np.array(_int_to_bits(s, 288), np.uint8)
    a = np.zeros(93 + total + _CHUNK, np.uint8)
    b = np.zeros(84 + total + _CHUNK, np.uint8)
    c = np.zeros(111 + total + _CHUNK, np.uint8)
    a[:93] = bits[0:93][::-1]
    b[:84] = bits[93:177][::-1]
    c[:111] = bits[177:288][::-1]
    return a, b, c


def _sequences_to_state(a, b, c, t: int) -> int:
    bits = np.concatenate([a[t: t + 93][::-1], b[t: t + 84][::-1], c[t: t + 111][::-1]])
    return _bits_to_int(bits.tolist())


def trivium_run(s: int, rounds: int) -> tuple[np.ndarray, int]:
    """Run ``rounds`` rounds from state word ``s``; returns (z bits, final state)."""
    a, b, c = _state_sequences(s, rounds)
    z = np.empty(rounds + _CHUNK, np.uint8)
    for t in range(0, rounds, _CHUNK):
        e = t + _CHUNK
        a_t, a1, a2, a24, a27 = a[t:e], a[t + 1:e + 1], a[t + 2:e + 2], a[t + 24:e + 24], a[t + 27:e + 27]
        b_t, b1, b2, b6, b15 = b[t:e], b[t + 1:e + 1], b[t + 2:e + 2], b[t + 6:e + 6], b[t + 15:e + 15]
        c_t, c1, c2, c24, c45 = c[t:e], c[t + 1:e + 1], c[t + 2:e + 2], c[t + 24:e + 24], c[t + 45:e + 45]
        ta = a27 ^ a_t
        tb = b15 ^ b_t
        tc = c45 ^ c_t
        z[t:e] = ta ^ tb ^ tc
        b[t + 84:e + 84] = ta ^ (a2 & a1) ^ b6
        c[t + 111:e + 111] = tb ^ (b2 & b1) ^ c24
        a[t + 93:e + 93] = tc ^ (c2 & c1) ^ a24
    return z[:rounds], _sequences_to_state(a, b, c, rounds)


def trivium_keystream(k: KeyIv, n_bits: int) -> BitStream:
    z, _ = trivium_run(load_state(k), TRIVIUM_WARMUP + n_bits)
    return BitStream(z[TRIVIUM_WARMUP:])


def keystream_bytes(k: KeyIv, n_bytes: int) -> bytes:
    """Keystream packed in eSTREAM order (first bit in the least significant position)."""
    z = trivium_keystream(k, 8 * n_bytes).bits
    return np.packbits(z, bitorder="little").tobytes()


# --------------------------------------------------------------------------
# Mini-Trivium
# --------------------------------------------------------------------------

class MiniTriviumState:
    """19-bit Mini-Trivium register."""

    __slots__ = ("s", "warmed_up")

    def __init__(self, s: int, warmed_up: bool = False):
        self.s = s & _MINI_MASK
        self.warmed_up = warmed_up

    def copy(self) -> "MiniTriviumState":
        return MiniTriviumState(self.s, self.warmed_up)

    def __eq__(self, other) -> bool:
        return isinstance(other, MiniTriviumState) and (self.s, self.warmed_up) == (other.s, other.warmed_up)

    def __repr__(self) -> str:
        return f"MiniTriviumState(warmed_up={self.warmed_up}, s=0b{self.s:019b})"


def mini_round(s: int, inject: int = 0) -> tuple[int, int]:
    """One Mini-Trivium round on a 19-bit state word; returns (new state, z)."""
    z = (_bit(s, 4) ^ _bit(s, 6)) ^ (_bit(s, 10) ^ _bit(s, 12)) ^ (_bit(s, 16) ^ _bit(s, 19))
    fb = z ^ (_bit(s, 17) & _bit(s, 18)) ^ (_bit(s, 3) & _bit(s, 8)) ^ (inject & 1)
    return ((s << 1) | fb) & _MINI_MASK, z


def mini_init(seed_bits) -> MiniTriviumState:
    """Load s1..s19 from 19 seed bits (first bit to s1) and run 76 warm-up rounds."""
    seed = list(seed_bits)
    if len(seed) != MINI_BITS:
        raise InputFormatError(f"Mini-Trivium needs exactly {MINI_BITS} seed bits")
    s = _bits_to_int(seed)
    if s == 0:
        raise SeedError("all-zero seed leaves Mini-Trivium stuck at zero")
    for _ in range(MINI_WARMUP):
        s, _z = mini_round(s)
    return MiniTriviumState(s, warmed_up=True)


def mini_clock(st: MiniTriviumState, inject: int = 0) -> int:
    if not st.warmed_up and inject:
        raise StateError("entropy injected before Mini-Trivium warm-up completed")
    st.s, z = mini_round(st.s, inject)
    return z


def _mini_table() -> list[int]:
    """For every state: z in bit 0 and the inject-free feedback in bit 1."""
    s = np.arange(1 << MINI_BITS, dtype=np.int64)
    b = lambda i: (s >> (i - 1)) & 1  # noqa: E731
    z = b(4) ^ b(6) ^ b(10) ^ b(12) ^ b(16) ^ b(19)
    fb = z ^ (b(17) & b(18)) ^ (b(3) & b(8))
    return (z | (fb << 1)).tolist()


_MINI_TABLE: list[int] | None = None


def mini_stream(st: MiniTriviumState, inject) -> np.ndarray:
    """Clock once per inject bit and return the output bits; mutates ``st``."""
    global _MINI_TABLE
    if _MINI_TABLE is None:
        _MINI_TABLE = _mini_table()
    table = _MINI_TABLE
    s = st.s
    out = bytearray(len(inject))
    for i, bit in enumerate(np.asarray(inject, np.uint8).tolist()):
        t = table[s]
        s = ((s << 1) | ((t >> 1) ^ bit)) & _MINI_MASK
        out[i] = t & 1
    st.s = s
    return np.frombuffer(bytes(out), np.uint8)


# --------------------------------------------------------------------------
# Post-processing
# --------------------------------------------------------------------------

SEED_BITS = {"trivium": 160, "mini": MINI_BITS}


def postprocess(raw, cipher: str) -> BitStream:
    """Condition raw digitizer bits.

    ``trivium``: the first 160 raw bits become key and IV; every later raw bit
    is XORed with one keystream bit.
    ``mini``: the first 19 raw bits seed the register; every later raw bit is
    injected into the feedback and the round output is emitted.
    """
    if cipher not in SEED_BITS:
        raise ValueError(f"unknown cipher {cipher!r}")
    x = raw.bits if isinstance(raw, BitStream) else np.asarray(raw, np.uint8)
    need = SEED_BITS[cipher]
    if x.size < need:
        raise InputFormatError(f"{cipher} post-processing needs at least {need} raw bits, got {x.size}")
    if cipher == "trivium":
        k = KeyIv.from_bits(x[:80].tolist(), x[80:160].tolist())
        ks = trivium_keystream(k, x.size - 160).bits
        return BitStream(ks ^ x[160:])
    st = mini_init(x[:MINI_BITS].tolist())
    return BitStream(mini_stream(st, x[MINI_BITS:]))
