"""Immutable bit sequences and their on-disk formats.

Two formats are supported:

``BITS1``
    An 8-byte little-endian unsigned bit count followed by the bits packed
    most-significant-bit first within each byte. Pad bits in the last byte
    must be zero.
ASCII
    The characters ``0`` and ``1``. Whitespace is ignored on read.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .errors import InputFormatError

_HEADER = struct.Struct("<Q")


class BitStream:
    """Read-only sequence of bits backed by a ``uint8`` array of 0/1 values."""

    __slots__ = ("_bits",)

    def __init__(self, bits) -> None:
        arr = np.asarray(bits)
        if arr.ndim != 1:
            arr = arr.reshape(-1)
        if arr.dtype != np.uint8:
            if arr.dtype == bool:
                arr = arr.astype(np.uint8)
            else:
                if arr.size and (arr.min() < 0 or arr.max() > 1):
                    raise ValueError("bit values must be 0 or 1")
                arr = arr.astype(np.uint8)
        elif arr.size and arr.max() > 1:
            raise ValueError("bit values must be 0 or 1")
        if arr.flags.writeable:
            arr = arr.copy()
            arr.flags.writeable = False
        self._bits = arr

    @classmethod
    def from_string(cls, text: str) -> "BitStream":
        cleaned = "".join(text.split())
        if cleaned.strip("01"):
            raise InputFormatError("ASCII bit text may contain only '0' and '1'")
        return cls(np.frombuffer(cleaned.encode(), dtype=np.uint8) - ord("0"))

    @classmethod
    def from_int(cls, value: int, width: int) -> "BitStream":
        """Bits of ``value`` most-significant first."""
        return cls([(value >> (width - 1 - i)) & 1 for i in range(width)])

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    def __len__(self) -> int:
        return int(self._bits.size)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return BitStream(self._bits[key])
        return int(self._bits[key])

    def __iter__(self):
        return iter(self._bits.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitStream):
            return NotImplemented
        return np.array_equal(self._bits, other._bits)

    def __hash__(self) -> int:
        return hash(self.digest())

    def __repr__(self) -> str:
        head = "".join(map(str, self._bits[:32].tolist()))
        more = "..." if len(self) > 32 else ""
        return f"BitStream(n={len(self)}, {head}{more})"

    def __str__(self) -> str:
        return self.to_string()

    def to_string(self) -> str:
        return (self._bits + ord("0")).tobytes().decode()

    def ones(self) -> int:
        return int(np.count_nonzero(self._bits))

    def digest(self) -> str:
        """SHA-256 over the ``BITS1`` encoding; equal streams give equal digests."""
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def reversed(self) -> "BitStream":
        return BitStream(self._bits[::-1])

    def to_bytes(self) -> bytes:
        return _HEADER.pack(len(self)) + np.packbits(self._bits).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "BitStream":
        if len(data) < _HEADER.size:
            raise InputFormatError("stream shorter than the 8-byte length header")
        (n,) = _HEADER.unpack_from(data)
        payload = data[_HEADER.size:]
        expected = (n + 7) // 8
        if len(payload) != expected:
            raise InputFormatError(
                f"header declares {n} bits ({expected} bytes) but payload has {len(payload)} bytes"
            )
        bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
        if bits[n:].any():
            raise InputFormatError("nonzero pad bits after the declared length")
        return cls(bits[:n])


def concat(streams) -> BitStream:
    return BitStream(np.concatenate([s.bits for s in streams]) if streams else np.zeros(0, np.uint8))


def write_bits1(path, stream: BitStream) -> None:
    Path(path).write_bytes(stream.to_bytes())


def read_bits1(path) -> BitStream:
    return BitStream.from_bytes(Path(path).read_bytes())


def write_ascii(path, stream: BitStream) -> None:
    Path(path).write_text(stream.to_string() + "\n")


def read_ascii(path) -> BitStream:
    return BitStream.from_string(Path(path).read_text())


def read_stream(path, fmt: str = "auto") -> BitStream:
    """Load a stream; ``auto`` treats files made only of 0/1/whitespace as ASCII."""
    data = Path(path).read_bytes()
    if fmt == "auto":
        fmt = "ascii" if data and not data.translate(None, b"01 \t\r\n") else "bits1"
    if fmt == "ascii":
        try:
            return BitStream.from_string(data.decode("ascii"))
        except UnicodeDecodeError as exc:
            raise InputFormatError("ASCII stream contains non-ASCII bytes") from exc
    if fmt == "bits1":
        return BitStream.from_bytes(data)
    raise InputFormatError(f"unknown stream format {fmt!r}")
