import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from adaptrng.bits import (
    BitStream,
    concat,
    read_ascii,
    read_bits1,
    read_stream,
    write_ascii,
    write_bits1,
)
from adaptrng.errors import InputFormatError


def test_from_string_and_back():
    s = BitStream.from_string("1011 0010")
    assert s.to_string() == "10110010"
    assert len(s) == 8 and s.ones() == 4


def test_bits_are_read_only():
    s = BitStream([1, 0, 1])
    with pytest.raises(ValueError):
        s.bits[0] = 0


def test_rejects_non_binary_values():
    with pytest.raises(ValueError):
        BitStream([0, 2, 1])


def test_packing_is_msb_first_with_zero_pad():
    data = BitStream.from_string("1000000011").to_bytes()
    assert struct.unpack("<Q", data[:8])[0] == 10
    assert data[8:] == bytes([0b10000000, 0b11000000])


@given(st.lists(st.integers(0, 1), max_size=300))
def test_bits1_roundtrip(bits):
    s = BitStream(bits)
    assert BitStream.from_bytes(s.to_bytes()) == s


def test_truncated_payload_rejected():
    data = BitStream.from_string("1" * 20).to_bytes()
    with pytest.raises(InputFormatError):
        BitStream.from_bytes(data[:-1])


def test_short_header_rejected():
    with pytest.raises(InputFormatError):
        BitStream.from_bytes(b"\x01\x00")


def test_nonzero_pad_rejected():
    data = bytearray(BitStream.from_string("101").to_bytes())
    data[-1] |= 1
    with pytest.raises(InputFormatError):
        BitStream.from_bytes(bytes(data))


def test_file_roundtrips(tmp_path):
    s = BitStream(np.random.default_rng(3).integers(0, 2, 1001, dtype=np.uint8))
    write_bits1(tmp_path / "a.bits1", s)
    write_ascii(tmp_path / "a.txt", s)
    assert read_bits1(tmp_path / "a.bits1") == s
    assert read_ascii(tmp_path / "a.txt") == s
    assert read_stream(tmp_path / "a.bits1") == s
    assert read_stream(tmp_path / "a.txt") == s


def test_ascii_with_junk_rejected(tmp_path):
    (tmp_path / "x.txt").write_text("0101x")
    with pytest.raises(InputFormatError):
        read_ascii(tmp_path / "x.txt")


def test_slicing_concat_reverse():
    s = BitStream.from_string("110100")
    assert s[1:4].to_string() == "101"
    assert s[0] == 1
    assert concat([s[:2], s[2:]]) == s
    assert s.reversed().to_string() == "001011"


def test_digest_depends_on_length_and_content():
    a = BitStream.from_string("1010")
    assert a.digest() == BitStream.from_string("1010").digest()
    assert a.digest() != BitStream.from_string("10100").digest()
