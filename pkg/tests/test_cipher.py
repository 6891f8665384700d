from pathlib import Path

import numpy as np
import pytest

from adaptrng.bits import BitStream
from adaptrng.cipher import (
    MINI_BITS,
    KeyIv,
    MiniTriviumState,
    TriviumState,
    keystream_bytes,
    load_state,
    mini_clock,
    mini_init,
    mini_round,
    mini_stream,
    postprocess,
    trivium_clock,
    trivium_init,
    trivium_keystream,
    trivium_round,
    trivium_unround,
)
from adaptrng.entropy import LfsrSource
from adaptrng.errors import InputFormatError, SeedError, StateError
from adaptrng.nist import berlekamp_massey

FIXTURES = Path(__file__).parent / "fixtures"


def load_vectors():
    rows = []
    for line in (FIXTURES / "trivium_vectors.txt").read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            key, iv, stream = line.split()
            rows.append((key, iv, bytes.fromhex(stream)))
    return rows


VECTORS = load_vectors()


# --- Trivium ---------------------------------------------------------------

@pytest.mark.parametrize("key, iv, expected", VECTORS)
def test_published_vectors(key, iv, expected):
    assert keystream_bytes(KeyIv.from_hex(key, iv), len(expected)) == expected


@pytest.mark.parametrize("key, iv, expected", VECTORS[:2])
def test_bit_serial_matches_vectors(key, iv, expected):
    st = trivium_init(KeyIv.from_hex(key, iv))
    bits = [trivium_clock(st) for _ in range(8 * len(expected))]
    assert np.packbits(np.array(bits, np.uint8), bitorder="little").tobytes() == expected


def test_block_path_matches_bit_serial():
    k = KeyIv.from_hex("0F62B5085BAE0154A7FA", "288FF65DC42B92F960C7")
    st = trivium_init(k)
    serial = np.array([trivium_clock(st) for _ in range(1 << 16)], np.uint8)
    assert np.array_equal(trivium_keystream(k, 1 << 16).bits, serial)


def test_loading_places_key_iv_and_constant():
    k = KeyIv.from_bits([1] + [0] * 79, [0] * 79 + [1])
    s = load_state(k)
    assert s & 1  # K1 -> s1
    assert (s >> (93 + 79)) & 1  # IV80 -> s173
    assert (s >> 285) & 0b111 == 0b111  # s286..s288
    assert bin(s).count("1") == 5


def test_identical_inits_agree():
    k = KeyIv.from_hex("0102030405060708090A", "0A090807060504030201")
    assert trivium_init(k) == trivium_init(k)


def test_clock_before_warmup_rejected():
    with pytest.raises(StateError):
        trivium_clock(TriviumState(load_state(KeyIv(bytes(10), bytes(10)))))


def test_key_iv_widths_enforced():
    with pytest.raises(InputFormatError):
        KeyIv(bytes(9), bytes(10))


def test_round_is_invertible():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        s = int.from_bytes(rng.bytes(36), "little")
        nxt, _z = trivium_round(s)
        assert trivium_unround(nxt) == s
        assert trivium_round(trivium_unround(s))[0] == s


def test_iv_avalanche():
    key = bytes(range(10))
    a = trivium_keystream(KeyIv(key, bytes(10)), 512).bits
    b = trivium_keystream(KeyIv(key, bytes([1]) + bytes(9)), 512).bits
    assert np.count_nonzero(a != b) >= 0.3 * 512


def test_keystream_balance_and_complexity():
    ks = trivium_keystream(KeyIv.from_hex("00112233445566778899", "99887766554433221100"), 10**6)
    assert abs(ks.bits.mean() - 0.5) <= 0.002
    assert berlekamp_massey(ks.bits[:4096]) > 1000


# --- Mini-Trivium -----------------------------------------------------------

def test_all_ones_round_by_hand():
    s, z = mini_round((1 << MINI_BITS) - 1, 0)
    assert z == 0
    assert s & 1 == 0  # fb = 0 enters s1
    assert s >> 1 == (1 << (MINI_BITS - 1)) - 1


def test_taps_and_gates():
    # flipping each tap individually must be able to change z or fb; others must not
    taps = {3, 4, 6, 8, 10, 12, 16, 17, 18, 19}
    rng = np.random.default_rng(1)
    for i in range(1, MINI_BITS + 1):
        influenced = False
        for _ in range(200):
            s = int(rng.integers(0, 1 << MINI_BITS))
            a = mini_round(s)
            b = mini_round(s ^ (1 << (i - 1)))
            influenced |= (a[1] != b[1]) or ((a[0] ^ b[0]) & 1)
        assert influenced == (i in taps), i


def test_round_is_a_permutation():
    states = np.arange(1 << MINI_BITS)
    nxt = np.array([mini_round(int(s))[0] for s in states])
    assert np.bincount(nxt, minlength=1 << MINI_BITS).max() == 1
    assert nxt[0] == 0  # zero only maps from zero, so a nonzero state never reaches it


def test_seed_handling():
    seed = [0] * 18 + [1]
    a, b = mini_init(seed), mini_init(seed)
    assert a == b and a.warmed_up and a.s != 0
    with pytest.raises(SeedError):
        mini_init([0] * MINI_BITS)
    with pytest.raises(InputFormatError):
        mini_init([1] * 5)


def test_warmup_is_76_rounds():
    seed = [1, 0, 1] + [0] * 16
    s = sum(b << k for k, b in enumerate(seed))
    for _ in range(76):
        s, _ = mini_round(s)
    assert mini_init(seed).s == s


def test_injection_before_warmup_rejected():
    with pytest.raises(StateError):
        mini_clock(MiniTriviumState(5), inject=1)


def test_zero_injection_is_nonlinear():
    st = mini_init([1] + [0] * 18)
    out = mini_stream(st, np.zeros(1024, np.uint8))
    assert berlekamp_massey(out) > MINI_BITS


def test_stream_matches_clock():
    inject = np.random.default_rng(4).integers(0, 2, 5000, dtype=np.uint8)
    a = mini_init([1, 1] + [0] * 17)
    b = a.copy()
    assert np.array_equal(mini_stream(a, inject), [mini_clock(b, int(x)) for x in inject])
    assert a == b


def test_periodic_lfsr_injection_balanced():
    inject = LfsrSource(width=4, taps=(4, 3), state=1).bits(10**5)
    out = mini_stream(mini_init([1] * MINI_BITS), inject)
    assert abs(out.mean() - 0.5) <= 0.01


# --- post-processing -----------------------------------------------------------

def test_trivium_mode_on_zero_raw_is_keystream():
    seed = np.array([1, 0] * 80, np.uint8)
    raw = np.concatenate([seed, np.zeros(4096, np.uint8)])
    out = postprocess(raw, "trivium")
    k = KeyIv.from_bits(seed[:80], seed[80:])
    assert out == trivium_keystream(k, 4096)


@pytest.mark.parametrize("cipher, used", [("trivium", 160), ("mini", 19)])
def test_length_contract(cipher, used):
    raw = BitStream(np.random.default_rng(0).integers(0, 2, 1000, dtype=np.uint8))
    assert len(postprocess(raw, cipher)) == 1000 - used
    assert postprocess(raw, cipher) == postprocess(raw, cipher)


def test_short_raw_rejected():
    with pytest.raises(InputFormatError):
        postprocess(np.ones(100, np.uint8), "trivium")


@pytest.mark.parametrize("cipher", ["trivium", "mini"])
@pytest.mark.parametrize("p", [0.4, 0.45, 0.55, 0.6])
def test_debiasing(cipher, p):
    raw = (np.random.default_rng(int(p * 100)).random(10**6 + 160) < p).astype(np.uint8)
    out = postprocess(raw, cipher)
    assert abs(out.bits.mean() - 0.5) <= 0.005
