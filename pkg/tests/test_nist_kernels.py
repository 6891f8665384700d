import itertools
import math

import numpy as np
import pytest
from scipy import special as sp

from adaptrng.errors import DomainError
from adaptrng.nist import berlekamp_massey, erfc, gf2_rank, igamc, linear_complexity_blocks
from adaptrng.nist.kernels import (
    aperiodic_templates,
    gf2_rank_packed,
    is_aperiodic,
    overlapping_pi_approx,
    overlapping_pi_exact,
    pack_rows,
    rank_probabilities,
    window_values,
)
from adaptrng.nist.suite import _LONGEST_RUN_TABLES
from oracles import MAX_BM_LENGTH, exhaustive_complexities, row_reduce_rank, span_size


# --- Berlekamp-Massey vs exhaustive search --------------------------------------

def test_berlekamp_massey_matches_exhaustive_search():
    lc = exhaustive_complexities()
    for n in range(1, MAX_BM_LENGTH + 1):
        for v in range(1 << n):
            bits = [(v >> (n - 1 - i)) & 1 for i in range(n)]
            assert berlekamp_massey(bits) == lc[n][v], (n, bits)


def test_block_bm_matches_scalar():
    rng = np.random.default_rng(3)
    blocks = rng.integers(0, 2, (300, 500), dtype=np.uint8)
    blocks[0] = 0
    blocks[1, :] = 0
    blocks[1, -1] = 1
    got = linear_complexity_blocks(blocks)
    assert got.tolist() == [berlekamp_massey(b) for b in blocks]
    assert got[0] == 0 and got[1] == 500


def test_bm_known_values():
    assert berlekamp_massey([]) == 0
    assert berlekamp_massey([0] * 10) == 0
    assert berlekamp_massey([1] * 10) == 1
    assert berlekamp_massey([1, 0] * 10) == 2


# --- GF(2) rank ------------------------------------------------------------------

def test_rank_matches_span_size_on_small_matrices():
    rng = np.random.default_rng(0)
    mats = rng.integers(0, 2, (1000, 6, 6), dtype=np.uint8)
    # bias some matrices toward low rank
    mats[::3, 3:] = mats[::3, :3]
    ranks = gf2_rank_packed(pack_rows(mats), 6)
    for m, r in zip(mats, ranks):
        rows = [int("".join(map(str, row)), 2) for row in m]
        assert 2 ** int(r) == span_size(rows)


def test_rank_matches_row_reduction_on_32x32():
    rng = np.random.default_rng(1)
    mats = rng.integers(0, 2, (1000, 32, 32), dtype=np.uint8)
    mats[::4, 31] = mats[::4, 0] ^ mats[::4, 1]
    packed = pack_rows(mats)
    ranks = gf2_rank_packed(packed, 32)
    for rows, r in zip(packed, ranks):
        assert row_reduce_rank([int(v) for v in rows]) == r


def test_rank_examples():
    assert gf2_rank(np.eye(5, dtype=np.uint8)) == 5
    assert gf2_rank(np.zeros((4, 4), np.uint8)) == 0
    assert gf2_rank([[1, 1, 0], [0, 1, 1], [1, 0, 1]]) == 2  # third row is the sum
    assert gf2_rank(np.ones((3, 64), np.uint8)) == 1


def test_rank_probabilities_for_32x32():
    full, minus, rest = rank_probabilities(32, 32)
    assert (full, minus, rest) == pytest.approx((0.2888, 0.5776, 0.1336), abs=1e-4)


def test_rank_probabilities_match_enumeration_for_3x3():
    counts = np.zeros(4)
    for cells in itertools.product([0, 1], repeat=9):
        counts[gf2_rank(np.array(cells).reshape(3, 3))] += 1
    p = counts / counts.sum()
    assert rank_probabilities(3, 3) == pytest.approx((p[3], p[2], p[1] + p[0]), abs=1e-12)


# --- special functions ---------------------------------------------------------

@pytest.mark.parametrize("x", [0.0, 0.1, 1.0, 3.7, 20.0])
def test_igamc_identities(x):
    assert igamc(1.0, x) == pytest.approx(math.exp(-x), abs=1e-10)
    assert igamc(0.5, x) == pytest.approx(math.erfc(math.sqrt(x)), abs=1e-10)
    for n in (2, 5, 9):
        poisson = math.exp(-x) * sum(x ** k / math.factorial(k) for k in range(n))
        assert igamc(float(n), x) == pytest.approx(poisson, abs=1e-10)
    for a in (0.5, 1.5, 2.5, 128.0):
        step = math.exp(a * math.log(x) - x - math.lgamma(a + 1)) if x > 0 else 0.0
        assert igamc(a + 1, x) == pytest.approx(igamc(a, x) + step, abs=1e-10)


def test_igamc_edges():
    assert igamc(3.0, 0.0) == 1.0
    assert igamc(2.0, 1e6) == 0.0
    with pytest.raises(DomainError):
        igamc(0.0, 1.0)
    with pytest.raises(DomainError):
        igamc(1.0, -0.5)


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 2.5, 6.0])
def test_erfc_identities(x):
    assert erfc(x) + erfc(-x) == pytest.approx(2.0, abs=1e-10)
    # series of erf around zero as the independent reference
    if x <= 2.5:
        series = sum((-1) ** k * x ** (2 * k + 1) / (math.factorial(k) * (2 * k + 1))
                     for k in range(60))
        assert erfc(x) == pytest.approx(1 - 2 / math.sqrt(math.pi) * series, abs=1e-10)
    assert erfc(x) == pytest.approx(float(sp.gammaincc(0.5, x * x)) if x >= 0 else 0, abs=1e-10)


def test_erfc_nan_rejected():
    with pytest.raises(DomainError):
        erfc(float("nan"))


# --- templates and windows --------------------------------------------------------

def test_aperiodic_template_counts():
    # number of aperiodic (bifix-free) words for m = 2..10
    assert [len(aperiodic_templates(m)) for m in range(2, 11)] == [2, 4, 6, 12, 20, 40, 74, 148, 284]
    assert is_aperiodic(0b000000001, 9)
    assert not is_aperiodic(0b101, 3)


def test_window_values():
    assert window_values(np.array([1, 0, 1, 1]), 2).tolist() == [2, 1, 3]
    assert window_values(np.array([1, 0, 1]), 2, wrap=True).tolist() == [2, 1, 3]


def _brute_overlap_pi(m, block, K):
    counts = np.zeros(K + 1)
    for v in range(1 << block):
        bits = [(v >> i) & 1 for i in range(block)]
        hits = sum(all(bits[i: i + m]) for i in range(block - m + 1))
        counts[min(hits, K)] += 1
    return counts / counts.sum()


@pytest.mark.parametrize("m, block, K", [(2, 10, 5), (3, 14, 5), (4, 16, 3)])
def test_overlapping_probabilities_match_enumeration(m, block, K):
    assert overlapping_pi_exact(m, block, K) == pytest.approx(_brute_overlap_pi(m, block, K), abs=1e-12)


def test_overlapping_exact_close_to_approx_at_defaults():
    exact = overlapping_pi_exact(9, 1032, 5)
    approx = overlapping_pi_approx(9, 1032, 5)
    assert exact.sum() == pytest.approx(1.0)
    assert np.abs(exact - approx).max() < 0.01


# --- longest-run tables ----------------------------------------------------------

def _longest_run_cdf(M: int, k: int) -> float:
    """P(longest run of ones <= k) in M fair bits, by DP over the trailing run."""
    p = np.zeros(k + 1)
    p[0] = 1.0
    for _ in range(M):
        nxt = np.zeros(k + 1)
        nxt[0] = p.sum() / 2
        nxt[1:] = p[:-1] / 2
        p = nxt
    return float(p.sum())


@pytest.mark.parametrize("M, tol", [(8, 1e-4), (128, 1e-4), (10000, 2e-3)])
def test_longest_run_tables_match_dp(M, tol):
    # the 10000-bit table is the standard asymptotic one, hence the looser bound
    K, _, (lo, hi), pis = _LONGEST_RUN_TABLES[M]
    cdf = [_longest_run_cdf(M, k) for k in range(lo, hi)]
    exact = np.diff([0.0] + cdf + [1.0])
    assert exact == pytest.approx(np.array(pis), abs=tol)
