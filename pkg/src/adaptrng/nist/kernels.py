"""Linear-algebra and combinatorial kernels behind the statistical tests."""

from __future__ import annotations

from functools import lru_cache
from math import comb, exp, factorial

import numpy as np


# --------------------------------------------------------------------------
# GF(2) rank
# --------------------------------------------------------------------------

def pack_rows(matrices: np.ndarray) -> np.ndarray:
    """Pack a ``(..., rows, cols)`` 0/1 array into ``uint64`` row words, MSB = column 0."""
    mats = np.asarray(matrices, dtype=np.uint64)
    cols = mats.shape[-1]
    if cols > 64:
        raise ValueError("at most 64 columns supported")
    weights = np.uint64(1) << np.arange(cols - 1, -1, -1, dtype=np.uint64)
    return (mats * weights).sum(axis=-1, dtype=np.uint64)


def gf2_rank_packed(rows: np.ndarray, cols: int) -> np.ndarray:
    """Rank over GF(2) of a batch of matrices given as packed rows.

    ``rows`` has shape ``(N, M)``; every matrix is eliminated in lock-step.
    """
    rows = np.array(rows, dtype=np.uint64, copy=True)
    if rows.ndim == 1:
        rows = rows[None, :]
    n_mat, n_rows = rows.shape
    rank = np.zeros(n_mat, dtype=np.int64)
    row_idx = np.arange(n_rows)
    batch = np.arange(n_mat)
    for c in range(cols):
        bit = np.uint64(1) << np.uint64(cols - 1 - c)
        has = (rows & bit) != 0
        candidates = has & (row_idx[None, :] >= rank[:, None])
        found = candidates.any(axis=1)
        if not found.any():
            continue
        b = batch[found]
        piv = candidates[found].argmax(axis=1)
        dst = rank[found]
        if dst.size and dst.max() >= n_rows:
            raise AssertionError("rank overflow")
        pivot_rows = rows[b, piv]
        rows[b, piv] = rows[b, dst]
        rows[b, dst] = pivot_rows
        sub = rows[b]
        clear = ((sub & bit) != 0) & (row_idx[None, :] != dst[:, None])
        sub ^= np.where(clear, pivot_rows[:, None], np.uint64(0))
        rows[b] = sub
        rank[found] += 1
    return rank


def gf2_rank(matrix) -> int:
    """Rank over GF(2) of a single 0/1 matrix with at most 64 columns."""
    mat = np.asarray(matrix, dtype=np.uint8)
    return int(gf2_rank_packed(pack_rows(mat)[None, :], mat.shape[1])[0])


def rank_probabilities(m: int, q: int) -> tuple[float, float, float]:
    """Probabilities that a random m x q GF(2) matrix has rank full, full-1, lower."""
    def p(r: int) -> float:
        prod = 1.0
        for i in range(r):
            prod *= (1 - 2.0 ** (i - q)) * (1 - 2.0 ** (i - m)) / (1 - 2.0 ** (i - r))
        return 2.0 ** (r * (q + m - r) - m * q) * prod

    full = min(m, q)
    p_full, p_minus = p(full), p(full - 1)
    return p_full, p_minus, 1.0 - p_full - p_minus


# --------------------------------------------------------------------------
# Linear complexity
# --------------------------------------------------------------------------

def berlekamp_massey(bits) -> int:
    """Linear complexity of a binary sequence.

    Connection polynomials are Python ints (bit i = coefficient of x^i) and
    the recent history is kept reversed in ``window`` so that each
    discrepancy is a single AND plus popcount.
    """
    c, b = 1, 1
    length, m = 0, -1
    window = 0
    for n, s in enumerate(int(v) for v in bits):
        window = (window << 1) | s
        if (c & window).bit_count() & 1:
            t = c
            c ^= b << (n - m)
            if 2 * length <= n:
                length, m, b = n + 1 - length, n, t
    return length


def linear_complexity_blocks(blocks: np.ndarray) -> np.ndarray:
    """Berlekamp-Massey run in lock-step over the rows of ``blocks``.

    Polynomials and windows are multi-word bit vectors. ``d`` holds
    ``B(x) * x^(n-m)`` so that every row shifts by the same amount per step.
    """
    blocks = np.asarray(blocks, dtype=np.uint8)
    n_seq, length = blocks.shape
    words = (length + 1 + 63) // 64
    one = np.uint64(1)

    def shl1(a: np.ndarray) -> np.ndarray:
        carry = a >> np.uint64(63)
        out = a << one
        out[:, 1:] |= carry[:, :-1]
        return out

    c = np.zeros((n_seq, words), np.uint64)
    c[:, 0] = 1
    d = shl1(c)  # B = 1, m = -1, shifted to n = 0
    window = np.zeros_like(c)
    lin = np.zeros(n_seq, np.int64)
    for n in range(length):
        window = shl1(window)
        window[:, 0] |= blocks[:, n].astype(np.uint64)
        disc = (np.bitwise_count(c & window).sum(axis=1) & 1).astype(bool)
        grow = disc & (2 * lin <= n)
        t = c[grow]
        c[disc] ^= d[disc]
        lin[grow] = n + 1 - lin[grow]
        d[grow] = t
        d = shl1(d)
    return lin


# --------------------------------------------------------------------------
# Templates
# --------------------------------------------------------------------------

def is_aperiodic(template: int, m: int) -> bool:
    """True when no proper prefix of the m-bit word equals a suffix of the same length."""
    for k in range(1, m):
        if (template >> k) == (template & ((1 << (m - k)) - 1)):
            return False
    return True


@lru_cache(maxsize=None)
def aperiodic_templates(m: int) -> tuple[int, ...]:
    return tuple(t for t in range(1 << m) if is_aperiodic(t, m))


def window_values(bits: np.ndarray, m: int, wrap: bool = False) -> np.ndarray:
    """Integer value of every m-bit window, first bit most significant."""
    x = np.asarray(bits, dtype=np.int64)
    if wrap:
        x = np.concatenate([x, x[: m - 1]])
    count = x.size - m + 1
    if count <= 0:
        return np.zeros(0, np.int64)
    v = np.zeros(count, np.int64)
    for k in range(m):
        v = (v << 1) | x[k: k + count]
    return v


def pattern_counts(bits: np.ndarray, m: int) -> np.ndarray:
    """Cyclic counts of every m-bit pattern (all zeros when m == 0 is not meaningful)."""
    return np.bincount(window_values(bits, m, wrap=True), minlength=1 << m)


def overlapping_pi_exact(m: int, block: int, classes: int) -> np.ndarray:
    """Exact probabilities of 0..classes-1 and >=classes overlapping runs of m ones in a block."""
    # state: trailing run of ones (capped at m-1) x matches so far (capped)
    prob = np.zeros((m, classes + 1))
    prob[0, 0] = 1.0
    for _ in range(block):
        nxt = np.zeros_like(prob)
        nxt[0] += 0.5 * prob.sum(axis=0)
        for r in range(m):
            half = 0.5 * prob[r]
            if r + 1 < m:
                nxt[r + 1] += half
            else:
                nxt[m - 1, 1:] += half[:-1]
                nxt[m - 1, -1] += half[-1]
        prob = nxt
    return prob.sum(axis=0)


def overlapping_pi_approx(m: int, block: int, classes: int) -> np.ndarray:
    """Compound-Poisson approximation used in the SP 800-22 worked example."""
    eta = (block - m + 1) / 2.0 ** m / 2.0
    pis = [exp(-eta)]
    for u in range(1, classes):
        s = sum(comb(u - 1, l - 1) * eta ** l / factorial(l) for l in range(1, u + 1))
        pis.append(exp(-eta) / 2.0 ** u * s)
    pis.append(1.0 - sum(pis))
    return np.array(pis)
