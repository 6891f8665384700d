"""The fifteen SP 800-22 tests, reported as sixteen rows.

Every test takes a :class:`~adaptrng.bits.BitStream` (or anything array-like
of 0/1) and returns a :class:`TestResult`. P-values are computed whenever the
statistic is defined, even below the recommended minimum length, so that
short worked examples can be checked; ``applicable`` records whether the
length requirement is met and ``passed`` is false for inapplicable rows.

Rows with several P-values (templates, serial, excursions) report the
Sidak-adjusted minimum ``1 - (1 - min p)^k`` as the row P-value. That keeps
each row at the nominal 1% false-failure rate under the null however many
sub-tests it bundles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..bits import BitStream
from .kernels import (
    aperiodic_templates,
    gf2_rank_packed,
    is_aperiodic,
    linear_complexity_blocks,
    overlapping_pi_approx,
    overlapping_pi_exact,
    pack_rows,
    pattern_counts,
    rank_probabilities,
    window_values,
)
from .special import erfc, igamc, normal_cdf

ALPHA = 0.01

ROW_NAMES = (
    "Frequency (Monobits)",
    "Frequency within a Block",
    "Runs",
    "Longest Run of Ones in a Block",
    "Binary Matrix Rank",
    "Discrete Fourier Transform (Spectral)",
    "Non-Overlapping Template Matching",
    "Overlapping Template Matching",
    "Maurer's \"Universal Statistical\"",
    "Linear Complexity",
    "Serial",
    "Approximate Entropy",
    "Cumulative Sums (Forward)",
    "Cumulative Sums (Reverse)",
    "Random Excursions",
    "Random Excursions Variant",
)


def combine_pvalues(p_values) -> float:
    """Sidak-adjusted minimum of several P-values."""
    ps = [float(p) for p in p_values]
    if not ps:
        return 0.0
    if len(ps) == 1:
        return ps[0]
    return float(-math.expm1(len(ps) * math.log1p(-min(ps)))) if min(ps) < 1 else 1.0


@dataclass(frozen=True)
class TestResult:
    test_name: str
    p_values: tuple[float, ...]
    applicable: bool
    stats: dict = field(default_factory=dict, compare=False)

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self):
        clipped = tuple(min(1.0, max(0.0, float(p))) for p in self.p_values)
        object.__setattr__(self, "p_values", clipped)

    @property
    def p_value(self) -> float:
        return combine_pvalues(self.p_values)

    @property
    def passed(self) -> bool:
        return self.applicable and bool(self.p_values) and self.p_value >= ALPHA


def _arr(bits) -> np.ndarray:
    if isinstance(bits, BitStream):
        return bits.bits
    return np.asarray(bits, dtype=np.uint8)


def _chi2(observed, expected) -> float:
    observed = np.asarray(observed, float)
    expected = np.asarray(expected, float)
    return float(((observed - expected) ** 2 / expected).sum())


# --------------------------------------------------------------------------

def test_frequency(bits) -> TestResult:
    x = _arr(bits)
    n = x.size
    if n == 0:
        return TestResult(ROW_NAMES[0], (), False)
    s = 2 * int(x.sum()) - n
    s_obs = abs(s) / math.sqrt(n)
    return TestResult(ROW_NAMES[0], (erfc(s_obs / math.sqrt(2)),), n >= 100, {"S_n": s})


def test_block_frequency(bits, M: int = 128) -> TestResult:
    x = _arr(bits)
    n_blocks = x.size // M
    if n_blocks == 0:
        return TestResult(ROW_NAMES[1], (), False)
    pi = x[: n_blocks * M].reshape(n_blocks, M).mean(axis=1)
    chi2 = 4.0 * M * float(((pi - 0.5) ** 2).sum())
    p = igamc(n_blocks / 2.0, chi2 / 2.0)
    return TestResult(ROW_NAMES[1], (p,), x.size >= 100, {"chi2": chi2, "N": n_blocks})


def test_runs(bits) -> TestResult:
    x = _arr(bits)
    n = x.size
    if n < 2:
        return TestResult(ROW_NAMES[2], (), False)
    pi = float(x.mean())
    applicable = n >= 100
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        # prerequisite frequency check failed: the runs statistic is not computed
        return TestResult(ROW_NAMES[2], (0.0,), applicable, {"pi": pi, "prerequisite": False})
    v_obs = 1 + int(np.count_nonzero(x[1:] != x[:-1]))
    num = abs(v_obs - 2.0 * n * pi * (1 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1 - pi)
    return TestResult(ROW_NAMES[2], (erfc(num / den),), applicable, {"V_n": v_obs, "pi": pi})


_LONGEST_RUN_TABLES = {
    8: (3, 16, (1, 4), (0.2148, 0.3672, 0.2305, 0.1875)),
    128: (5, 49, (4, 9), (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    10000: (6, 75, (10, 16), (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
}


def longest_run_table(n: int):
    """Block size and class table for a stream of n bits, or None below 128 bits."""
    if n < 128:
        return None
    if n < 6272:
        return 8
    if n < 750000:
        return 128
    return 10000


def _longest_runs(blocks: np.ndarray) -> np.ndarray:
    n_blocks, m = blocks.shape
    padded = np.zeros((n_blocks, m + 2), np.int8)
    padded[:, 1:-1] = blocks
    edges = np.diff(padded, axis=1)
    rows_s, cols_s = np.nonzero(edges == 1)
    _, cols_e = np.nonzero(edges == -1)
    out = np.zeros(n_blocks, np.int64)
    np.maximum.at(out, rows_s, cols_e - cols_s)
    return out


def test_longest_run(bits) -> TestResult:
    x = _arr(bits)
    M = longest_run_table(x.size)
    if M is None:
        return TestResult(ROW_NAMES[3], (), False)
    K, _, (lo, hi), pis = _LONGEST_RUN_TABLES[M]
    n_blocks = x.size // M
    runs = _longest_runs(x[: n_blocks * M].reshape(n_blocks, M))
    nu = np.bincount(np.clip(runs, lo, hi) - lo, minlength=K + 1)
    chi2 = _chi2(nu, n_blocks * np.array(pis))
    return TestResult(ROW_NAMES[3], (igamc(K / 2.0, chi2 / 2.0),), True,
                      {"M": M, "nu": nu.tolist(), "chi2": chi2})


def test_matrix_rank(bits, M: int = 32, Q: int = 32) -> TestResult:
    x = _arr(bits)
    n_mat = x.size // (M * Q)
    if n_mat == 0:
        return TestResult(ROW_NAMES[4], (), False)
    mats = x[: n_mat * M * Q].reshape(n_mat, M, Q)
    ranks = gf2_rank_packed(pack_rows(mats), Q)
    full = min(M, Q)
    f_full = int(np.count_nonzero(ranks == full))
    f_minus = int(np.count_nonzero(ranks == full - 1))
    observed = (f_full, f_minus, n_mat - f_full - f_minus)
    chi2 = _chi2(observed, n_mat * np.array(rank_probabilities(M, Q)))
    return TestResult(ROW_NAMES[4], (math.exp(-chi2 / 2.0),), n_mat >= 38,
                      {"N": n_mat, "counts": observed, "chi2": chi2})


def test_dft(bits) -> TestResult:
    x = _arr(bits)
    n = x.size
    if n < 2:
        return TestResult(ROW_NAMES[5], (), False)
    spectrum = np.fft.rfft(2.0 * x - 1.0)
    mags = np.abs(spectrum[: n // 2])
    threshold = math.sqrt(math.log(1 / 0.05) * n)
    n0 = 0.95 * n / 2.0
    n1 = int(np.count_nonzero(mags < threshold))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return TestResult(ROW_NAMES[5], (erfc(abs(d) / math.sqrt(2)),), n >= 1000,
                      {"N1": n1, "N0": n0, "d": d, "T": threshold})


def _template_counts(x: np.ndarray, m: int, n_blocks: int, templates) -> np.ndarray:
    """Non-overlapping match counts, shape (len(templates), n_blocks)."""
    M = x.size // n_blocks
    counts = np.zeros((len(templates), n_blocks), np.int64)
    tpl = np.asarray(templates, np.int64)
    for j in range(n_blocks):
        values = window_values(x[j * M: (j + 1) * M], m)
        hist = np.bincount(values, minlength=1 << m)
        counts[:, j] = hist[tpl]
        # an aperiodic word cannot overlap itself, so raw counts are already
        # non-overlapping; periodic ones need the greedy skip
        for i, t in enumerate(templates):
            if not is_aperiodic(t, m) and hist[t]:
                counts[i, j] = _greedy_count(np.flatnonzero(values == t), m)
    return counts


def _greedy_count(positions: np.ndarray, m: int) -> int:
    count, next_free = 0, -1
    for p in positions.tolist():
        if p >= next_free:
            count += 1
            next_free = p + m
    return count


def test_nonoverlapping_template(bits, m: int = 9, n_blocks: int = 8, templates=None) -> TestResult:
    x = _arr(bits)
    templates = aperiodic_templates(m) if templates is None else tuple(templates)
    M = x.size // n_blocks
    if M < m:
        return TestResult(ROW_NAMES[6], (), False)
    counts = _template_counts(x[: M * n_blocks], m, n_blocks, templates)
    mu = (M - m + 1) / 2.0 ** m
    var = M * (1 / 2.0 ** m - (2 * m - 1) / 2.0 ** (2 * m))
    chi2 = ((counts - mu) ** 2).sum(axis=1) / var
    ps = tuple(igamc(n_blocks / 2.0, c / 2.0) for c in chi2)
    return TestResult(ROW_NAMES[6], ps, mu >= 5,
                      {"mu": mu, "sigma2": var, "templates": list(templates),
                       "chi2": chi2.tolist(), "W": counts.tolist() if len(templates) == 1 else None})


def test_overlapping_template(bits, m: int = 9, M: int = 1032, K: int = 5,
                              probabilities: str = "exact") -> TestResult:
    x = _arr(bits)
    n_blocks = x.size // M
    if n_blocks == 0 or M < m:
        return TestResult(ROW_NAMES[7], (), False)
    pis = (overlapping_pi_exact if probabilities == "exact" else overlapping_pi_approx)(m, M, K)
    blocks = x[: n_blocks * M].reshape(n_blocks, M)
    # a window of m ones <=> sum of m consecutive bits equals m
    csum = np.concatenate([np.zeros((n_blocks, 1), np.int64), np.cumsum(blocks, axis=1)], axis=1)
    hits = (csum[:, m:] - csum[:, :-m]) == m
    per_block = np.minimum(hits.sum(axis=1), K)
    nu = np.bincount(per_block, minlength=K + 1)
    chi2 = _chi2(nu, n_blocks * pis)
    return TestResult(ROW_NAMES[7], (igamc(K / 2.0, chi2 / 2.0),),
                      bool(n_blocks * pis.min() >= 5),
                      {"nu": nu.tolist(), "pi": pis.tolist(), "chi2": chi2})


UNIVERSAL_EXPECTED = (
    0, 0.73264948, 1.5374383, 2.40160681, 3.31122472, 4.25342659, 5.2177052,
    6.1962507, 7.1836656, 8.1764248, 9.1723243, 10.170032, 11.168765,
    12.168070, 13.167693, 14.167488, 15.167379,
)
UNIVERSAL_VARIANCE = (
    0, 0.690, 1.338, 1.901, 2.358, 2.705, 2.954, 3.125, 3.238, 3.311, 3.356,
    3.384, 3.401, 3.410, 3.416, 3.419, 3.421,
)
_UNIVERSAL_L = ((1059061760, 16), (496435200, 15), (231669760, 14), (107560960, 13),
                (49643520, 12), (22753280, 11), (10342400, 10), (4654080, 9),
                (2068480, 8), (904960, 7), (387840, 6))


def universal_block_length(n: int):
    for threshold, L in _UNIVERSAL_L:
        if n >= threshold:
            return L
    return None


def universal_statistic(x: np.ndarray, L: int, Q: int) -> tuple[float, int]:
    """Maurer's f_n and the number K of test blocks."""
    n_blocks = x.size // L
    K = n_blocks - Q
    values = window_values(x[: n_blocks * L], L)[::L]
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    prev = np.zeros(n_blocks, np.int64)  # 1-based index of previous occurrence, 0 if none
    same = sorted_vals[1:] == sorted_vals[:-1]
    prev[order[1:][same]] = order[:-1][same] + 1
    idx = np.arange(Q + 1, n_blocks + 1)
    fn = float(np.log2(idx - prev[Q:]).sum() / K)
    return fn, K


def test_universal(bits, L: int | None = None, Q: int | None = None) -> TestResult:
    x = _arr(bits)
    table_L = universal_block_length(x.size)
    applicable = table_L is not None and L in (None, table_L)
    L = table_L if L is None else L
    if L is None:
        return TestResult(ROW_NAMES[8], (), False)
    Q = 10 * 2 ** L if Q is None else Q
    if x.size // L - Q <= 0:
        return TestResult(ROW_NAMES[8], (), False)
    fn, K = universal_statistic(x, L, Q)
    c = 0.7 - 0.8 / L + (4 + 32 / L) * K ** (-3 / L) / 15
    sigma = c * math.sqrt(UNIVERSAL_VARIANCE[L] / K)
    p = erfc(abs(fn - UNIVERSAL_EXPECTED[L]) / (math.sqrt(2) * sigma))
    return TestResult(ROW_NAMES[8], (p,), applicable, {"L": L, "Q": Q, "K": K, "fn": fn, "sigma": sigma})


_LC_PI = np.array([1 / 96, 1 / 32, 1 / 8, 1 / 2, 1 / 4, 1 / 16, 1 / 48])


def test_linear_complexity(bits, M: int = 500) -> TestResult:
    x = _arr(bits)
    n_blocks = x.size // M
    if n_blocks == 0:
        return TestResult(ROW_NAMES[9], (), False)
    lc = linear_complexity_blocks(x[: n_blocks * M].reshape(n_blocks, M))
    sign = -1.0 if M % 2 else 1.0  # (-1)^M
    mu = M / 2.0 + (9 + (-1) ** (M + 1)) / 36.0 - (M / 3.0 + 2 / 9.0) / 2.0 ** M
    t = sign * (lc - mu) + 2 / 9.0
    edges = np.array([-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])
    nu = np.bincount(np.searchsorted(edges, t, side="left"), minlength=7)
    chi2 = _chi2(nu, n_blocks * _LC_PI)
    return TestResult(ROW_NAMES[9], (igamc(3.0, chi2 / 2.0),), n_blocks >= 200,
                      {"nu": nu.tolist(), "chi2": chi2, "N": n_blocks})


def _psi2(x: np.ndarray, m: int) -> float:
    if m <= 0:
        return 0.0
    counts = pattern_counts(x, m).astype(float)
    n = x.size
    return float((2.0 ** m / n) * (counts ** 2).sum() - n)


def test_serial(bits, m: int = 16) -> TestResult:
    x = _arr(bits)
    n = x.size
    if n == 0 or m < 2:
        return TestResult(ROW_NAMES[10], (), False)
    psi = [_psi2(x, m - k) for k in range(3)]
    d1 = psi[0] - psi[1]
    d2 = psi[0] - 2 * psi[1] + psi[2]
    p1 = igamc(2.0 ** (m - 2), max(d1, 0.0) / 2.0)
    p2 = igamc(2.0 ** (m - 3), max(d2, 0.0) / 2.0) if m >= 3 else 1.0
    applicable = m < int(math.floor(math.log2(n))) - 2
    return TestResult(ROW_NAMES[10], (p1, p2), applicable, {"del1": d1, "del2": d2, "psi2": psi})


def _phi(x: np.ndarray, m: int) -> float:
    if m == 0:
        return 0.0
    counts = pattern_counts(x, m)
    pi = counts[counts > 0] / x.size
    return float((pi * np.log(pi)).sum())


def approximate_entropy(bits, m: int) -> float:
    x = _arr(bits)
    return _phi(x, m) - _phi(x, m + 1)


def test_apen(bits, m: int = 10) -> TestResult:
    x = _arr(bits)
    n = x.size
    if n == 0:
        return TestResult(ROW_NAMES[11], (), False)
    apen = approximate_entropy(x, m)
    chi2 = 2.0 * n * (math.log(2) - apen)
    p = igamc(2.0 ** (m - 1), max(chi2, 0.0) / 2.0)
    applicable = m < int(math.floor(math.log2(n))) - 5
    return TestResult(ROW_NAMES[11], (p,), applicable, {"ApEn": apen, "chi2": chi2})


def _trunc_div(a: int, b: int) -> int:
    """Integer division rounding toward zero."""
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def cusum_pvalue(n: int, z: int) -> float:
    sq = math.sqrt(n)
    s1 = 0.0
    for k in range(_trunc_div(_trunc_div(-n, z) + 1, 4), _trunc_div(_trunc_div(n, z) - 1, 4) + 1):
        s1 += normal_cdf((4 * k + 1) * z / sq) - normal_cdf((4 * k - 1) * z / sq)
    s2 = 0.0
    for k in range(_trunc_div(_trunc_div(-n, z) - 3, 4), _trunc_div(_trunc_div(n, z) - 1, 4) + 1):
        s2 += normal_cdf((4 * k + 3) * z / sq) - normal_cdf((4 * k + 1) * z / sq)
    return 1.0 - s1 + s2


def test_cusum(bits, mode: str = "forward") -> TestResult:
    if mode not in ("forward", "reverse"):
        raise ValueError("mode must be 'forward' or 'reverse'")
    x = _arr(bits)
    name = ROW_NAMES[12] if mode == "forward" else ROW_NAMES[13]
    n = x.size
    if n == 0:
        return TestResult(name, (), False)
    steps = 2 * x.astype(np.int64) - 1
    if mode == "reverse":
        steps = steps[::-1]
    z = int(np.abs(np.cumsum(steps)).max())
    return TestResult(name, (cusum_pvalue(n, z),), n >= 100, {"z": z})


def _walk(x: np.ndarray):
    s = np.cumsum(2 * x.astype(np.int64) - 1)
    zeros = s == 0
    J = int(np.count_nonzero(zeros)) + (1 if s.size and s[-1] != 0 else 0)
    return s, zeros, J


def _excursion_min_cycles(n: int) -> float:
    return max(0.005 * math.sqrt(n), 500.0)


EXCURSION_STATES = (-4, -3, -2, -1, 1, 2, 3, 4)
VARIANT_STATES = tuple(x for x in range(-9, 10) if x)


def excursion_pi(x: int) -> np.ndarray:
    a = abs(x)
    q = 1 - 1 / (2.0 * a)
    pis = [q] + [(1 / (4.0 * a * a)) * q ** (k - 1) for k in range(1, 5)] + [(1 / (2.0 * a)) * q ** 4]
    return np.array(pis)


def test_random_excursions(bits) -> TestResult:
    x = _arr(bits)
    if x.size == 0:
        return TestResult(ROW_NAMES[14], (), False)
    s, zeros, J = _walk(x)
    cycle = np.cumsum(zeros) - zeros  # cycle index of each position
    mask = (np.abs(s) <= 4) & ~zeros
    state_idx = np.where(s[mask] < 0, s[mask] + 4, s[mask] + 3)
    visits = np.zeros((J, 8), np.int64)
    np.add.at(visits, (cycle[mask], state_idx), 1)
    ps, chis = [], []
    for i, state in enumerate(EXCURSION_STATES):
        nu = np.bincount(np.minimum(visits[:, i], 5), minlength=6)
        chi2 = _chi2(nu, J * excursion_pi(state))
        chis.append(chi2)
        ps.append(igamc(2.5, chi2 / 2.0))
    return TestResult(ROW_NAMES[14], tuple(ps), J >= _excursion_min_cycles(x.size),
                      {"J": J, "chi2": chis, "states": list(EXCURSION_STATES)})


def test_random_excursions_variant(bits) -> TestResult:
    x = _arr(bits)
    if x.size == 0:
        return TestResult(ROW_NAMES[15], (), False)
    s, _, J = _walk(x)
    counts = np.bincount(s[np.abs(s) <= 9] + 9, minlength=19)
    ps, xis = [], []
    for state in VARIANT_STATES:
        xi = int(counts[state + 9])
        xis.append(xi)
        ps.append(erfc(abs(xi - J) / math.sqrt(2.0 * J * (4 * abs(state) - 2))))
    return TestResult(ROW_NAMES[15], tuple(ps), J >= _excursion_min_cycles(x.size),
                      {"J": J, "xi": xis, "states": list(VARIANT_STATES)})


# The test functions share pytest's naming convention; keep pytest from
# collecting them when a test module imports them.
for _name in list(globals()):
    if _name.startswith("test_"):
        globals()[_name].__test__ = False
del _name
