"""Statistical tests over keystream data and the functions behind their p-values.

Conventions: bits are read most-significant first within each byte; words are
32-bit unsigned integers assembled little-endian from consecutive bytes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations as _iter_permutations

import numpy as np
from scipy import special as _sp
from scipy import stats as _st

MIN_EXPECTED = 5.0
ADVISORY_MIN_BITS = 100
KS_EXACT_MAX = 100


class InsufficientSamplesError(ValueError):
    """Too little data for the chi-square approximation to be trusted."""


# ---------------------------------------------------------------------------
# streams


class BitStream:
    """A byte string viewed as a sequence of bits, MSB first."""

    def __init__(self, source: bytes | np.ndarray):
        self.source = np.frombuffer(bytes(source), dtype=np.uint8) if not isinstance(
            source, np.ndarray) else source.astype(np.uint8, copy=False)
        self._bits = None

    @classmethod
    def from_bits(cls, bits) -> BitStream:
        """Build from an iterable of 0/1 values or a string such as ``"0110"``.

        The bit count need not be a multiple of 8.
        """
        if isinstance(bits, str):
            bits = [int(c) for c in bits if c in "01"]
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.size and arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        obj = cls(np.packbits(arr))
        obj._bits = arr
        return obj

    @property
    def bits(self) -> np.ndarray:
        if self._bits is None:
            self._bits = np.unpackbits(self.source)
        return self._bits

    def __len__(self):
        return int(self.bits.size)


class WordStream:
    """A byte string viewed as little-endian uint32 words; trailing bytes ignored."""

    def __init__(self, source: bytes | np.ndarray):
        buf = np.frombuffer(bytes(source), dtype=np.uint8) if not isinstance(
            source, np.ndarray) else source.astype(np.uint8, copy=False)
        usable = buf.size - buf.size % 4
        self.words = buf[:usable].view("<u4")

    @classmethod
    def from_words(cls, words) -> WordStream:
        return cls(np.asarray(words, dtype="<u4").tobytes())

    def __len__(self):
        return int(self.words.size)


@dataclass
class TestResult:
    name: str
    tuple: int
    statistic: float
    dof: float
    p_values: list[float]
    applicable: bool = True
    warnings: list[str] = field(default_factory=list)
    counts: np.ndarray | None = field(default=None, repr=False)

    __test__ = False  # not a pytest class

    @property
    def p_value(self) -> float:
        return self.p_values[0]


# ---------------------------------------------------------------------------
# special functions


def erfc(x: float) -> float:
    return math.erfc(x)


def igamc(s: float, x: float) -> float:
    """Upper regularized incomplete gamma function Q(s, x)."""
    if not s > 0:
        raise ValueError(f"igamc needs s > 0, got {s}")
    if not x >= 0:
        raise ValueError(f"igamc needs x >= 0, got {x}")
    q = float(_sp.gammaincc(s, x))
    assert 0.0 <= q <= 1.0, q
    return q


def _p(x: float) -> float:
    assert 0.0 <= x <= 1.0, x
    return x


def _chisq(counts: np.ndarray, expected: float) -> float:
    c = counts.astype(np.float64)
    return float(np.sum((c - expected) ** 2) / expected)


# ---------------------------------------------------------------------------
# tests


def monobit_test(bits: BitStream) -> TestResult:
    b = bits.bits
    n = b.size
    if n == 0:
        raise ValueError("empty bit stream")
    ones = int(np.count_nonzero(b))
    s_n = 2 * ones - n
    stat = abs(s_n) / math.sqrt(n)
    warnings = [] if n >= ADVISORY_MIN_BITS else [f"only {n} bits; at least {ADVISORY_MIN_BITS} advised"]
    return TestResult("sts_monobit", 0, float(s_n), 1.0,
                      [_p(erfc(stat / math.sqrt(2)))], warnings=warnings)


def runs_test(bits: BitStream) -> TestResult:
    """Total number of runs compared with its expectation given the ones fraction.

    When the ones fraction is too far from 1/2 the test does not apply; the
    result then has ``applicable=False`` and no p-values.
    """
    b = bits.bits
    n = b.size
    if n == 0:
        raise ValueError("empty bit stream")
    pi = np.count_nonzero(b) / n
    warnings = [] if n >= ADVISORY_MIN_BITS else [f"only {n} bits; at least {ADVISORY_MIN_BITS} advised"]
    if abs(pi - 0.5) >= 2 / math.sqrt(n):
        return TestResult("sts_runs", 0, math.nan, 1.0, [], applicable=False,
                          warnings=warnings + ["ones fraction outside applicability bound"])
    v = 1 + int(np.count_nonzero(b[1:] != b[:-1]))
    q = pi * (1 - pi)
    p = erfc(abs(v - 2 * n * q) / (2 * math.sqrt(2 * n) * q))
    return TestResult("sts_runs", 0, float(v), 1.0, [_p(p)], warnings=warnings)


def overlapping_counts(b: np.ndarray, m: int) -> np.ndarray:
    """Counts of the 2**m overlapping m-bit patterns, wrapping around the end."""
    n = b.size
    if m == 0:
        return np.array([n], dtype=np.int64)
    ext = np.concatenate([b, b[: m - 1]]).astype(np.int64)
    idx = np.zeros(n, dtype=np.int64)
    for t in range(m):
        idx = (idx << 1) | ext[t:t + n]
    return np.bincount(idx, minlength=1 << m)


def _psi_sq(b: np.ndarray, m: int) -> float:
    if m <= 0:
        return 0.0
    n = b.size
    c = overlapping_counts(b, m).astype(np.float64)
    return float((1 << m) / n * np.sum(c * c) - n)


def serial_test(bits: BitStream, m: int) -> TestResult:
    """Overlapping m-bit pattern test.

    Emits ``p_values[0]`` from the first difference of psi-squared and, for
    ``m >= 2``, ``p_values[1]`` from the second difference.
    """
    b = bits.bits
    n = b.size
    if m < 1:
        raise ValueError("m must be at least 1")
    if (1 << m) > n:
        raise ValueError(f"2**m = {1 << m} exceeds bit length {n}")
    psi_m, psi_m1, psi_m2 = _psi_sq(b, m), _psi_sq(b, m - 1), _psi_sq(b, m - 2)
    d1 = psi_m - psi_m1
    p_values = [_p(igamc(2.0 ** (m - 2), max(d1, 0.0) / 2))]
    if m >= 2:
        d2 = psi_m - 2 * psi_m1 + psi_m2
        p_values.append(_p(igamc(2.0 ** (m - 3), max(d2, 0.0) / 2)))
    return TestResult("sts_serial", m, psi_m, 2.0 ** (m - 1), p_values,
                      counts=overlapping_counts(b, m))


def disjoint_counts(b: np.ndarray, n: int) -> np.ndarray:
    """Counts of the 2**n patterns over non-overlapping n-bit tuples."""
    groups = b.size // n
    blocks = b[: groups * n].reshape(groups, n).astype(np.int64)
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    return np.bincount(blocks @ weights, minlength=1 << n)


def bitdist_test(bits: BitStream, n: int, *, min_expected: float = MIN_EXPECTED) -> TestResult:
    if not 1 <= n <= 12:
        raise ValueError("n must be in [1, 12]")
    b = bits.bits
    groups = b.size // n
    cells = 1 << n
    if groups == 0 or groups < min_expected * cells:
        raise InsufficientSamplesError(
            f"bitdist n={n} needs {int(min_expected * cells)} tuples, have {groups}")
    counts = disjoint_counts(b, n)
    chi = _chisq(counts, groups / cells)
    dof = cells - 1
    return TestResult("rgb_bitdist", n, chi, float(dof), [_p(igamc(dof / 2, chi / 2))],
                      counts=counts)


_RANK_CACHE: dict[int, np.ndarray] = {}


def _rank_table(n: int) -> np.ndarray:
    """Lookup from base-n encoded argsort rows to permutation index."""
    table = _RANK_CACHE.get(n)
    if table is None:
        table = np.full(n ** n, -1, dtype=np.int64)
        for idx, perm in enumerate(_iter_permutations(range(n))):
            table[sum(p * n ** (n - 1 - t) for t, p in enumerate(perm))] = idx
        _RANK_CACHE[n] = table
    return table


def permutation_counts(words: np.ndarray, n: int) -> np.ndarray:
    """Counts of orderings over disjoint groups of n words.

    Index 0 is the ascending ordering; ties resolve by position.
    """
    groups = words.size // n
    block = words[: groups * n].reshape(groups, n)
    order = np.argsort(block, axis=1, kind="stable").astype(np.int64)
    code = order @ (n ** np.arange(n - 1, -1, -1, dtype=np.int64))
    return np.bincount(_rank_table(n)[code], minlength=math.factorial(n))


def permutations_test(words: WordStream, n: int, *, min_expected: float = MIN_EXPECTED) -> TestResult:
    if not 2 <= n <= 5:
        raise ValueError("n must be in [2, 5]")
    cells = math.factorial(n)
    groups = len(words) // n
    if groups == 0 or groups < min_expected * cells:
        raise InsufficientSamplesError(
            f"permutations n={n} needs {int(min_expected * cells)} groups, have {groups}")
    counts = permutation_counts(words.words, n)
    chi = _chisq(counts, groups / cells)
    dof = cells - 1
    return TestResult("rgb_permutations", n, chi, float(dof), [_p(igamc(dof / 2, chi / 2))],
                      counts=counts)


# ---------------------------------------------------------------------------
# aggregation


def ks_uniformity(p_values) -> float:
    """One-sample KS test of ``p_values`` against Uniform(0, 1); returns its p-value.

    Uses the exact distribution for up to 100 samples, the asymptotic one above.
    """
    arr = np.asarray(list(p_values), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("need at least one p-value")
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError("p-values must lie in [0, 1]")
    method = "exact" if arr.size <= KS_EXACT_MAX else "asymp"
    res = _st.kstest(arr, "uniform", method=method)
    return _p(float(res.pvalue))
