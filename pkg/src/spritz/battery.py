"""Keystream corpus generation and the randomness battery.

A battery run draws one key per stream, squeezes each keystream, runs every
configured test on ``psamples`` distinct streams, folds the per-stream
p-values into one value with a KS uniformity test and classifies it. Rows that
come out Weak are rerun once with twice the p-samples on streams no earlier
sample has touched.
"""
from __future__ import annotations

import logging
import os
import secrets
import threading
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import stats
from .modes import hash_state, key_setup
from .state import SpritzState

log = logging.getLogger(__name__)

PASSED, WEAK, FAILED = "Passed", "Weak", "Failed"

CHUNK_BYTES = 1 << 16
THREADS_ENV = "SPRITZ_THREADS"

#: In-scope tests in report order: (name, tuple, p-value index).
DEFAULT_TESTS: tuple[tuple[str, int, int], ...] = (
    ("sts_monobit", 0, 0),
    ("sts_runs", 0, 0),
    ("sts_serial", 1, 0),
    ("sts_serial", 2, 0),
    ("sts_serial", 2, 1),
    ("sts_serial", 3, 0),
    ("sts_serial", 3, 1),
    ("sts_serial", 4, 0),
    ("sts_serial", 4, 1),
    ("rgb_bitdist", 1, 0),
    ("rgb_bitdist", 2, 0),
    ("rgb_bitdist", 3, 0),
    ("rgb_bitdist", 4, 0),
    ("rgb_bitdist", 5, 0),
    ("rgb_permutations", 2, 0),
    ("rgb_permutations", 3, 0),
    ("rgb_permutations", 4, 0),
    ("rgb_permutations", 5, 0),
)

GENERATORS = ("spritz", "zero", "counter")


class ConfigError(ValueError):
    """Battery configuration that cannot be run."""


class EntropyError(RuntimeError):
    """The OS entropy source failed while drawing keys."""


@dataclass(frozen=True)
class BatteryConfig:
    streams: int = 1024
    stream_bits: int = 1 << 25
    psamples: int = 100
    weak: tuple[float, float] = (0.005, 0.995)
    fail: tuple[float, float] = (1e-6, 1 - 1e-6)
    key_length: int = 32
    seed: bytes | None = None
    generator: str = "spritz"
    tests: tuple[tuple[str, int, int], ...] = DEFAULT_TESTS
    threads: int | None = None

    def validate_corpus(self) -> None:
        if self.streams < 1:
            raise ConfigError("stream count must be positive")
        if self.stream_bits < 8 or self.stream_bits % 8:
            raise ConfigError("stream length must be a positive multiple of 8 bits")
        if self.key_length < 1:
            raise ConfigError("key length must be positive")
        if self.generator not in GENERATORS:
            raise ConfigError(f"unknown generator {self.generator!r}")

    def validate(self) -> None:
        self.validate_corpus()
        if self.psamples < 1:
            raise ConfigError("psamples must be positive")
        if self.psamples > self.streams:
            raise ConfigError(
                f"psamples ({self.psamples}) exceeds stream count ({self.streams}); "
                "each p-sample needs its own stream")
        fl, fh = self.fail
        wl, wh = self.weak
        if not 0 <= fl < wl < wh < fh <= 1:
            raise ConfigError("thresholds must satisfy fail_low < weak_low < weak_high < fail_high")
        unknown = [t for t in self.tests if t not in _TEST_SET]
        if unknown:
            raise ConfigError(f"unknown tests: {unknown}")
        for name, tup, _ in self.tests:
            _check_capacity(name, tup, self.stream_bits)

    @property
    def stream_bytes(self) -> int:
        return self.stream_bits // 8

    def to_dict(self) -> dict:
        return {
            "streams": self.streams,
            "stream_bits": self.stream_bits,
            "psamples": self.psamples,
            "weak": list(self.weak),
            "fail": list(self.fail),
            "key_length": self.key_length,
            "key_source": "seed" if self.seed is not None else "os-entropy",
            "seed": self.seed.hex() if self.seed is not None else None,
            "generator": self.generator,
            "tests": [list(t) for t in self.tests],
        }


_TEST_SET = set(DEFAULT_TESTS)


def _check_capacity(name, tup, stream_bits):
    bits = stream_bits
    if name == "rgb_bitdist":
        need = stats.MIN_EXPECTED * (1 << tup) * tup
    elif name == "rgb_permutations":
        need = stats.MIN_EXPECTED * _factorial(tup) * tup * 32
    elif name == "sts_serial":
        need = 1 << (tup + 2)
    else:
        need = stats.ADVISORY_MIN_BITS
    if bits < need:
        raise ConfigError(f"{name} tuple {tup} needs streams of at least {int(need)} bits")


def _factorial(n):
    out = 1
    for v in range(2, n + 1):
        out *= v
    return out


# ---------------------------------------------------------------------------
# keys and streams


def derive_key(seed: bytes, index: int, length: int = 32) -> bytes:
    """Key ``index`` of a seeded corpus: hash of seed, stop, index (4 bytes BE)."""
    state = SpritzState()
    state.absorb(seed)
    state.absorb_stop()
    state.absorb(index.to_bytes(4, "big"))
    return hash_state(state, length)


def random_key(length: int = 32) -> bytes:
    try:
        return secrets.token_bytes(length)
    except Exception as exc:  # pragma: no cover - depends on the platform
        raise EntropyError(f"OS entropy source failed: {exc}") from exc


class Corpus:
    """Indexable keystream corpus.

    Stream ``i`` is fully determined by key ``i``. Indices at or beyond
    ``config.streams`` are reserve streams used only by reruns.
    """

    def __init__(self, config: BatteryConfig, cache_bytes: int = 256 << 20):
        self.config = config
        self._keys: dict[int, bytes] = {}
        self._cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self._cache_slots = cache_bytes // max(1, config.stream_bytes)
        self._lock = threading.Lock()

    def key(self, index: int) -> bytes:
        with self._lock:
            key = self._keys.get(index)
            if key is None:
                cfg = self.config
                if cfg.seed is not None:
                    key = derive_key(cfg.seed, index, cfg.key_length)
                else:
                    key = random_key(cfg.key_length)
                self._keys[index] = key
            return key

    def chunks(self, index: int, chunk_bytes: int = CHUNK_BYTES) -> Iterator[np.ndarray]:
        """Yield stream ``index`` in chunks of at most ``chunk_bytes``."""
        total = self.config.stream_bytes
        gen = self.config.generator
        if gen == "zero":
            for off in range(0, total, chunk_bytes):
                yield np.zeros(min(chunk_bytes, total - off), dtype=np.uint8)
            return
        if gen == "counter":
            yield from _counter_chunks(index, total, chunk_bytes)
            return
        state = key_setup(self.key(index))
        for off in range(0, total, chunk_bytes):
            yield state.squeeze_array(min(chunk_bytes, total - off))

    def stream(self, index: int) -> np.ndarray:
        """Whole stream ``index``; recently used streams are kept in memory."""
        with self._lock:
            hit = self._cache.get(index)
            if hit is not None:
                self._cache.move_to_end(index)
                return hit
        data = np.concatenate(list(self.chunks(index)))
        if self._cache_slots:
            with self._lock:
                self._cache[index] = data
                while len(self._cache) > self._cache_slots:
                    self._cache.popitem(last=False)
        return data


def _counter_chunks(index, total, chunk_bytes):
    words_per_stream = total // 4 + 1
    start = index * words_per_stream
    chunk_words = max(1, chunk_bytes // 4)
    produced = 0
    w = start
    while produced < total:
        block = np.arange(w, w + chunk_words, dtype=np.uint64).astype("<u4").view(np.uint8)
        take = min(block.size, total - produced)
        yield block[:take]
        produced += take
        w += chunk_words


def generate_keystreams(config: BatteryConfig, chunk_bytes: int = CHUNK_BYTES) -> Iterator[tuple[bytes, Iterator[np.ndarray]]]:
    """Yield ``(key, chunk iterator)`` for each of the configured streams, lazily.

    The key is empty for the non-cipher generators.
    """
    config.validate_corpus()
    corpus = Corpus(config, cache_bytes=0)
    for index in range(config.streams):
        yield corpus.key(index) if config.generator == "spritz" else b"", corpus.chunks(index, chunk_bytes)


# ---------------------------------------------------------------------------
# classification and rows


def classify(p: float, config: BatteryConfig | None = None) -> str:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p-value outside [0, 1]: {p}")
    config = config or BatteryConfig()
    fl, fh = config.fail
    wl, wh = config.weak
    if p < fl or p > fh:
        return FAILED
    if p < wl or p > wh:
        return WEAK
    return PASSED


@dataclass
class BatteryRow:
    test: str
    tuple: int
    variant: int
    psamples: int
    p_value: float
    result: str
    rerun: bool = False
    first_stream: int = 0
    not_applicable: int = 0
    seconds: float = 0.0

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "test": self.test,
            "tuple": self.tuple,
            "variant": self.variant,
            "psamples": self.psamples,
            "p_value": self.p_value,
            "result": self.result,
            "rerun": self.rerun,
            "streams": [self.first_stream, self.first_stream + self.psamples],
            "not_applicable": self.not_applicable,
        }
        if timing:
            d["seconds"] = round(self.seconds, 6)
        return d


@dataclass
class BatteryReport:
    config: BatteryConfig
    rows: list[BatteryRow]
    audit: list[BatteryRow] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def verdict(self) -> str:
        if any(r.result == FAILED for r in self.rows):
            return FAILED
        if any(r.result == WEAK for r in self.rows):
            return WEAK
        return PASSED

    @property
    def failed(self) -> bool:
        return self.verdict == FAILED


def _sample_p(name, tup, variant, data):
    """One p-value for one test on one stream (runs that do not apply score 0)."""
    if name == "sts_monobit":
        res = stats.monobit_test(stats.BitStream(data))
    elif name == "sts_runs":
        res = stats.runs_test(stats.BitStream(data))
        if not res.applicable:
            return 0.0, False
    elif name == "sts_serial":
        res = stats.serial_test(stats.BitStream(data), tup)
    elif name == "rgb_bitdist":
        res = stats.bitdist_test(stats.BitStream(data), tup)
    elif name == "rgb_permutations":
        res = stats.permutations_test(stats.WordStream(data), tup)
    else:  # validated in BatteryConfig
        raise ConfigError(name)
    return res.p_values[variant], True


def resolve_threads(config: BatteryConfig) -> int:
    if config.threads:
        return config.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _run_row(corpus, spec, first, count, config, pool):
    name, tup, variant = spec
    t0 = time.perf_counter()

    def one(idx):
        return _sample_p(name, tup, variant, corpus.stream(idx))

    indices = range(first, first + count)
    results = list(pool.map(one, indices)) if pool else [one(i) for i in indices]
    p_values = [p for p, _ in results]
    agg = stats.ks_uniformity(p_values)
    return BatteryRow(
        test=name, tuple=tup, variant=variant, psamples=count, p_value=agg,
        result=classify(agg, config), first_stream=first,
        not_applicable=sum(1 for _, ok in results if not ok),
        seconds=time.perf_counter() - t0,
    )


def run_battery(config: BatteryConfig, progress: Callable[[BatteryRow], None] | None = None) -> BatteryReport:
    """Run every configured test; rerun Weak rows once at doubled p-samples.

    Initial rows read streams ``[0, psamples)``. Reruns read reserve streams
    ``[streams, streams + 2*psamples)``, which no initial sample touches.
    """
    config.validate()
    corpus = Corpus(config)
    threads = resolve_threads(config)
    t0 = time.perf_counter()
    rows, audit = [], []
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for spec in config.tests:
            row = _run_row(corpus, spec, 0, config.psamples, config, pool)
            audit.append(row)
            if progress:
                progress(row)
            if row.result == WEAK:
                log.info("%s tuple %d weak (p=%.8f); rerunning", row.test, row.tuple, row.p_value)
                row = _run_row(corpus, spec, config.streams, 2 * config.psamples, config, pool)
                row.rerun = True
                audit.append(row)
                if progress:
                    progress(row)
            rows.append(row)
    finally:
        if pool:
            pool.shutdown()
    return BatteryReport(config, rows, audit, time.perf_counter() - t0)
