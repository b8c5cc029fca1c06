"""The Spritz sponge state and its primitive operations."""
from __future__ import annotations

import struct
from math import gcd

import numpy as np

from . import _kernels as kern

DEFAULT_N = 256
MAX_N = 256
#: Smallest N that can absorb a nibble: S[N//2 + 15] must exist.
MIN_ABSORB_N = 32

STATE_MAGIC = b"SPRZ"
STATE_VERSION = 1
_HEADER = struct.Struct("<4sBH6H")


class StateFormatError(ValueError):
    """Raised when a serialized state blob is malformed."""


class SpritzState:
    """Registers ``i, j, k, z, a, w`` plus the permutation ``S`` of ``{0..N-1}``.

    Methods mutate the state in place. ``N`` may be any integer in ``[2, 256]``
    so the permutation machinery can be exercised at small sizes, but
    absorbing input needs ``N >= 32``.
    """

    __slots__ = ("S", "_R")

    def __init__(self, N: int = DEFAULT_N):
        if not isinstance(N, (int, np.integer)) or isinstance(N, bool):
            raise TypeError(f"N must be an integer, got {type(N).__name__}")
        if N < 2:
            raise ValueError(f"N must be at least 2, got {N}")
        if N > MAX_N:
            raise ValueError(f"N must be at most {MAX_N}, got {N}")
        self.S = np.arange(N, dtype=np.uint8)
        self._R = np.array([0, 0, 0, 0, 0, 1], dtype=np.int64)

    # registers -------------------------------------------------------------

    @property
    def N(self) -> int:
        return self.S.shape[0]

    i = property(lambda self: int(self._R[kern.I]))
    j = property(lambda self: int(self._R[kern.J]))
    k = property(lambda self: int(self._R[kern.K]))
    z = property(lambda self: int(self._R[kern.Z]))
    a = property(lambda self: int(self._R[kern.A]))
    w = property(lambda self: int(self._R[kern.W]))

    @property
    def registers(self) -> tuple[int, int, int, int, int, int]:
        """``(i, j, k, z, a, w)``"""
        return tuple(int(r) for r in self._R)

    def copy(self) -> SpritzState:
        other = SpritzState.__new__(SpritzState)
        other.S = self.S.copy()
        other._R = self._R.copy()
        return other

    def __eq__(self, other):
        if not isinstance(other, SpritzState):
            return NotImplemented
        return np.array_equal(self.S, other.S) and np.array_equal(self._R, other._R)

    def __repr__(self):
        i, j, k, z, a, w = self.registers
        return f"SpritzState(N={self.N}, i={i}, j={j}, k={k}, z={z}, a={a}, w={w})"

    # primitives ------------------------------------------------------------

    def update(self) -> None:
        kern.update(self.S, self._R)

    def output(self) -> int:
        return int(kern.output(self.S, self._R))

    def whip(self, r: int) -> None:
        if r < 0:
            raise ValueError("r must be nonnegative")
        kern.whip(self.S, self._R, r)

    def crush(self) -> None:
        kern.crush(self.S, self._R)

    def shuffle(self) -> None:
        kern.shuffle(self.S, self._R)

    def drip(self) -> int:
        return int(kern.drip(self.S, self._R))

    def squeeze(self, r: int) -> bytes:
        return self.squeeze_array(r).tobytes()

    def squeeze_array(self, r: int) -> np.ndarray:
        """Like :meth:`squeeze` but returns a fresh uint8 array."""
        if r < 0:
            raise ValueError("r must be nonnegative")
        out = np.empty(r, dtype=np.uint8)
        kern.squeeze_into(self.S, self._R, out)
        return out

    def absorb_nibble(self, x: int) -> None:
        if not 0 <= x <= 15:
            raise ValueError(f"nibble out of range: {x}")
        self._check_absorb()
        kern.absorb_nibble(self.S, self._R, x)

    def absorb_byte(self, b: int) -> None:
        if not 0 <= b <= 255:
            raise ValueError(f"byte out of range: {b}")
        self._check_absorb()
        kern.absorb(self.S, self._R, np.array([b], dtype=np.uint8))

    def absorb(self, data: bytes) -> None:
        self._check_absorb()
        if len(data):
            kern.absorb(self.S, self._R, np.frombuffer(bytes(data), dtype=np.uint8))

    def absorb_stop(self) -> None:
        kern.absorb_stop(self.S, self._R)

    def _check_absorb(self):
        if self.N < MIN_ABSORB_N:
            raise ValueError(f"absorbing requires N >= {MIN_ABSORB_N}, state has N={self.N}")

    # serialization ---------------------------------------------------------

    def to_bytes(self) -> bytes:
        """Versioned little-endian layout: magic, version, N, i j k z a w, S."""
        return _HEADER.pack(STATE_MAGIC, STATE_VERSION, self.N, *self.registers) + self.S.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> SpritzState:
        if len(blob) < _HEADER.size:
            raise StateFormatError("state blob too short")
        magic, version, N, *regs = _HEADER.unpack_from(blob)
        if magic != STATE_MAGIC:
            raise StateFormatError("bad magic")
        if version != STATE_VERSION:
            raise StateFormatError(f"unsupported state version {version}")
        if not 2 <= N <= MAX_N:
            raise StateFormatError(f"bad N {N}")
        body = blob[_HEADER.size:]
        if len(body) != N:
            raise StateFormatError(f"expected {N} permutation bytes, got {len(body)}")
        S = np.frombuffer(body, dtype=np.uint8).copy()
        if not np.array_equal(np.sort(S), np.arange(N)):
            raise StateFormatError("S is not a permutation")
        i, j, k, z, a, w = regs
        if max(i, j, k, z, w) >= N or a > N // 2 or gcd(w, N) != 1:
            raise StateFormatError("register out of range")
        state = cls.__new__(cls)
        state.S = S
        state._R = np.array(regs, dtype=np.int64)
        return state


def initialize_state(N: int = DEFAULT_N) -> SpritzState:
    return SpritzState(N)
