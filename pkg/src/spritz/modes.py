"""Keyed interfaces: key setup, encryption with and without IV, hashing.

Plaintext and keystream are combined by byte-wise addition mod 256, and
decryption subtracts; this is not XOR.
"""
from __future__ import annotations

import numpy as np

from .state import SpritzState


def _require_key(key: bytes) -> None:
    if not key:
        raise ValueError("key must be nonempty")


def key_setup(key: bytes) -> SpritzState:
    _require_key(key)
    state = SpritzState()
    state.absorb(key)
    return state


def keystream(key: bytes, length: int, iv: bytes | None = None) -> bytes:
    """First ``length`` keystream bytes for ``key`` (and ``iv``, if given)."""
    return _keyed_state(key, iv).squeeze(length)


def _keyed_state(key, iv):
    state = key_setup(key)
    if iv is not None:
        state.absorb_stop()
        state.absorb(iv)
    return state


def _combine(data: bytes, state: SpritzState, sign: int) -> bytes:
    msg = np.frombuffer(bytes(data), dtype=np.uint8)
    ks = state.squeeze_array(len(msg))
    if sign > 0:
        return (msg + ks).tobytes()  # uint8 wraps mod 256
    return (msg - ks).tobytes()


def encrypt(key: bytes, message: bytes) -> bytes:
    return _combine(message, key_setup(key), +1)


def decrypt(key: bytes, ciphertext: bytes) -> bytes:
    return _combine(ciphertext, key_setup(key), -1)


def encrypt_with_iv(key: bytes, iv: bytes, message: bytes) -> bytes:
    return _combine(message, _keyed_state(key, iv), +1)


def decrypt_with_iv(key: bytes, iv: bytes, ciphertext: bytes) -> bytes:
    return _combine(ciphertext, _keyed_state(key, iv), -1)


def encode_length(r: int) -> bytes:
    """Minimal big-endian encoding of a positive integer (one byte for r <= 255)."""
    return r.to_bytes(max(1, (r.bit_length() + 7) // 8), "big")


def hash_state(state: SpritzState, r: int) -> bytes:
    """Finish a hash on a state that has already absorbed its message."""
    if r < 1:
        raise ValueError("hash length must be at least 1")
    state.absorb_stop()
    state.absorb(encode_length(r))
    return state.squeeze(r)


def hash(message: bytes, r: int) -> bytes:  # noqa: A001
    """``r``-byte Spritz digest of ``message``."""
    if r < 1:
        raise ValueError("hash length must be at least 1")
    state = SpritzState()
    state.absorb(message)
    return hash_state(state, r)
