"""Spritz sponge cipher with a keystream randomness battery."""
from .modes import (decrypt, decrypt_with_iv, encrypt, encrypt_with_iv, hash, key_setup,
                    keystream)
from .state import DEFAULT_N, SpritzState, StateFormatError, initialize_state

__all__ = [
    "DEFAULT_N",
    "SpritzState",
    "StateFormatError",
    "decrypt",
    "decrypt_with_iv",
    "encrypt",
    "encrypt_with_iv",
    "hash",
    "initialize_state",
    "key_setup",
    "keystream",
]
__version__ = "0.1.0"
