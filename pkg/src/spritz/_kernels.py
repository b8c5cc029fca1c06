"""Compiled sponge primitives.

Every kernel takes the permutation ``S`` (uint8 array of length N) and the
register vector ``R`` (int64 array ``[i, j, k, z, a, w]``) and mutates them in
place. All index arithmetic is reduced mod N at each addition.
"""
import numpy as np
from numba import njit

I, J, K, Z, A, W = range(6)

_jit = njit(cache=True, nogil=True)


@_jit
def _gcd(x, y):
    while y:
        x, y = y, x % y
    return x


@_jit
def update(S, R):
    N = S.shape[0]
    i = (R[I] + R[W]) % N
    j = (R[K] + S[(R[J] + S[i]) % N]) % N
    k = (i + R[K] + S[j]) % N
    t = S[i]
    S[i] = S[j]
    S[j] = t
    R[I] = i
    R[J] = j
    R[K] = k


@_jit
def output(S, R):
    N = S.shape[0]
    z = S[(R[J] + S[(R[I] + S[(R[Z] + R[K]) % N]) % N]) % N]
    R[Z] = z
    return z


@_jit
def whip(S, R, r):
    N = S.shape[0]
    for _ in range(r):
        update(S, R)
    w = (R[W] + 1) % N
    while _gcd(w, N) != 1:
        w = (w + 1) % N
    R[W] = w


@_jit
def crush(S, R):
    N = S.shape[0]
    for v in range(N // 2):
        u = N - 1 - v
        if S[v] > S[u]:
            t = S[v]
            S[v] = S[u]
            S[u] = t


@_jit
def shuffle(S, R):
    N = S.shape[0]
    whip(S, R, 2 * N)
    crush(S, R)
    whip(S, R, 2 * N)
    crush(S, R)
    whip(S, R, 2 * N)
    R[A] = 0


@_jit
def drip(S, R):
    if R[A] > 0:
        shuffle(S, R)
    update(S, R)
    return output(S, R)


@_jit
def squeeze_into(S, R, out):
    if R[A] > 0:
        shuffle(S, R)
    for v in range(out.shape[0]):
        out[v] = drip(S, R)


@_jit
def absorb_nibble(S, R, x):
    half = S.shape[0] // 2
    if R[A] == half:
        shuffle(S, R)
    a = R[A]
    t = S[a]
    S[a] = S[half + x]
    S[half + x] = t
    R[A] = a + 1


@_jit
def absorb(S, R, data):
    for v in range(data.shape[0]):
        b = data[v]
        absorb_nibble(S, R, b & 0x0F)
        absorb_nibble(S, R, b >> 4)


@_jit
def absorb_stop(S, R):
    if R[A] == S.shape[0] // 2:
        shuffle(S, R)
    R[A] = R[A] + 1


def warmup():
    """Force compilation (or cache load) of every kernel."""
    S = np.arange(32, dtype=np.uint8)
    R = np.array([0, 0, 0, 0, 0, 1], dtype=np.int64)
    absorb(S, R, np.frombuffer(b"\x00", dtype=np.uint8))
    absorb_stop(S, R)
    squeeze_into(S, R, np.empty(1, dtype=np.uint8))
    crush(S, R)
    output(S, R)
