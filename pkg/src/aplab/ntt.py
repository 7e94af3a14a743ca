"""Exact integer convolution by number-theoretic transform.

Sequences are zero-padded to a power-of-two length, transformed modulo one or
more NTT-friendly primes, multiplied pointwise and recombined by the Chinese
remainder theorem. The primes are below 2**30 so every butterfly product fits
in a signed 64-bit word and the whole transform stays vectorised in numpy.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# (prime, primitive root); each prime is c * 2**k + 1 with k >= 23
PRIMES = (
    (998244353, 3),
    (469762049, 3),
    (167772161, 3),
    (754974721, 11),
)

_INT64_SAFE = 1 << 62


@lru_cache(maxsize=None)
def _bitrev(L: int) -> np.ndarray:
    bits = L.bit_length() - 1
    idx = np.arange(L)
    rev = np.zeros(L, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=None)
def _roots(p: int, g: int, L: int, inverse: bool) -> np.ndarray:
    """Powers w**j, j < L/2, of a primitive L-th root of unity mod p."""
    if (p - 1) % L:
        raise ValueError(f"transform length {L} does not divide {p} - 1")
    w = pow(g, (p - 1) // L, p)
    if inverse:
        w = pow(w, p - 2, p)
    half = max(L // 2, 1)
    out = np.ones(half, dtype=np.int64)
    k = 1
    while k < half:
        step = pow(w, k, p)
        out[k:2 * k] = out[:k] * step % p
        k *= 2
    return out


def ntt(a: np.ndarray, p: int, g: int, inverse: bool = False) -> np.ndarray:
    """Radix-2 transform of an int64 array of power-of-two length, mod p."""
    L = len(a)
    if L & (L - 1):
        raise ValueError("length must be a power of two")
    roots = _roots(p, g, L, inverse)
    a = a[_bitrev(L)]
    m = 1
    while m < L:
        w = roots[:: L // (2 * m)][:m]
        a = a.reshape(-1, 2 * m)
        u = a[:, :m]
        v = a[:, m:] * w % p
        a = np.concatenate(((u + v) % p, (u - v) % p), axis=1)
        m *= 2
    a = a.reshape(-1)
    if inverse:
        a = a * pow(L, p - 2, p) % p
    return a


def _residues(a, p: int) -> np.ndarray:
    if a.dtype == object:
        return np.array([int(v) % p for v in a], dtype=np.int64)
    return np.mod(a.astype(np.int64), p)


def _magnitude(a) -> int:
    if len(a) == 0:
        return 0
    if a.dtype == object:
        return max(abs(int(v)) for v in a)
    return int(np.max(np.abs(a.astype(np.int64))))


def _as_int_array(a) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype == object or np.issubdtype(a.dtype, np.integer) or a.dtype == bool:
        return a if a.dtype == object else a.astype(np.int64)
    raise TypeError(f"exact convolution needs integer input, got {a.dtype}")


def _crt(residues: list[np.ndarray], primes: list[int]) -> np.ndarray:
    """Garner recombination to the symmetric range (-P/2, P/2]."""
    x = residues[0].copy()
    modulus = primes[0]
    big = False
    for r, p in zip(residues[1:], primes[1:]):
        inv = pow(modulus % p, p - 2, p)
        if big:
            xm = np.array([int(v) % p for v in x], dtype=np.int64)
        else:
            xm = x % p
        t = (r - xm) % p * inv % p
        if not big and modulus * p < _INT64_SAFE:
            x = x + modulus * t
        else:
            x = x.astype(object) + modulus * t.astype(object)
            big = True
        modulus *= p
    half = modulus // 2
    if big:
        return np.array([int(v) - modulus if int(v) > half else int(v) for v in x], dtype=object)
    return np.where(x > half, x - modulus, x)


def linear_convolve(a, b) -> np.ndarray:
    """Exact linear convolution of two integer sequences."""
    a = _as_int_array(a)
    b = _as_int_array(b)
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return np.zeros(0, dtype=np.int64)
    out_len = n + m - 1
    L = 1
    while L < out_len:
        L *= 2
    bound = min(n, m) * _magnitude(a) * _magnitude(b)
    primes, product = [], 1
    for p, g in PRIMES:
        primes.append((p, g))
        product *= p
        if product > 2 * bound + 1:
            break
    else:
        raise OverflowError("convolution exceeds the CRT range of the prime set")
    residues = []
    for p, g in primes:
        fa = np.zeros(L, dtype=np.int64)
        fb = np.zeros(L, dtype=np.int64)
        fa[:n] = _residues(a, p)
        fb[:m] = _residues(b, p)
        prod = ntt(fa, p, g) * ntt(fb, p, g) % p
        residues.append(ntt(prod, p, g, inverse=True)[:out_len])
    return _crt(residues, [p for p, _ in primes])


def cyclic_convolve(a, b) -> np.ndarray:
    """Exact cyclic convolution c[x] = sum_y a[y] * b[(x - y) mod N]."""
    a = _as_int_array(a)
    b = _as_int_array(b)
    N = len(a)
    if len(b) != N:
        raise ValueError(f"length mismatch: {N} != {len(b)}")
    lin = linear_convolve(a, b)
    out = lin[:N].copy()
    out[: len(lin) - N] += lin[N:]
    return out
