"""Input families: seeded random sets, intervals, Bohr samples, and primes
moved into Z/6nZ by a Freiman 3-isomorphism."""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations_with_replacement

import numpy as np

from .bohr import BohrSet, make_bohr
from .cyclic import SetOnZN
from .policy import Policy


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0 < alpha <= 1:
        raise ValueError(f"density must lie in (0, 1], got {alpha}")
    return alpha


def random_set(N: int, alpha: float, seed: int) -> SetOnZN:
    """Each residue kept independently with probability alpha."""
    alpha = _check_alpha(alpha)
    rng = np.random.default_rng(seed)
    return SetOnZN(N, rng.random(N) < alpha)


def interval_set(N: int, m: int) -> SetOnZN:
    """{0, ..., m - 1}."""
    if not 0 <= m <= N:
        raise ValueError(f"interval length must lie in [0, {N}], got {m}")
    return SetOnZN.from_residues(N, range(m))


def bohr_sample(B: BohrSet, alpha: float, seed: int) -> SetOnZN:
    """A uniformly chosen subset of B of size max(1, round(alpha |B|))."""
    alpha = _check_alpha(alpha)
    members = B.members.members
    k = max(1, round(alpha * len(members)))
    rng = np.random.default_rng(seed)
    return SetOnZN.from_residues(B.N, rng.choice(members, size=k, replace=False))


def random_bohr(N: int, d: int, delta: float, seed: int, units: bool = True,
                policy: Policy | None = None) -> BohrSet:
    """Bohr set with d distinct random frequencies (invertible mod N if ``units``)."""
    rng = np.random.default_rng(seed)
    pool = np.arange(1, N)
    if units:
        pool = pool[np.gcd(pool, N) == 1]
    if len(pool) < d:
        raise ValueError(f"not enough frequencies mod {N} for dimension {d}")
    return make_bohr(N, rng.choice(pool, size=d, replace=False), delta, policy)


def bohr_corpus(count: int, seed: int, max_N: int = 4096, max_d: int = 4, min_N: int = 64):
    """Seeded list of Bohr sets with unit frequencies and delta in [0.05, 2]."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        N = int(rng.integers(min_N, max_N + 1))
        d = int(rng.integers(1, max_d + 1))
        delta = float(rng.uniform(0.05, 2.0))
        out.append(random_bohr(N, d, delta, int(rng.integers(2**31)), units=True))
    return out


def sieve(n: int) -> np.ndarray:
    """Primes <= n."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if is_p[p]:
            is_p[p * p::p] = False
    return np.flatnonzero(is_p)


def freiman_embed(A, n: int) -> SetOnZN:
    """Image of A in {1..n} under Z -> Z/6nZ.

    Three-fold sums of elements of {1..n} lie in [3, 3n], an interval shorter
    than 6n, so equal residues of such sums force equal integers.
    """
    A = [int(a) for a in A]
    if any(a < 1 or a > n for a in A):
        raise ValueError(f"elements must lie in 1..{n}")
    return SetOnZN.from_residues(6 * n, A)


def primes_upto(n: int) -> SetOnZN:
    """The primes up to n, embedded in Z/6nZ."""
    return freiman_embed(sieve(n), n)


def triple_sums_injective(A, modulus: int) -> bool:
    """a1+a2+a3 = a4+a5+a6 in Z iff equal mod ``modulus``, for all a_i in A.

    Equivalent to the reduction map being injective on the set of three-fold
    integer sums, which is what is checked.
    """
    sums = {a + b + c for a, b, c in combinations_with_replacement(sorted(int(x) for x in A), 3)}
    return len({s % modulus for s in sums}) == len(sums)


def density_of_primes(n: int) -> Fraction:
    if n < 2:
        raise ValueError("n must be at least 2")
    return Fraction(len(sieve(n)), n)
