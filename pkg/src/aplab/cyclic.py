"""Fourier analysis on Z/NZ with the averaging normalisations.

Conventions: ``E`` is the average over the group, the transform is
``fhat(k) = E_x f(x) e(-kx/N)``, inversion is ``f(x) = sum_k fhat(k) e(kx/N)``
and convolution is ``f * g(x) = E_y f(y) g(x - y)``, so that
``dft(f * g) = dft(f) dft(g)``.

Functions built from sets carry exact integer numerators over a positive
integer denominator; convolving two exact functions stays exact by going
through the integer NTT kernel.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import ntt
from .errors import KernelError, ModulusMismatch
from .policy import Policy, resolve


def _check_modulus(N: int) -> int:
    N = int(N)
    if N < 2:
        raise ValueError(f"modulus must be at least 2, got {N}")
    return N


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def same_modulus(*objs) -> int:
    moduli = {o.N for o in objs}
    if len(moduli) != 1:
        raise ModulusMismatch(f"moduli differ: {sorted(moduli)}")
    return moduli.pop()


class SetOnZN:
    """A subset of Z/NZ held as a boolean membership mask."""

    __slots__ = ("N", "mask", "_bits")

    def __init__(self, N: int, mask):
        self.N = _check_modulus(N)
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.N,):
            raise ValueError(f"mask must have shape ({self.N},), got {mask.shape}")
        self.mask = _frozen(mask)
        self._bits = None

    @classmethod
    def from_residues(cls, N: int, residues: Iterable[int]) -> "SetOnZN":
        mask = np.zeros(_check_modulus(N), dtype=bool)
        idx = np.fromiter((int(r) for r in residues), dtype=np.int64)
        mask[idx % N] = True
        return cls(N, mask)

    @classmethod
    def full(cls, N: int) -> "SetOnZN":
        return cls(N, np.ones(N, dtype=bool))

    @classmethod
    def empty(cls, N: int) -> "SetOnZN":
        return cls(N, np.zeros(N, dtype=bool))

    @classmethod
    def from_bits(cls, N: int, bits: int) -> "SetOnZN":
        raw = bits.to_bytes((N + 7) // 8, "little")
        mask = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:N]
        return cls(N, mask.astype(bool))

    # -- basic queries -------------------------------------------------
    @property
    def members(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def cardinality(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def density(self) -> Fraction:
        return Fraction(self.cardinality, self.N)

    @property
    def bits(self) -> int:
        """Membership as an N-bit integer, bit x set iff x is a member."""
        if self._bits is None:
            packed = np.packbits(self.mask, bitorder="little")
            self._bits = int.from_bytes(packed.tobytes(), "little")
        return self._bits

    def __len__(self) -> int:
        return self.cardinality

    def __iter__(self) -> Iterator[int]:
        return iter(int(x) for x in self.members)

    def __contains__(self, x) -> bool:
        return bool(self.mask[int(x) % self.N])

    def __bool__(self) -> bool:
        return bool(self.mask.any())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SetOnZN):
            return NotImplemented
        return self.N == other.N and bool(np.array_equal(self.mask, other.mask))

    def __hash__(self) -> int:
        return hash((self.N, self.mask.tobytes()))

    def __repr__(self) -> str:
        shown = self.members[:12].tolist()
        tail = ", ..." if self.cardinality > 12 else ""
        return f"SetOnZN(N={self.N}, {{{', '.join(map(str, shown))}{tail}}})"

    # -- set algebra -----------------------------------------------------
    def __and__(self, other: "SetOnZN") -> "SetOnZN":
        same_modulus(self, other)
        return SetOnZN(self.N, self.mask & other.mask)

    def __or__(self, other: "SetOnZN") -> "SetOnZN":
        same_modulus(self, other)
        return SetOnZN(self.N, self.mask | other.mask)

    def __sub__(self, other: "SetOnZN") -> "SetOnZN":
        same_modulus(self, other)
        return SetOnZN(self.N, self.mask & ~other.mask)

    def complement(self) -> "SetOnZN":
        return SetOnZN(self.N, ~self.mask)

    def issubset(self, other: "SetOnZN") -> bool:
        same_modulus(self, other)
        return not bool(np.any(self.mask & ~other.mask))

    def translate(self, x: int) -> "SetOnZN":
        """The set A + x."""
        return SetOnZN(self.N, np.roll(self.mask, int(x) % self.N))

    def __neg__(self) -> "SetOnZN":
        return SetOnZN(self.N, np.roll(self.mask[::-1], 1))

    def sumset(self, other: "SetOnZN") -> "SetOnZN":
        """A + B computed on the integer bitsets by rotate-and-or."""
        N = same_modulus(self, other)
        full = (1 << N) - 1
        b = other.bits
        acc = 0
        for a in self:
            acc |= ((b << a) | (b >> (N - a))) & full
        return SetOnZN.from_bits(N, acc)

    def difference_set(self) -> "SetOnZN":
        """T - T."""
        return self.sumset(-self)


def count_convolve(A: SetOnZN, B: SetOnZN) -> np.ndarray:
    """r(w) = #{(a, b) in A x B : a + b = w}, exact."""
    same_modulus(A, B)
    return ntt.cyclic_convolve(A.mask.astype(np.int64), B.mask.astype(np.int64))


class GroupFunction:
    """A complex function on Z/NZ, optionally exact as integers / denominator."""

    __slots__ = ("N", "values", "numerators", "denominator")

    def __init__(self, values, numerators=None, denominator: int = 1):
        values = np.asarray(values, dtype=complex)
        if values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        self.N = _check_modulus(len(values))
        self.values = _frozen(values)
        if numerators is not None:
            numerators = np.asarray(numerators)
            if numerators.shape != values.shape:
                raise ValueError("numerators must match values")
            if int(denominator) <= 0:
                raise ValueError("denominator must be positive")
            self.numerators = _frozen(numerators)
            self.denominator = int(denominator)
        else:
            self.numerators = None
            self.denominator = 1

    @classmethod
    def exact(cls, numerators, denominator: int = 1) -> "GroupFunction":
        numerators = np.asarray(numerators)
        if numerators.dtype != object:
            numerators = numerators.astype(np.int64)
            values = numerators / denominator
        else:
            values = np.array([Fraction(int(v), denominator) for v in numerators], dtype=float)
        return cls(values, numerators, denominator)

    @classmethod
    def indicator(cls, A: SetOnZN) -> "GroupFunction":
        return cls.exact(A.mask.astype(np.int64), 1)

    @classmethod
    def measure(cls, A: SetOnZN) -> "GroupFunction":
        """mu_A = m_G(A)^-1 1_A, so that its L1 norm is 1."""
        if not A:
            raise ValueError("measure of the empty set")
        return cls.exact(A.N * A.mask.astype(np.int64), A.cardinality)

    @classmethod
    def zero(cls, N: int) -> "GroupFunction":
        return cls.exact(np.zeros(N, dtype=np.int64), 1)

    @property
    def is_exact(self) -> bool:
        return self.numerators is not None

    def exact_value(self, x: int) -> Fraction:
        if not self.is_exact:
            raise ValueError("function carries no exact representation")
        return Fraction(int(self.numerators[int(x) % self.N]), self.denominator)

    def check_exactness(self, atol: float = 1e-6) -> bool:
        if not self.is_exact:
            return True
        scaled = self.values * self.denominator
        nums = self.numerators.astype(float)
        return bool(np.all(np.abs(scaled - nums) <= atol * np.maximum(1.0, np.abs(nums))))

    def translate(self, x: int) -> "GroupFunction":
        """tau_x f(u) = f(u + x)."""
        s = -int(x) % self.N
        nums = None if self.numerators is None else np.roll(self.numerators, s)
        return GroupFunction(np.roll(self.values, s), nums, self.denominator)

    def reflect(self) -> "GroupFunction":
        """u -> f(-u)."""
        idx = (-np.arange(self.N)) % self.N
        nums = None if self.numerators is None else self.numerators[idx]
        return GroupFunction(self.values[idx], nums, self.denominator)

    def __sub__(self, other: "GroupFunction") -> "GroupFunction":
        same_modulus(self, other)
        if self.is_exact and other.is_exact:
            den = self.denominator * other.denominator // math.gcd(self.denominator, other.denominator)
            nums = self.numerators * (den // self.denominator) - other.numerators * (den // other.denominator)
            return GroupFunction.exact(nums, den)
        return GroupFunction(self.values - other.values)

    def __add__(self, other: "GroupFunction") -> "GroupFunction":
        same_modulus(self, other)
        if self.is_exact and other.is_exact:
            den = self.denominator * other.denominator // math.gcd(self.denominator, other.denominator)
            nums = self.numerators * (den // self.denominator) + other.numerators * (den // other.denominator)
            return GroupFunction.exact(nums, den)
        return GroupFunction(self.values + other.values)

    def __repr__(self) -> str:
        tag = f", exact/{self.denominator}" if self.is_exact else ""
        return f"GroupFunction(N={self.N}{tag})"


# -- transforms ----------------------------------------------------------

def dft(f: GroupFunction) -> GroupFunction:
    """fhat(k) = (1/N) sum_x f(x) e(-2 pi i k x / N)."""
    return GroupFunction(np.fft.fft(f.values) / f.N)


def idft(fhat: GroupFunction) -> GroupFunction:
    """Inverse of :func:`dft`: f(x) = sum_k fhat(k) e(2 pi i k x / N)."""
    return GroupFunction(np.fft.ifft(fhat.values) * fhat.N)


def convolve(f: GroupFunction, g: GroupFunction) -> GroupFunction:
    """f * g(x) = E_y f(y) g(x - y)."""
    N = same_modulus(f, g)
    if f.is_exact and g.is_exact:
        nums = ntt.cyclic_convolve(f.numerators, g.numerators)
        return GroupFunction.exact(nums, f.denominator * g.denominator * N)
    return GroupFunction(np.fft.ifft(np.fft.fft(f.values) * np.fft.fft(g.values)) / N)


def power_convolve(f: GroupFunction, ell: int) -> GroupFunction:
    """The ell-fold convolution f * ... * f."""
    ell = int(ell)
    if ell < 1:
        raise ValueError("ell must be at least 1")
    if ell == 1:
        return f
    if f.is_exact:
        # binary powering on integer numerators keeps the result exact
        result, base, e = None, f, ell
        while e:
            if e & 1:
                result = base if result is None else convolve(result, base)
            e >>= 1
            if e:
                base = convolve(base, base)
        return result
    F = np.fft.fft(f.values) / f.N
    return GroupFunction(np.fft.ifft(F ** ell) * f.N)


def representation_counts(A: SetOnZN, B: SetOnZN, C: SetOnZN) -> np.ndarray:
    """r(w) = #{(x, y, z) in A x B x C : x + y + z = w}, as exact integers.

    The NTT result is cross-checked against a floating FFT; a gap above 1/4
    anywhere means one of the kernels is wrong and raises KernelError.
    """
    same_modulus(A, B, C)
    ab = count_convolve(A, B)
    r = ntt.cyclic_convolve(ab, C.mask.astype(np.int64))
    approx = np.fft.ifft(np.fft.fft(A.mask) * np.fft.fft(B.mask) * np.fft.fft(C.mask)).real
    gap = float(np.max(np.abs(approx - r.astype(float))))
    if gap > 0.25:
        raise KernelError(f"exact/float representation counts differ by {gap}")
    return r.astype(np.int64)


# -- spectra, norms ----------------------------------------------------

@dataclass(frozen=True)
class Spectrum:
    eta: float
    entries: tuple  # ((k, fhat(k)), ...) sorted by frequency
    zero_function: bool = False

    @property
    def frequencies(self) -> tuple:
        return tuple(k for k, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def lp_norm(f: GroupFunction, p: float = 2.0) -> float:
    """(E |f|^p)^(1/p); ``p = inf`` gives the sup norm."""
    if p < 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    mags = np.abs(f.values)
    top = float(mags.max())
    if math.isinf(p):
        return top
    if top == 0.0:
        return 0.0
    # scaled by the maximum so large p cannot overflow
    return top * float(np.mean((mags / top) ** p)) ** (1.0 / p)


def inner_product(f: GroupFunction, g: GroupFunction) -> complex:
    """<f, g> = E_x f(x) conj(g(x))."""
    same_modulus(f, g)
    return complex(np.mean(f.values * np.conj(g.values)))


def spectrum(f: GroupFunction, eta: float, policy: Policy | None = None) -> Spectrum:
    """Spec_eta(f) = {k : |fhat(k)| >= eta ||f||_1}."""
    pol = resolve(policy)
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    norm1 = lp_norm(f, 1)
    if norm1 == 0.0:
        warnings.warn("spectrum of the zero function is empty", RuntimeWarning, stacklevel=2)
        return Spectrum(eta, (), zero_function=True)
    F = dft(f).values
    keep = np.abs(F) >= eta * norm1 * (1 - pol.rel_tol)
    return Spectrum(eta, tuple((int(k), complex(F[k])) for k in np.flatnonzero(keep)))


def balanced_function(A: SetOnZN, B: SetOnZN) -> GroupFunction:
    """f = 1_A - (|A|/|B|) 1_B for A inside B; sums to zero exactly."""
    same_modulus(A, B)
    if not A.issubset(B):
        raise ValueError("balanced function needs A contained in B")
    if not B:
        raise ValueError("B must be nonempty")
    nums = B.cardinality * A.mask.astype(np.int64) - A.cardinality * B.mask.astype(np.int64)
    return GroupFunction.exact(nums, B.cardinality)


# -- file formats ------------------------------------------------------

def write_set(path, A: SetOnZN) -> None:
    lines = [f"N={A.N}"] + [str(x) for x in A]
    Path(path).write_text("\n".join(lines) + "\n")


def read_set(path) -> SetOnZN:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("N="):
        raise ValueError(f"{path}: first line must be N=<modulus>")
    N = int(lines[0][2:])
    residues = [int(ln) for ln in lines[1:]]
    if residues != sorted(set(residues)):
        raise ValueError(f"{path}: residues must be sorted ascending without duplicates")
    if residues and (residues[0] < 0 or residues[-1] >= N):
        raise ValueError(f"{path}: residue outside [0, {N})")
    return SetOnZN.from_residues(N, residues)


def dump_function(path, f: GroupFunction) -> None:
    rows = ["index,re,im"] + [f"{x},{v.real!r},{v.imag!r}" for x, v in enumerate(f.values)]
    Path(path).write_text("\n".join(rows) + "\n")
