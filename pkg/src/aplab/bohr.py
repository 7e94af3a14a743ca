"""Bohr sets in Z/NZ: construction, dilation, size lemmas, regularity, APs.

Membership of x in B(Gamma, delta) is decided by ``2|sin(pi k x / N)| <= delta``
for every k in Gamma, with ``k x`` reduced mod N in integer arithmetic first.
All dilates of one frequency set share a cached table of the norms
``max_k 2|sin(pi k x / N)|``, so counting a dilate is a binary search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

from .cyclic import GroupFunction, SetOnZN
from .errors import NoRegularDilate
from .ntt import cyclic_convolve
from .policy import Policy, resolve


@lru_cache(maxsize=64)
def _sine_table(N: int) -> np.ndarray:
    return 2.0 * np.sin(np.pi * np.arange(N) / N)


@lru_cache(maxsize=256)
def _norms(N: int, gamma: tuple) -> np.ndarray:
    """x -> max_{k in gamma} |1 - e(kx/N)|, for every residue x."""
    table = _sine_table(N)
    x = np.arange(N, dtype=np.int64)
    out = np.zeros(N)
    for k in gamma:
        np.maximum(out, table[(k * x) % N], out=out)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=256)
def _sorted_norms(N: int, gamma: tuple) -> np.ndarray:
    s = np.sort(_norms(N, gamma))
    s.setflags(write=False)
    return s


@dataclass(frozen=True)
class BohrSet:
    """B(Gamma, delta) = {x : |1 - e(kx/N)| <= delta for all k in Gamma}."""

    N: int
    gamma: tuple
    delta: float
    clamped: bool = False
    guard: float = field(default=1e-12, compare=False, repr=False)

    @property
    def dimension(self) -> int:
        return len(self.gamma)

    @property
    def norms(self) -> np.ndarray:
        return _norms(self.N, self.gamma)

    @cached_property
    def members(self) -> SetOnZN:
        return SetOnZN(self.N, self.norms <= self.delta + self.guard)

    @cached_property
    def boundary_hits(self) -> int:
        return int(np.count_nonzero(np.abs(self.norms - self.delta) <= self.guard))

    @property
    def size(self) -> int:
        return self.members.cardinality

    @property
    def density(self) -> Fraction:
        return Fraction(self.size, self.N)

    @property
    def effective_dimension(self) -> int:
        """Number of nonzero frequencies; the zero character constrains nothing."""
        return sum(1 for k in self.gamma if k != 0)

    def size_at(self, radius: float) -> int:
        """|B(Gamma, radius)| without building the dilate."""
        return int(np.searchsorted(_sorted_norms(self.N, self.gamma), radius + self.guard, side="right"))

    def contains(self, x: int) -> bool:
        return bool(self.norms[int(x) % self.N] <= self.delta + self.guard)

    def is_sub_bohr_of(self, other: "BohrSet") -> bool:
        """B' <= B: frequencies contain B's and radius is no larger."""
        return set(other.gamma) <= set(self.gamma) and self.delta <= other.delta + self.guard

    def describe(self) -> dict:
        return {
            "N": self.N,
            "gamma": list(self.gamma),
            "delta": self.delta,
            "dimension": self.dimension,
            "size": self.size,
            "density": float(self.density),
            "clamped": self.clamped,
            "boundary_hits": self.boundary_hits,
        }


def make_bohr(N: int, gamma, delta: float, policy: Policy | None = None) -> BohrSet:
    pol = resolve(policy)
    N = int(N)
    if N < 2:
        raise ValueError("modulus must be at least 2")
    freqs = tuple(sorted({int(k) % N for k in gamma}))
    if not freqs:
        raise ValueError("empty frequency set; use {0} for the whole group")
    delta = float(delta)
    if delta <= 0:
        raise ValueError(f"radius must be positive, got {delta}")
    clamped = delta > 2.0
    return BohrSet(N, freqs, min(delta, 2.0), clamped, pol.boundary_guard)


def dilate(B: BohrSet, rho: float) -> BohrSet:
    """B_rho = B(Gamma, rho * delta), radius clamped to 2 with a flag."""
    if rho <= 0:
        raise ValueError(f"dilation factor must be positive, got {rho}")
    radius = rho * B.delta
    return BohrSet(B.N, B.gamma, min(radius, 2.0), radius > 2.0, B.guard)


def join(B: BohrSet, extra, delta: float) -> BohrSet:
    """B(Gamma u Lambda, delta') for delta' <= delta."""
    if delta > B.delta + B.guard:
        raise ValueError(f"join radius {delta} exceeds {B.delta}")
    freqs = tuple(sorted(set(B.gamma) | {int(k) % B.N for k in extra}))
    return BohrSet(B.N, freqs, min(float(delta), B.delta), False, B.guard)


# -- size lemmas ---------------------------------------------------------

def check_doubling(B: BohrSet) -> bool:
    """m(B_{1/2}) >= 7^-d m(B), compared on exact counts."""
    return B.size_at(B.delta / 2) * 7 ** B.dimension >= B.size


def check_growth(B: BohrSet, rho: float) -> bool:
    """m(B_rho) >= exp(-6 d log(2/rho)) m(B) for rho in (0, 1]."""
    if not 0 < rho <= 1:
        raise ValueError("growth lemma needs rho in (0, 1]")
    bound = (Fraction(rho) / 2) ** (6 * B.dimension) * B.size
    return B.size_at(rho * B.delta) >= bound


def check_size(B: BohrSet) -> bool:
    """m(B) >= exp(-6 d log(4/delta)) for delta <= 2."""
    bound = (Fraction(B.delta) / 4) ** (6 * B.dimension) * B.N
    return B.size >= bound


# -- arithmetic progressions ----------------------------------------------

@dataclass(frozen=True)
class Progression:
    start: int
    difference: int
    length: int

    def elements(self, N: int) -> np.ndarray:
        return (self.start + self.difference * np.arange(self.length, dtype=np.int64)) % N

    def shifted(self, x: int, N: int) -> "Progression":
        return Progression((self.start + x) % N, self.difference, self.length)


def guaranteed_ap_length(B: BohrSet) -> float:
    """(1/2 pi) delta N^(1/d)."""
    return B.delta * B.N ** (1.0 / B.dimension) / (2 * math.pi)


def ap_in_bohr(B: BohrSet) -> Progression:
    """Symmetric progression {-Lt, ..., Lt} inside B for the best step t.

    Since |1 - e(j theta)| <= j |1 - e(theta)|, a step t with norm m(t) is
    certified to give length min(order(t), 2 floor(delta / m(t)) + 1). The step
    maximising that certified length is taken (smallest t on ties) and L is
    then extended as far as membership allows. When every multiple of t lies
    in B the whole cyclic subgroup is returned, starting at 0.
    """
    if B.delta >= math.pi:
        raise ValueError("radius must be below pi")
    N = B.N
    mask = B.members.mask
    if mask.all():
        return Progression(0, 1, N)
    steps = np.arange(1, N, dtype=np.int64)
    orders = N // np.gcd(steps, N)
    m = B.norms[1:]
    with np.errstate(divide="ignore"):
        reach = np.where(m > 0, np.floor((B.delta + B.guard) / np.where(m > 0, m, 1.0)), np.inf)
    certified = np.minimum(orders.astype(float), 2 * reach + 1)
    t = int(np.argmax(certified)) + 1
    order = N // math.gcd(t, N)
    multiples = (t * np.arange(1, order, dtype=np.int64)) % N
    outside = np.flatnonzero(~mask[multiples])
    if outside.size == 0:
        return Progression(0, t, order)
    L = int(outside[0])
    ap = Progression((-L * t) % N, t, 2 * L + 1)
    assert mask[ap.elements(N)].all(), "progression left the Bohr set"
    return ap


# -- regularity ------------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    C0: float
    rhos: tuple
    ratios_up: tuple
    ratios_down: tuple
    passed: bool


def probe_grid(B: BohrSet, policy: Policy | None = None) -> np.ndarray:
    """rho_max * 2^(-j/3), j = 0..n-1, with rho_max = 1/(C0 d)."""
    pol = resolve(policy)
    rho_max = 1.0 / (pol.C0 * B.dimension)
    return rho_max * 2.0 ** (-np.arange(pol.probe_points) / 3.0)


def check_regularity(B: BohrSet, policy: Policy | None = None) -> RegularityReport:
    """|B_{1+rho}| / |B| within 1 +- C0 |rho| d on the probe grid, both signs."""
    pol = resolve(policy)
    size = B.size
    d = B.dimension
    rhos = probe_grid(B, pol)
    ups, downs, ok = [], [], True
    for rho in rhos:
        up = B.size_at((1 + rho) * B.delta)
        down = B.size_at((1 - rho) * B.delta)
        slack = pol.C0 * rho * d * size
        ok &= (up - size) <= slack and (size - down) <= slack
        ups.append(up / size)
        downs.append(down / size)
    return RegularityReport(pol.C0, tuple(rhos), tuple(ups), tuple(downs), bool(ok))


def kappa_grid(policy: Policy | None = None) -> np.ndarray:
    pol = resolve(policy)
    return 0.5 * 2.0 ** (np.arange(pol.kappa_points) / pol.kappa_points)


def find_regular_dilate(B: BohrSet, policy: Policy | None = None) -> tuple[float, BohrSet]:
    """First kappa on the geometric grid in [1/2, 1) with B_kappa regular."""
    pol = resolve(policy)
    for kappa in kappa_grid(pol):
        Bk = dilate(B, float(kappa))
        if check_regularity(Bk, pol).passed:
            return float(kappa), Bk
    raise NoRegularDilate(f"no regular dilate of B(N={B.N}, d={B.dimension}, delta={B.delta}) for C0={pol.C0}")


def averaging_defect(B: BohrSet, x: int | None = None, lam=None, rho: float | None = None,
                     policy: Policy | None = None) -> Fraction | float:
    """||mu_{x+B} - mu_B||_1, or ||mu_B * lam - mu_B||_1 when ``lam`` is given.

    ``lam`` may be a set X (meaning mu_X) or a GroupFunction; exact inputs give
    an exact Fraction. With ``rho`` the lemma's hypotheses are checked.
    """
    pol = resolve(policy)
    if (x is None) == (lam is None):
        raise ValueError("give exactly one of x or lam")
    if rho is not None and rho > 1.0 / (pol.C0 * B.dimension) * (1 + pol.rel_tol):
        raise ValueError(f"rho={rho} exceeds 1/(C0 d)")
    inner = dilate(B, rho).members if rho is not None else None
    size = B.size
    if x is not None:
        if inner is not None and x not in inner:
            raise ValueError(f"{x} is not in B_rho")
        moved = B.members.translate(int(x))
        return Fraction(np.count_nonzero(moved.mask ^ B.members.mask), size)
    if isinstance(lam, SetOnZN):
        lam = GroupFunction.measure(lam)
    if inner is not None:
        support = np.abs(lam.values) > 0
        if np.any(support & ~inner.mask):
            raise ValueError("lambda is not supported in B_rho")
    N = B.N
    ind = B.members.mask.astype(np.int64)
    if lam.is_exact:
        conv = cyclic_convolve(ind, lam.numerators)
        total = sum(abs(int(v)) for v in (conv - N * lam.denominator * ind))
        return Fraction(total, N * size * lam.denominator)
    conv = np.fft.ifft(np.fft.fft(ind) * np.fft.fft(lam.values)) / N
    return float(np.mean(np.abs(conv * N / size - N * ind / size)))


# -- descriptor files -------------------------------------------------------

def write_descriptor(path, B: BohrSet) -> None:
    Path(path).write_text(f"N={B.N}\ndelta={B.delta!r}\ngamma={','.join(map(str, B.gamma))}\n")


def read_descriptor(path, policy: Policy | None = None) -> BohrSet:
    fields_ = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            key, _, value = line.partition("=")
            fields_[key.strip()] = value.strip()
    missing = {"N", "delta", "gamma"} - fields_.keys()
    if missing:
        raise ValueError(f"{path}: missing keys {sorted(missing)}")
    gamma = [int(g) for g in fields_["gamma"].split(",") if g.strip()]
    return make_bohr(int(fields_["N"]), gamma, float(fields_["delta"]), policy)
