"""Density-increment toolbox: spectrum annihilation, the L^2 increment,
Katz-Koester transforms for two and three sets, and the scaling step.

Every constructive step verifies its conclusion on the actual sets. A step
whose hypothesis fails raises HypothesisNotMet; a step that ran but whose
measured conclusion falls short raises MeasuredFailure with a report.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bohr import BohrSet, dilate, find_regular_dilate, join
from .cyclic import GroupFunction, SetOnZN, balanced_function, count_convolve, dft, representation_counts, spectrum
from .errors import HypothesisNotMet, MeasuredFailure
from .policy import Policy, resolve


@dataclass
class IncrementOutcome:
    """Result of an increment-or-structure step.

    ``kind`` is "increment" (a Bohr set on which A_index is denser) or
    "structure" (a thick L and small S-sets with a pointwise domination
    constant K).
    """

    kind: str
    index: int = 0
    bohr: BohrSet | None = None
    density: Fraction | None = None
    translate: int | None = None
    L: SetOnZN | None = None
    S: tuple = ()
    lam: Fraction | None = None
    sigmas: tuple = ()
    K: Fraction | None = None
    iterations: int = 0
    report: dict = field(default_factory=dict)

    def to_json(self) -> str:
        rec = {"kind": self.kind, "iterations": self.iterations}
        if self.kind == "increment":
            rec.update(index=self.index, density=str(self.density), translate=self.translate,
                       bohr=self.bohr.describe() if self.bohr else None)
        else:
            rec.update(lam=str(self.lam), sigmas=[str(s) for s in self.sigmas], K=str(self.K),
                       L_size=len(self.L), S_sizes=[len(s) for s in self.S])
        rec["report"] = {k: _jsonable(v) for k, v in self.report.items()}
        return json.dumps(rec, sort_keys=True)


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def relative_density(A: SetOnZN, B: BohrSet) -> Fraction:
    return Fraction(len(A), B.size)


# -- spectrum annihilation ---------------------------------------------

def _cover(freqs, N: int, max_len: int):
    """Greedy generating set: a frequency is added when no word of at most
    ``max_len`` signed generators reaches it. Returns (generators, word length
    of each input frequency)."""
    dist = np.full(N, max_len + 1, dtype=np.int64)
    dist[0] = 0
    gens = []
    for k in freqs:
        if dist[k] <= max_len:
            continue
        gens.append(k)
        new = dist.copy()
        for j in range(1, max_len + 1):
            cost = dist + j
            np.minimum(new, np.roll(cost, j * k % N), out=new)
            np.minimum(new, np.roll(cost, -j * k % N), out=new)
        dist = np.minimum(new, max_len + 1)
    return gens, [int(dist[k]) for k in freqs]


def spectrum_annihilate(B: BohrSet, X: SetOnZN, eps: float, policy: Policy | None = None) -> BohrSet:
    """Regular B' <= B with |1 - e(k x / N)| <= 1/2 for all k in Spec_eps(mu_X), x in B'.

    Spec_eps(mu_X) is covered greedily (largest coefficient first) by
    generators whose signed words of length <= W reach every frequency; the
    radius min(delta, 1/(4W)) on the generators then bounds every spectral
    character by 1/4 on the joined Bohr set, and a regular dilate is taken.
    """
    pol = resolve(policy)
    if not X:
        raise ValueError("X must be nonempty")
    if not X.issubset(B.members):
        raise ValueError("X must lie inside B")
    N = B.N
    spec = spectrum(GroupFunction.measure(X), eps, pol)
    order = sorted(spec.entries, key=lambda e: (-abs(e[1]), e[0]))
    freqs = [k for k, _ in order]
    gens, lengths = _cover(freqs, N, pol.word_length)
    W = max(lengths, default=0)
    radius = B.delta if W == 0 else min(B.delta, 1.0 / (4 * W))
    _, Bp = find_regular_dilate(join(B, gens, radius), pol)
    members = Bp.members.members
    table = 2.0 * np.abs(np.sin(np.pi * np.arange(N) / N))
    for k in freqs:
        worst = table[(k * members) % N].max() if members.size else 0.0
        assert worst <= 0.5 + pol.boundary_guard, f"frequency {k} not annihilated ({worst})"
    return Bp


# -- L^2 density increment ------------------------------------------------

def best_translate(A: SetOnZN, B: BohrSet) -> tuple[int, Fraction]:
    """x maximising 1_A * mu_B(x) = |A n (x + B)| / |B|, smallest on ties."""
    counts = count_convolve(A, B.members)
    x = int(np.argmax(counts))
    return x, Fraction(int(counts[x]), B.size)


def l2_density_increment(B: BohrSet, Bdot: BohrSet, A: SetOnZN, X: SetOnZN, eta: float, nu: float,
                         index: int = 0, policy: Policy | None = None) -> IncrementOutcome:
    """Turn a large spectral mass of f_A on Spec_eta(mu_X) into a density increment."""
    pol = resolve(policy)
    c = Fraction(pol.c_impl)
    if not nu > 0:
        raise ValueError("nu must be positive so that 1 + c nu > 1")
    if not A.issubset(B.members):
        raise ValueError("A must lie inside B")
    if not X or not X.issubset(Bdot.members):
        raise ValueError("X must be a nonempty subset of the inner Bohr set")
    if not Bdot.is_sub_bohr_of(B):
        raise ValueError("inner Bohr set is not a sub-Bohr set of B")
    alpha = relative_density(A, B)
    rho = Bdot.delta / B.delta
    if rho > pol.c_impl * nu * float(alpha) / B.dimension * (1 + pol.rel_tol):
        raise ValueError(f"rho={rho:.3g} exceeds c nu alpha / d")
    fA = dft(balanced_function(A, B.members)).values
    freqs = list(spectrum(GroupFunction.measure(X), eta, pol).frequencies)
    mass = float(np.sum(np.abs(fA[freqs]) ** 2))
    needed = nu * float(alpha) ** 2 * float(B.density)
    report = {"alpha": alpha, "spectral_mass": mass, "needed": needed, "spectrum_size": len(freqs)}
    if mass < needed * (1 - pol.rel_tol):
        raise HypothesisNotMet("spectral mass below nu alpha^2 m(B)", report)
    Bb = spectrum_annihilate(Bdot, X, eta, pol)
    x, sup = best_translate(A, Bb)
    report.update(sup=sup, dimension=Bb.dimension, delta=Bb.delta)
    if sup < (1 + c * Fraction(nu)) * alpha or not sup > alpha:
        raise MeasuredFailure(f"measured sup {float(sup):.4g} below (1 + c nu) alpha", report)
    return IncrementOutcome("increment", index=index, bohr=Bb, density=sup, translate=x, report=report)


# -- Katz-Koester transforms ------------------------------------------------

def domination_constant(top: np.ndarray, bottom: np.ndarray) -> Fraction:
    """Smallest K with top <= K bottom pointwise; raises if supports disagree."""
    top = np.asarray(top, dtype=np.int64)
    bottom = np.asarray(bottom, dtype=np.int64)
    if np.any((top > 0) & (bottom == 0)):
        raise MeasuredFailure("domination fails: support not contained")
    pos = top > 0
    if not pos.any():
        return Fraction(0)
    ratios = top[pos].astype(float) / bottom[pos]
    i = int(np.argmax(ratios))
    K = Fraction(int(top[pos][i]), int(bottom[pos][i]))
    # the float argmax is confirmed exactly
    assert np.all(top[pos] * K.denominator <= bottom[pos] * K.numerator)
    return K


def log_sigma_floor(alpha: float, alpha_prime: float, policy: Policy | None = None) -> float:
    """log of e^(-c alpha^-1 log(2/alpha')); kept as a log since it underflows for sparse sets."""
    pol = resolve(policy)
    return -pol.sigma_floor_c / alpha * math.log(2.0 / alpha_prime)


def _kk_guard(rho, alpha, d, name, pol):
    if rho > pol.c_impl * alpha / d * (1 + pol.rel_tol):
        raise ValueError(f"{name}={rho:.3g} exceeds c alpha / d = {pol.c_impl * alpha / d:.3g}")


def _kk_step(L: SetOnZN, S: SetOnZN, B: BohrSet, Bpp: BohrSet):
    """Best x in B'' for the update L <- (L u (S + x)) n B, S <- S n (L - x).

    Among translates that enlarge L, x maximises |S n (L - x)| (smallest
    residue on ties). Returns None if no translate enlarges L.
    """
    keep = count_convolve(-S, L)
    grow = count_convolve(-S, B.members - L)
    ok = Bpp.members.mask & (grow > 0)
    if not ok.any():
        return None
    score = np.where(ok, keep, -1)
    x = int(np.argmax(score))
    return x, int(keep[x])


def _kk_increment(B, Bpp, A, S, index, pol, report):
    """Increment branch: the small set S serves as the almost-period set."""
    try:
        out = l2_density_increment(B, Bpp, A, S, 0.5, pol.nu, index, pol)
    except (HypothesisNotMet, MeasuredFailure) as exc:
        exc.report.update(report)
        raise
    out.report.update(report)
    return out


def katz_koester_2(B: BohrSet, Bp: BohrSet, Bpp: BohrSet, A: SetOnZN, Ap: SetOnZN, rho: float,
                   rho_p: float, policy: Policy | None = None) -> IncrementOutcome:
    """Either an increment for A, or (L, S) with 1_L * 1_S <= K 1_A * 1_A' exactly.

    Starting from L = A and S = A' n B'', the update
    L <- (L u (S + x)) n B, S <- S n (L - x) keeps L + S inside A + A'
    while L grows; K is measured exactly after every iteration.
    """
    pol = resolve(policy)
    alpha = float(relative_density(A, B))
    alpha_p = float(relative_density(Ap, Bp))
    _kk_guard(rho, alpha, B.dimension, "rho", pol)
    _kk_guard(rho_p, alpha_p, Bp.dimension, "rho'", pol)
    if not A.issubset(B.members) or not Ap.issubset(Bp.members):
        raise ValueError("A must lie in B and A' in B'")
    base = count_convolve(A, Ap)
    log_floor = log_sigma_floor(alpha, alpha_p, pol)
    floor = math.exp(log_floor)
    cap = math.ceil(4 * (math.log(2.0) - log_floor))
    L, S = A, Ap & Bpp.members
    lam_target = Fraction(pol.lambda_min)
    lams, Ks = [], []
    for it in range(cap + 1):
        K = domination_constant(count_convolve(L, S), base)
        lam = relative_density(L, B)
        lams.append(lam)
        Ks.append(K)
        if lam >= lam_target:
            return IncrementOutcome("structure", L=L, S=(S,), lam=lam, sigmas=(relative_density(S, Bpp),),
                                    K=K, iterations=it,
                                    report={"log_floor": log_floor, "lams": tuple(lams), "Ks": tuple(Ks)})
        step = _kk_step(L, S, B, Bpp)
        report = {"iteration": it, "lam": lam, "log_floor": log_floor,
                  "lams": tuple(lams), "Ks": tuple(Ks)}
        if step is None or step[1] < floor * Bpp.size or step[1] == 0:
            return _kk_increment(B, Bpp, A, S if S else SetOnZN.from_residues(B.N, [0]), 1, pol, report)
        x, _ = step
        L, S = (L | S.translate(x)) & B.members, S & L.translate(-x)
    raise MeasuredFailure(f"Katz-Koester loop exceeded {cap} iterations", {"lams": tuple(lams)})


def katz_koester_3(B: BohrSet, Bp: BohrSet, Bpp: BohrSet, A: SetOnZN, Ap1: SetOnZN, Ap2: SetOnZN,
                   rho: float, rho_p: float, policy: Policy | None = None) -> IncrementOutcome:
    """Three-set version: (L, S1, S2) with 1_L * 1_S1 * 1_S2 <= K 1_A * 1_A'1 * 1_A'2.

    S1 and S2 take turns as the partner of L in the two-set update.
    """
    pol = resolve(policy)
    alpha = float(relative_density(A, B))
    a1 = float(relative_density(Ap1, Bp))
    a2 = float(relative_density(Ap2, Bp))
    gamma = alpha * a1 * a2
    _kk_guard(rho, alpha, B.dimension, "rho", pol)
    _kk_guard(rho_p, gamma, Bp.dimension, "rho'", pol)
    if not A.issubset(B.members) or not Ap1.issubset(Bp.members) or not Ap2.issubset(Bp.members):
        raise ValueError("A must lie in B and A'_1, A'_2 in B'")
    base = representation_counts(A, Ap1, Ap2)
    log_floor = -pol.sigma_floor_c / math.sqrt(alpha) * math.log(2.0 / gamma)
    floor = math.exp(log_floor)
    cap = 2 * math.ceil(4 * (math.log(2.0) - log_floor))
    L, S = A, [Ap1 & Bpp.members, Ap2 & Bpp.members]
    lams, Ks = [], []
    stuck = 0
    for it in range(cap + 1):
        K = domination_constant(representation_counts(L, S[0], S[1]), base)
        lam = relative_density(L, B)
        lams.append(lam)
        Ks.append(K)
        if lam >= Fraction(pol.lambda_min):
            sig = tuple(relative_density(s, Bpp) for s in S)
            return IncrementOutcome("structure", L=L, S=tuple(S), lam=lam, sigmas=sig, K=K, iterations=it,
                                    report={"log_floor": log_floor, "lams": tuple(lams), "Ks": tuple(Ks)})
        j = it % 2
        step = _kk_step(L, S[j], B, Bpp)
        if step is None or step[1] < floor * Bpp.size or step[1] == 0:
            stuck += 1
            if stuck < 2:
                continue
            report = {"iteration": it, "lam": lam, "log_floor": log_floor,
                      "lams": tuple(lams), "Ks": tuple(Ks)}
            X = S[j] if S[j] else SetOnZN.from_residues(B.N, [0])
            return _kk_increment(B, Bpp, A, X, 1, pol, report)
        stuck = 0
        x, _ = step
        L, S[j] = (L | S[j].translate(x)) & B.members, S[j] & L.translate(-x)
    raise MeasuredFailure(f"three-set Katz-Koester loop exceeded {cap} iterations", {"lams": tuple(lams)})


# -- scaling ---------------------------------------------------------------

def scaling_translate(A: SetOnZN, B: BohrSet, Bp: BohrSet, rho: float | None = None,
                      regular: bool = True, policy: Policy | None = None):
    """(x, (A - x) n B', alpha') with alpha' = max_x 1_A * mu_B'(x) exactly.

    For regular B and B' <= B_rho, alpha' >= alpha - 2 C0 rho d is checked.
    """
    pol = resolve(policy)
    if not A.issubset(B.members):
        raise ValueError("A must lie inside B")
    if rho is None:
        rho = Bp.delta / B.delta
    if rho > 1.0 / B.dimension * (1 + pol.rel_tol):
        raise ValueError(f"rho={rho:.3g} exceeds 1/d")
    x, alpha_p = best_translate(A, Bp)
    Ap = A.translate(-x) & Bp.members
    assert Fraction(len(Ap), Bp.size) == alpha_p
    alpha = relative_density(A, B)
    if regular:
        bound = alpha - Fraction(2 * pol.C0 * rho * B.dimension)
        if alpha_p < bound:
            raise MeasuredFailure("scaling bound fails on a regular Bohr set",
                                  {"alpha": alpha, "alpha_prime": alpha_p, "bound": bound})
    return x, Ap, alpha_p


def mean_over(A: SetOnZN, B: BohrSet, Bp: BohrSet) -> Fraction:
    """E_{x in B} 1_A * mu_B'(x), exactly."""
    counts = count_convolve(A, Bp.members)
    return Fraction(int(counts[B.members.mask].sum()), B.size * Bp.size)
