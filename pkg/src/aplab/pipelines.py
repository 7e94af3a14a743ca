"""End-to-end searches for long progressions in A1 + A2 + A3 with counting
guarantees, plus the brute-force oracle that verifies every answer.

Three constructive routes are implemented:

* ``cls_pipeline``: almost periods of 1_A1 * mu_A2 give a Bohr set B and a
  shift z with 1_A1 * 1_A2 * 1_A3 >= alpha~/2 on z + B.
* ``increment_pipeline``: density increment on a descending chain of Bohr
  sets until some B' sits inside the level set {r > omega b^2 N^2}.
* ``levelset_pipeline``: the same iteration stopped as soon as the level set
  is thick in B', followed by a progression search inside the thick set.

Whatever route is taken, the returned progression is checked element by
element against exact representation counts. If a constructive step fails
the pipeline falls back to the oracle and says so in ``provenance``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .almost_period import almost_period_set, cls_bohr_almost_periods
from .bohr import BohrSet, Progression, ap_in_bohr, dilate, find_regular_dilate, guaranteed_ap_length, make_bohr
from .cyclic import GroupFunction, SetOnZN, representation_counts, same_modulus
from .errors import AplabError, HypothesisNotMet, MeasuredFailure, PipelineFailure
from .policy import Policy, resolve
from .transforms import best_translate, katz_koester_2, katz_koester_3, l2_density_increment, scaling_translate


@dataclass(frozen=True)
class VerifiedAP:
    start: int
    difference: int
    length: int
    K: int
    counts: tuple

    @property
    def progression(self) -> Progression:
        return Progression(self.start, self.difference, self.length)

    @property
    def min_count(self) -> int | None:
        return min(self.counts) if self.counts else None


@dataclass
class IterationState:
    step: int
    bohr: BohrSet
    sets: tuple
    translates: tuple
    densities: tuple
    rho: float | None = None
    omega: float | None = None
    v: float | None = None
    outcome: str = ""

    def to_json(self) -> str:
        return json.dumps({
            "step": self.step,
            "bohr": {"N": self.bohr.N, "gamma": list(self.bohr.gamma), "delta": self.bohr.delta,
                     "size": self.bohr.size},
            "sizes": [len(s) for s in self.sets],
            "translates": list(self.translates),
            "densities": [str(a) for a in self.densities],
            "rho": self.rho, "omega": self.omega, "v": self.v, "outcome": self.outcome,
        }, sort_keys=True)


@dataclass
class PipelineResult:
    pipeline: str
    ap: VerifiedAP
    provenance: str
    branch: str
    z: int | None = None
    bohr: BohrSet | None = None
    trace: list = field(default_factory=list)
    failure: str | None = None
    steps: int = 0
    permutation: tuple = (0, 1, 2)
    checks: dict = field(default_factory=dict)

    @property
    def guaranteed_length(self) -> float | None:
        return guaranteed_ap_length(self.bohr) if self.bohr is not None else None

    def trace_lines(self) -> list[str]:
        lines = [s.to_json() for s in self.trace]
        lines.append(json.dumps({
            "pipeline": self.pipeline, "provenance": self.provenance, "branch": self.branch,
            "failure": self.failure, "steps": self.steps, "z": self.z,
            "ap": {"start": self.ap.start, "difference": self.ap.difference, "length": self.ap.length,
                   "K": self.ap.K, "min_count": self.ap.min_count},
            "checks": {k: (str(v) if isinstance(v, Fraction) else v) for k, v in self.checks.items()},
        }, sort_keys=True))
        return lines


# -- oracle -----------------------------------------------------------------

def _longest_runs(rows: np.ndarray):
    """Longest run of True in each row of a 2-D boolean array: (lengths, starts)."""
    g, n = rows.shape
    padded = np.zeros((g, n + 1), dtype=bool)
    padded[:, :n] = rows
    flat = padded.ravel()
    falses = np.flatnonzero(~flat)
    prev = np.concatenate(([-1], falses[:-1]))
    runs = falses - prev - 1
    row_of = falses // (n + 1)
    lengths = np.zeros(g, dtype=np.int64)
    starts = np.zeros(g, dtype=np.int64)
    order = np.lexsort((-runs, row_of))
    first = np.ones(len(order), dtype=bool)
    first[1:] = row_of[order][1:] != row_of[order][:-1]
    best = order[first]
    lengths[row_of[best]] = runs[best]
    starts[row_of[best]] = (prev[best] + 1) - row_of[best] * (n + 1)
    return lengths, starts


def longest_ap(mask) -> Progression:
    """A longest progression of distinct residues inside ``mask``.

    Differences t <= N/2 are scanned (t and -t give the same sets). For each t
    the cosets of <t> are walked as cycles and the longest cyclic run is kept;
    ties go to the smallest difference, then the smallest start.
    """
    mask = np.asarray(mask, dtype=bool)
    N = len(mask)
    total = int(mask.sum())
    if total == 0:
        return Progression(0, 1, 0)
    if total == N:
        return Progression(0, 1, N)
    best = Progression(int(np.flatnonzero(mask)[0]), 1, 1)
    for t in range(1, N // 2 + 1):
        g = math.gcd(t, N)
        n = N // g
        if n <= best.length:
            continue
        walk = (np.arange(g)[:, None] + t * np.arange(n)[None, :]) % N
        rows = mask[walk]
        full = rows.all(axis=1)
        if full.any():
            r = int(np.flatnonzero(full)[0])
            cand = Progression(r, t, n)
        else:
            doubled = np.concatenate((rows, rows), axis=1)
            lengths, starts = _longest_runs(doubled)
            lengths = np.minimum(lengths, n)
            r = int(np.argmax(lengths))
            cand = Progression(int(walk[r, starts[r] % n]), t, int(lengths[r]))
        if cand.length > best.length:
            best = cand
            if best.length == total:
                break
    return best


def verify_ap(r: np.ndarray, prog: Progression, K: int) -> VerifiedAP:
    """Attach exact counts to ``prog``; every element must have r >= K."""
    N = len(r)
    elems = prog.elements(N)
    if len(set(elems.tolist())) != prog.length:
        raise MeasuredFailure("progression repeats a residue", {"progression": prog})
    counts = tuple(int(c) for c in r[elems])
    if any(c < K for c in counts):
        raise MeasuredFailure(f"progression element below K={K}", {"min_count": min(counts)})
    return VerifiedAP(prog.start % N, prog.difference % N, prog.length, int(K), counts)


def oracle_longest_ap(A: SetOnZN, B: SetOnZN, C: SetOnZN, K: int) -> VerifiedAP:
    """Longest progression inside {w : r(w) >= K}, by exhaustive search."""
    same_modulus(A, B, C)
    if not A or not B or not C:
        raise ValueError("sets must be nonempty")
    r = representation_counts(A, B, C)
    return verify_ap(r, longest_ap(r >= K), K)


# -- helpers ------------------------------------------------------------------

def _sort_by_density(sets):
    perm = tuple(sorted(range(3), key=lambda j: (-len(sets[j]), j)))
    return perm, tuple(sets[j] for j in perm)


def _rel(A: SetOnZN, B: BohrSet) -> Fraction:
    return Fraction(len(A), B.size)


def level_threshold(omega: float, B: BohrSet) -> int:
    """Smallest integer count exceeding omega b^2 N^2."""
    thr = Fraction(omega) * B.density ** 2 * B.N ** 2
    return math.floor(thr) + 1


def replay(originals, trace) -> list:
    """Recompute the translated sets of every state from the translate log."""
    cur = [A & trace[0].bohr.members for A in originals]
    out = [tuple(cur)]
    for state in trace[1:]:
        cur = [(A.translate(-x)) & state.bohr.members for A, x in zip(cur, state.translates)]
        out.append(tuple(cur))
    return out


def _retranslate(cur, Bnew: BohrSet):
    xs, new = [], []
    for A in cur:
        x, _ = best_translate(A, Bnew)
        xs.append(x)
        new.append(A.translate(-x) & Bnew.members)
    return tuple(xs), tuple(new)


def _fallback(name, sets, K, exc, trace, steps, perm, strict, checks=None):
    if strict:
        raise PipelineFailure(f"{name} pipeline failed: {exc}", trace, exc)
    ap = oracle_longest_ap(*sets, K)
    return PipelineResult(name, ap, "oracle-only", "fallback", trace=trace,
                          failure=f"{type(exc).__name__}: {exc}", steps=steps, permutation=perm,
                          checks=checks or {})


# -- CLS route ------------------------------------------------------------------

def cls_pipeline(A1: SetOnZN, A2: SetOnZN, A3: SetOnZN, policy: Policy | None = None,
                 strict: bool = False) -> PipelineResult:
    pol = resolve(policy)
    N = same_modulus(A1, A2, A3)
    perm, (S1, S2, S3) = _sort_by_density((A1, A2, A3))
    if not S3:
        raise ValueError("sets must be nonempty")
    a1, a3 = float(S1.density), float(S3.density)
    product = len(S1) * len(S2) * len(S3)
    K = -(-product // (2 * N))
    r = representation_counts(S1, S2, S3)
    z = int(np.argmax(r))
    p = 2 + math.ceil(math.log(1 / a3))
    theta = a1 / (2 * math.e)
    checks = {"cls_check": False, "attempts": 0}
    last = None
    for attempt in range(pol.cls_retries + 1):
        checks["attempts"] = attempt + 1
        try:
            report = {}
            B = cls_bohr_almost_periods(S1, S2, p, theta, pol, report)
        except MeasuredFailure as exc:
            last = exc
            theta /= 2
            continue
        ys = (z + B.members.members) % N
        worst = int(r[ys].min())
        if 2 * worst * N >= product:
            checks.update(cls_check=True, theta=theta, p=p, halvings=report["halvings"],
                          dimension=B.dimension, min_on_translate=worst)
            try:
                ap = verify_ap(r, ap_in_bohr(B).shifted(z, N), K)
            except MeasuredFailure as exc:
                return _fallback("cls", (S1, S2, S3), K, exc, [], 1, perm, strict, checks)
            return PipelineResult("cls", ap, "constructive", "bohr-translate", z=z, bohr=B, steps=1,
                                  permutation=perm, checks=checks)
        last = MeasuredFailure(f"triple convolution below alpha~/2 on z+B (min count {worst})")
        theta /= 2
    return _fallback("cls", (S1, S2, S3), K, last, [], pol.cls_retries + 1, perm, strict, checks)


# -- shared structure step -------------------------------------------------------

def _smoothing_increment(B, Bpp, L, S, lam, A2, pol):
    """Croot-Sisask smoothing of 1_L * mu_S, then the L^2 increment on A2."""
    d = Bpp.dimension
    _, Bppp = find_regular_dilate(dilate(Bpp, pol.c_impl / d), pol)
    a2 = float(_rel(A2, B))
    p = 2 + math.log(1 / a2)
    theta = float(lam) ** (1 - 1 / p) / (4 * math.e)
    ell = max(1, math.ceil(pol.ell_c * math.log(2 / a2)))
    X = almost_period_set(GroupFunction.indicator(L), S, Bppp.members, p, theta / (2 * ell), pol)
    X = X & Bppp.members
    return l2_density_increment(B, Bppp, A2, X, 0.5, pol.nu, index=2, policy=pol)


def _check_growth(old, new, pol, levelset):
    c = Fraction(pol.c_impl)
    if new[0] * new[1] < (1 + c / 4) * old[0] * old[1]:
        raise MeasuredFailure("alpha_1 alpha_2 grew by less than 1 + c/4",
                              {"old": old, "new": new})
    if levelset and new[0] * new[1] * new[2] < (1 + c / 2) * old[0] * old[1] * old[2]:
        raise MeasuredFailure("alpha~ grew by less than 1 + c/2", {"old": old, "new": new})


# -- density increment route ------------------------------------------------------

def increment_pipeline(A1: SetOnZN, A2: SetOnZN, A3: SetOnZN, omega: float = 0.0,
                       policy: Policy | None = None, strict: bool = False) -> PipelineResult:
    pol = resolve(policy)
    N = same_modulus(A1, A2, A3)
    perm, sets = _sort_by_density((A1, A2, A3))
    if not sets[2]:
        raise ValueError("sets must be nonempty")
    c = pol.c_impl
    B = make_bohr(N, [0], 2.0, pol)
    cur = sets
    dens = tuple(_rel(A, B) for A in cur)
    at0 = float(dens[0] * dens[1] * dens[2])
    cap = math.ceil(math.log(1 / at0) / math.log(1 + c)) + 4
    shifts = [0, 0, 0]
    trace = [IterationState(1, B, cur, (0, 0, 0), dens, omega=omega, outcome="start")]
    K0 = level_threshold(omega, B)
    try:
        for i in range(1, cap + 1):
            d = B.dimension
            at = float(dens[0] * dens[1] * dens[2])
            rho = c * at / (2 * i * i * d)
            kappa, Bp = find_regular_dilate(dilate(B, rho), pol)
            rho_eff = kappa * rho
            x3, A3p, a3p = scaling_translate(cur[2], B, Bp, rho_eff, policy=pol)
            r = representation_counts(*cur)
            K = level_threshold(omega, B)
            ys = Bp.members.members
            low = ys[r[(x3 + ys) % N] < K]
            if low.size == 0:
                trace[-1].outcome = "terminate"
                r0 = representation_counts(*sets)
                prog = ap_in_bohr(Bp).shifted(x3 + sum(shifts), N)
                ap = verify_ap(r0, prog, K)
                return PipelineResult("increment", ap, "constructive", "terminate", z=(x3 + sum(shifts)) % N,
                                      bohr=Bp, trace=trace, steps=i, permutation=perm,
                                      checks={"rho": rho_eff, "K": K})
            _, Bpp = find_regular_dilate(dilate(Bp, c * float(a3p) / d), pol)
            rho_p = Bpp.delta / Bp.delta
            out = katz_koester_2(B, Bp, Bpp, cur[0], A3p, rho_eff, rho_p, pol)
            if out.kind == "structure":
                out = _smoothing_increment(B, Bpp, out.L, out.S[0], out.lam, cur[1], pol)
            Bnew = out.bohr
            xs, new = _retranslate(cur, Bnew)
            new_dens = tuple(_rel(A, Bnew) for A in new)
            _check_growth(dens, new_dens, pol, levelset=False)
            trace[-1].outcome = f"increment:{out.index}"
            shifts = [s + x for s, x in zip(shifts, xs)]
            B, cur, dens = Bnew, new, new_dens
            trace.append(IterationState(i + 1, B, cur, xs, dens, rho=rho_eff, omega=omega))
        raise MeasuredFailure(f"iteration cap {cap} exceeded")
    except (AplabError, ValueError) as exc:
        return _fallback("increment", sets, K0, exc, trace, len(trace), perm, strict)


# -- level-set route -----------------------------------------------------------------

def levelset_parameters(N: int, alpha1: float, alpha_t: float, eps: float, policy: Policy | None = None):
    """(omega, v) with omega = N^(-c eps / log(2/alpha~)) and
    log(2/v) = c' eps^(1/2) alpha_1^(1/4) (log N)^(1/2) (log 2/alpha~)^(-7/2), v <= v_max."""
    pol = resolve(policy)
    lg = math.log(2 / alpha_t)
    omega = N ** (-pol.omega_c * eps / lg)
    log2v = pol.v_c * math.sqrt(eps) * alpha1 ** 0.25 * math.sqrt(math.log(N)) * lg ** -3.5
    v = min(pol.v_max, 2 * math.exp(-log2v))
    return omega, v


def thick_ap(B: BohrSet, V: SetOnZN, v: float, policy: Policy | None = None) -> Progression:
    """A progression of length >= 4/v inside V, where V fills all but v of B."""
    pol = resolve(policy)
    if not V.issubset(B.members):
        raise ValueError("V must lie inside B")
    if len(V) < (1 - Fraction(v)) * B.size:
        raise HypothesisNotMet("V has relative density below 1 - v in B")
    d = B.effective_dimension
    if d > 0 and 1 / v > pol.c_impl * B.delta * B.N ** (1 / d) / d:
        raise HypothesisNotMet(f"1/v = {1 / v:.3g} exceeds c delta N^(1/d) / d")
    N = B.N
    # with no nonzero frequency B is the whole group and N is the longest possible length
    target = math.ceil(4 / v) if d > 0 else min(math.ceil(4 / v), N)
    base = ap_in_bohr(B)
    if V == B.members and base.length >= target:
        return base
    inside = V.mask[base.elements(N)]
    n = base.length
    best = Progression(0, 1, 0)
    for m in range(1, n):
        if -(-n // m) <= best.length:
            break
        cols = -(-n // m)
        grid = np.zeros(m * cols, dtype=bool)
        grid[:n] = inside
        lengths, starts = _longest_runs(grid.reshape(cols, m).T)
        r = int(np.argmax(lengths))
        if lengths[r] > best.length:
            j0 = r + m * int(starts[r])
            best = Progression((base.start + j0 * base.difference) % N, (m * base.difference) % N, int(lengths[r]))
    if best.length >= target:
        return best
    best = longest_ap(V.mask)
    if best.length >= target:
        return best
    raise MeasuredFailure(f"no progression of length {target} in the thick set", {"found": best.length})


def levelset_pipeline(A1: SetOnZN, A2: SetOnZN, A3: SetOnZN, eps: float = 0.5,
                      policy: Policy | None = None, strict: bool = False) -> PipelineResult:
    pol = resolve(policy)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    N = same_modulus(A1, A2, A3)
    perm, sets = _sort_by_density((A1, A2, A3))
    if not sets[2]:
        raise ValueError("sets must be nonempty")
    c = pol.c_impl
    B = make_bohr(N, [0], 2.0, pol)
    cur = sets
    dens = tuple(_rel(A, B) for A in cur)
    at0 = float(dens[0] * dens[1] * dens[2])
    omega, v = levelset_parameters(N, float(dens[0]), at0, eps, pol)
    cap = math.ceil(math.log(1 / at0) / math.log(1 + c / 2)) + 4
    shifts = [0, 0, 0]
    trace = [IterationState(1, B, cur, (0, 0, 0), dens, omega=omega, v=v, outcome="start")]
    K0 = level_threshold(omega, B)
    try:
        for i in range(1, cap + 1):
            d = B.dimension
            at = float(dens[0] * dens[1] * dens[2])
            rho = c * at / (i * i * d)
            kappa, Bp = find_regular_dilate(dilate(B, rho), pol)
            rho_eff = kappa * rho
            de = Bp.effective_dimension
            if de > 0 and 1 / v > c * Bp.delta * N ** (1 / de) / de:
                raise HypothesisNotMet("v^-1 exceeds c delta' N^(1/d) / d")
            x3, A3p, a3p = scaling_translate(cur[2], B, Bp, rho_eff, policy=pol)
            r = representation_counts(*cur)
            K = level_threshold(omega, B)
            ys = Bp.members.members
            good = r[(x3 + ys) % N] >= K
            V = SetOnZN.from_residues(N, ys[good])
            u = 1 - Fraction(len(V), Bp.size)
            if u < Fraction(v):
                trace[-1].outcome = "terminate"
                r0 = representation_counts(*sets)
                prog = thick_ap(Bp, V, v, pol).shifted(x3 + sum(shifts), N)
                ap = verify_ap(r0, prog, K)
                return PipelineResult("levelset", ap, "constructive", "terminate", z=(x3 + sum(shifts)) % N,
                                      bohr=Bp, trace=trace, steps=i, permutation=perm,
                                      checks={"rho": rho_eff, "K": K, "v": v, "omega": omega})
            U = SetOnZN.from_residues(N, ys[~good])
            gamma = float(dens[0]) * float(u) * float(a3p)
            _, Bpp = find_regular_dilate(dilate(Bp, c * min(v * at, gamma) / d), pol)
            rho_p = Bpp.delta / Bp.delta
            out = katz_koester_3(B, Bp, Bpp, cur[0], -U, A3p, rho_eff, rho_p, pol)
            if out.kind == "structure":
                out = _smoothing_increment(B, Bpp, out.L, out.S[0], out.lam, cur[1], pol)
            Bnew = out.bohr
            xs, new = _retranslate(cur, Bnew)
            new_dens = tuple(_rel(A, Bnew) for A in new)
            _check_growth(dens, new_dens, pol, levelset=True)
            trace[-1].outcome = f"increment:{out.index}"
            shifts = [s + x for s, x in zip(shifts, xs)]
            B, cur, dens = Bnew, new, new_dens
            trace.append(IterationState(i + 1, B, cur, xs, dens, rho=rho_eff, omega=omega, v=v))
        raise MeasuredFailure(f"iteration cap {cap} exceeded")
    except (AplabError, ValueError) as exc:
        return _fallback("levelset", sets, K0, exc, trace, len(trace), perm, strict)


PIPELINES = {"cls": cls_pipeline, "increment": increment_pipeline, "levelset": levelset_pipeline}
