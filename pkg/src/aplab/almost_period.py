"""Almost periods of convolutions, found by exhaustive translation scans.

For F = f * mu_S the translation distance D(y) = ||F - tau_y F||_p is computed
for every candidate y directly; sets of almost periods are read off from D.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from .bohr import BohrSet, make_bohr
from .cyclic import GroupFunction, SetOnZN, convolve, lp_norm, power_convolve, same_modulus, spectrum
from .errors import MeasuredFailure
from .policy import Policy, resolve

log = logging.getLogger(__name__)

_CHUNK = 1 << 20


def cap_exponent(p: float, N: int) -> float:
    """Clamp p to 2 + log N; larger exponents only cost precision."""
    return min(float(p), 2.0 + math.log(N))


def translation_distances(F: np.ndarray, p: float, ys) -> np.ndarray:
    """||F - tau_y F||_p for each y in ``ys``, where tau_y F(u) = F(u + y)."""
    F = np.asarray(F)
    if np.iscomplexobj(F) and not np.any(F.imag):
        F = F.real
    N = len(F)
    ys = np.asarray(ys, dtype=np.int64)
    out = np.empty(len(ys))
    base = np.arange(N, dtype=np.int64)
    rows = max(1, _CHUNK // N)
    for lo in range(0, len(ys), rows):
        chunk = ys[lo:lo + rows]
        diff = np.abs(F[None, :] - F[(base[None, :] + chunk[:, None]) % N])
        top = diff.max(axis=1)
        if math.isinf(p):
            out[lo:lo + rows] = top
            continue
        safe = np.where(top > 0, top, 1.0)
        val = np.mean((diff / safe[:, None]) ** p, axis=1) ** (1.0 / p) * top
        out[lo:lo + rows] = np.where(top > 0, val, 0.0)
    return out


def _accept(D: np.ndarray, threshold: float, pol: Policy) -> np.ndarray:
    return D <= threshold * (1 + pol.rel_tol) + 1e-15


def almost_period_set(f: GroupFunction, S: SetOnZN, T: SetOnZN, p: float, eps: float,
                      policy: Policy | None = None) -> SetOnZN:
    """{y in T - T : ||f*mu_S - tau_y f*mu_S||_p <= eps ||f||_p}.

    The scan is exhaustive and symmetrised: y is kept only if both y and -y
    pass, so the output is symmetric even under rounding.
    """
    pol = resolve(policy)
    N = same_modulus(f, S, T)
    if not S or not T:
        raise ValueError("S and T must be nonempty")
    p = cap_exponent(p, N)
    F = convolve(f, GroupFunction.measure(S)).values
    threshold = eps * lp_norm(f, p)
    cand = T.difference_set().members
    D = translation_distances(F, p, np.union1d(cand, (-cand) % N))
    table = np.full(N, np.inf)
    table[np.union1d(cand, (-cand) % N)] = D
    sym = np.maximum(table, table[(-np.arange(N)) % N])
    keep = np.zeros(N, dtype=bool)
    keep[cand] = _accept(sym[cand], threshold, pol)
    keep[0] = True
    return SetOnZN(N, keep)


def smoothing_operator(X: SetOnZN, ell: int) -> GroupFunction:
    """lambda_X^(ell), the ell-fold convolution power of mu_X * mu_{-X}; exact."""
    if not X:
        raise ValueError("X must be nonempty")
    lam = convolve(GroupFunction.measure(X), GroupFunction.measure(-X))
    return power_convolve(lam, ell)


def smoothing_defect(f: GroupFunction, S: SetOnZN, X: SetOnZN, ell: int, p: float) -> float:
    """||f*mu_S - f*mu_S*lambda_X^(ell)||_p, evaluated in floating point."""
    N = same_modulus(f, S, X)
    p = cap_exponent(p, N)
    F = convolve(GroupFunction(f.values), GroupFunction.measure(S))
    lam = GroupFunction(smoothing_operator(X, ell).values)
    return lp_norm(F - convolve(F, lam), p)


def cls_bohr_almost_periods(A1: SetOnZN, A2: SetOnZN, p: float, theta: float,
                            policy: Policy | None = None, report: dict | None = None) -> BohrSet:
    """A Bohr set of translates x with ||1_A1*mu_A2 - tau_x 1_A1*mu_A2||_p <= theta alpha_1^(1/p).

    Frequencies are Spec_{theta/4}(mu_A2). The radius starts at
    min(2, theta alpha_2^(1/2) alpha_1^(1/p - 1/2) / d) and is halved until
    every member passes the bound. ``report`` (if given) receives the
    frequencies, radius, number of halvings and the worst measured distance.
    """
    pol = resolve(policy)
    N = same_modulus(A1, A2)
    if not A1 or not A2:
        raise ValueError("A1 and A2 must be nonempty")
    p = cap_exponent(p, N)
    a1 = float(A1.density)
    a2 = float(A2.density)
    F = convolve(GroupFunction.indicator(A1), GroupFunction.measure(A2)).values
    threshold = theta * a1 ** (1.0 / p)
    gamma = spectrum(GroupFunction.measure(A2), theta / 4, pol).frequencies or (0,)
    d = len(gamma)
    delta0 = min(2.0, theta * math.sqrt(a2) * a1 ** (1.0 / p - 0.5) / d)
    outer = make_bohr(N, gamma, delta0, pol)
    ys = outer.members.members
    D = np.zeros(N)
    D[ys] = translation_distances(F, p, ys)
    worst_x = None
    for halvings in range(pol.max_halvings + 1):
        B = make_bohr(N, gamma, delta0 / 2 ** halvings, pol)
        members = B.members.members
        bad = members[~_accept(D[members], threshold, pol)]
        if bad.size == 0:
            if report is not None:
                report.update(gamma=gamma, dimension=d, delta=B.delta, halvings=halvings,
                              threshold=threshold, worst=float(D[members].max()), p=p)
            log.debug("cls almost periods: d=%d delta=%.3g halvings=%d", d, B.delta, halvings)
            return B
        worst_x = int(bad[np.argmax(D[bad])])
    raise MeasuredFailure(
        f"almost-period bound fails at x={worst_x} after {pol.max_halvings} halvings",
        {"x": worst_x, "distance": float(D[worst_x]), "threshold": threshold, "gamma": gamma},
    )
