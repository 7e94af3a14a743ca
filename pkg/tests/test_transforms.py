import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aplab.bohr import dilate, find_regular_dilate, make_bohr
from aplab.cyclic import GroupFunction, SetOnZN, spectrum
from aplab.errors import HypothesisNotMet, MeasuredFailure
from aplab.policy import Policy
from aplab.transforms import (best_translate, domination_constant, katz_koester_2, katz_koester_3,
                              l2_density_increment, log_sigma_floor, mean_over, relative_density, scaling_translate,
                              spectrum_annihilate)

from oracles import rep_counts_triple


def pair_counts(A, B, N):
    r = np.zeros(N, dtype=np.int64)
    for a in A:
        for b in B:
            r[(a + b) % N] += 1
    return r


def inside(B, alpha, rng):
    return SetOnZN(B.N, B.members.mask & (rng.random(B.N) < alpha))


def annihilated(Bp, freqs):
    N = Bp.N
    for k in freqs:
        for x in Bp.members:
            if abs(1 - np.exp(2j * np.pi * k * x / N)) > 0.5 + 1e-12:
                return False
    return True


# -- annihilation -------------------------------------------------------------

def test_annihilate_whole_group():
    N = 64
    G = make_bohr(N, [0], 2.0)
    Bp = spectrum_annihilate(G, SetOnZN.full(N), 0.5)
    assert Bp.size == N


def test_annihilate_point_set_is_degenerate():
    N = 64
    Bp = spectrum_annihilate(make_bohr(N, [0], 2.0), SetOnZN.from_residues(N, [0]), 0.5)
    assert Bp.members.members.tolist() == [0]


def test_annihilate_seeded_n512():
    rng = np.random.default_rng(512)
    _, B = find_regular_dilate(make_bohr(512, [1], 1.5))
    X = SetOnZN.from_residues(512, rng.choice(B.members.members, 20, replace=False))
    Bp = spectrum_annihilate(B, X, 0.5)
    freqs = spectrum(GroupFunction.measure(X), 0.5).frequencies
    assert annihilated(Bp, freqs)
    assert Bp.is_sub_bohr_of(B)


@given(st.integers(16, 160), st.integers(0, 2 ** 31), st.floats(0.2, 0.9))
@settings(max_examples=25)
def test_annihilation_property(N, seed, eps):
    rng = np.random.default_rng(seed)
    B = make_bohr(N, [int(rng.integers(1, N))], float(rng.uniform(0.5, 2.0)))
    X = inside(B, 0.4, rng) | SetOnZN.from_residues(N, [0])
    Bp = spectrum_annihilate(B, X, eps)
    assert annihilated(Bp, spectrum(GroupFunction.measure(X), eps).frequencies)
    assert Bp.members.issubset(B.members)


def test_annihilate_guards():
    B = make_bohr(32, [1], 0.5)
    with pytest.raises(ValueError):
        spectrum_annihilate(B, SetOnZN.empty(32), 0.5)
    with pytest.raises(ValueError):
        spectrum_annihilate(B, SetOnZN.from_residues(32, [16]), 0.5)


# -- L^2 increment ------------------------------------------------------------------

def test_best_translate_matches_definition():
    N = 40
    rng = np.random.default_rng(1)
    A = SetOnZN(N, rng.random(N) < 0.4)
    B = make_bohr(N, [3], 1.0)
    x, val = best_translate(A, B)
    counts = [len(A & B.members.translate(y)) for y in range(N)]
    assert Fraction(max(counts), B.size) == val and x == counts.index(max(counts))


def test_l2_full_set_fails_hypothesis():
    N = 128
    G = make_bohr(N, [0], 2.0)
    A = SetOnZN.full(N)
    with pytest.raises(HypothesisNotMet):
        l2_density_increment(G, dilate(G, 1 / 16), A, SetOnZN.from_residues(N, [0]), 0.5, 1.0)


def test_l2_nu_guard():
    N = 64
    G = make_bohr(N, [0], 2.0)
    with pytest.raises(ValueError):
        l2_density_increment(G, G, SetOnZN.from_residues(N, [1]), SetOnZN.from_residues(N, [0]), 0.5, 0.0)


def test_l2_increment_on_structured_set():
    N = 512
    G = make_bohr(N, [0], 2.0)
    A = make_bohr(N, [5], 1.0).members
    alpha = relative_density(A, G)
    Bdot = dilate(G, 1 / 16 * float(alpha))
    out = l2_density_increment(G, Bdot, A, SetOnZN.from_residues(N, [0]), 0.5, 1.0)
    assert out.kind == "increment"
    assert out.density > alpha
    assert out.density >= (1 + Fraction(1, 16)) * alpha
    assert set(Bdot.gamma) <= set(out.bohr.gamma) and out.bohr.delta <= Bdot.delta
    # the reported sup is the measured one
    x, sup = best_translate(A, out.bohr)
    assert (x, sup) == (out.translate, out.density)
    json.loads(out.to_json())


def test_l2_radius_guard():
    N = 128
    G = make_bohr(N, [0], 2.0)
    A = SetOnZN.from_residues(N, range(10))
    with pytest.raises(ValueError):
        l2_density_increment(G, G, A, SetOnZN.from_residues(N, [0]), 0.5, 1.0)


# -- Katz-Koester ------------------------------------------------------------------

def test_domination_constant():
    assert domination_constant([2, 0, 3], [1, 1, 2]) == 2
    assert domination_constant([0, 0], [0, 1]) == 0
    with pytest.raises(MeasuredFailure):
        domination_constant([1, 1], [1, 0])


def test_sigma_floor_in_logs():
    assert log_sigma_floor(0.5, 0.5, Policy(sigma_floor_c=1.0)) == pytest.approx(-2 * np.log(4))
    assert np.isfinite(log_sigma_floor(1e-4, 1e-4))


def kk_setup(seed, N=512, alpha=0.4):
    rng = np.random.default_rng(seed)
    G = make_bohr(N, [0], 2.0)
    A = SetOnZN(N, rng.random(N) < alpha)
    rho = 1 / 16 * float(A.density)
    k1, Bp = find_regular_dilate(dilate(G, rho))
    Ap = inside(Bp, alpha, rng)
    ap = float(relative_density(Ap, Bp))
    k2, Bpp = find_regular_dilate(dilate(Bp, 1 / 16 * ap / Bp.dimension))
    return G, Bp, Bpp, A, Ap, rho * k1, ap, k2


def check_kk_report(out):
    lams = out.report["lams"]
    assert all(a <= b for a, b in zip(lams, lams[1:]))
    assert all(isinstance(K, Fraction) for K in out.report["Ks"])


@pytest.mark.parametrize("seed", range(4))
def test_kk2_structure_verified(seed):
    G, Bp, Bpp, A, Ap, rho, ap, k2 = kk_setup(seed)
    out = katz_koester_2(G, Bp, Bpp, A, Ap, rho, 1 / 16 * ap * k2)
    check_kk_report(out)
    if out.kind == "structure":
        N = G.N
        top = pair_counts(out.L, out.S[0], N)
        bottom = pair_counts(A, Ap, N)
        assert np.all(top * out.K.denominator <= bottom * out.K.numerator)
        assert out.lam >= Fraction(1, 2) and out.L.issubset(G.members) and out.S[0].issubset(Bpp.members)
    else:
        assert out.density > relative_density(A, G)


def test_kk2_identity_case():
    N = 128
    G = make_bohr(N, [0], 2.0)
    _, Bp = find_regular_dilate(dilate(G, 1 / 16))
    _, Bpp = find_regular_dilate(dilate(Bp, 1 / 16))
    out = katz_koester_2(G, Bp, Bpp, G.members, Bp.members, 1 / 32, 1 / 32)
    assert out.kind == "structure" and out.lam == 1 and out.iterations == 0
    assert out.K <= 1


def test_kk2_point_partner():
    N = 256
    rng = np.random.default_rng(7)
    G = make_bohr(N, [0], 2.0)
    A = SetOnZN(N, rng.random(N) < 0.3)
    _, Bp = find_regular_dilate(dilate(G, 1 / 64))
    Ap = SetOnZN.from_residues(N, [0])
    ap = float(relative_density(Ap, Bp))
    _, Bpp = find_regular_dilate(dilate(Bp, ap / 16))
    try:
        out = katz_koester_2(G, Bp, Bpp, A, Ap, 1 / 64, ap / 32)
    except (HypothesisNotMet, MeasuredFailure) as exc:
        assert "lams" in exc.report
        return
    if out.kind == "structure":
        assert out.L.issubset(A.sumset(Ap))


def test_kk2_guards():
    G, Bp, Bpp, A, Ap, rho, ap, k2 = kk_setup(0)
    with pytest.raises(ValueError):
        katz_koester_2(G, Bp, Bpp, A, Ap, 1.0, 1 / 16 * ap * k2)
    B = make_bohr(64, [1], 1.0)
    Bsmall = dilate(B, 1 / 64)
    with pytest.raises(ValueError):
        katz_koester_2(B, Bsmall, Bsmall, SetOnZN.full(64), Bsmall.members, 1e-4, 1e-4)


@pytest.mark.parametrize("seed", range(3))
def test_kk3_structure_verified(seed):
    G, Bp, Bpp, A, Ap, rho, ap, k2 = kk_setup(seed, N=256)
    rng = np.random.default_rng(seed + 100)
    Ap2 = inside(Bp, 0.4, rng)
    a = float(A.density)
    a2 = float(relative_density(Ap2, Bp))
    out = katz_koester_3(G, Bp, Bpp, A, Ap, Ap2, rho, 1 / 16 * a * ap * a2 * k2)
    check_kk_report(out)
    if out.kind == "structure":
        N = G.N
        top = rep_counts_triple(out.L, out.S[0], out.S[1], N)
        bottom = rep_counts_triple(A, Ap, Ap2, N)
        assert np.all(top * out.K.denominator <= bottom * out.K.numerator)


def test_kk3_identity_case():
    N = 128
    G = make_bohr(N, [0], 2.0)
    _, Bp = find_regular_dilate(dilate(G, 1 / 16))
    _, Bpp = find_regular_dilate(dilate(Bp, 1 / 16))
    out = katz_koester_3(G, Bp, Bpp, G.members, Bp.members, Bp.members, 1 / 32, 1 / 32)
    assert out.kind == "structure" and out.lam == 1 and out.K <= 1


def test_kk3_absorbing_partner():
    G, Bp, Bpp, A, Ap, rho, ap, k2 = kk_setup(5, N=256)
    a = float(A.density)
    out = katz_koester_3(G, Bp, Bpp, A, Ap, Bpp.members, rho, 1 / 16 * a * ap * float(Bpp.size / Bp.size) * k2)
    if out.kind == "structure":
        N = G.N
        top = rep_counts_triple(out.L, out.S[0], out.S[1], N)
        bottom = rep_counts_triple(A, Ap, Bpp.members, N)
        assert np.all(top * out.K.denominator <= bottom * out.K.numerator)


# -- scaling ---------------------------------------------------------------------

def test_scaling_same_set():
    N = 256
    rng = np.random.default_rng(3)
    B = make_bohr(N, [0], 2.0)
    A = SetOnZN(N, rng.random(N) < 0.3)
    x, Ap, alpha_p = scaling_translate(A, B, B, 1.0, regular=False)
    assert alpha_p == relative_density(A, B) and len(Ap) == len(A)


def test_scaling_full_set():
    _, B = find_regular_dilate(make_bohr(512, [1], 1.5))
    _, Bp = find_regular_dilate(dilate(B, 1 / 64))
    x, Ap, alpha_p = scaling_translate(B.members, B, Bp)
    assert alpha_p == 1


@given(st.integers(0, 2 ** 31), st.floats(0.2, 0.8))
@settings(max_examples=20)
def test_scaling_argmax_dominates_average(seed, alpha):
    rng = np.random.default_rng(seed)
    _, B = find_regular_dilate(make_bohr(512, [int(rng.integers(1, 512)) | 1], 1.5))
    A = inside(B, alpha, rng)
    if not A:
        return
    rho = 1 / (16 * 2)
    kappa, Bp = find_regular_dilate(dilate(B, rho))
    x, Ap, alpha_p = scaling_translate(A, B, Bp, rho * kappa)
    assert mean_over(A, B, Bp) <= alpha_p
    assert alpha_p >= relative_density(A, B) - Fraction(2 * 16 * rho * kappa)
    assert Fraction(len(Ap), Bp.size) == alpha_p


def test_scaling_guards():
    B = make_bohr(64, [1, 3], 1.0)
    with pytest.raises(ValueError):
        scaling_translate(SetOnZN.full(64), B, B)
    with pytest.raises(ValueError):
        scaling_translate(B.members, B, B, rho=0.9)
