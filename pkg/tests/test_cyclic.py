import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aplab import ntt
from aplab.cyclic import (GroupFunction, SetOnZN, balanced_function, convolve, count_convolve, dft, dump_function,
                          idft, inner_product, lp_norm, power_convolve, read_set, representation_counts,
                          spectrum, write_set)
from aplab.errors import ModulusMismatch
from aplab.policy import Policy

from oracles import convolve_direct, convolve_fraction, dft_direct, rep_counts_pairs, rep_counts_shift, rep_counts_triple


def sets_on(N, draw_mask):
    return SetOnZN(N, np.array(draw_mask, dtype=bool))


@st.composite
def set_triples(draw, max_N=48):
    N = draw(st.integers(2, max_N))
    masks = [draw(st.lists(st.booleans(), min_size=N, max_size=N)) for _ in range(3)]
    return N, [sets_on(N, m) for m in masks]


@st.composite
def complex_functions(draw, N=None):
    if N is None:
        N = draw(st.integers(2, 40))
    vals = draw(st.lists(st.complex_numbers(max_magnitude=100, allow_nan=False, allow_infinity=False),
                         min_size=N, max_size=N))
    return GroupFunction(vals)


# -- NTT --------------------------------------------------------------------

def test_ntt_round_trip():
    rng = np.random.default_rng(0)
    p, g = ntt.PRIMES[0]
    a = rng.integers(0, p, 64)
    back = ntt.ntt(ntt.ntt(a, p, g), p, g, inverse=True)
    assert np.array_equal(back, a)


@given(st.lists(st.integers(0, 10 ** 6), min_size=1, max_size=60),
       st.lists(st.integers(0, 10 ** 6), min_size=1, max_size=60))
def test_linear_convolve_matches_numpy(a, b):
    expected = np.convolve(np.array(a, dtype=object), np.array(b, dtype=object))
    got = ntt.linear_convolve(np.array(a), np.array(b))
    assert [int(x) for x in got] == [int(x) for x in expected]


def test_cyclic_convolve_large_counts():
    N = 4096
    ones = np.ones(N, dtype=np.int64)
    out = ntt.cyclic_convolve(ones * N, ones * N)
    assert np.all(out == N ** 3)


# -- SetOnZN ----------------------------------------------------------------

def test_set_basics():
    A = SetOnZN.from_residues(10, [1, 3, 13])
    assert A.members.tolist() == [1, 3]
    assert A.cardinality == 2 and A.density == Fraction(1, 5)
    assert A.translate(9).members.tolist() == [0, 2]
    assert (-A).members.tolist() == [7, 9]
    assert SetOnZN.from_bits(10, A.bits) == A
    assert SetOnZN.full(10).cardinality == 10 and not SetOnZN.empty(10)


def test_modulus_mismatch():
    with pytest.raises(ModulusMismatch):
        SetOnZN.full(4) & SetOnZN.full(5)
    with pytest.raises(ModulusMismatch):
        convolve(GroupFunction.indicator(SetOnZN.full(4)), GroupFunction.indicator(SetOnZN.full(5)))


@given(set_triples(max_N=30))
def test_sumset_and_difference_set_match_definition(data):
    N, (A, B, _) = data
    expected = {(a + b) % N for a in A for b in B}
    assert set(A.sumset(B).members.tolist()) == expected
    assert set(A.difference_set().members.tolist()) == {(a - b) % N for a in A for b in A}


@given(set_triples(max_N=40))
def test_count_convolve_matches_pairs(data):
    N, (A, B, _) = data
    expected = np.zeros(N, dtype=np.int64)
    for a in A:
        for b in B:
            expected[(a + b) % N] += 1
    assert np.array_equal(count_convolve(A, B), expected)


def test_set_file_round_trip(tmp_path):
    A = SetOnZN.from_residues(17, [0, 4, 16])
    path = tmp_path / "a.txt"
    write_set(path, A)
    assert path.read_text() == "N=17\n0\n4\n16\n"
    assert read_set(path) == A


@pytest.mark.parametrize("text", ["0\n1\n", "N=5\n3\n1\n", "N=5\n1\n1\n", "N=5\n7\n"])
def test_set_file_rejects_bad_input(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(ValueError):
        read_set(path)


def test_dump_function(tmp_path):
    path = tmp_path / "f.csv"
    dump_function(path, GroupFunction([1, 2j]))
    assert path.read_text().splitlines()[0] == "index,re,im"


# -- dft ---------------------------------------------------------------------

def test_dft_constant_function():
    fhat = dft(GroupFunction.indicator(SetOnZN.full(4))).values
    assert np.allclose(fhat, [1, 0, 0, 0])


def test_dft_point_mass():
    fhat = dft(GroupFunction.measure(SetOnZN.from_residues(6, [0]))).values
    assert np.allclose(fhat, np.ones(6))


def test_dft_two_point_measure():
    # derived from the character sum: (1 + (-1)^k) / 2 * 3 / ... evaluated directly
    f = GroupFunction.measure(SetOnZN.from_residues(6, [0, 3]))
    assert np.allclose(dft_direct(f.values), [1, 0, 1, 0, 1, 0])
    assert np.allclose(dft(f).values, [1, 0, 1, 0, 1, 0])


@given(complex_functions())
def test_dft_matches_direct_sum_and_round_trips(f):
    assert np.allclose(dft(f).values, dft_direct(f.values), atol=1e-9 * (1 + np.abs(f.values).max()))
    back = idft(dft(f)).values
    assert np.max(np.abs(back - f.values)) <= 1e-9 * max(1.0, np.abs(f.values).max())


@given(complex_functions(), st.integers(-50, 50))
def test_translate_is_phase_shift(f, x):
    N = f.N
    phase = np.exp(2j * np.pi * np.arange(N) * x / N)
    lhs = dft(f.translate(x)).values
    rhs = phase * dft(f).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * (1 + np.abs(f.values).max())


# -- convolution ----------------------------------------------------------------

def test_convolve_full_group():
    one = GroupFunction.indicator(SetOnZN.full(7))
    assert np.allclose(convolve(one, one).values, 1)


def test_convolve_single_pair():
    f = GroupFunction.indicator(SetOnZN.from_residues(4, [0]))
    g = GroupFunction.indicator(SetOnZN.from_residues(4, [1]))
    h = convolve(f, g)
    assert [h.exact_value(x) for x in range(4)] == [0, Fraction(1, 4), 0, 0]


def test_convolve_small_sets_exact():
    A = GroupFunction.indicator(SetOnZN.from_residues(8, [0, 1]))
    B = GroupFunction.indicator(SetOnZN.from_residues(8, [0, 2]))
    h = convolve(A, B)
    expected = convolve_fraction(A.numerators.tolist(), B.numerators.tolist())
    assert [h.exact_value(x) for x in range(8)] == expected
    assert expected == [Fraction(1, 8)] * 4 + [0] * 4
    assert h.is_exact and h.check_exactness()


@given(complex_functions(N=12), complex_functions(N=12))
@settings(max_examples=30)
def test_convolve_matches_direct(f, g):
    scale = 1 + np.abs(f.values).max() * np.abs(g.values).max()
    assert np.max(np.abs(convolve(f, g).values - convolve_direct(f.values, g.values))) <= 1e-9 * scale


def test_power_convolve_examples():
    mu = GroupFunction.measure(SetOnZN.from_residues(4, [0, 1]))
    assert power_convolve(mu, 1) is mu
    sq = power_convolve(mu, 2)
    expected = convolve_fraction(mu.numerators.tolist(), mu.numerators.tolist())
    expected = [v / mu.denominator ** 2 for v in expected]
    assert [sq.exact_value(x) for x in range(4)] == expected == [1, 2, 1, 0]
    one = GroupFunction.indicator(SetOnZN.full(5))
    assert np.allclose(power_convolve(one, 7).values, 1)
    with pytest.raises(ValueError):
        power_convolve(mu, 0)


@given(complex_functions(N=10), st.integers(1, 5))
@settings(max_examples=30)
def test_power_convolve_equals_repeated(f, ell):
    f = GroupFunction(f.values / 100)
    rep = f
    for _ in range(ell - 1):
        rep = convolve(rep, f)
    assert np.allclose(power_convolve(f, ell).values, rep.values, atol=1e-9)


def test_exact_power_convolve_integer_path():
    mu = GroupFunction.measure(SetOnZN.from_residues(16, [0, 3, 5]))
    p = power_convolve(mu, 5)
    assert p.is_exact and p.check_exactness()
    assert sum(p.exact_value(x) for x in range(16)) == 16


# -- representation counts ------------------------------------------------------

def test_representation_counts_trivial():
    assert np.all(representation_counts(*[SetOnZN.full(5)] * 3) == 25)
    r = representation_counts(*[SetOnZN.from_residues(7, [0])] * 3)
    assert r.tolist() == [1, 0, 0, 0, 0, 0, 0]


def test_representation_counts_interval():
    A = SetOnZN.from_residues(32, range(5))
    r = representation_counts(A, A, A)
    assert np.array_equal(r, rep_counts_triple(A, A, A, 32))
    assert r[0] == 1 and r[6] == 19 and set(np.flatnonzero(r).tolist()) == set(range(13))


@given(set_triples(max_N=24))
@settings(max_examples=40)
def test_representation_counts_two_oracles(data):
    N, (A, B, C) = data
    r = representation_counts(A, B, C)
    assert np.array_equal(r, rep_counts_triple(A, B, C, N))
    assert np.array_equal(r, rep_counts_pairs(list(A), list(B), list(C), N))
    assert np.array_equal(r, rep_counts_shift(A, B, C, N))


@given(set_triples(max_N=32))
@settings(max_examples=40)
def test_representation_counts_equal_scaled_convolution(data):
    N, (A, B, C) = data
    triple = convolve(convolve(GroupFunction.indicator(A), GroupFunction.indicator(B)), GroupFunction.indicator(C))
    assert triple.is_exact
    scaled = [triple.exact_value(x) * N * N for x in range(N)]
    assert scaled == [Fraction(int(v)) for v in representation_counts(A, B, C)]


@given(set_triples(max_N=30), st.integers(0, 100))
@settings(max_examples=50)
def test_indicator_measure_identity(data, x):
    # 1_A * mu_B(x) = |A n (x - B)| / |B|
    N, (A, B, _) = data
    if not B:
        return
    x %= N
    conv = convolve(GroupFunction.indicator(A), GroupFunction.measure(B))
    count = len(A & (-B).translate(x))
    assert conv.exact_value(x) == Fraction(count, len(B))


# -- spectra, norms --------------------------------------------------------------

def test_spectrum_examples():
    assert spectrum(GroupFunction.measure(SetOnZN.full(9)), 0.3).frequencies == (0,)
    assert spectrum(GroupFunction.measure(SetOnZN.from_residues(9, [0])), 1.0).frequencies == tuple(range(9))
    assert spectrum(GroupFunction.measure(SetOnZN.from_residues(6, [0, 3])), 0.5).frequencies == (0, 2, 4)


def test_spectrum_zero_function_warns():
    with pytest.warns(RuntimeWarning):
        spec = spectrum(GroupFunction.zero(5), 0.5)
    assert spec.zero_function and len(spec) == 0


def test_spectrum_rejects_bad_eta():
    with pytest.raises(ValueError):
        spectrum(GroupFunction.zero(5), 0.0)


@given(set_triples(max_N=40), st.floats(0.05, 1.0))
@settings(max_examples=60)
def test_spectrum_is_exactly_the_threshold_set(data, eta):
    N, (A, _, _) = data
    if not A:
        return
    f = GroupFunction.measure(A)
    spec = spectrum(f, eta)
    coeffs = np.abs(dft_direct(f.values))
    norm1 = np.mean(np.abs(f.values))
    tol = 1e-9 * norm1
    inside = set(spec.frequencies)
    assert 0 in inside
    for k in range(N):
        if k in inside:
            assert coeffs[k] >= eta * norm1 - tol
        else:
            assert coeffs[k] < eta * norm1 + tol


def test_balanced_function_examples():
    G = SetOnZN.full(4)
    f = balanced_function(SetOnZN.from_residues(4, [0, 1]), G)
    assert [f.exact_value(x) for x in range(4)] == [Fraction(1, 2)] * 2 + [Fraction(-1, 2)] * 2
    assert not np.any(balanced_function(G, G).values)
    assert not np.any(balanced_function(SetOnZN.empty(4), G).values)
    with pytest.raises(ValueError):
        balanced_function(G, SetOnZN.from_residues(4, [0]))


@given(set_triples(max_N=40))
def test_balanced_function_sums_to_zero(data):
    N, (A, B, _) = data
    B = A | B
    if not B:
        return
    f = balanced_function(A, B)
    assert int(f.numerators.sum()) == 0


def test_norm_examples():
    one = GroupFunction.indicator(SetOnZN.full(6))
    for p in (1, 2, 3.5, math.inf):
        assert lp_norm(one, p) == pytest.approx(1.0)
    assert lp_norm(GroupFunction.measure(SetOnZN.from_residues(6, [1, 4])), 1) == pytest.approx(1.0)
    assert lp_norm(GroupFunction([1, 0, 0, 0]), 2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        lp_norm(one, 0.5)


@given(complex_functions(N=16), complex_functions(N=16))
def test_parseval(f, g):
    lhs = inner_product(f, g)
    rhs = np.sum(dft(f).values * np.conj(dft(g).values))
    assert abs(lhs - rhs) <= 1e-9 * (1 + lp_norm(f, 2) * lp_norm(g, 2))


def test_group_function_arithmetic_stays_exact():
    A = GroupFunction.measure(SetOnZN.from_residues(6, [0, 1]))
    B = GroupFunction.indicator(SetOnZN.from_residues(6, [2]))
    s = A + B
    d = A - B
    assert s.is_exact and d.is_exact
    assert s.exact_value(2) == 1 and d.exact_value(0) == 3
    assert A.reflect().exact_value(5) == 3
    assert A.translate(1).exact_value(0) == 3


# -- policy ---------------------------------------------------------------------

def test_policy_round_trip(tmp_path):
    pol = Policy().replace(C0=20.0, kappa_points=32)
    path = tmp_path / "p.txt"
    pol.save(path)
    assert Policy.load(path) == pol


def test_policy_rejects_unknown_key():
    with pytest.raises(ValueError):
        Policy.loads("no_such_key=1\n")
