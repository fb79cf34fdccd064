import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import (
    _coarse_index,
    _fine_index,
    _log_norm_int,
    char_sum_1d,
    char_sum_2d,
    component_marginals_bruteforce,
    nfold_1d,
    nfold_2d,
)
from padicwalk.groups import GroupElem
from padicwalk.laws import AnisoLaw2D, IsoLaw2D, WalkLaw1D, law_from_json, make_law

PRIMES = st.sampled_from([2, 3, 5, 7])
BS = st.floats(0.2, 4.0)
HS = st.floats(0.01, 0.99)


def _index_grid_1d(law, K):
    return np.maximum(_log_norm_int(np.arange(law.p ** K), K, law.p), 0)


def _index_grid_2d(law, K):
    l = _log_norm_int(np.arange(law.p ** K), K, law.p)
    l1, l2 = l[:, None], l[None, :]
    return _coarse_index(l1, l2) if law.family == "iso2d" else _fine_index(l1, l2)


def _closed_on_grid(law, n, J):
    vals = np.array([law.nstep_mass(n, int(j)) for j in range(int(J.max()) + 1)])
    return vals[J]


# ---------------------------------------------------------------- examples
def test_shell_prob_examples():
    law = WalkLaw1D(3, 2.0, 0.1)
    assert law.shell_prob(1) == pytest.approx(0.8, rel=1e-15)
    assert law.shell_prob(0) + law.C / 8 == pytest.approx(1, abs=1e-15)
    an = AnisoLaw2D(2, 1.0, 0.5)
    assert an.C == pytest.approx(math.sqrt(2) - 1, rel=1e-14)
    assert an.shell_prob(1) == pytest.approx((math.sqrt(2) - 1) / math.sqrt(2), rel=1e-14)
    assert an.shell_prob(0) == 0
    with pytest.raises(ValueError):
        law.shell_prob(-1)


def test_char_fn_examples():
    law = WalkLaw1D(2, 1.0, 0.5)
    assert law.char_fn(0) == 1
    assert law.char_fn(2) == pytest.approx(5 / 8, abs=1e-15)
    an = AnisoLaw2D(2, 1.0, 0.5)
    assert an.char_fn((1, 1)) == pytest.approx(1 - an.alpha0, abs=1e-15)
    assert 1 - an.alpha0 == pytest.approx(-0.292893, abs=1e-6)


def test_nstep_examples():
    law = WalkLaw1D(2, 1.0, 0.5)
    assert law.nstep_mass(1, GroupElem.of(2, 0, 0.5)) == pytest.approx(0.25, abs=1e-15)
    conv = nfold_1d(law, 2, 20)
    assert law.nstep_mass(2, 0) == pytest.approx(conv[0], abs=1e-10)


def test_component_marginal_examples():
    assert IsoLaw2D(2, 1.0).component_marginal(1, 0) == pytest.approx(2 / 9, abs=1e-15)
    an = AnisoLaw2D(2, 1.0, 0.5)
    assert an.component_marginal(1, 0) == pytest.approx(4 / (3 * (2 + math.sqrt(2))), abs=1e-14)
    assert an.component_marginal(2, 0) == pytest.approx((2 * math.sqrt(2) - 2) / 6, abs=1e-14)
    with pytest.raises(ValueError):
        an.component_marginal(3, 0)


def test_constants_and_ranges():
    for p, b, h in itertools.product([2, 3, 5], [0.5, 1, 2], [0.1, 0.5, 0.9]):
        an = AnisoLaw2D(p, b, h)
        assert 0 < an.alpha0 - 1 < 1 and 0 < an.alpha1 < 1 and 0 < an.alpha0 * p ** -b < 1
    law = WalkLaw1D(2, 1.0, 0.3)
    assert 0 < law.alpha < 1.5


def test_construction_rules():
    assert isinstance(make_law("aniso2d", 2, 1.0, h=1), IsoLaw2D)
    for bad in (lambda: WalkLaw1D(4, 1.0), lambda: WalkLaw1D(2, 1.0, 1.0), lambda: AnisoLaw2D(2, 1.0, 1.0),
                lambda: AnisoLaw2D(2, 1.0, 0.0), lambda: IsoLaw2D(2, -1.0)):
        with pytest.raises(ValueError):
            bad()
    for law in (WalkLaw1D(3, 0.7, 0.2), IsoLaw2D(5, 2.0), AnisoLaw2D(2, 1.5, 0.3)):
        assert law_from_json(law.to_json()) == law


# ---------------------------------------------------------------- normalization
@given(PRIMES, BS, st.floats(0, 0.99))
def test_normalization_1d(p, b, P0):
    assert WalkLaw1D(p, b, P0).total_mass() == pytest.approx(1, abs=1e-13)


@given(PRIMES, BS, HS)
def test_normalization_2d(p, b, h):
    assert IsoLaw2D(p, b).total_mass() == pytest.approx(1, abs=1e-13)
    an = AnisoLaw2D(p, b, h)
    assert an.total_mass() == pytest.approx(1, abs=1e-13)
    # tails agree with partial sums
    assert an.tail(1) - an.tail(4) == pytest.approx(sum(an.shell_prob(j) for j in range(1, 4)), abs=1e-14)


@given(PRIMES, BS, HS)
def test_component_normalization(p, b, h):
    for law in (IsoLaw2D(p, b), AnisoLaw2D(p, b, h)):
        for c in (1, 2):
            ks = range(1, int(40 / (b * math.log10(p))) + 40)
            total = law.component_marginal(c, 0) + sum(law.component_marginal(c, k) for k in ks)
            assert total == pytest.approx(1, abs=1e-12)


# ---------------------------------------------------------------- Fourier oracle
@pytest.mark.parametrize("p,b,P0,K", [(2, 1.0, 0.5, 10), (3, 0.5, 0.3, 6), (5, 2.0, 0.0, 4)])
def test_char_fn_matches_character_sums_1d(p, b, P0, K):
    law = WalkLaw1D(p, b, P0)
    # dual points with valuation < K: shells beyond B(K) sum to zero against them
    for y in range(1, 61):
        assert law.char_fn(y) == pytest.approx(char_sum_1d(law, y, K), abs=1e-9)


@pytest.mark.parametrize("law,K", [(IsoLaw2D(2, 1.0), 5), (AnisoLaw2D(2, 1.0, 0.5), 5),
                                   (AnisoLaw2D(3, 1.5, 0.7), 3), (IsoLaw2D(3, 0.5), 3)])
def test_char_fn_matches_character_sums_2d(law, K):
    ys = list(itertools.product(range(8), range(8)))[1:]
    for y in ys:
        assert law.char_fn(y) == pytest.approx(char_sum_2d(law, y, K, K, trace=True), abs=1e-9)


def test_anisotropic_char_needs_trace_pairing():
    law = AnisoLaw2D(2, 1.0, 0.5)
    direct = max(abs(law.char_fn(y) - char_sum_2d(law, y, 5, 5, trace=False))
                 for y in itertools.product(range(8), range(8)))
    assert direct > 0.1


# ---------------------------------------------------------------- convolution oracle
@pytest.mark.parametrize("law,K", [(WalkLaw1D(2, 1.0, 0.5), 14), (WalkLaw1D(3, 0.5, 0.3), 12),
                                   (WalkLaw1D(5, 2.0, 0.0), 5)])
def test_nstep_matches_convolution_1d(law, K):
    J = _index_grid_1d(law, K)
    for n in range(1, 6):
        assert np.abs(nfold_1d(law, n, K) - _closed_on_grid(law, n, J)).max() < 1e-9


@pytest.mark.parametrize("law,K", [(IsoLaw2D(2, 1.0), 8), (AnisoLaw2D(2, 1.0, 0.5), 8),
                                   (AnisoLaw2D(3, 1.5, 0.7), 5), (IsoLaw2D(3, 2.0), 4)])
def test_nstep_matches_convolution_2d(law, K):
    J = _index_grid_2d(law, K)
    for n in range(1, 6):
        assert np.abs(nfold_2d(law, n, K, K) - _closed_on_grid(law, n, J)).max() < 1e-9


@pytest.mark.parametrize("law,K", [(WalkLaw1D(2, 1.0, 0.5), 14), (AnisoLaw2D(2, 1.0, 0.5), 8)])
def test_chapman_kolmogorov(law, K):
    J = _index_grid_1d(law, K) if law.dim == 1 else _index_grid_2d(law, K)
    fft, ifft = (np.fft.fft, np.fft.ifft) if law.dim == 1 else (np.fft.fft2, np.fft.ifft2)
    for n, m in itertools.product(range(1, 4), repeat=2):
        conv = np.real(ifft(fft(_closed_on_grid(law, n, J)) * fft(_closed_on_grid(law, m, J))))
        assert np.abs(conv - _closed_on_grid(law, n + m, J)).max() < 1e-9


@given(PRIMES, BS, HS, st.integers(1, 50), st.integers(0, 30))
def test_nstep_nonnegative(p, b, h, n, j):
    for law in (WalkLaw1D(p, b, 0.4), IsoLaw2D(p, b), AnisoLaw2D(p, b, h)):
        assert law.nstep_mass(n, j) >= -1e-12


@given(PRIMES, BS, HS, st.integers(1, 200))
def test_shell_masses_sum_to_one(p, b, h, n):
    for law in (WalkLaw1D(p, b, 0.2), IsoLaw2D(p, b), AnisoLaw2D(p, b, h)):
        masses = law.shell_masses(n)
        assert masses.min() >= -1e-15
        assert masses.sum() == pytest.approx(1, abs=1e-12)


def test_nstep_on_non_integer_elements():
    # the series is evaluated on all of the level-0 group
    law = AnisoLaw2D(3, 1.5, 0.7)
    g = GroupElem.of(3, 0, 0, Fraction(1, 9))
    assert law.point_index(g) == 3
    J = _index_grid_2d(law, 5)
    conv = nfold_2d(law, 3, 5, 5)
    assert law.nstep_mass(3, g) == pytest.approx(conv[0, 3 ** 3], abs=1e-9)
    assert J[0, 3 ** 3] == 3


# ---------------------------------------------------------------- moments
def test_moment_n1_is_direct_sum():
    for law in (WalkLaw1D(2, 1.0, 0.5), WalkLaw1D(3, 2.0, 0.2), IsoLaw2D(2, 1.5)):
        r = 0.4
        direct = sum(float(law.p) ** (k * r) * law.shell_prob(k) for k in range(1, 400))
        assert law.moment_closed_form(1, r) == pytest.approx(direct, rel=1e-10)


def test_moment_growth():
    law = WalkLaw1D(2, 1.0, 0.5)
    ns = [1, 2, 5, 10, 100, 1000, 10 ** 4]
    vals = [law.moment_closed_form(n, 0.5) for n in ns]
    ratios = [v / n ** 0.5 for v, n in zip(vals, ns)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert max(ratios) < 3 * min(ratios)


def test_moment_routes_agree():
    for law in (WalkLaw1D(3, 1.0, 0.3), IsoLaw2D(2, 2.0)):
        for n in (1, 7, 300):
            assert law.moment_closed_form(n, 0.6) == pytest.approx(law.moment_from_shells(n, 0.6), rel=1e-9)
    with pytest.raises(ValueError):
        WalkLaw1D(2, 1.0).moment_closed_form(1, 1.0)


# ---------------------------------------------------------------- component marginals
@pytest.mark.parametrize("law", [IsoLaw2D(2, 1.0), IsoLaw2D(3, 0.5), AnisoLaw2D(2, 1.0, 0.5),
                                 AnisoLaw2D(3, 2.0, 0.2), AnisoLaw2D(5, 1.0, 0.9)])
def test_component_marginals_bruteforce(law):
    m1, m2 = component_marginals_bruteforce(law)
    for k in range(8):
        assert law.component_marginal(1, k) == pytest.approx(m1[k], abs=1e-10)
        assert law.component_marginal(2, k) == pytest.approx(m2[k], abs=1e-10)


def test_p0_max_formula():
    for p, b in itertools.product([2, 3, 5], [0.5, 1, 2]):
        want = p * (p - 1) * (p ** b - 1) / ((p * p - 1) * (p ** (b + 1) - 1))
        assert IsoLaw2D(p, b).component_marginal(2, 0) == pytest.approx(want, abs=1e-14)
        assert component_marginals_bruteforce(IsoLaw2D(p, b))[0][0] == pytest.approx(want, abs=1e-10)


def test_paired_fine_shells_match_coarse():
    iso = IsoLaw2D(2, 1.0)
    an = AnisoLaw2D(2, 1.0, 1 - 1e-6)
    for k in range(1, 8):
        assert an.shell_prob(2 * k - 1) + an.shell_prob(2 * k) == pytest.approx(iso.shell_prob(k), abs=1e-5)


# ---------------------------------------------------------------- sampling
def test_sample_index_histogram():
    law = WalkLaw1D(2, 1.0, 0.5)
    rng = np.random.default_rng(5)
    N = 1_000_000
    draws = np.fromiter((law.sample_index(rng) for _ in range(N)), dtype=np.int64, count=N)
    counts = np.bincount(draws)
    for k in range(10):
        pk = law.shell_prob(k)
        assert abs(counts[k] / N - pk) < 4 * math.sqrt(pk * (1 - pk) / N)


@pytest.mark.parametrize("law", [WalkLaw1D(3, 1.0, 0.2), IsoLaw2D(2, 1.0), AnisoLaw2D(2, 1.0, 0.5)])
def test_sample_step_lands_in_sampled_shell(law):
    rng = np.random.default_rng(9)
    N = 20_000
    idx = np.array([law.point_index(law.sample_step(rng)) for _ in range(N)])
    for k in range(6):
        pk = law.shell_prob(k)
        assert abs(np.mean(idx == k) - pk) < 4 * math.sqrt(pk * (1 - pk) / N) + 1e-12
