import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import brute_centered_1d, brute_maximal_1d, brute_maximal_2d, lattice_intervals
from wlab.errors import BadExponent, DimensionMismatch
from wlab.fixtures import random_functions, random_weight
from wlab.grid import Window, all_shifts
from wlab.lorentz import GridFunction
from wlab.operators import (centered, dyadic, maximal, multilinear_maximal, n_theta,
                            product_maximal, weighted, weighted_centered, weighted_dyadic)
from wlab.weights import ExponentTuple, WeightVector, a1_constant, apr_bracket, multilinear_apr

W1 = Window(1, 2, 2)
W2 = Window(2, 1, 1)


def _pairs(window, count, seed):
    a = random_functions(window, count, seed)
    b = random_functions(window, count, seed + 99)
    return [(f, g) for (_, f), (_, g) in zip(a, b)]


def test_indicator_example():
    w = Window(1, 1, 2)
    f = GridFunction(w, (np.abs(w.centers() - 0.5) < 0.5).astype(float))
    Mf = maximal(f).values
    c = w.centers()
    assert Mf[np.searchsorted(c, 1.25)] == 1.0
    assert Mf[np.searchsorted(c, 1.75)] == pytest.approx(2 / 3, rel=1e-15)


def test_standard_dyadic_never_crosses_zero():
    w = Window(1, 1, 2)
    f = GridFunction(w, ((w.centers() > 0) & (w.centers() < 1)).astype(float))
    Mf = maximal(f, dyadic(0)).values
    assert np.all(Mf[w.centers() < 0] == 0)
    assert np.all(Mf[(w.centers() > 0) & (w.centers() < 1)] == 1)


@pytest.mark.parametrize("N_log", [3, 6, 10])
def test_uncentered_kernel_matches_brute_exactly(N_log):
    w = Window(1, N_log - 3, 2)
    rng = np.random.default_rng(N_log)
    x = rng.integers(0, 9, size=w.N).astype(float)
    assert np.array_equal(maximal(GridFunction(w, x)).values, brute_maximal_1d(x))


def test_uncentered_kernel_matches_brute_2d():
    rng = np.random.default_rng(5)
    x = rng.integers(0, 9, size=W2.shape).astype(float)
    assert np.array_equal(maximal(GridFunction(W2, x)).values, brute_maximal_2d(x))


def test_centered_kernel_matches_brute():
    rng = np.random.default_rng(6)
    w = Window(1, 2, 3)
    xs = [rng.integers(0, 9, size=w.N).astype(float) for _ in range(2)]
    got = multilinear_maximal([GridFunction(w, x) for x in xs], centered=True).values
    assert np.allclose(got, brute_centered_1d(xs), rtol=1e-14, atol=0)
    assert np.array_equal(maximal(GridFunction(w, xs[0]), centered()).values,
                          brute_centered_1d(xs[:1]))


def test_weighted_unit_base_equals_unweighted():
    one = GridFunction.constant(W1, 1.0)
    for _, f in random_functions(W1, 20, 1):
        assert np.allclose(maximal(f, weighted(one)).values, maximal(f).values, rtol=1e-12, atol=0)
        # the weighted centered family keeps only cubes inside the window
        assert np.all(maximal(f, weighted_centered(one)).values
                      <= maximal(f, centered()).values * (1 + 1e-12))


def test_product_maximal_collapses():
    for f, g in _pairs(W1, 5, 2):
        assert np.array_equal(product_maximal([f]).values, maximal(f).values)
        assert np.allclose(product_maximal([f, f]).values, maximal(f).values ** 2, rtol=1e-15)


@pytest.mark.parametrize("window", [W1, W2])
def test_multilinear_comparisons(window):
    m, n = 2, window.n
    for f, g in _pairs(window, 20, 3):
        big = multilinear_maximal([f, g]).values
        cen = multilinear_maximal([f, g], centered=True).values
        prod = product_maximal([f, g]).values
        assert np.all(big <= prod * (1 + 1e-12))
        assert np.all(cen <= big * (1 + 1e-12))
        assert np.all(big <= 3 ** (n * m) * cen * (1 + 1e-12))


def test_multilinear_constant_inputs():
    f = [GridFunction.constant(W1, 2.0), GridFunction.constant(W1, 3.5)]
    assert np.allclose(multilinear_maximal(f).values, 7.0, rtol=1e-15)


def test_mismatched_windows():
    with pytest.raises(DimensionMismatch):
        multilinear_maximal([GridFunction.constant(W1), GridFunction.constant(Window(1, 1, 2))])


@pytest.mark.parametrize("window", [Window(1, 2, 2), Window(2, 1, 1)])
def test_one_third_domination(window):
    n = window.n
    for _, f in random_functions(window, 30, 4):
        total = sum(maximal(f, dyadic(a)).values for a in all_shifts(n))
        assert np.all(maximal(f).values <= 6 ** n * total * (1 + 1e-12))


def test_weighted_dyadic_bounds():
    w = Window(1, 2, 2)
    rng = np.random.default_rng(7)
    pos = w.centers() > 0
    for it in range(10):
        u = random_weight(w, rng, ["step", "power", "mh", "lognormal"][it % 4])
        f = GridFunction(w, np.where(pos, rng.random(w.N), 0.0))
        lhs = maximal(f, dyadic(0)).values
        rhs = a1_constant(u) * maximal(f, weighted_dyadic(u, 0)).values
        assert np.all(lhs <= rhs * (1 + 1e-12))
        E = GridFunction(w, np.where(pos, rng.random(w.N) < 0.4, False).astype(float))
        for p in (1.5, 2.0, 3.0):
            lhs = maximal(E, dyadic(0)).values
            rhs = p * apr_bracket(u, p) * maximal(E, weighted_dyadic(u, 0)).values ** (1 / p)
            assert np.all(lhs <= rhs * (1 + 1e-12))


@given(st.integers(0, 10 ** 6), st.floats(0.1, 10), st.sampled_from(["uncentered", "centered"]))
def test_monotone_and_homogeneous(seed, c, kind):
    variant = None if kind == "uncentered" else centered()
    rng = np.random.default_rng(seed)
    f = GridFunction(W1, rng.random(W1.N))
    g = f + GridFunction(W1, rng.random(W1.N))
    Mf, Mg = maximal(f, variant).values, maximal(g, variant).values
    assert np.all(Mf <= Mg * (1 + 1e-12))
    assert np.allclose(maximal(f * c, variant).values, c * Mf, rtol=1e-12)


def test_n_theta_bounds():
    w = Window(1, 1, 1)
    rng = np.random.default_rng(8)
    P = ExponentTuple((2.0, 2.0))
    for it in range(10):
        ws = [random_weight(w, rng, "lognormal") for _ in range(2)]
        wv = WeightVector(tuple(ws))
        f = [GridFunction(w, rng.random(w.N) * (rng.random(w.N) < 0.6)) for _ in range(2)]
        if not all(g.values.any() for g in f):
            continue
        bracket = multilinear_apr(wv, P)
        Mf = multilinear_maximal(f).values
        for theta in (P.p, 2 * P.p):
            N = n_theta(f, wv, P, theta).values
            assert np.all(Mf <= bracket * N ** (1 / theta) * (1 + 1e-12))
        a = n_theta(f, wv, P, 1.0).values
        b = n_theta(f, wv, P, 2.0).values
        assert np.allclose(b ** 0.5, a, rtol=1e-12)


def test_n_theta_indicator_finite():
    w = Window(1, 1, 1)
    one = GridFunction.constant(w, 1.0)
    chi = GridFunction(w, ((w.centers() > 0) & (w.centers() < 1)).astype(float))
    P = ExponentTuple((2.0, 2.0))
    N = n_theta([chi, chi], WeightVector((one, one)), P, P.p).values
    assert np.all(np.isfinite(N)) and N.max() > 0
    with pytest.raises(BadExponent):
        n_theta([chi, chi], WeightVector((one, one)), P, 0.0)
