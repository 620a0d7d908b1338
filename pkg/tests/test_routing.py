from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ringdev.errors import DimensionError, DomainError, NoRootError
from ringdev.routing import (is_balanced, is_ring_balanced, maximal_balanced_sets, simplex_min, solve_O1,
                             solve_O2)

A0 = 0.5


# -- brute-force oracles ------------------------------------------------------------

def ring_loads(a, alpha):
    """b[i] = alpha[i] a[i] + (1 - alpha[i+1]) a[i+1] for alpha of shape (..., k)."""
    a = np.asarray(a, dtype=float)
    nxt = np.roll(np.arange(a.size), -1)
    return alpha * a + (1 - alpha[..., nxt]) * a[nxt]


def arc_loads(a, alpha):
    """l+1 servers fed by l flows: server j gets alpha[j-1] a[j-1] + (1 - alpha[j]) a[j]."""
    a = np.asarray(a, dtype=float)
    l = a.size
    shape = alpha.shape[:-1] + (l + 1,)
    b = np.zeros(shape)
    b[..., 1:] += alpha * a
    b[..., :-1] += (1 - alpha) * a
    return b


def grid_O1(a, step=0.005):
    a = np.asarray(a, dtype=float)
    k = a.size
    g = np.linspace(0, 1, int(round(1 / step)) + 1)
    best = np.inf
    # chunk over the first fraction to keep memory bounded
    rest = np.stack(np.meshgrid(*([g] * (k - 1)), indexing="ij"), axis=-1).reshape(-1, k - 1)
    for a0 in g:
        alpha = np.concatenate([np.full((rest.shape[0], 1), a0), rest], axis=1)
        b = ring_loads(a, alpha)
        D = np.abs(b - np.roll(b, -1, axis=1)).sum(axis=1)
        best = min(best, float(D.min()))
    return best


def grid_O2(a, step=0.005):
    a = np.asarray(a, dtype=float)
    l = a.size
    g = np.linspace(0, 1, int(round(1 / step)) + 1)
    alpha = np.stack(np.meshgrid(*([g] * l), indexing="ij"), axis=-1).reshape(-1, l)
    b = arc_loads(a, alpha)
    return float(np.abs(np.diff(b, axis=1)).sum(axis=1).min())


# -- simplex ------------------------------------------------------------------------

def test_simplex_small_lp():
    # min -x - y s.t. x + 2y <= 4, 3x + y <= 6
    x, v = simplex_min([-1, -1], [[1, 2], [3, 1]], [4, 6])
    assert x == [Fraction(8, 5), Fraction(6, 5)]
    assert v == Fraction(-14, 5)


def test_simplex_negative_rhs_and_infeasible():
    # x >= 2 written as -x <= -2; minimize x
    x, v = simplex_min([1], [[-1]], [-2])
    assert v == 2
    with pytest.raises(NoRootError):
        simplex_min([1], [[-1], [1]], [-2, 1])


def test_simplex_matches_scipy_linprog():
    from scipy.optimize import linprog
    rng = np.random.default_rng(4)
    for _ in range(30):
        m, n = 4, 3
        A = rng.integers(-3, 5, size=(m, n))
        b = rng.integers(1, 10, size=m)
        c = rng.integers(-5, 5, size=n)
        ref = linprog(c, A_ub=A, b_ub=b, bounds=[(0, None)] * n, method="highs")
        if ref.status == 3:
            with pytest.raises(NoRootError):
                simplex_min(c.tolist(), A.tolist(), b.tolist())
            continue
        _, v = simplex_min(c.tolist(), A.tolist(), b.tolist())
        assert float(v) == pytest.approx(ref.fun, abs=1e-9)


# -- O1 ---------------------------------------------------------------------------------

def test_O1_equal_slopes():
    load, split = solve_O1([2.0] * 5)
    assert load.D == 0
    np.testing.assert_array_equal(load.b, 2.0)


def test_O1_homogeneous():
    base = [1.0, 0.3, 2.2]
    D1 = solve_O1(base)[0].D
    for s in (0.5, 3.0, 17.0):
        assert solve_O1([s * x for x in base])[0].D == pytest.approx(s * D1, rel=1e-12)


def test_O1_single_hot_flow_matches_grid():
    a = [8.0, A0, A0]
    load, split = solve_O1(a)
    g = grid_O1(a)
    assert load.D <= g + 1e-3
    assert load.D >= g - 0.005 * 2 * sum(a)
    assert load.D == pytest.approx(6.0, abs=1e-12)
    np.testing.assert_allclose(load.b, [4.0, 1.0, 4.0], atol=1e-12)
    np.testing.assert_allclose(ring_loads(a, split.alpha), load.b, atol=1e-12)


# -- O2 ---------------------------------------------------------------------------------

def test_O2_single_flow_splits_evenly():
    load, split = solve_O2([2.0])
    assert load.D == 0
    np.testing.assert_allclose(load.b, [1.0, 1.0])


def test_O2_two_equal_flows():
    load, _ = solve_O2([1.0, 1.0])
    assert load.D == 0
    np.testing.assert_allclose(load.b, [2 / 3] * 3, rtol=1e-15)
    assert grid_O2([1.0, 1.0]) < 1e-2


def test_O2_unequal_pair_matches_grid():
    load, split = solve_O2([4.0, 1.0])
    assert abs(load.D - grid_O2([4.0, 1.0])) <= 1e-3
    assert load.D == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(arc_loads([4.0, 1.0], split.alpha), load.b, atol=1e-12)
    assert len(split.alpha) == 2


def test_balanced_arc_load_is_l_over_l_plus_one():
    for l in range(1, 6):
        load, _ = solve_O2([3.0] * l)
        np.testing.assert_allclose(load.b, 3.0 * l / (l + 1), rtol=1e-14)


@pytest.mark.parametrize("seed", range(20))
def test_random_instances_against_grid(seed):
    rng = np.random.default_rng(seed)
    k = 3
    a = rng.uniform(0.0, 5.0, k)
    load, split = solve_O1(a)
    assert load.D <= grid_O1(a, step=0.01) + 1e-3
    assert load.b.sum() == pytest.approx(a.sum(), abs=1e-12)
    l = int(rng.integers(1, 4))
    s = rng.uniform(0.0, 5.0, l)
    load2, split2 = solve_O2(s)
    assert load2.D <= grid_O2(s) + 1e-3
    assert load2.b.sum() == pytest.approx(s.sum(), abs=1e-12)
    assert np.all((split2.alpha >= 0) & (split2.alpha <= 1))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=3, max_size=6))
def test_O1_properties(a):
    load, split = solve_O1(a)
    assert np.all((split.alpha >= 0) & (split.alpha <= 1))
    np.testing.assert_allclose(ring_loads(a, split.alpha), load.b, atol=1e-9)
    assert load.b.sum() == pytest.approx(sum(a), rel=1e-12, abs=1e-12)
    assert load.D >= 0
    # any feasible split is no better
    rng = np.random.default_rng(0)
    for _ in range(20):
        b = ring_loads(a, rng.random(len(a)))
        assert np.abs(b - np.roll(b, -1)).sum() >= load.D - 1e-9


# -- balance and maximal sets ----------------------------------------------------------

def test_is_balanced_examples():
    assert is_balanced([2.0, 2.0, 2.0])
    assert is_balanced([7.0])
    assert is_balanced([4.0, 1.0]) == (grid_O2([4.0, 1.0]) <= 1e-9)
    assert not is_balanced([4.0, 1.0])
    assert is_ring_balanced([1.0, 1.0, 1.0, 1.0])


def test_maximal_sets_all_equal():
    assert maximal_balanced_sets([1.0, 1.0, 1.0, 1.0]) == [(0, 1, 2, 3)]


def test_maximal_sets_single_hot_flow():
    h = 10.0
    assert maximal_balanced_sets([h, A0, A0, A0]) == [(0,)]
    assert grid_O2([h, A0]) > 1.0
    assert grid_O2([A0, h]) > 1.0


def test_maximal_sets_two_hot_flows_balance_the_whole_ring():
    # two hot flows can push enough work onto the cool flow's server to level all three
    h = 10.0
    a = [h, h, A0]
    assert maximal_balanced_sets([h, h, h]) == [(0, 1, 2)]
    # the grid reaches D = 0 up to its own resolution (step * largest slope)
    assert grid_O1(a) <= 0.005 * h + 1e-12
    load, split = solve_O1(a)
    assert load.D == 0
    np.testing.assert_allclose(load.b, sum(a) / 3, rtol=1e-14)
    np.testing.assert_allclose(ring_loads(a, split.alpha), sum(a) / 3, rtol=1e-14)
    assert maximal_balanced_sets(a) == [(0, 1, 2)]


def test_maximal_sets_contain_flow_zero_and_are_connected():
    rng = np.random.default_rng(9)
    for _ in range(30):
        k = int(rng.integers(3, 7))
        a = rng.choice([A0, 3.0, 9.0], size=k)
        for s in maximal_balanced_sets(a):
            assert 0 in s
            assert all((s[j + 1] - s[j]) % k == 1 for j in range(len(s) - 1))


def test_validation():
    with pytest.raises(DimensionError):
        solve_O1([1.0, 1.0])
    with pytest.raises(DomainError):
        solve_O1([1.0, -1.0, 1.0])
    with pytest.raises(DimensionError):
        solve_O2([])
