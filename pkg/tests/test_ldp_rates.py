import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from ringdev.distributions import MessageLengthModel
from ringdev.errors import DimensionError, DomainError, InfeasibleError, NoRootError
from ringdev.ldp_rates import (Configuration, NetworkParams, balanced_set_rate, configuration_rate, optimal_profile,
                               rate_J, scenario, solve_theta_l, solve_theta_star)

EXP1 = MessageLengthModel.exponential(1.0)
MIX = MessageLengthModel.mixture(1.0, 0.5)
DET1 = MessageLengthModel.deterministic(1.0)
MODELS = [EXP1, MIX, DET1]


def brent_root(model, lam, weight):
    """Oracle: positive root of weight*lam*(phi(t)-1) = t via scipy."""
    g = lambda t: weight * lam * model.mgf_minus_one(t) - t
    hi = min(model.theta_plus * (1 - 1e-9), 50.0)
    lo = 1e-9
    return brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


# -- roots ----------------------------------------------------------------------

def test_theta_l_exponential_closed_form():
    assert solve_theta_l(EXP1, 0.5, 1) == pytest.approx(0.75, rel=1e-12)
    for lam in (0.1, 0.5, 0.9):
        for l in (1, 2, 5):
            assert solve_theta_l(EXP1, lam, l) == pytest.approx(1 - l * lam / (l + 1), rel=1e-12)


def test_theta_l_near_hat_lambda():
    assert solve_theta_l(EXP1, 1 - 1e-9, 1) == pytest.approx(0.5, abs=1e-8)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_theta_l_collapses_at_validity_boundary(model):
    l = 2
    edge = model.hat_lambda * (l + 1) / l
    assert solve_theta_l(model, edge * (1 - 1e-6), l) < 1e-4
    with pytest.raises(NoRootError):
        solve_theta_l(model, edge * (1 + 1e-9), l)


def test_theta_star_values():
    assert solve_theta_star(EXP1, 0.25) == pytest.approx(0.75, rel=1e-12)
    assert solve_theta_star(DET1, 0.5) == pytest.approx(1.256431, abs=1e-6)
    assert solve_theta_star(DET1, 1 - 1e-8) < 1e-6
    with pytest.raises(NoRootError):
        solve_theta_star(DET1, 1.0)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
@pytest.mark.parametrize("frac", [0.1, 0.5, 0.9, 0.99])
def test_roots_match_brentq(model, frac):
    lam = frac * model.hat_lambda
    assert solve_theta_star(model, lam) == pytest.approx(brent_root(model, lam, 1.0), rel=1e-10)
    for l in (1, 3, 7):
        assert solve_theta_l(model, lam, l) == pytest.approx(brent_root(model, lam, l / (l + 1)), rel=1e-10)


# -- rates and profiles -----------------------------------------------------------

def test_rate_J_values():
    p = NetworkParams(3, 0.25, 1.0, EXP1)
    assert rate_J(p, 1) == pytest.approx(1.75, rel=1e-12)
    assert rate_J(p, 3) == pytest.approx(2.25, rel=1e-12)
    p2 = NetworkParams(3, 0.25, 2.0, EXP1)
    for l in (1, 2, 3):
        assert rate_J(p2, l) == pytest.approx(2 * rate_J(p, l), rel=1e-14)


def test_optimal_profile_values():
    prof = optimal_profile(NetworkParams(3, 0.5, 1.0, EXP1), 3)
    assert (prof.theta, prof.a, prof.b, prof.T) == pytest.approx((0.5, 2.0, 2.0, 1.0), rel=1e-12)
    prof = optimal_profile(NetworkParams(3, 0.5, 1.0, EXP1), 1)
    assert (prof.theta, prof.a, prof.b, prof.T) == pytest.approx((0.75, 8.0, 4.0, 1 / 3), rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(MODELS), st.floats(0.05, 0.98), st.integers(3, 12), st.floats(0.1, 10.0))
def test_profile_overload_identity(model, frac, k, d):
    p = NetworkParams(k, frac * model.hat_lambda, d, model)
    for l in range(1, k + 1):
        try:
            prof = optimal_profile(p, l)
        except (InfeasibleError, NoRootError):
            continue
        assert prof.b * prof.T - prof.T == pytest.approx(d, rel=1e-12)
        assert prof.J == pytest.approx(rate_J(p, l), rel=1e-14)


def test_profile_rate_equals_configuration_rate():
    # an l-flow profile costs l * Lambda*(a) * T plus nothing for the rest; check it equals J
    for model in MODELS:
        p = NetworkParams(5, 0.5 * model.hat_lambda, 1.0, model)
        for l in (1, 2, 5):
            prof = optimal_profile(p, l)
            a0 = p.lam * model.mean
            a = np.full(5, a0)
            a[:l] = prof.a
            assert configuration_rate(model, p.lam, Configuration(a, prof.T)) == pytest.approx(prof.J, rel=1e-9)


def test_scenario_exponential_threshold():
    assert scenario(NetworkParams(3, 0.4, 1.0, EXP1)).l_opt == 1
    assert scenario(NetworkParams(3, 0.6, 1.0, EXP1)).l_opt == 3


def test_scenario_invariant_in_d():
    for model in MODELS:
        for lam in np.linspace(0.05, 0.95, 10) * model.hat_lambda:
            ls = {scenario(NetworkParams(6, lam, d, model)).l_opt for d in (0.3, 1.0, 7.0)}
            assert len(ls) == 1


def test_scenario_deterministic_examples():
    assert scenario(NetworkParams(20, 0.91, 1.0, DET1)).l_opt == 2
    assert scenario(NetworkParams(30, 0.958, 1.0, DET1)).l_opt == 3


def test_scenario_rejects_unstable():
    with pytest.raises(DomainError):
        scenario(NetworkParams(3, 1.5, 1.0, EXP1))


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
@pytest.mark.parametrize("k", [3, 5, 10])
def test_full_ring_cheaper_than_all_but_one(model, k):
    for lam in np.linspace(0.01, 0.99, 50) * model.hat_lambda:
        p = NetworkParams(k, lam, 1.0, model)
        assert rate_J(p, k) < rate_J(p, k - 1)


def test_params_validation():
    with pytest.raises(DimensionError):
        NetworkParams(2, 0.5, 1.0, EXP1)
    with pytest.raises(DomainError):
        NetworkParams(3, -0.5, 1.0, EXP1)
    with pytest.raises(DomainError):
        NetworkParams(3, 0.5, -1.0, EXP1)
    with pytest.raises(DomainError):
        rate_J(NetworkParams(3, 0.5, 1.0, EXP1), 4)


# -- configuration rates ----------------------------------------------------------

def test_configuration_rate_values():
    a0 = 0.5
    assert configuration_rate(EXP1, 0.5, Configuration([a0, a0, a0], 1.0)) == pytest.approx(0.0, abs=1e-15)
    assert configuration_rate(EXP1, 0.5, Configuration([2.0, a0, a0], 1.0)) == pytest.approx(0.5, rel=1e-12)
    assert configuration_rate(EXP1, 0.5, Configuration([2.0, a0, a0], 3.0)) == pytest.approx(1.5, rel=1e-12)


def test_balanced_set_rate_values():
    assert balanced_set_rate(EXP1, 0.5, 0.5, 3, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert balanced_set_rate(EXP1, 0.5, 2.0, 2, 1.0) == pytest.approx(1.0, rel=1e-12)
    assert balanced_set_rate(DET1, 0.5, 1.0, 1, 2.0) == pytest.approx(
        configuration_rate(DET1, 0.5, Configuration([1.0, 0.5, 0.5], 2.0)), rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(MODELS), st.floats(0.1, 0.9), st.integers(2, 6), st.floats(1.2, 6.0),
       st.lists(st.floats(-1.0, 1.0), min_size=6, max_size=6))
def test_equal_overheating_is_cheapest(model, frac, size, factor, noise):
    lam = frac * model.hat_lambda
    a0 = lam * model.mean
    h = factor * a0
    eps = np.array(noise[:size])
    eps -= eps.mean()
    # zero-sum perturbation that keeps every slope at or above the mean slope
    a = h + eps * (h - a0) / max(1e-12, float(np.max(np.abs(eps))))
    equal = balanced_set_rate(model, lam, h, size, 1.0)
    assert configuration_rate(model, lam, Configuration(a, 1.0)) >= equal - 1e-9
