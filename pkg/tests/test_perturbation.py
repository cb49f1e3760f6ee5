import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markov_tail.chain import InitialDistribution, build_complete, build_cycle, build_lazy_hypercube, spectrum
from markov_tail.errors import InvalidParameterError, PreconditionError
from markov_tail.observable import make_observable, random_observable
from markov_tail.perturbation import (
    Scaled,
    derivative_checks,
    eigenvector_derivative,
    eigvec_residuals,
    lambda0,
    path_sum,
    perturbed,
    growth_sweep,
    pseudo_inverse_sym,
    quadratic_form_power,
    resolvent_check,
    resolvent_circle,
    resolvent_norms,
    second_derivative_formula,
    verify_mgf_domination,
    verify_growth,
    worst_direction_observable,
)

from conftest import birth_death

# Perron root of the K_3 kernel tilted by f = (1, -1, 0), u = 0.7 (mpmath)
K3_LAMBDA0 = 1.0556536376927850458


def test_tilted_kernel_two_states():
    chain = build_complete(2)
    f = make_observable([[-math.log(2) / 2], [math.log(2) / 2]], chain)
    k = perturbed(chain, f, [2.0])
    assert np.allclose(k.Pu, [[0.0, 2.0], [0.5, 0.0]])
    assert lambda0(k) == pytest.approx(1.0)


def test_lambda0_reference_value():
    chain = build_complete(3)
    f = make_observable([[1.0], [-1.0], [0.0]], chain)
    assert lambda0(perturbed(chain, f, [0.7])) == pytest.approx(K3_LAMBDA0, rel=1e-14)


def test_lambda0_matches_nonsymmetric_solver():
    chain = birth_death([1.0, 3.0, 2.0, 5.0])
    f = random_observable(chain, 2, 1.0, 3)
    k = perturbed(chain, f, [0.4, -1.1])
    assert lambda0(k) == pytest.approx(max(np.linalg.eigvals(k.Pu).real), rel=1e-12)


def test_growth_single_instance():
    chain = build_complete(32)
    f = random_observable(chain, 3, 1.0, 7)
    u = np.array([0.3, -0.3, 0.1])
    u = 0.5 * u / np.linalg.norm(u)
    assert verify_growth(chain, f, u).margin > 0


def test_growth_requires_centered_and_bounded():
    chain = build_cycle(5)
    with pytest.raises(PreconditionError):
        verify_growth(chain, make_observable(np.ones((5, 1)), chain), [0.1])
    f = make_observable(3 * random_observable(chain, 1, 1.0, 0).values, chain)
    with pytest.raises(PreconditionError):
        verify_growth(chain, f, [0.1])


def test_sweep_agrees_with_single_evaluations():
    chain = build_lazy_hypercube(3)
    f = random_observable(chain, 2, 1.0, 11)
    d = np.array([0.6, 0.8])
    sweep = growth_sweep(chain, f, d, [0.5, 1.5])
    for z, rep in zip([0.5, 1.5], sweep):
        assert rep.lambda0 == pytest.approx(verify_growth(chain, f, z * d).lambda0, rel=1e-12)


def test_group_inverse_agrees_with_pseudo_inverse():
    chain = birth_death([2.0, 1.0, 4.0, 3.0, 1.5])
    n = chain.n
    one_mu = np.outer(np.ones(n), chain.mu)
    Z = np.linalg.inv(np.eye(n) - chain.P + one_mu) - one_mu
    d = np.sqrt(chain.mu)
    via_sym = (pseudo_inverse_sym(chain) * d[None, :]) / d[:, None]
    assert np.allclose(via_sym, Z, atol=1e-12)


def test_eigenvector_derivative_equals_group_inverse_formula():
    chain = build_cycle(7)
    f = random_observable(chain, 1, 1.0, 5)
    n = chain.n
    one_mu = np.outer(np.ones(n), chain.mu)
    Z = np.linalg.inv(np.eye(n) - chain.P + one_mu) - one_mu
    expected = (chain.mu * f.values[:, 0]) @ Z
    assert np.allclose(eigenvector_derivative(chain, f, [1.0]), expected, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), m=st.integers(1, 4))
def test_derivative_identities(seed, m):
    chain = build_lazy_hypercube(3)
    f = random_observable(chain, m, 1.0, seed)
    d = np.random.default_rng(seed).normal(size=m)
    d /= np.linalg.norm(d)
    rep = derivative_checks(chain, f, d)
    assert abs(rep.derivative1) <= 1e-6
    assert rep.derivative2 <= rep.d2_bound + 1e-6
    assert rep.derivative2 == pytest.approx(second_derivative_formula(chain, f, d), abs=1e-6)
    resid, orth = eigvec_residuals(chain, f, d)
    assert resid <= 1e-11 and orth <= 1e-12


def test_derivative_step_limits():
    chain = build_cycle(5)
    f = random_observable(chain, 1, 1.0, 0)
    with pytest.raises(InvalidParameterError):
        derivative_checks(chain, f, [1.0], h=1.0)
    with pytest.raises(InvalidParameterError):
        derivative_checks(chain, f, [0.5])


def test_resolvent_max_is_two_over_gap():
    for chain in (build_complete(6), build_lazy_hypercube(3), build_cycle(9)):
        g = spectrum(chain).gap
        assert resolvent_check(chain) == pytest.approx(2 / g, rel=1e-12)


def test_resolvent_top_term_is_constant_on_circle():
    # the lambda = 1 term alone equals 2/g on the whole circle
    g = spectrum(build_cycle(9)).gap
    z = resolvent_circle(g, 64, include_real_point=False)
    assert np.allclose(np.abs(1 / (1 - z)), 2 / g)
    assert np.allclose(resolvent_norms(build_cycle(9), z), 2 / g)


def test_quadratic_form_matches_paths(small_chains):
    for chain in small_chains:
        f = random_observable(chain, 2, 1.0, chain.n)
        u = np.array([0.8, -0.4])
        mu0 = InitialDistribution.point_mass(chain.n, 0)
        for N in range(0, 5):
            assert quadratic_form_power(chain, f, u, mu0, N) == pytest.approx(
                path_sum(chain, f, u, mu0, N), rel=1e-12
            )


def test_quadratic_form_at_zero_tilt_is_one():
    chain = build_cycle(6)
    f = random_observable(chain, 1, 1.0, 2)
    assert quadratic_form_power(chain, f, [0.0], chain.mu, 50) == pytest.approx(1.0)


def test_quadratic_form_overflow_is_scaled():
    chain = build_complete(3)
    f = make_observable([[100.0], [-50.0], [-50.0]], chain)
    big = quadratic_form_power(chain, f, [5.0], chain.mu, 20)
    assert isinstance(big, Scaled)
    assert big.log() > 709


def test_mgf_domination_margin():
    chain = build_complete(8)
    f = random_observable(chain, 3, 1.0, 4)
    u = np.array([1.0, 0.0, 0.0])
    assert verify_mgf_domination(chain, f, u, InitialDistribution(chain.mu), 50) >= 0
    with pytest.raises(PreconditionError):
        verify_mgf_domination(chain, f, 2 * u, chain.mu, 5)


def test_worst_direction_observable():
    chain = build_cycle(8)
    x = worst_direction_observable(chain)
    assert np.max(np.abs(x)) == pytest.approx(1.0)
    assert chain.mu @ x == pytest.approx(0.0, abs=1e-14)
    lam1 = spectrum(chain).eigenvalues[1]
    assert np.allclose(chain.P @ x, lam1 * x, atol=1e-12)
