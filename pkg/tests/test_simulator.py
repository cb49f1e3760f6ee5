import math

import numpy as np
import pytest

from markov_tail.chain import InitialDistribution, build_complete, build_cycle
from markov_tail.errors import DimensionMismatchError, InvalidParameterError
from markov_tail.observable import make_observable, random_observable
from markov_tail.simulator import (
    _closed_cumsum,
    clopper_pearson_upper,
    estimate_mgf,
    replica_keys,
    simulate_sums,
    simulate_tails,
    uniforms,
)


def test_uniforms_in_unit_interval_and_reproducible():
    keys = replica_keys(5, np.arange(1000))
    a = uniforms(keys, 3)
    assert np.all((a >= 0) & (a < 1))
    assert np.array_equal(a, uniforms(replica_keys(5, np.arange(1000)), 3))
    assert not np.array_equal(a, uniforms(replica_keys(6, np.arange(1000)), 3))
    assert abs(a.mean() - 0.5) < 0.05


def test_replica_is_independent_of_batching():
    chain = build_cycle(7)
    f = random_observable(chain, 2, 1.0, 0)
    full, _ = simulate_sums(chain, f.values, chain.mu, 30, np.arange(100, dtype=np.uint64), 9)
    part, _ = simulate_sums(chain, f.values, chain.mu, 30, np.arange(40, 60, dtype=np.uint64), 9)
    assert np.array_equal(full[40:60], part)


def test_results_do_not_depend_on_workers():
    chain = build_complete(5)
    f = random_observable(chain, 1, 1.0, 1)
    a = simulate_tails(chain, f, chain.mu, 50, 20000, [0.1, 0.2], seed=3, workers=1)
    b = simulate_tails(chain, f, chain.mu, 50, 20000, [0.1, 0.2], seed=3, workers=4)
    assert a == b


def test_closed_cumsum_never_picks_zero_probability_tail():
    cdf = _closed_cumsum(np.array([[0.3, 0.7, 0.0], [0.0, 0.0, 1.0]]))
    assert np.array_equal(cdf, [[0.3, 1.0, 1.0], [0.0, 0.0, 1.0]])


def test_walk_respects_transitions():
    chain = build_cycle(6)
    f = make_observable(np.eye(6), chain)
    sums, counts = simulate_sums(
        chain, f.values, InitialDistribution.point_mass(6, 0), 1, np.arange(5000, dtype=np.uint64), 1, True
    )
    # one step from 0 lands on 1 or 5 with equal odds
    assert set(np.flatnonzero(counts)) == {1, 5}
    assert abs(counts[1] - 2500) < 200


def test_occupancy_is_near_stationary():
    chain = build_complete(8)
    f = random_observable(chain, 1, 1.0, 0)
    rep = simulate_tails(chain, f, chain.mu, 200, 2000, [0.5], seed=2, occupancy=True)
    occ = np.array(rep.occupancy)
    expected = occ.sum() / 8
    chi2 = float(((occ - expected) ** 2 / expected).sum())
    assert chi2 < 24.3  # 0.999 quantile of chi-square with 7 df


def test_clopper_pearson():
    assert clopper_pearson_upper(10, 10) == 1.0
    assert clopper_pearson_upper(0, 100) == pytest.approx(1 - 0.01 ** (1 / 100))
    # the upper bound p solves Pr{Bin(100, p) <= 5} = 0.01
    p = clopper_pearson_upper(5, 100)
    cdf = sum(math.comb(100, j) * p**j * (1 - p) ** (100 - j) for j in range(6))
    assert cdf == pytest.approx(0.01, rel=1e-9)


def test_mgf_matches_exact_value():
    from markov_tail.perturbation import quadratic_form_power

    chain = build_cycle(5)
    f = random_observable(chain, 1, 1.0, 0)
    mean, se = estimate_mgf(chain, f, [0.3], chain.mu, 20, 200_000, seed=1)
    exact = quadratic_form_power(chain, f, [0.3], chain.mu, 20)
    assert abs(mean - exact) <= 4 * se


def test_input_validation():
    chain = build_cycle(5)
    f = random_observable(chain, 1, 1.0, 0)
    with pytest.raises(InvalidParameterError):
        simulate_tails(chain, f, chain.mu, 0, 10, [0.1], 0)
    with pytest.raises(DimensionMismatchError):
        simulate_tails(chain, f, np.full(4, 0.25), 5, 10, [0.1], 0)
    assert estimate_mgf(chain, f, [0.0], chain.mu, 10, 5, 0) == (1.0, 0.0)
