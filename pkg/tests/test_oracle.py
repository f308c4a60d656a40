import numpy as np
import pytest

from sparse_cca import (
    BudgetExceededError,
    GreedyConfig,
    InputError,
    SparsityPattern,
    exhaustive_sparse_cca,
    oracle_curve,
    run_greedy,
    seed_pair,
    solve_cca,
    solve_on_pattern,
    wishart_sample,
)
from sparse_cca.oracle import pattern_count


def test_full_cardinality_is_full_cca():
    cov = wishart_sample(1, 10, 10)
    sol = exhaustive_sparse_cca(cov, 5, 5)
    assert sol.rho == solve_cca(cov).rho
    assert sol.pattern == SparsityPattern.full(5, 5)


def test_one_by_one_is_seed():
    for seed in range(5):
        cov = wishart_sample(seed, 12, 12)
        pattern, sol = seed_pair(cov)
        best = exhaustive_sparse_cca(cov, 1, 1)
        assert best.pattern == pattern
        assert best.rho == sol.rho


def test_oracle_is_a_true_maximum():
    cov = wishart_sample(4, 8, 8)
    best = exhaustive_sparse_cca(cov, 2, 2)
    from itertools import combinations

    brute = max(
        solve_on_pattern(cov, SparsityPattern(I, J)).rho
        for I in combinations(range(4), 2)
        for J in combinations(range(4), 2)
    )
    assert abs(best.rho - brute) < 1e-12


def test_lexicographic_tie_break():
    from sparse_cca import CovarianceTriple

    cov = CovarianceTriple(np.eye(3), np.eye(3), np.full((3, 3), 0.1))
    assert exhaustive_sparse_cca(cov, 1, 2).pattern == SparsityPattern((0,), (0, 1))


@pytest.mark.parametrize("seed", range(5))
def test_dominates_forward_greedy(seed):
    cov = wishart_sample(seed, 10, 10)
    table = {
        (ka, kb): exhaustive_sparse_cca(cov, ka, kb).rho
        for ka in range(1, 6)
        for kb in range(1, 6)
    }
    for ka in range(1, 6):
        for kb in range(1, 6):
            if ka < 5:
                assert table[(ka, kb)] <= table[(ka + 1, kb)] + 1e-12
            if kb < 5:
                assert table[(ka, kb)] <= table[(ka, kb + 1)] + 1e-12
    for e in run_greedy(cov, GreedyConfig(5, 5, "exact")).entries:
        assert e.rho <= table[(len(e.pattern.I), len(e.pattern.J))] + 1e-12


def test_budget_refusal():
    cov = wishart_sample(0, 40, 40)
    with pytest.raises(BudgetExceededError) as info:
        exhaustive_sparse_cca(cov, 5, 5)
    assert info.value.count == pattern_count(20, 20, 5, 5) == 15504**2


def test_out_of_range_cardinality():
    with pytest.raises(InputError):
        exhaustive_sparse_cca(wishart_sample(0, 6, 6), 4, 1)


def test_curve():
    cov = wishart_sample(2, 10, 10)
    curve = oracle_curve(cov, 10)
    assert [p.k_a + p.k_b for p in curve] == list(range(2, 11))
    assert curve[0].rho == seed_pair(cov)[1].rho
    assert curve[-1].rho == solve_cca(cov).rho
    rhos = np.array([p.rho for p in curve])
    assert np.all(np.diff(rhos) >= -1e-12)
    for p in curve:
        assert p.solution.rho == p.rho


def test_curve_budget_per_point():
    cov = wishart_sample(2, 20, 20)
    with pytest.raises(BudgetExceededError):
        oracle_curve(cov, 20, budget=1000)
