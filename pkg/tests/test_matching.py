import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import min_overlap_oracle

from bhnoma.errors import InfeasibleMatching
from bhnoma.optimizer.matching import (demote_infeasible, exchange_repair, match_subcarriers, overlap_count,
                                       pair_overlap, unit_patterns)


def test_single_pair_on_two_carriers_shares_one():
    m = match_subcarriers([(0, 1)], [], K=2, Q=1, n_users=2)
    assert pair_overlap(m.beta, 0, 1) == 1
    assert np.all(m.beta.sum(axis=1) == 1)


def test_spare_carriers_go_to_the_first_units():
    assert unit_patterns(2, 5, 2) == [[0, 1], [2, 3]]
    assert unit_patterns(2, 3, 2) == [[0, 1], [2]]
    assert unit_patterns(0, 3, 1) == []


def test_more_units_than_carriers_fill_least_used():
    assert unit_patterns(5, 3, 2) == [[0], [1], [2], [0], [1]]


def test_orthogonal_pair_is_repaired_by_exchange():
    beta = np.array([[1, 0], [0, 1]], dtype=np.int8)
    fixed = exchange_repair(beta, [(0, 1)], Q=1)
    assert pair_overlap(fixed, 0, 1) == 1
    assert fixed.sum(axis=1).max() <= 1
    # input untouched
    assert beta[1, 0] == 0


def test_locked_patterns_raise():
    beta = np.array([[1, 0], [0, 1]], dtype=np.int8)
    with pytest.raises(InfeasibleMatching):
        exchange_repair(beta, [(0, 1)], Q=1, locked=True)


def test_locked_infeasible_pairs_are_demoted():
    beta = np.array([[1, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=np.int8)
    kept, demoted = demote_infeasible(beta, [(0, 1), (2, 3)], Q=1)
    assert kept == [(0, 1)] and demoted == [(2, 3)]


@st.composite
def _patterns(draw):
    K = draw(st.integers(1, 4))
    Q = draw(st.integers(1, K))
    P = draw(st.integers(1, 4))
    rows = []
    for _ in range(2 * P):
        size = draw(st.integers(1, Q))
        rows.append(draw(st.permutations(range(K)))[:size])
    beta = np.zeros((2 * P, K), dtype=np.int8)
    for i, r in enumerate(rows):
        beta[i, list(r)] = 1
    return beta, [(2 * i, 2 * i + 1) for i in range(P)], Q


@given(_patterns())
def test_exchange_gives_every_pair_a_carrier_within_limits(case):
    beta, pairs, Q = case
    fixed = exchange_repair(beta, pairs, Q)
    assert all(pair_overlap(fixed, n, m) >= 1 for n, m in pairs)
    assert fixed.sum(axis=1).max() <= Q
    assert fixed.sum(axis=1).min() >= 1


def test_overlap_count_ignores_partners():
    beta = np.array([[1, 0], [1, 0], [1, 0], [0, 1]])
    assert overlap_count(beta, [(0, 1)]) == 2
    assert overlap_count(beta, []) == 3


@pytest.mark.parametrize("M, K, Q", [(6, 2, 2), (8, 3, 1), (4, 3, 2), (6, 3, 2)])
def test_overlap_matches_exhaustive_minimum(M, K, Q):
    pairs = [(i, i + M // 2) for i in range(M // 2)]
    m = match_subcarriers(pairs, [], K, Q, M)
    assert overlap_count(m.beta, pairs) == min_overlap_oracle(pairs, K, Q, M)
    assert all(pair_overlap(m.beta, n, e) >= 1 for n, e in pairs)


def test_overlap_with_a_lone_user_matches_exhaustive_minimum():
    units = [(0, 3), (1, 4), (2,)]
    m = match_subcarriers(units[:2], [2], 2, 1, 5)
    assert overlap_count(m.beta, units[:2]) == min_overlap_oracle(units, 2, 1, 5)


def test_enough_carriers_means_no_overlap():
    pairs = [(i, i + 4) for i in range(4)]
    m = match_subcarriers(pairs, [], K=4, Q=2, n_users=8)
    assert overlap_count(m.beta, pairs) == 0
    assert m.beta.sum(axis=0).max() == 2
