import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellseries import fixtures as fx
from bellseries.estimators import (
    PER_COINCIDENCE,
    PER_SLOT,
    EstimatorError,
    ch_j,
    ch_terms_condensed,
    chsh,
    chsh_condensed,
    correlation,
    efficiency,
    efficiency_bound_ratio,
    to_ch_encoding,
)
from bellseries.table_model import (
    CondensedTable,
    RunTable,
    SettingSchedule,
    condense,
    expand_condensed,
)
from oracles import (
    M,
    P,
    block_table,
    loop_chsh,
    loop_chsh_rows,
    loop_correlation,
    quarters,
    random_block_table,
    t_term,
)


def test_correlation_fig3_alpha_beta_prime():
    est = correlation(fx.fig3(), (0, 1))
    assert est.value == -1.0
    assert est.samples == 4
    # the recorded order gives the same value
    assert correlation(fx.fig2(), (0, 1)).value == -1.0


def test_correlation_fig4_alpha_beta():
    assert correlation(fx.fig4(), (0, 0)).value == 1.0


def test_correlation_all_zero_block():
    table = RunTable(SettingSchedule.from_pairs([(0, 0)] * 4), [0] * 4, [0] * 4)
    with pytest.raises(EstimatorError, match="no coincidences"):
        correlation(table, (0, 0), PER_COINCIDENCE)
    est = correlation(table, (0, 0), PER_SLOT)
    assert est.value == 0.0 and est.samples == 4


def test_correlation_modes_differ_with_losses():
    table = fx.fig1()
    pairs = list(zip(table.a.tolist(), table.b.tolist()))
    assert correlation(table, (0, 0)).value == pytest.approx(loop_correlation(pairs))
    assert correlation(table, (0, 0), PER_SLOT).value == pytest.approx(
        loop_correlation(pairs, per_slot=True)
    )
    # coincidences at slots 0, 1, 4: products +1, -1, +1
    assert correlation(table, (0, 0)).value == pytest.approx(1 / 3)
    assert correlation(table, (0, 0), PER_SLOT).value == pytest.approx(1 / 6)


def test_correlation_missing_pair():
    with pytest.raises(EstimatorError):
        correlation(fx.fig1(), (1, 1))


def test_chsh_fig3_and_fig2():
    assert chsh(fx.fig3()).s == 2.0
    assert chsh(fx.fig2()).s == 2.0


def test_chsh_fig4():
    res = chsh(fx.fig4())
    assert res.s == 4.0
    assert res.correlation((0, 1)) == -1.0


def test_chsh_constant_table():
    s = ([P, P], [P, P])
    res = chsh(block_table(s, s, s, s))
    assert all(e.value == 1.0 for e in res.correlations)
    assert res.s == 2.0


def test_chsh_missing_pair_errors():
    with pytest.raises(EstimatorError):
        chsh(fx.fig1())


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_chsh_matches_loop_oracle(q, seed):
    table = random_block_table(np.random.default_rng(seed), q)
    assert chsh(table).s == pytest.approx(loop_chsh(table))
    assert 0 <= chsh(table).s <= 4


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.data())
def test_correlation_invariant_under_legitimate_reordering(q, seed, data):
    table = random_block_table(np.random.default_rng(seed), q, (P, M, 0))
    order = []
    for k in range(4):
        order += [k * q + i for i in data.draw(st.permutations(range(q)))]
    moved = table.permuted(order)
    for pair in ((0, 0), (0, 1), (1, 0), (1, 1)):
        assert correlation(moved, pair, PER_SLOT).value == correlation(table, pair, PER_SLOT).value


def test_chsh_condensed_fig3_down():
    res = chsh_condensed(fx.fig3_condensed())
    assert res.correlation((0, 0)) == 1.0
    assert res.correlation((0, 1)) == -1.0
    assert res.correlation((1, 0)) == 0.0
    assert res.correlation((1, 1)) == 0.0
    assert res.s == 2.0


def test_chsh_condensed_fig6():
    res = chsh_condensed(fx.fig6())
    assert [res.correlation(p) for p in ((0, 0), (0, 1), (1, 0), (1, 1))] == [1.0, 0.0, 0.0, 1.0]
    assert res.s == 2.0


def test_chsh_condensed_single_row():
    assert chsh_condensed(CondensedTable.from_rows([[P], [P], [P], [P]])).s == 2.0


def test_chsh_condensed_empty_errors():
    with pytest.raises(EstimatorError):
        chsh_condensed(CondensedTable.from_rows([[], [], [], []]))


def test_condensed_s_equals_factual_s_for_sica_tables():
    assert chsh_condensed(condense(fx.fig3())).s == chsh(fx.fig3()).s


def test_all_single_row_tables_respect_bound():
    for a, b, ap, bp in itertools.product((P, M), repeat=4):
        s = chsh_condensed(CondensedTable.from_rows([[a], [b], [ap], [bp]])).s
        assert s <= 2
        assert s == loop_chsh_rows([a], [b], [ap], [bp])
        assert abs(b - bp) + abs(b + bp) == 2


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 64).flatmap(lambda m: st.lists(
    st.lists(st.sampled_from([P, M]), min_size=m, max_size=m), min_size=4, max_size=4)))
def test_random_condensed_tables_respect_bound(rows):
    s = chsh_condensed(CondensedTable.from_rows(rows)).s
    assert s <= 2
    assert s == pytest.approx(loop_chsh_rows(*rows))


def test_zero_filled_condensed_table_is_not_asserted():
    # zeros make the Boolean argument inapplicable; the estimator still returns S
    res = chsh_condensed(CondensedTable.from_rows([[P, 0], [P, P], [0, P], [P, M]]))
    assert res.s == pytest.approx(loop_chsh_rows([P, 0], [P, P], [0, P], [P, M]))


# -- Clauser-Horne --------------------------------------------------------------


def test_ch_constant_table():
    q = 3
    s = ([1] * q, [1] * q)
    res = ch_j(block_table(s, s, s, s))
    assert all(n == q for n in res.coincidences.values())
    assert res.singles_alpha == 2 * q and res.singles_beta == 2 * q
    assert res.j == -2 * q


def test_ch_all_zero():
    z = ([0, 0], [0, 0])
    assert ch_j(block_table(z, z, z, z)).j == 0


def test_ch_single_coincidence_in_alpha_prime_beta_prime():
    z = ([0], [0])
    assert ch_j(block_table(z, z, z, ([1], [1]))).j == -1


def test_ch_rejects_non_boolean():
    with pytest.raises(EstimatorError):
        ch_j(fx.fig4())


def test_ch_encoding_keeps_plus_detector_only():
    enc = to_ch_encoding(fx.fig1())
    assert enc.a.tolist() == [0, 1, 0, 0, 1, 1]
    assert enc.b.tolist() == [0, 0, 1, 0, 1, 0]


@pytest.mark.parametrize(
    "row, expected",
    [((1, 0, 1, 1), 0), ((0, 1, 0, 1), -1), ((0, 0, 0, 0), 0)],
)
def test_ch_term_examples(row, expected):
    a, ap, b, bp = row
    res = ch_terms_condensed(CondensedTable.from_rows([[a], [b], [ap], [bp]]))
    assert res.terms == (expected,)
    assert t_term(a, ap, b, bp) == expected


def test_all_boolean_rows_have_nonpositive_terms():
    values = []
    for a, ap, b, bp in itertools.product((0, 1), repeat=4):
        res = ch_terms_condensed(CondensedTable.from_rows([[a], [b], [ap], [bp]]))
        assert res.terms[0] == t_term(a, ap, b, bp) <= 0
        values.append(res.terms[0])
    assert max(values) == 0


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 30).flatmap(lambda m: st.lists(
    st.lists(st.sampled_from([0, 1]), min_size=m, max_size=m), min_size=4, max_size=4)))
def test_condensed_j_is_sum_of_terms_and_matches_expanded_table(rows):
    cond = CondensedTable.from_rows(rows)
    res = ch_terms_condensed(cond)
    assert res.j == sum(res.terms) <= 0
    # in the factual expansion each single is counted in two quarters
    a, b = rows[0], rows[1]
    assert ch_j(expand_condensed(cond)).j == res.j - sum(a) - sum(b) <= 0


# -- efficiency -----------------------------------------------------------------


def test_fig1_efficiency():
    rep = efficiency(fx.fig1())
    assert rep.detectors["A+"] == pytest.approx(2 / 3)
    assert rep.coincidence_slots == (0, 1, 4)


def test_ideal_table_efficiency():
    rep = efficiency(fx.fig4())
    assert all(v == 1.0 for v in rep.detectors.values())
    assert rep.station_a == rep.station_b == rep.overall == 1.0


def test_efficiency_never_detected_partner():
    table = RunTable(SettingSchedule.from_pairs([(0, 0)] * 3), [1, 1, 0], [0, 0, 0])
    rep = efficiency(table)
    assert rep.detectors["A+"] == 0.0
    assert rep.detectors["A-"] is None
    assert rep.detectors["B+"] is None and rep.station_b is None


def test_efficiency_bound_ratio():
    assert efficiency_bound_ratio(4, 0.5) == (2.0, "at-bound")
    assert efficiency_bound_ratio(2, 1) == (2.0, "at-bound")
    prod, flag = efficiency_bound_ratio(2 * math.sqrt(2), 1)
    assert prod == pytest.approx(2.828, abs=1e-3) and flag == "above"
    assert efficiency_bound_ratio(2, 0.5)[1] == "below"
    with pytest.raises(EstimatorError):
        efficiency_bound_ratio(2, 0)


def test_quarters_helper_agrees_with_block():
    table = fx.fig2()
    for k, pair in enumerate(((0, 1), (0, 0), (1, 0), (1, 1))):
        ua, ub = table.block(pair)
        assert list(zip(ua.tolist(), ub.tolist())) == quarters(table)[k]
