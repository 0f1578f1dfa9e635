import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellseries import fixtures as fx
from bellseries.table_model import (
    QUARTERS,
    CompleteTable,
    CondensedTable,
    RunTable,
    ScheduleError,
    SettingLabels,
    SettingSchedule,
    SicaConditionError,
    TableError,
    UnbalancedQuartersError,
    check_sica_condition,
    condense,
    expand_complete,
    expand_condensed,
    new_run_table,
    normalize_schedule,
    quarter_profile,
)
from oracles import M, P, block_table, quarters


def test_fig1_records_build_six_slot_table():
    schedule = SettingSchedule.from_pairs([(0, 0)] * 6)
    a = [M, P, 0, M, P, P]
    b = [M, M, P, 0, P, 0]
    table = new_run_table(schedule, [(i, a[i], b[i]) for i in range(6)])
    assert len(table) == 6
    assert table.a.tolist() == a and table.b.tolist() == b
    assert table == fx.fig1()


def test_new_run_table_accepts_records_in_any_order():
    schedule = SettingSchedule.block(1)
    records = [(3, 1, 1), (0, -1, 1), (2, 0, -1), (1, 1, 0)]
    table = new_run_table(schedule, records)
    assert table.a.tolist() == [-1, 1, 0, 1]
    assert table.b.tolist() == [1, 0, -1, 1]


def test_new_run_table_empty():
    table = new_run_table(SettingSchedule.from_pairs([]), [])
    assert len(table) == 0


@pytest.mark.parametrize(
    "records, message",
    [
        ([(0, 1, 1), (1, 1, 1), (2, 1, 1), (3, 1, 1), (3, -1, 1)], "duplicate"),
        ([(0, 1, 1), (1, 1, 1), (2, 1, 1)], "missing"),
        ([(0, 1, 1), (1, 1, 1), (2, 1, 1), (3, 1, 1), (4, 1, 1)], "schedule has 4"),
        ([(0, 2, 1), (1, 1, 1), (2, 1, 1), (3, 1, 1)], "invalid outcome"),
    ],
)
def test_new_run_table_errors(records, message):
    with pytest.raises(TableError, match=message):
        new_run_table(SettingSchedule.block(1), records)


def test_grid_leaves_unmeasured_cells_empty():
    grid = fx.fig4().grid()
    # slots 1-2 are (alpha,beta'): a and b' measured, b and a' empty
    assert grid[0][:2] == [M, P]
    assert grid[1][:2] == [None, None]
    assert grid[2][:2] == [None, None]
    assert grid[3][:2] == [P, M]


def test_measured_cells_per_row_match_schedule():
    rng = np.random.default_rng(5)
    pairs = [QUARTERS[k] for k in rng.integers(0, 4, 50)]
    schedule = SettingSchedule.from_pairs(pairs)
    table = RunTable(schedule, rng.choice([-1, 0, 1], 50), rng.choice([-1, 0, 1], 50))
    grid = table.grid()
    alice = [p[0] for p in pairs]
    bob = [p[1] for p in pairs]
    assert sum(c is not None for c in grid[0]) == alice.count(0)
    assert sum(c is not None for c in grid[1]) == bob.count(0)
    assert sum(c is not None for c in grid[2]) == alice.count(1)
    assert sum(c is not None for c in grid[3]) == bob.count(1)


def test_zero_outcome_is_not_an_empty_cell():
    grid = fx.fig1().grid()
    assert grid[0][2] == 0
    assert grid[2][2] is None


def test_run_table_rejects_bad_outcomes_and_lengths():
    with pytest.raises(TableError):
        RunTable(SettingSchedule.block(1), [1, 1, 1, 2], [1, 1, 1, 1])
    with pytest.raises(TableError):
        RunTable(SettingSchedule.block(1), [1, 1, 1], [1, 1, 1, 1])


def test_setting_labels_validation():
    with pytest.raises(TableError):
        SettingLabels(("x", "x"), ("y", "z"))
    with pytest.raises(TableError):
        SettingLabels(angles=(0, 45, 22.5, 180))
    labels = SettingLabels(("H", "D"), ("R", "L"), (0, 45, 22.5, 67.5))
    assert labels.pair_name((1, 0)) == "(D,R)"
    with pytest.raises(TableError, match="unknown"):
        labels.bob_index("beta")


def test_tables_are_immutable():
    table = fx.fig4()
    with pytest.raises(ValueError):
        table.a[0] = 1


# -- quarter profiles -----------------------------------------------------------


def test_profile_fig3_alpha_beta():
    prof = quarter_profile(fx.fig3(), (0, 0))
    assert prof.counts == {(M, M): 2, (P, P): 2}


def test_profile_fig4_alpha_beta_prime():
    prof = quarter_profile(fx.fig4(), (0, 1))
    assert prof.counts == {(M, P): 1, (P, M): 1}


def test_profile_all_zero():
    table = RunTable(SettingSchedule.from_pairs([(1, 1)] * 4), [0] * 4, [0] * 4)
    assert quarter_profile(table, (1, 1)).counts == {(0, 0): 4}


def test_profile_missing_pair_errors():
    with pytest.raises(TableError, match="not in schedule"):
        quarter_profile(fx.fig1(), (1, 1))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_profiles_invariant_under_slot_permutation(data):
    n = data.draw(st.integers(1, 24))
    codes = data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    a = data.draw(st.lists(st.sampled_from([-1, 0, 1]), min_size=n, max_size=n))
    b = data.draw(st.lists(st.sampled_from([-1, 0, 1]), min_size=n, max_size=n))
    table = RunTable(SettingSchedule.from_pairs([QUARTERS[c] for c in codes]), a, b)
    order = data.draw(st.permutations(range(n)))
    moved = table.permuted(order)
    for pair in {QUARTERS[c] for c in codes}:
        assert quarter_profile(moved, pair) == quarter_profile(table, pair)


# -- schedules ----------------------------------------------------------------


def test_normalize_interleaved_schedule():
    pairs = [(1, 1), (0, 0), (0, 1), (1, 0), (0, 0), (1, 1), (1, 0), (0, 1)]
    table = RunTable(
        SettingSchedule.from_pairs(pairs), [1, -1, 1, 1, 1, -1, -1, -1], [1, 1, -1, 1, -1, 1, 1, -1]
    )
    out = normalize_schedule(table)
    assert out.schedule.is_block_form()
    assert out.schedule.pairs() == [p for p in QUARTERS for _ in range(2)]
    for pair in QUARTERS:
        assert quarter_profile(out, pair) == quarter_profile(table, pair)


def test_normalize_block_table_is_identity():
    table = fx.fig2()
    assert normalize_schedule(table) is table


def test_normalize_single_pair():
    table = fx.fig1()
    out = normalize_schedule(table)
    assert out == table


def test_normalize_is_stable_within_quarters():
    pairs = [(0, 0), (0, 1), (0, 0), (0, 1)]
    table = RunTable(SettingSchedule.from_pairs(pairs), [1, -1, -1, 1], [1, 1, 1, 1])
    out = normalize_schedule(table)
    # (alpha,beta') comes first in canonical order; recorded order kept inside a pair
    assert out.a.tolist() == [-1, 1, 1, -1]


def test_schedule_queries():
    sched = SettingSchedule.block(3)
    assert sched.is_block_form() and sched.is_balanced()
    assert sched.quarter_span((1, 0)) == (6, 9)
    assert sched.quarter_sizes() == {p: 3 for p in QUARTERS}
    uneven = SettingSchedule.from_pairs([(0, 1), (0, 0), (0, 0)])
    assert uneven.is_block_form() and not uneven.is_balanced()
    with pytest.raises(ScheduleError):
        SettingSchedule([0, 2], [0, 0])


# -- Sica's condition and condensation ------------------------------------------


def test_sica_holds_on_fig3_and_fig5():
    assert check_sica_condition(fx.fig3()).holds
    assert check_sica_condition(fx.fig5()).holds


def test_sica_fails_on_fig2_and_fig4():
    rep = check_sica_condition(fx.fig2())
    assert not rep.holds
    assert {v.row for v in rep.violations} >= {"a"}
    assert not check_sica_condition(fx.fig4()).holds


def test_sica_identical_quarters():
    s = ([M, P, P], [P, P, M])
    assert check_sica_condition(block_table(s, s, s, s)).holds


def test_sica_reports_row_a_after_b_prime_copy():
    # fig4 cells completed with b' = (+,-) in every span; row a is left
    # disagreeing between its beta and beta' spans
    q = 2
    values = np.array(
        [
            [M, P, M, P, M, P, P, M],  # a: (a,b'), (a,b) factual; rest counterfactual
            [M, P, M, P, M, P, M, P],
            [M, P, M, P, M, P, M, P],
            [P, M, P, M, P, M, P, M],
        ]
    )
    rep = check_sica_condition(CompleteTable(SettingSchedule.block(q), values))
    assert not rep.holds
    rows = {v.row: v for v in rep.violations}
    assert set(rows) == {"a"}
    # a over (alpha,beta),(alpha',beta) spans = (-,+,-,+); over the beta' spans = (-,+,+,-)
    assert rows["a"].offsets == (2, 3)
    assert rows["a"].first == ((2, 4), (4, 6))
    assert rows["a"].second == ((0, 2), (6, 8))


def test_sica_rejects_non_block_and_unbalanced():
    table = RunTable(SettingSchedule.from_pairs([(0, 0), (0, 1), (1, 0), (1, 1)]), [1] * 4, [1] * 4)
    with pytest.raises(ScheduleError):
        check_sica_condition(table)
    uneven = RunTable(SettingSchedule.from_pairs([(0, 1), (0, 0), (0, 0), (1, 0), (1, 1)]), [1] * 5, [1] * 5)
    with pytest.raises(UnbalancedQuartersError):
        condense(uneven)


def test_condense_fig3():
    assert condense(fx.fig3()) == fx.fig3_condensed()


def test_condense_fig5_gives_fig6_rows():
    c = condense(fx.fig5())
    assert c.values.tolist() == [
        [M, P, M, P],
        [M, P, M, P],
        [P, M, M, P],
        [P, M, M, P],
    ]
    # first half from (alpha,beta'): a, b' factual; second from (alpha',beta'): a', b' factual
    assert c.factual.tolist() == [
        [True, True, False, False],
        [False, False, False, False],
        [False, False, True, True],
        [True, True, True, True],
    ]


def test_condense_single_slot_quarters():
    s = ([P], [P])
    c = condense(block_table(s, s, s, s))
    assert c.quadruples() == [(P, P, P, P)]


def test_condense_refuses_violations():
    with pytest.raises(SicaConditionError):
        condense(fx.fig4())


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(*[st.sampled_from([-1, 1])] * 4), min_size=0, max_size=12))
def test_expand_then_condense_round_trip(quads):
    cond = CondensedTable.from_rows(
        [[q[k] for q in quads] for k in range(4)], np.ones((4, len(quads)), dtype=bool)
    )
    assert condense(expand_condensed(cond)) == cond
    table = expand_condensed(cond)
    assert check_sica_condition(table).holds


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 6).flatmap(lambda q: st.lists(
    st.tuples(*[st.sampled_from([-1, 1])] * 4), min_size=2 * q, max_size=2 * q)))
def test_expand_complete_round_trip(quads):
    cond = CondensedTable.from_rows([[q[k] for q in quads] for k in range(4)])
    complete = expand_complete(cond)
    assert check_sica_condition(complete).holds
    assert np.array_equal(condense(complete).values, cond.values)


def test_complete_table_factual_view():
    fact = fx.fig5().factual_table()
    assert fact == fx.fig4()
    assert quarters(fact) == quarters(fx.fig4())
