"""Worked example tables.

``fig1`` is a single-setting run with detector losses. ``fig2`` to ``fig6``
follow one small ideal-efficiency experiment through reordering,
condensation and completion; the slot layout is the canonical block order
(alpha,beta'), (alpha,beta), (alpha',beta), (alpha',beta').
"""

from __future__ import annotations

import numpy as np

from bellseries.table_model import (
    ALPHA,
    BETA,
    CompleteTable,
    CondensedTable,
    RunTable,
    SettingSchedule,
    condense,
)

P, M = 1, -1


def _block(q1, q2, q3, q4) -> RunTable:
    """Factual table from four quarters given as (station A, station B) series."""
    q = len(q1[0])
    a = np.concatenate([q1[0], q2[0], q3[0], q4[0]])
    b = np.concatenate([q1[1], q2[1], q3[1], q4[1]])
    return RunTable(SettingSchedule.block(q), a, b)


def fig1() -> RunTable:
    """Six slots at one setting pair; zeros are missed detections."""
    schedule = SettingSchedule.from_pairs([(ALPHA, BETA)] * 6)
    return RunTable(schedule, [M, P, 0, M, P, P], [M, M, P, 0, P, 0])


def fig2() -> RunTable:
    """Recorded order before reordering (Q = 4).

    Row ``a`` reads (-,-,+,+) under beta' and (-,+,-,+) under beta. The
    (alpha',beta) quarter is one arrangement of the slots that ``fig3``
    shows in Sica form.
    """
    return _block(
        ([M, M, P, P], [P, P, M, M]),
        ([M, P, M, P], [M, P, M, P]),
        ([M, P, P, M], [M, M, P, P]),
        ([M, P, P, M], [P, M, P, M]),
    )


def fig3() -> RunTable:
    """``fig2`` after legitimate reordering: every row repeats (S = 2)."""
    return _block(
        ([M, P, M, P], [P, M, P, M]),
        ([M, P, M, P], [M, P, M, P]),
        ([M, P, P, M], [M, P, M, P]),
        ([M, P, P, M], [P, M, P, M]),
    )


def fig3_condensed() -> CondensedTable:
    return CondensedTable.from_rows(
        [[M, P, M, P], [M, P, M, P], [M, P, P, M], [P, M, P, M]],
        np.ones((4, 4), dtype=bool),
    )


def fig4() -> RunTable:
    """Two slots per pair with S = 4; no legitimate reordering exists."""
    return _block(
        ([M, P], [P, M]),
        ([M, P], [M, P]),
        ([M, P], [M, P]),
        ([M, P], [M, P]),
    )


FIG5_CHOICE = ((M, P), (P, M))  # counterfactual a under alpha', a' under alpha


def fig5() -> CompleteTable:
    """A complete Sica's table containing the factual data of ``fig4``."""
    values = [
        [M, P, M, P, M, P, M, P],
        [M, P, M, P, M, P, M, P],
        [P, M, P, M, M, P, M, P],
        [P, M, M, P, P, M, M, P],
    ]
    return CompleteTable(SettingSchedule.block(2), values)


def fig6() -> CondensedTable:
    """Condensation of ``fig5``; mixes factual and counterfactual cells."""
    return condense(fig5())


ALL = {
    "fig1": fig1,
    "fig2": fig2,
    "fig3": fig3,
    "fig3_condensed": fig3_condensed,
    "fig4": fig4,
    "fig5": fig5,
    "fig6": fig6,
}
