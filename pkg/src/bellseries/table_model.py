"""Outcome tables for two-station, two-setting Bell runs.

A run is a sequence of time slots. In each slot Alice uses one of her two
settings (``ALPHA`` or ``ALPHA_P``) and Bob one of his (``BETA`` or
``BETA_P``). Each station records one outcome per slot: ``+1``, ``-1`` or
``0`` (no detector fired). The table view has four rows ``a, b, a', b'``;
in a factual table only the row matching the slot's setting is measured and
the other is *empty* (``None``), which is not the same thing as ``0``.

Slot indices are 0-based everywhere in the library.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

ALPHA, ALPHA_P = 0, 1
BETA, BETA_P = 0, 1

# Canonical block order: (alpha,beta'), (alpha,beta), (alpha',beta), (alpha',beta').
QUARTERS: tuple[tuple[int, int], ...] = (
    (ALPHA, BETA_P),
    (ALPHA, BETA),
    (ALPHA_P, BETA),
    (ALPHA_P, BETA_P),
)
ROWS = ("a", "b", "a'", "b'")
OUTCOMES = (1, -1, 0)

# rank of each setting pair in QUARTERS, indexed by 2 * alice + bob
_RANK_BY_CODE = np.array([1, 0, 2, 3], dtype=np.int64)

Pair = tuple[int, int]
Span = tuple[int, int]


class TableError(ValueError):
    """Malformed or inconsistent table input."""


class ScheduleError(TableError):
    """The schedule does not have the required shape (e.g. not block form)."""


class UnbalancedQuartersError(TableError):
    """The four setting-pair quarters do not hold the same number of slots."""


class SicaConditionError(TableError):
    """An operation needed Sica's condition and the table does not satisfy it."""


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _check_outcomes(arr: np.ndarray, what: str) -> None:
    bad = ~np.isin(arr, OUTCOMES)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise TableError(f"{what}: invalid outcome {arr.flat[i]!r} at position {i}")


@dataclass(frozen=True)
class SettingLabels:
    """Display names for the four settings and optional analyzer angles.

    ``angles`` is ordered ``(alpha, alpha', beta, beta')`` in degrees.
    """

    alice: tuple[str, str] = ("alpha", "alpha'")
    bob: tuple[str, str] = ("beta", "beta'")
    angles: Optional[tuple[float, float, float, float]] = None

    def __post_init__(self):
        names = list(self.alice) + list(self.bob)
        if len(self.alice) != 2 or len(self.bob) != 2:
            raise TableError("each station needs exactly two setting labels")
        if len(set(names)) != 4:
            raise TableError(f"setting labels must be distinct, got {names}")
        if self.angles is not None:
            if len(self.angles) != 4:
                raise TableError("angles must list alpha, alpha', beta, beta'")
            for ang in self.angles:
                if not 0.0 <= ang < 180.0:
                    raise TableError(f"angle {ang} outside [0, 180)")
            object.__setattr__(self, "angles", tuple(float(x) for x in self.angles))

    def alice_index(self, label: str) -> int:
        try:
            return self.alice.index(label)
        except ValueError:
            raise TableError(f"unknown Alice setting label {label!r}") from None

    def bob_index(self, label: str) -> int:
        try:
            return self.bob.index(label)
        except ValueError:
            raise TableError(f"unknown Bob setting label {label!r}") from None

    def pair_name(self, pair: Pair) -> str:
        return f"({self.alice[pair[0]]},{self.bob[pair[1]]})"


@dataclass(frozen=True, eq=False)
class SettingSchedule:
    """Per-slot setting assignment for both stations."""

    alice: np.ndarray
    bob: np.ndarray
    labels: SettingLabels = field(default_factory=SettingLabels)

    def __post_init__(self):
        alice = _frozen(self.alice, np.int8)
        bob = _frozen(self.bob, np.int8)
        if alice.ndim != 1 or alice.shape != bob.shape:
            raise ScheduleError("alice and bob settings must be 1-D and equally long")
        if not (np.isin(alice, (0, 1)).all() and np.isin(bob, (0, 1)).all()):
            raise ScheduleError("setting indices must be 0 or 1")
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "bob", bob)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Pair], labels: SettingLabels | None = None):
        pairs = list(pairs)
        alice = [p[0] for p in pairs]
        bob = [p[1] for p in pairs]
        return cls(alice, bob, labels or SettingLabels())

    @classmethod
    def block(cls, q: int, labels: SettingLabels | None = None):
        """Canonical block schedule with ``q`` slots per setting pair."""
        if q < 0:
            raise ScheduleError("slots per pair must be nonnegative")
        return cls.from_pairs([p for p in QUARTERS for _ in range(q)], labels)

    def __len__(self) -> int:
        return int(self.alice.shape[0])

    def __eq__(self, other):
        if not isinstance(other, SettingSchedule):
            return NotImplemented
        return (
            self.labels == other.labels
            and np.array_equal(self.alice, other.alice)
            and np.array_equal(self.bob, other.bob)
        )

    def pair_at(self, slot: int) -> Pair:
        return int(self.alice[slot]), int(self.bob[slot])

    def pairs(self) -> list[Pair]:
        return list(zip(self.alice.tolist(), self.bob.tolist()))

    def ranks(self) -> np.ndarray:
        return _RANK_BY_CODE[2 * self.alice.astype(np.int64) + self.bob]

    def slots(self, pair: Pair) -> np.ndarray:
        return np.flatnonzero((self.alice == pair[0]) & (self.bob == pair[1]))

    def quarter_sizes(self) -> dict[Pair, int]:
        counts = np.bincount(self.ranks(), minlength=4)
        return {p: int(c) for p, c in zip(QUARTERS, counts)}

    def is_block_form(self) -> bool:
        return bool(np.all(np.diff(self.ranks()) >= 0))

    def is_balanced(self) -> bool:
        return len(set(self.quarter_sizes().values())) == 1

    def quarter_span(self, pair: Pair) -> Span:
        """Half-open slot range of ``pair`` in a block-form schedule."""
        idx = self.slots(pair)
        if idx.size == 0:
            return (0, 0)
        return int(idx[0]), int(idx[-1]) + 1

    def measured_mask(self) -> np.ndarray:
        """Boolean (4, N) array: which of rows a, b, a', b' are measured."""
        return np.stack(
            [self.alice == ALPHA, self.bob == BETA, self.alice == ALPHA_P, self.bob == BETA_P]
        )

    def permuted(self, order: Sequence[int]) -> "SettingSchedule":
        order = np.asarray(order, dtype=np.int64)
        return SettingSchedule(self.alice[order], self.bob[order], self.labels)


@dataclass(frozen=True, eq=False)
class RunTable:
    """Factual outcomes of a run.

    ``a`` and ``b`` hold the outcome recorded at stations A and B in every
    slot; the schedule says which row (``a`` or ``a'``, ``b`` or ``b'``)
    each outcome belongs to.
    """

    schedule: SettingSchedule
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _frozen(self.a, np.int8)
        b = _frozen(self.b, np.int8)
        n = len(self.schedule)
        if a.shape != (n,) or b.shape != (n,):
            raise TableError(f"outcome series must have length {n}")
        _check_outcomes(a, "station A")
        _check_outcomes(b, "station B")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __len__(self) -> int:
        return len(self.schedule)

    def __eq__(self, other):
        if not isinstance(other, RunTable):
            return NotImplemented
        return (
            self.schedule == other.schedule
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
        )

    @property
    def labels(self) -> SettingLabels:
        return self.schedule.labels

    @property
    def q(self) -> int:
        """Slots per setting pair; only defined for balanced tables."""
        if not self.schedule.is_balanced():
            raise UnbalancedQuartersError(f"unequal quarters {self.schedule.quarter_sizes()}")
        return self.schedule.quarter_sizes()[QUARTERS[0]]

    def block(self, pair: Pair) -> tuple[np.ndarray, np.ndarray]:
        """Outcomes (station A, station B) over the slots carrying ``pair``."""
        idx = self.schedule.slots(pair)
        return self.a[idx], self.b[idx]

    def grid(self) -> list[list[Optional[int]]]:
        """Rows a, b, a', b' with ``None`` in empty cells."""
        mask = self.schedule.measured_mask()
        src = (self.a, self.b, self.a, self.b)
        return [
            [int(v) if m else None for v, m in zip(s.tolist(), row)]
            for s, row in zip(src, mask)
        ]

    def values(self) -> np.ndarray:
        """Outcomes that occur in the table, sorted."""
        return np.unique(np.concatenate([self.a, self.b]))

    def permuted(self, order: Sequence[int]) -> "RunTable":
        """Move whole slots: slot ``k`` of the result is slot ``order[k]``."""
        order = np.asarray(order, dtype=np.int64)
        return RunTable(self.schedule.permuted(order), self.a[order], self.b[order])


@dataclass(frozen=True, eq=False)
class CompleteTable:
    """A table with every cell filled.

    ``values`` has shape (4, N) for rows a, b, a', b'. Cells measured under
    the schedule are factual, the rest counterfactual.
    """

    schedule: SettingSchedule
    values: np.ndarray
    with_discards: bool = False

    def __post_init__(self):
        vals = _frozen(self.values, np.int8)
        if vals.shape != (4, len(self.schedule)):
            raise TableError(f"values must have shape (4, {len(self.schedule)})")
        _check_outcomes(vals, "complete table")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.schedule)

    def __eq__(self, other):
        if not isinstance(other, CompleteTable):
            return NotImplemented
        return (
            self.schedule == other.schedule
            and self.with_discards == other.with_discards
            and np.array_equal(self.values, other.values)
        )

    @property
    def labels(self) -> SettingLabels:
        return self.schedule.labels

    @property
    def factual(self) -> np.ndarray:
        return self.schedule.measured_mask()

    @property
    def q(self) -> int:
        if not self.schedule.is_balanced():
            raise UnbalancedQuartersError(f"unequal quarters {self.schedule.quarter_sizes()}")
        return self.schedule.quarter_sizes()[QUARTERS[0]]

    def factual_table(self) -> RunTable:
        """Drop the counterfactual cells."""
        a = np.where(self.schedule.alice == ALPHA, self.values[0], self.values[2])
        b = np.where(self.schedule.bob == BETA, self.values[1], self.values[3])
        return RunTable(self.schedule, a, b)


@dataclass(frozen=True, eq=False)
class CondensedTable:
    """Four fully populated rows of common length.

    ``factual`` optionally marks, per cell, whether the value was recorded
    or assigned counterfactually.
    """

    a: np.ndarray
    b: np.ndarray
    a_prime: np.ndarray
    b_prime: np.ndarray
    factual: Optional[np.ndarray] = None

    def __post_init__(self):
        rows = [_frozen(getattr(self, n), np.int8) for n in ("a", "b", "a_prime", "b_prime")]
        m = rows[0].shape
        if any(r.ndim != 1 or r.shape != m for r in rows):
            raise TableError("condensed rows must be 1-D and of equal length")
        for name, r in zip(ROWS, rows):
            _check_outcomes(r, f"row {name}")
        for name, r in zip(("a", "b", "a_prime", "b_prime"), rows):
            object.__setattr__(self, name, r)
        if self.factual is not None:
            fac = _frozen(self.factual, bool)
            if fac.shape != (4,) + m:
                raise TableError("factual mask must have shape (4, M)")
            object.__setattr__(self, "factual", fac)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], factual=None) -> "CondensedTable":
        a, b, ap, bp = rows
        return cls(a, b, ap, bp, factual)

    def __len__(self) -> int:
        return int(self.a.shape[0])

    def __eq__(self, other):
        if not isinstance(other, CondensedTable):
            return NotImplemented
        if not np.array_equal(self.values, other.values):
            return False
        if self.factual is None or other.factual is None:
            return self.factual is None and other.factual is None
        return np.array_equal(self.factual, other.factual)

    @property
    def values(self) -> np.ndarray:
        return np.stack([self.a, self.b, self.a_prime, self.b_prime])

    def quadruples(self) -> list[tuple[int, int, int, int]]:
        """Rows of the table as ``(a, b, a', b')`` tuples."""
        return [tuple(int(v) for v in col) for col in self.values.T]


@dataclass(frozen=True)
class QuarterProfile:
    """Counts of joint (station A, station B) outcomes within one setting pair."""

    pair: Pair
    counts: Mapping[tuple[int, int], int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class Violation:
    """One row whose two identified spans disagree.

    Spans are lists of half-open slot ranges; ``offsets`` are the positions
    (within the concatenated spans) where the values differ.
    """

    row: str
    first: tuple[Span, ...]
    second: tuple[Span, ...]
    offsets: tuple[int, ...]


@dataclass(frozen=True)
class SicaReport:
    holds: bool
    violations: tuple[Violation, ...] = ()


def new_run_table(
    schedule: SettingSchedule, records: Iterable[tuple[int, int, int]]
) -> RunTable:
    """Build a table from ``(slot, a, b)`` records, one per slot."""
    n = len(schedule)
    a = np.zeros(n, dtype=np.int8)
    b = np.zeros(n, dtype=np.int8)
    seen = np.zeros(n, dtype=bool)
    for slot, out_a, out_b in records:
        if not 0 <= slot < n:
            raise TableError(f"record for slot {slot} but schedule has {n} slots")
        if seen[slot]:
            raise TableError(f"duplicate record for slot {slot}")
        for v in (out_a, out_b):
            if v not in OUTCOMES:
                raise TableError(f"invalid outcome {v!r} at slot {slot}")
        seen[slot] = True
        a[slot], b[slot] = out_a, out_b
    if not seen.all():
        raise TableError(f"missing record for slot {int(np.flatnonzero(~seen)[0])}")
    return RunTable(schedule, a, b)


def quarter_profile(table: RunTable, pair: Pair) -> QuarterProfile:
    ua, ub = table.block(pair)
    if ua.size == 0:
        raise TableError(f"setting pair {table.labels.pair_name(pair)} not in schedule")
    counts = Counter(zip(ua.tolist(), ub.tolist()))
    return QuarterProfile(tuple(pair), dict(sorted(counts.items())))


def block_order(schedule: SettingSchedule) -> np.ndarray:
    """Slot permutation that brings ``schedule`` into canonical block form."""
    return np.argsort(schedule.ranks(), kind="stable")


def normalize_schedule(table: RunTable) -> RunTable:
    """Reorder whole slots so the schedule is in canonical block form.

    The sort is stable, so a table already in block form is returned as is.
    """
    if table.schedule.is_block_form():
        return table
    return table.permuted(block_order(table.schedule))


def _require_block_balanced(schedule: SettingSchedule) -> int:
    if not schedule.is_block_form():
        raise ScheduleError("schedule is not in block form; normalize it first")
    if not schedule.is_balanced():
        raise UnbalancedQuartersError(
            f"quarters must have equal length, got {schedule.quarter_sizes()}"
        )
    return schedule.quarter_sizes()[QUARTERS[0]]


# Which quarters each row compares. Factual tables hold each row in two
# quarters; complete tables identify the row over two quarter pairs.
_FACTUAL_PAIRING = {"a": ((0,), (1,)), "b": ((1,), (2,)), "a'": ((2,), (3,)), "b'": ((0,), (3,))}
_COMPLETE_PAIRING = {
    "a": ((1, 2), (0, 3)),
    "a'": ((1, 2), (0, 3)),
    "b": ((0, 1), (2, 3)),
    "b'": ((0, 1), (2, 3)),
}


def _row_series(table: Union[RunTable, CompleteTable], row: str, quarters) -> np.ndarray:
    q = len(table.schedule) // 4
    if isinstance(table, CompleteTable):
        src = table.values[ROWS.index(row)]
    else:
        src = table.a if row in ("a", "a'") else table.b
    return np.concatenate([src[k * q : (k + 1) * q] for k in quarters]) if quarters else src[:0]


def check_sica_condition(table: Union[RunTable, CompleteTable]) -> SicaReport:
    """Check that every row is the same whichever setting the far station used.

    For a factual table the comparison is between the two quarters in which
    a row was measured (e.g. row ``a`` under ``beta'`` and under ``beta``).
    For a complete table each row is compared over the full spans belonging
    to the two remote settings.
    """
    q = _require_block_balanced(table.schedule)
    pairing = _COMPLETE_PAIRING if isinstance(table, CompleteTable) else _FACTUAL_PAIRING
    violations = []
    for row in ROWS:
        first, second = pairing[row]
        x = _row_series(table, row, first)
        y = _row_series(table, row, second)
        diff = np.flatnonzero(x != y)
        if diff.size:
            violations.append(
                Violation(
                    row,
                    tuple((k * q, (k + 1) * q) for k in first),
                    tuple((k * q, (k + 1) * q) for k in second),
                    tuple(int(i) for i in diff),
                )
            )
    return SicaReport(not violations, tuple(violations))


def condense(table: Union[RunTable, CompleteTable]) -> CondensedTable:
    """Drop the duplicated spans of a table that satisfies Sica's condition.

    A factual table condenses to one row per slot of a quarter (length Q):
    row ``i`` pairs the ``i``-th elements of the four quarters. A complete
    table condenses to length 2Q; under the condition its (alpha,beta) and
    (alpha',beta) quarters are recombinations of the other two, so the
    condensed table is the (alpha,beta') quarter followed by the
    (alpha',beta') quarter, with provenance carried along.
    """
    report = check_sica_condition(table)
    if not report.holds:
        rows = ", ".join(v.row for v in report.violations)
        raise SicaConditionError(f"Sica's condition fails on rows {rows}")
    q = len(table.schedule) // 4
    q1, q2, q3 = slice(0, q), slice(q, 2 * q), slice(2 * q, 3 * q)
    if isinstance(table, CompleteTable):
        cols = np.r_[0:q, 3 * q : 4 * q]
        return CondensedTable.from_rows(table.values[:, cols], table.factual[:, cols])
    rows = [table.a[q2], table.b[q2], table.a[q3], table.b[q1]]
    return CondensedTable.from_rows(rows, np.ones((4, q), dtype=bool))


def expand_condensed(condensed: CondensedTable, labels: SettingLabels | None = None) -> RunTable:
    """Factual block table whose quarters all repeat the condensed rows."""
    m = len(condensed)
    c = condensed
    a = np.concatenate([c.a, c.a, c.a_prime, c.a_prime])
    b = np.concatenate([c.b_prime, c.b, c.b, c.b_prime])
    return RunTable(SettingSchedule.block(m, labels), a, b)


def expand_complete(condensed: CondensedTable, labels: SettingLabels | None = None) -> CompleteTable:
    """Complete block table whose condensation is ``condensed`` (even length)."""
    m = len(condensed)
    if m % 2:
        raise TableError("a complete table condenses to an even number of rows")
    q = m // 2
    first, last = condensed.values[:, :q], condensed.values[:, q:]
    # (alpha,beta) slots take a, a' from the first half and b, b' from the last;
    # (alpha',beta) slots the other way round.
    middle = np.stack([first[0], last[1], first[2], last[3]])
    third = np.stack([last[0], first[1], last[2], first[3]])
    values = np.concatenate([first, middle, third, last], axis=1)
    return CompleteTable(SettingSchedule.block(q, labels), values)
