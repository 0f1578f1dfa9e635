"""Filling the unperformed cells of a factual table.

The construction works on a balanced block table with quarters, in order,
(alpha,beta'), (alpha,beta), (alpha',beta), (alpha',beta'):

1. reorder the (alpha,beta') quarter so its ``a`` series equals the one in
   (alpha,beta), carrying ``b'`` along;
2. reorder the (alpha',beta) quarter so its ``a'`` series equals the one in
   (alpha',beta'), carrying ``b`` along;
3. the missing ``a`` values (both alpha' quarters) and the missing ``a'``
   values (both alpha quarters) are free: each is one series repeated in
   its two quarters;
4. the missing ``b`` and ``b'`` values are copied from the factual ones so
   that each of these rows repeats between the alpha and alpha' halves.

The result always satisfies Sica's condition. There are ``2**Q`` choices
for each free series, hence ``4**Q`` tables per factual input.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Iterator, Optional

import numpy as np

from bellseries.reorder import matching_discard, subtable
from bellseries.table_model import (
    ALPHA,
    BETA,
    QUARTERS,
    CompleteTable,
    RunTable,
    ScheduleError,
    SettingSchedule,
    TableError,
    UnbalancedQuartersError,
)

ENUMERATION_MAX_Q = 8


class CompletionError(TableError):
    pass


@dataclass(frozen=True)
class FreeChoice:
    """Counterfactual ``a`` (under alpha') and ``a'`` (under alpha) series."""

    a: tuple[int, ...]
    a_prime: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(v) for v in self.a)
        ap = tuple(int(v) for v in self.a_prime)
        if len(a) != len(ap):
            raise CompletionError("free series must have equal length")
        if any(v not in (1, -1) for v in a + ap):
            raise CompletionError("free series entries must be +1 or -1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "a_prime", ap)

    def __len__(self) -> int:
        return len(self.a)

    @classmethod
    def parse(cls, text: str) -> "FreeChoice":
        """Parse ``"-+:+-"`` (``a`` signs, colon, ``a'`` signs)."""
        try:
            left, right = text.split(":")
        except ValueError:
            raise CompletionError(f"choice {text!r} must look like '+-:-+'") from None
        sign = {"+": 1, "-": -1}
        try:
            return cls(tuple(sign[c] for c in left), tuple(sign[c] for c in right))
        except KeyError as exc:
            raise CompletionError(f"bad sign {exc.args[0]!r} in choice {text!r}") from None

    @classmethod
    def from_index(cls, index: int, q: int) -> "FreeChoice":
        """Choice number ``index`` of ``4**q``: high bits give ``a``, low bits ``a'``.

        A 0 bit means +1, read most significant first.
        """
        if not 0 <= index < 4**q:
            raise CompletionError(f"choice index {index} out of range for Q={q}")
        bits = [(index >> k) & 1 for k in range(2 * q - 1, -1, -1)]
        signs = [1 - 2 * bit for bit in bits]
        return cls(tuple(signs[:q]), tuple(signs[q:]))

    def render(self) -> str:
        fmt = lambda s: "".join("+" if v > 0 else "-" for v in s)  # noqa: E731
        return f"{fmt(self.a)}:{fmt(self.a_prime)}"


def _match_order(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Positions in ``source`` that rearrange it into ``target``.

    The k-th occurrence of a value in ``target`` takes the k-th occurrence
    of that value in ``source``.
    """
    queues: dict[int, list[int]] = {}
    for pos, v in enumerate(source.tolist()):
        queues.setdefault(v, []).append(pos)
    try:
        return np.array([queues[v].pop(0) for v in target.tolist()], dtype=np.int64)
    except (KeyError, IndexError):
        raise CompletionError("series are not rearrangements of each other") from None


def _prepare(table: RunTable, allow_discards: bool) -> tuple[RunTable, bool]:
    if not table.schedule.is_block_form():
        raise ScheduleError("completion needs a block-form schedule; normalize it first")
    if not table.schedule.is_balanced():
        raise UnbalancedQuartersError(
            f"completion needs equal quarters, got {table.schedule.quarter_sizes()}"
        )
    if np.any(table.a == 0) or np.any(table.b == 0):
        raise CompletionError("completion needs ideal-efficiency data (+1/-1 outcomes only)")
    kept, m = matching_discard(table)
    if m == table.q:
        return table, False
    if not allow_discards:
        raise CompletionError(
            "row a (or a') holds different outcomes under the two remote settings; "
            "allow discards to complete this table"
        )
    return subtable(table, kept), True


def default_choice(table: RunTable) -> FreeChoice:
    """Free series copied from the factual ones: ``a`` from (alpha,beta), ``a'`` from (alpha',beta')."""
    q = table.q
    return FreeChoice(tuple(table.a[q : 2 * q].tolist()), tuple(table.a[3 * q :].tolist()))


def complete_table(
    table: RunTable, choice: Optional[FreeChoice] = None, allow_discards: bool = True
) -> CompleteTable:
    """Build a complete Sica's table around the factual data.

    If row ``a`` (or ``a'``) does not hold the same multiset of outcomes in
    its two quarters, the fewest equal-length discards that fix it are
    applied first and the result is flagged ``with_discards``. ``choice``
    defaults to :func:`default_choice` of the (possibly trimmed) table.
    """
    work, trimmed = _prepare(table, allow_discards)
    q = work.q
    if choice is None:
        choice = default_choice(work)
    if len(choice) != q:
        raise CompletionError(f"choice has length {len(choice)}, quarters hold {q} slots")

    a, b = work.a, work.b
    s1, s2, s3, s4 = (slice(k * q, (k + 1) * q) for k in range(4))
    o1 = _match_order(a[s1], a[s2])
    o3 = _match_order(a[s3], a[s4])
    a1, bp1 = a[s1][o1], b[s1][o1]
    ap3, b3 = a[s3][o3], b[s3][o3]
    a2, b2 = a[s2], b[s2]
    ap4, bp4 = a[s4], b[s4]
    free_a = np.array(choice.a, dtype=np.int8)
    free_ap = np.array(choice.a_prime, dtype=np.int8)

    values = np.empty((4, 4 * q), dtype=np.int8)
    # rows: a, b, a', b'
    values[:, s1] = [a1, b3, free_ap, bp1]
    values[:, s2] = [a2, b2, free_ap, bp4]
    values[:, s3] = [free_a, b3, ap3, bp1]
    values[:, s4] = [free_a, b2, ap4, bp4]
    return CompleteTable(SettingSchedule.block(q, table.labels), values, with_discards=trimmed)


class CompletionFamily:
    """All tables :func:`complete_table` builds for one factual input."""

    def __init__(self, table: RunTable, allow_discards: bool = True):
        work, _ = _prepare(table, allow_discards)
        if work.q > ENUMERATION_MAX_Q:
            raise CompletionError(
                f"enumeration limited to Q <= {ENUMERATION_MAX_Q}, got {work.q}"
            )
        self.table = table
        self.q = work.q
        self.allow_discards = allow_discards

    def __len__(self) -> int:
        return 4**self.q

    def __iter__(self) -> Iterator[CompleteTable]:
        for index in range(len(self)):
            yield complete_table(
                self.table, FreeChoice.from_index(index, self.q), self.allow_discards
            )


def enumerate_completions(table: RunTable, allow_discards: bool = True) -> CompletionFamily:
    return CompletionFamily(table, allow_discards)


def resample_schedule(complete: CompleteTable, new_schedule: SettingSchedule) -> RunTable:
    """Read the factual table a different observation schedule would have seen."""
    if len(new_schedule) != len(complete):
        raise CompletionError(
            f"schedule has {len(new_schedule)} slots, table has {len(complete)}"
        )
    v = complete.values
    a = np.where(new_schedule.alice == ALPHA, v[0], v[2])
    b = np.where(new_schedule.bob == BETA, v[1], v[3])
    return RunTable(new_schedule, a, b)


def block_arrangements(q: int, labels=None) -> Iterator[SettingSchedule]:
    """Every schedule made of four contiguous blocks of ``q`` slots, one per pair."""
    for order in permutations(QUARTERS):
        yield SettingSchedule.from_pairs([p for p in order for _ in range(q)], labels)


def balanced_schedules(q: int, labels=None) -> Iterator[SettingSchedule]:
    """Every assignment of ``4*q`` slots to the four pairs, ``q`` slots each."""
    n = 4 * q

    def fill(prefix: list, left: list[int]):
        if len(prefix) == n:
            yield list(prefix)
            return
        for k, p in enumerate(QUARTERS):
            if left[k]:
                left[k] -= 1
                prefix.append(p)
                yield from fill(prefix, left)
                prefix.pop()
                left[k] += 1

    for pairs in fill([], [q] * 4):
        yield SettingSchedule.from_pairs(pairs, labels)


def choice_for(complete: CompleteTable) -> FreeChoice:
    """Recover the free series used to build ``complete``."""
    q = complete.q
    return FreeChoice(
        tuple(complete.values[0, 2 * q : 3 * q].tolist()),
        tuple(complete.values[2, 0:q].tolist()),
    )
